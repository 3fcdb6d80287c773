from .backend import BACKEND, backend_name, crf_forward_backward, crf_viterbi

__all__ = ["BACKEND", "backend_name", "crf_forward_backward", "crf_viterbi"]
