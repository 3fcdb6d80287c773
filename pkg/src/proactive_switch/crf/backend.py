"""CRF kernel backend selection.

The compiled extension is preferred when importable; the NumPy kernels are the
fallback. PROACTIVE_SWITCH_CRF_BACKEND=c|py forces a choice (forcing "c"
raises if the extension is missing).
"""

from __future__ import annotations

import logging
import os

log = logging.getLogger(__name__)

_forced = os.environ.get("PROACTIVE_SWITCH_CRF_BACKEND", "").lower()

if _forced == "py":
    from . import kernels_py as _impl

    BACKEND = "py"
elif _forced == "c":
    from . import _ckernels as _impl  # noqa: F401  (raises if not built)

    BACKEND = "c"
else:
    try:
        from . import _ckernels as _impl

        BACKEND = "c"
    except ImportError:
        from . import kernels_py as _impl

        BACKEND = "py"
        log.info("compiled CRF kernels unavailable; using NumPy fallback")

crf_forward_backward = _impl.crf_forward_backward
crf_viterbi = _impl.crf_viterbi


def backend_name() -> str:
    return BACKEND
