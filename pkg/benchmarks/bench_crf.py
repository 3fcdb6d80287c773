"""Benchmark: compiled CRF kernels vs the NumPy fallback.

Run from the repo root:

    python benchmarks/bench_crf.py [--batch 32] [--length 60] [--labels 22] [--iters 20]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from proactive_switch.crf import kernels_py

try:
    from proactive_switch.crf import _ckernels
except ImportError:
    _ckernels = None


def time_fn(fn, args, iters):
    fn(*args)  # warmup
    t0 = time.perf_counter()
    for _ in range(iters):
        fn(*args)
    return (time.perf_counter() - t0) / iters


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--batch", type=int, default=32)
    parser.add_argument("--length", type=int, default=60)
    parser.add_argument("--labels", type=int, default=22)
    parser.add_argument("--iters", type=int, default=20)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    em = rng.normal(size=(args.batch, args.length, args.labels))
    tr = rng.normal(size=(args.labels, args.labels))
    st = rng.normal(size=args.labels)
    en = rng.normal(size=args.labels)
    lengths = rng.integers(args.length // 2, args.length + 1, size=args.batch).astype(np.int64)

    rows = []
    for name, fn in (("forward_backward", "crf_forward_backward"), ("viterbi", "crf_viterbi")):
        py_time = time_fn(getattr(kernels_py, fn), (em, lengths, tr, st, en), args.iters)
        row = {"kernel": name, "numpy_ms": py_time * 1e3}
        if _ckernels is not None:
            c_time = time_fn(getattr(_ckernels, fn), (em, lengths, tr, st, en), args.iters)
            row["compiled_ms"] = c_time * 1e3
            row["speedup"] = py_time / c_time
        rows.append(row)

    print(f"batch={args.batch} length={args.length} labels={args.labels} iters={args.iters}")
    header = f"{'kernel':<18}{'numpy ms':>10}" + ("" if _ckernels is None else f"{'compiled ms':>13}{'speedup':>9}")
    print(header)
    for row in rows:
        line = f"{row['kernel']:<18}{row['numpy_ms']:>10.2f}"
        if "compiled_ms" in row:
            line += f"{row['compiled_ms']:>13.2f}{row['speedup']:>8.1f}x"
        print(line)
    if _ckernels is None:
        print("compiled extension not built; showing the NumPy fallback only")

    # agreement spot check
    logz_py, _, _ = kernels_py.crf_forward_backward(em, lengths, tr, st, en)
    if _ckernels is not None:
        logz_c, _, _ = _ckernels.crf_forward_backward(em, lengths, tr, st, en)
        print(f"max |logZ| disagreement: {np.abs(logz_py - logz_c).max():.2e}")


if __name__ == "__main__":
    main()
