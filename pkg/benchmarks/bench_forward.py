"""Compare the compiled and numpy forward kernels on embedded networks.

    python benchmarks/bench_forward.py [--points 20000] [--repeat 3]

Each row builds a strict-relu width-5 network for a random target, checks
that the backends agree, and reports the best-of-``repeat`` wall time.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from relucache import UnitBallSpec, build_adaptive, embed_standard, make_unit_ball_function
from relucache import _fallback

try:
    from relucache import _kernels
except ImportError:  # extension not built
    _kernels = None

CASES = [(8, 1), (64, 3), (729, 3), (6561, 4)]


def best_time(fn, repeat: int) -> tuple[float, np.ndarray]:
    best, out = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--points", type=int, default=20_000)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--max-depth", type=int, default=10_000,
                    help="skip networks deeper than this")
    args = ap.parse_args(argv)

    f = make_unit_ball_function(UnitBallSpec.parse("pwl-random:K=37:seed=3"))
    xs = np.linspace(0.0, 1.0, args.points)
    print(f"{'T':>6} {'m':>2} {'depth':>6} {'numpy s':>10} {'cython s':>10} {'speedup':>8} {'max diff':>10}")
    for T, m in CASES:
        net = embed_standard(build_adaptive(f, T, m), "strict-relu", prune_zero=True).network
        if net.depth > args.max_depth:
            continue
        W, b, r, w_out = net.packed
        t_py, y_py = best_time(
            lambda: _fallback.forward_dense(W, b, r, w_out, net.output_bias, xs), args.repeat)
        if _kernels is None:
            print(f"{T:>6} {m:>2} {net.depth:>6} {t_py:>10.4f} {'n/a':>10}")
            continue
        t_cy, y_cy = best_time(
            lambda: _kernels.forward_dense(W, b, r, w_out, net.output_bias, xs), args.repeat)
        diff = float(np.max(np.abs(y_py - y_cy)))
        print(f"{T:>6} {m:>2} {net.depth:>6} {t_py:>10.4f} {t_cy:>10.4f} "
              f"{t_py / t_cy:>8.1f} {diff:>10.2e}")


if __name__ == "__main__":
    main()
