"""Time each hot kernel under numba and under plain numpy.

    python3 benchmarks/bench_kernels.py [--repeat 3] [--json out.json]

Both variants are imported directly, so the backend environment flag does
not matter here.  The first numba call (compilation) is excluded.
"""

import argparse
import json
import math
import time

import numpy as np

from clwe_hardness import _accel, kernels
from clwe_hardness.instance import EmbeddingSpec


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases(rng):
    X2 = rng.standard_normal((20_000, 2)) / math.sqrt(2 * math.pi)
    emb = EmbeddingSpec(2, 32)
    w_hi = rng.standard_normal(emb.n_monomials)
    w_lo = w_hi * 1e-17
    t = rng.random(200_000) * 10
    Xp = rng.standard_normal((50_000, 32))
    yp = np.where(rng.random(50_000) < 0.5, 1.0, -1.0)
    order = np.stack([rng.permutation(50_000) for _ in range(3)])
    Xm = rng.standard_normal((2_000, 6))
    emb6 = EmbeddingSpec(6, 6)
    return {
        "wrapped_rho_sum (2e5 points, s=8)": (
            lambda: kernels.wrapped_rho_sum_numpy(8.0, t, 30),
            lambda: kernels.wrapped_rho_sum_numba(8.0, t, 30)),
        "monomials (2e3 x 924, n=6 deg=6)": (
            lambda: kernels.monomials_numpy(Xm, emb6.parent, emb6.var),
            lambda: kernels.monomials_numba(Xm, emb6.parent, emb6.var)),
        "monomial_dot_dd (2e4 x 561, n=2 deg=32)": (
            lambda: kernels.monomial_dot_dd_numpy(X2, emb.parent, emb.var, w_hi, w_lo),
            lambda: kernels.monomial_dot_dd_numba(X2, emb.parent, emb.var, w_hi, w_lo)),
        "perceptron_train (5e4 x 32, 3 epochs)": (
            lambda: kernels.perceptron_train_numpy(Xp, yp, order, 1.0),
            lambda: kernels.perceptron_train_numba(Xp, yp, order, 1.0)),
    }


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--json")
    args = ap.parse_args()
    if not _accel.HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")

    rng = np.random.default_rng(0)
    rows = []
    for name, (np_fn, nb_fn) in cases(rng).items():
        ref = np_fn()
        got = nb_fn()  # also compiles
        pairs = zip(ref, got) if isinstance(ref, tuple) else [(ref, got)]
        agree = all(np.allclose(a, b, rtol=1e-12, atol=1e-12) for a, b in pairs)
        t_np = best_of(np_fn, args.repeat)
        t_nb = best_of(nb_fn, args.repeat)
        rows.append({"kernel": name, "numpy_s": t_np, "numba_s": t_nb, "speedup": t_np / t_nb, "agree": bool(agree)})
        print(f"{name:42s} numpy {t_np:8.4f}s  numba {t_nb:8.4f}s  x{t_np / t_nb:7.1f}  agree={agree}")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=1)


if __name__ == "__main__":
    main()
