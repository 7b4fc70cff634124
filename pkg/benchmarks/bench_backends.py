#!/usr/bin/env python3
"""Benchmark the compiled tree kernels against the pure-numpy fallback.

Both backends are exercised on identical inputs; outputs are checked for
exact equality before timings are reported, so a speed win can never hide a
semantic drift.

Usage: python benchmarks/bench_backends.py [--quick]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from vaxlens._kernels import available_backends, get_backend


def _time(fn, repeats: int) -> float:
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def _check_equal(a, b) -> None:
    for u, v in zip(a, b):
        assert np.array_equal(u, v), "backend outputs diverged"


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--quick", action="store_true", help="smaller problem sizes")
    args = parser.parse_args()

    backends = available_backends()
    if "compiled" not in backends:
        print("compiled backend not built; run `python setup.py build_ext --inplace` first")
        return
    py = get_backend("python")
    cc = get_backend("compiled")

    scale = 0.3 if args.quick else 1.0
    cases = [
        ("grow n=2000 m=30 likert", int(2000 * scale), 30, 5, True),
        ("grow n=5000 m=130 likert", int(5000 * scale), 130, 5, True),
        ("grow n=5000 m=130 mixed", int(5000 * scale), 130, 5, False),
    ]
    rng = np.random.default_rng(0)
    print(f"{'case':34s} {'python':>10s} {'compiled':>10s} {'speedup':>8s}")
    for name, n, m, levels, categorical in cases:
        if categorical:
            X = rng.integers(0, levels, (n, m)).astype(float)
        else:
            X = np.where(rng.random((n, m)) < 0.5,
                         rng.integers(0, levels, (n, m)).astype(float),
                         rng.normal(size=(n, m)))
        y = rng.integers(0, 2, n).astype(np.int8)
        idx = rng.integers(0, n, n)
        grow_args = (X, y, idx, 14, 5, 12, 42)
        out_py = py.grow_tree(*grow_args)
        out_cc = cc.grow_tree(*grow_args)
        _check_equal(out_py, out_cc)
        t_py = _time(lambda: py.grow_tree(*grow_args), 3)
        t_cc = _time(lambda: cc.grow_tree(*grow_args), 3)
        print(f"{name:34s} {t_py*1e3:9.1f}ms {t_cc*1e3:9.1f}ms {t_py/t_cc:7.1f}x")

        Q = rng.normal(size=(int(200_000 * scale), m))
        apply_args = (out_cc[0], out_cc[1], out_cc[2], out_cc[3], Q)
        assert np.array_equal(py.tree_apply(*apply_args), cc.tree_apply(*apply_args))
        t_py = _time(lambda: py.tree_apply(*apply_args), 3)
        t_cc = _time(lambda: cc.tree_apply(*apply_args), 3)
        print(f"{'  apply 200k rows':34s} {t_py*1e3:9.1f}ms {t_cc*1e3:9.1f}ms {t_py/t_cc:7.1f}x")

    # end-to-end: one PGM explanation pass on each backend
    import os
    import subprocess
    import sys

    code = (
        "import time, numpy as np\n"
        "from vaxlens import synth, encoding, pgm\n"
        "from vaxlens.learning import fit, ForestParams\n"
        "from vaxlens._kernels import BACKEND\n"
        f"n = {int(2000 * scale)}\n"
        "d, _ = synth.generate(synth.default_spec(seed=1), n, bayes_mc=1000)\n"
        "enc = encoding.fit(d.schema, 'hybrid')\n"
        "t0 = time.perf_counter()\n"
        "m = fit('forest', ForestParams(n_trees=60, max_depth=12, min_leaf=3), enc.transform(d), d.target, seed=2)\n"
        "g = pgm.explain(m, enc, d, pgm.PgmConfig(samples=1000, runs=3, seed=3))\n"
        "w = [round(node.weight, 12) for node in g.ranked()[:5]]\n"
        "print(f'{BACKEND}: fit+explain {time.perf_counter()-t0:.2f}s top weights {w}')\n"
    )
    print("\nend-to-end (fit forest + pgm explain), identical seeds:")
    sys.stdout.flush()
    for backend in ("python", "compiled"):
        env = dict(os.environ, VAXLENS_BACKEND=backend)
        subprocess.run([sys.executable, "-c", code], env=env, check=True)


if __name__ == "__main__":
    main()
