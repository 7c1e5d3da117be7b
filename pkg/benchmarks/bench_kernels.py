"""Time the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--paths 256] [--level 12]

Each kernel is run on identical inputs with both backends; the script checks
that outputs agree bit for bit and reports the best-of-N wall time.
"""

import argparse
import timeit

import numpy as np

from rough_em import _rng
from rough_em._backend import available_backends


def _inputs(paths, level, coarse_level, dims=1):
    rng = np.random.default_rng(0)
    n_fine = 1 << level
    nc = 1 << coarse_level
    r = n_fine // nc
    h = 1.0 / n_fine
    w = np.concatenate([np.zeros((paths, 1, dims)),
                        np.cumsum(rng.normal(0, np.sqrt(h), (paths, n_fine, dims)), axis=1)], axis=1)
    y = rng.normal(size=(paths, nc, dims))
    drift = rng.normal(size=(paths, nc, dims))
    diff = np.broadcast_to(np.eye(dims), (paths, nc, dims, dims))
    ref = rng.normal(size=(paths, n_fine + 1, dims))
    keys = _rng.path_keys(7, range(paths))
    incr = np.diff(w, axis=1)
    return dict(keys=keys, n_fine=n_fine, incr=incr, y=y, drift=drift, diff=diff, w=w, ref=ref,
                r=r, h=h)


def _cases(k, d):
    return {
        "standard_normals": lambda: k.standard_normals(d["keys"], 0, d["n_fine"]),
        "coarsen_sum": lambda: k.coarsen_sum(d["incr"], 16),
        "em_fill": lambda: k.em_fill(d["y"], d["drift"], d["diff"], d["w"], d["r"], d["h"]),
        "em_sup_sq": lambda: k.em_sup_sq(d["y"], d["drift"], d["diff"], d["w"], d["ref"], d["r"], d["h"]),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--paths", type=int, default=256)
    ap.add_argument("--level", type=int, default=12)
    ap.add_argument("--coarse-level", type=int, default=6)
    args = ap.parse_args(argv)

    backends = available_backends()
    if "compiled" not in backends:
        print("compiled extension not built; only the numpy fallback is available")
    data = _inputs(args.paths, args.level, args.coarse_level)
    results = {name: _cases(mod, data) for name, mod in backends.items()}
    print(f"paths={args.paths} fine_level={args.level} coarse_level={args.coarse_level} "
          f"best of {args.repeat}")
    print(f"{'kernel':<18}" + "".join(f"{b:>14}" for b in results) + f"{'speedup':>10}{'identical':>11}")
    for kernel in results["python"]:
        times, outs = {}, {}
        for b, cases in results.items():
            fn = cases[kernel]
            outs[b] = fn()
            times[b] = min(timeit.repeat(fn, number=1, repeat=args.repeat))
        row = f"{kernel:<18}" + "".join(f"{times[b] * 1e3:>12.2f}ms" for b in results)
        if "compiled" in results:
            same = np.array_equal(outs["python"], outs["compiled"])
            row += f"{times['python'] / times['compiled']:>9.2f}x{str(same):>11}"
        print(row)


if __name__ == "__main__":
    main()
