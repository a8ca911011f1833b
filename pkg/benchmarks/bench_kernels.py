"""Compare the compiled kernels with the numpy fallback.

Usage::

    python3 benchmarks/bench_kernels.py [--repeat 5]

Each kernel runs on the same inputs under both backends; outputs are
checked for agreement before timings are printed.
"""

import argparse
import timeit

import numpy as np

from secmux import gf, kernels
from secmux.channels import bsc
from secmux.regions import ScanGrid


def workloads():
    rng = np.random.default_rng(0)
    mats = rng.integers(0, 3, size=(1 << 16, 3, 3))
    tables = gf.permutation_tables(gf.enumerate_gl_array(2, 3), 3)  # 48 x 9
    big = rng.permuted(np.tile(np.arange(256), (64, 1)), axis=1)
    grid = ScanGrid(2, 2, 2, 11)
    pu, pvu, pxv = grid.batch(0, min(grid.size, 1 << 15))
    wy, wz = bsc(0.1).matrix, bsc(0.2).matrix
    return {
        "invertible_mask 65536x3x3 q=3": lambda m: m.invertible_mask(mats, 3),
        "pair_collision_counts 48x9": lambda m: m.pair_collision_counts(tables),
        "pair_collision_counts 64x256": lambda m: m.pair_collision_counts(big),
        f"scan_information {pu.shape[0]} chains": lambda m: m.scan_information(pu, pvu, pxv, wy, wz),
    }


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    backends = kernels.available_backends()
    if "compiled" not in backends:
        print("compiled extension not built; only the fallback is timed")
    print(f"{'kernel':40s}" + "".join(f"{name:>14s}" for name in backends) + "   speedup")
    for label, run in workloads().items():
        outs = {name: run(mod) for name, mod in backends.items()}
        ref = outs["fallback"]
        for name, out in outs.items():
            if not np.allclose(out, ref, rtol=0, atol=1e-12):
                raise SystemExit(f"{label}: {name} disagrees with the fallback")
        times = {
            name: min(timeit.repeat(lambda m=mod: run(m), number=1, repeat=args.repeat))
            for name, mod in backends.items()
        }
        line = f"{label:40s}" + "".join(f"{t * 1e3:12.2f}ms" for t in times.values())
        if "compiled" in times:
            line += f"   {times['fallback'] / times['compiled']:6.1f}x"
        print(line)


if __name__ == "__main__":
    main()
