"""Time the compiled kernels against the numpy fallback.

Usage: python3 benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import timeit

import numpy as np

from rgwalk import kernels
from rgwalk.noise import averaged_r, averaged_r_kderivs, line_p_grid


def cases():
    rng = np.random.default_rng(0)
    p = line_p_grid(1024)
    R = np.ascontiguousarray(averaged_r("g", 0.01, p, 1.0))
    v = np.ascontiguousarray(np.tile([0.5, 0, 0, -0.5j], (p.size, 1)).astype(np.complex128))
    D = np.ascontiguousarray(averaged_r_kderivs("g", p, 1.0, 4))
    jet = np.zeros((5, p.size, 4), dtype=np.complex128)
    jet[0] = v
    N = 129
    rho = rng.normal(size=(4, N, N)) + 1j * rng.normal(size=(4, N, N))
    Q = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    out = np.empty_like(rho)
    return {
        "evolve_modes (2049 modes x 500 steps)": lambda b: kernels.evolve_modes(R, v.copy(), 500, b),
        "jet_means (order 4, 2049 modes x 500 steps)": lambda b: kernels.jet_means(D, jet.copy(), 500, b),
        "step_density (129 x 129 pairs)": lambda b: kernels.step_density(rho, Q, out, b),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    backends = kernels.available_backends()
    print("kernel," + ",".join(f"{b}_s" for b in backends) + ",speedup")
    for name, fn in cases().items():
        t = {b: min(timeit.repeat(lambda: fn(b), number=1, repeat=args.repeat)) for b in backends}
        speed = t["numpy"] / t["cython"] if "cython" in t else float("nan")
        print(f"{name}," + ",".join(f"{t[b]:.4f}" for b in backends) + f",{speed:.1f}")


if __name__ == "__main__":
    main()
