"""Pure NumPy versions of the compiled kernels in ``_kernels.pyx``."""

from math import comb

import numpy as np


def evolve_modes(R, v, steps):
    for _ in range(steps):
        v[...] = np.einsum("nab,nb->na", R, v)
    return v


def jet_means(D, v, steps):
    order1 = D.shape[0]
    out = np.zeros((steps + 1, order1, 4), dtype=np.complex128)
    out[0] = v.mean(axis=1)
    for j in range(1, steps + 1):
        new = np.zeros_like(v)
        for r in range(order1):
            for i in range(r + 1):
                new[r] += comb(r, i) * np.einsum("nab,nb->na", D[i], v[r - i])
        v[...] = new
        out[j] = v.mean(axis=1)
    return out


def step_density(rho, Q, out):
    g = np.empty_like(rho)
    # gathered[c][i, k] = rho[c][i + s_c, k + t_c]
    g[0] = np.roll(rho[0], (-1, -1), axis=(0, 1))
    g[1] = np.roll(rho[1], (-1, 1), axis=(0, 1))
    g[2] = np.roll(rho[2], (1, -1), axis=(0, 1))
    g[3] = np.roll(rho[3], (1, 1), axis=(0, 1))
    out[...] = np.einsum("ac,cik->aik", Q, g)
    return out
