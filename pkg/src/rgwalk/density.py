"""Density-operator dynamics on site pairs.

A density field stores four complex planes ``comp[c, i, i']`` with ``i`` the
array index of ``m`` and ``i'`` that of ``m'``.  In the v-basis the planes are
``(rho_LL, rho_LR, rho_RL, rho_RR)`` with
``rho^{ab}_{m,m'} = psi^a_m conj(psi^b_{m'})``.  The u-basis recombines them
as ``u1 = v1 + v4``, ``u2 = v1 - v4``, ``u3 = v2 + v3``, ``u4 = v2 - v3``.

The mode representation uses

    rho_hat(k, k') = sum_{m,m'} rho_{m,m'} exp(-i (k m + k' m'))

with centre and relative wavenumbers ``K = (k + k')/2`` and ``p = (k' - k)/2``.
In that representation one step multiplies each mode by a 4x4 matrix.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ConfigurationError, ContractViolation
from .lattice import CircleGrid, dft_forward_array, dft_inverse_array
from .walk import CoinAngles, SpinorField, coin_matrix, check_wrap

BASES = ("v", "u")

# columns are u1..u4 written in v coordinates
V_FROM_U = np.array(
    [[1, 1, 0, 0], [0, 0, 1, 1], [0, 0, 1, -1], [1, -1, 0, 0]], dtype=np.complex128
)
U_FROM_V = np.linalg.inv(V_FROM_U)


def _check_basis(basis):
    if basis not in BASES:
        raise ConfigurationError(f"unknown basis {basis!r}; expected 'v' or 'u'", "basis")


@dataclass
class DensityField:
    """Four complex planes of shape ``(2M+1, 2M+1)`` in basis ``basis``."""

    grid: CircleGrid
    comp: np.ndarray
    basis: str = "v"

    def __post_init__(self):
        _check_basis(self.basis)
        self.comp = np.asarray(self.comp, dtype=np.complex128)
        N = self.grid.size
        if self.comp.shape != (4, N, N):
            raise ValueError(f"density must have shape (4, {N}, {N}), got {self.comp.shape}")

    def copy(self) -> "DensityField":
        return DensityField(self.grid, self.comp.copy(), self.basis)

    def as_v(self) -> "DensityField":
        return basis_change(self, "v")

    def trace(self) -> complex:
        v = self.as_v().comp
        return complex(np.trace(v[0]) + np.trace(v[3]))

    def hermiticity_error(self) -> float:
        v = self.as_v().comp
        return float(max(
            np.abs(v[0] - v[0].conj().T).max(),
            np.abs(v[3] - v[3].conj().T).max(),
            np.abs(v[1] - v[2].conj().T).max(),
        ))

    def purity(self) -> float:
        """``tr(rho^2)`` with rho viewed as a ``2N x 2N`` matrix."""
        return float(np.real(np.sum(np.abs(self.matrix()) ** 2)))

    def matrix(self) -> np.ndarray:
        """Full operator as a ``(2N, 2N)`` array, spin-major blocks."""
        v = self.as_v().comp
        return np.block([[v[0], v[1]], [v[2], v[3]]])


@dataclass
class FourierModeVector:
    """Four components of the transformed density at one ``(K, p)`` mode."""

    K: float
    p: float
    comp: np.ndarray
    basis: str = "u"

    def __post_init__(self):
        _check_basis(self.basis)
        self.comp = np.asarray(self.comp, dtype=np.complex128).reshape(4)
        if not np.all(np.isfinite(self.comp)):
            raise ValueError("mode components must be finite")
        if not (-np.pi < self.K <= np.pi and -np.pi < self.p <= np.pi):
            raise ValueError("K and p must lie in (-pi, pi]")


def to_u(vectors: np.ndarray, axis: int = 0) -> np.ndarray:
    """v-components to u-coefficients along ``axis``."""
    return np.moveaxis(np.tensordot(U_FROM_V, np.moveaxis(vectors, axis, 0), axes=1), 0, axis)


def to_v(vectors: np.ndarray, axis: int = 0) -> np.ndarray:
    return np.moveaxis(np.tensordot(V_FROM_U, np.moveaxis(vectors, axis, 0), axes=1), 0, axis)


def basis_change(x, to: str):
    """Express a :class:`DensityField` or :class:`FourierModeVector` in basis ``to``."""
    _check_basis(to)
    if x.basis == to:
        return x
    conv = to_u if to == "u" else to_v
    if isinstance(x, DensityField):
        return DensityField(x.grid, conv(x.comp), to)
    if isinstance(x, FourierModeVector):
        return FourierModeVector(x.K, x.p, conv(x.comp), to)
    raise TypeError(f"cannot change basis of {type(x).__name__}")


def density_from_pure(state: SpinorField) -> DensityField:
    psi = state.psi
    comp = np.einsum("am,bn->abmn", psi, psi.conj()).reshape(4, state.grid.size, state.grid.size)
    return DensityField(state.grid, comp, "v")


def default_initial_density(grid: CircleGrid) -> DensityField:
    """``(u1 - i u4)/2`` on the origin pair, zero elsewhere (v-basis)."""
    comp = np.zeros((4, grid.size, grid.size), dtype=np.complex128)
    i0 = grid.index(0)
    comp[:, i0, i0] = (0.5, -0.5j, 0.5j, 0.5)
    return DensityField(grid, comp, "v")


def local_coin_q(angles: CoinAngles) -> np.ndarray:
    """Site-pair coin ``Q = B kron conj(B)`` in v ordering."""
    B = coin_matrix(angles)
    return np.kron(B, B.conj())


def _require_v(rho: DensityField):
    if rho.basis != "v":
        raise ContractViolation("physical-space stepping needs a v-basis field; convert first")


def step_density_q(rho: DensityField, Q: np.ndarray, backend=None) -> DensityField:
    """One step with an arbitrary site-independent 4x4 pair coin ``Q``."""
    _require_v(rho)
    out = np.empty_like(rho.comp)
    kernels.step_density(rho.comp, np.ascontiguousarray(Q, dtype=np.complex128), out, backend)
    return DensityField(rho.grid, out, "v")


def step_density(rho: DensityField, angles: CoinAngles, backend=None) -> DensityField:
    """Gather from the shifted pairs ``(m +- 1, m' +- 1)`` and apply ``Q``."""
    return step_density_q(rho, local_coin_q(angles), backend)


def shift_phases(K, p) -> np.ndarray:
    """Mode phases of the four shifted components, shape ``(..., 4)``."""
    K, p = np.broadcast_arrays(np.asarray(K, dtype=float), np.asarray(p, dtype=float))
    return np.stack(
        [np.exp(2j * K), np.exp(-2j * p), np.exp(2j * p), np.exp(-2j * K)], axis=-1
    )


def fourier_r(angles: CoinAngles, K, p) -> np.ndarray:
    """Mode operator ``R(theta, xi, K, p)`` in the v-basis; vectorized over ``K, p``."""
    return local_coin_q(angles) * shift_phases(K, p)[..., None, :]


def fourier_r_u(angles: CoinAngles, K, p) -> np.ndarray:
    """:func:`fourier_r` expressed in the u-basis."""
    return U_FROM_V @ fourier_r(angles, K, p) @ V_FROM_U


def density_dft(rho: DensityField) -> np.ndarray:
    """Mode array ``rho_hat[c, n, n']`` at ``(k_n, k_n')``, in the basis of ``rho``."""
    N = rho.grid.size
    # exp(-i k m) is the kernel of the lattice inverse transform
    return dft_inverse_array(dft_inverse_array(rho.comp, axis=1), axis=2) * (N * N)


def density_idft(grid: CircleGrid, modes: np.ndarray, basis: str = "v") -> DensityField:
    N = grid.size
    comp = dft_forward_array(dft_forward_array(modes, axis=1), axis=2) / (N * N)
    return DensityField(grid, comp, basis)


def mode_coordinates(grid: CircleGrid):
    """Centre and relative wavenumbers ``(K, p)`` of the native mode grid.

    Both arrays have shape ``(2M+1, 2M+1)``, indexed like :func:`density_dft`.
    """
    k = grid.wavenumbers
    kk, kp = np.meshgrid(k, k, indexing="ij")
    return (kk + kp) / 2, (kp - kk) / 2


def mode_vector(rho: DensityField, n: int, n_prime: int, basis: str = "u") -> FourierModeVector:
    """Transformed density at grid mode ``(k_n, k_n')`` as a :class:`FourierModeVector`."""
    grid = rho.grid
    modes = density_dft(rho)
    i, ip = grid.index(n), grid.index(n_prime)
    k = grid.wavenumbers
    K = (k[i] + k[ip]) / 2
    p = (k[ip] - k[i]) / 2
    return basis_change(FourierModeVector(K, p, modes[:, i, ip], rho.basis), basis)


def evolve_modes_field(rho: DensityField, R_u: np.ndarray, steps: int, backend=None) -> DensityField:
    """Evolve every native mode with its own u-basis operator ``R_u[n, n']``."""
    grid = rho.grid
    check_wrap(grid, steps)
    N = grid.size
    modes = to_u(density_dft(basis_change(rho, "v")))
    v = np.ascontiguousarray(modes.reshape(4, N * N).T)
    R = np.ascontiguousarray(np.broadcast_to(R_u, (N, N, 4, 4)).reshape(N * N, 4, 4))
    kernels.evolve_modes(R, v, steps, backend)
    out = to_v(v.T.reshape(4, N, N))
    return density_idft(grid, out, "v")


def evolve_pure_density(rho: DensityField, angle_sequence, backend=None):
    """Physical-space density evolution through a sequence of coins."""
    angle_sequence = list(angle_sequence)
    check_wrap(rho.grid, len(angle_sequence))
    for angles in angle_sequence:
        rho = step_density(rho, angles, backend)
    return rho
