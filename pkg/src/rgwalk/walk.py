"""Wavefunction dynamics of the two-component walk.

One step reads

    [psiL'_m, psiR'_m] = B(theta, xi) @ [psiL_{m+1}, psiR_{m-1}]

with ``B(theta, xi) = [[e^{i xi} cos theta, i sin theta],
[i sin theta, e^{-i xi} cos theta]]``.  The lower component of the state
moves right, the upper one moves left.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, WrapAroundWarning
from .lattice import CircleGrid, dft_forward_array, dft_inverse_array

THETA_H = math.pi / 4
XI_H = math.pi / 2
# global phase of the four-angle family at the Hadamard point: alpha = pi/2 + 3pi/2
ALPHA_H = math.pi / 2 + 3 * math.pi / 2

# Constant spin rephasing relating the two coin families:
# B(theta, xi) = P @ B_ext(theta, xi, 0, 2pi) @ P^dagger with P = diag(1, -i).
EXTENDED_SPIN_PHASE = np.diag([1.0, -1.0j])


@dataclass(frozen=True)
class CoinAngles:
    """Euler angles ``theta, xi, zeta`` and global phase ``alpha`` of a coin."""

    theta: float
    xi: float
    zeta: float = 0.0
    alpha: float = ALPHA_H

    def __post_init__(self):
        for name in ("theta", "xi", "zeta", "alpha"):
            if not math.isfinite(getattr(self, name)):
                raise ConfigurationError(f"coin angle {name} must be finite", name)

    @classmethod
    def hadamard(cls) -> "CoinAngles":
        return cls(THETA_H, XI_H)

    @classmethod
    def from_fluctuations(cls, xi_bar=0.0, theta_bar=0.0) -> "CoinAngles":
        """Four-angle assignment of a walk whose angles fluctuate around
        the Hadamard point by ``xi_bar`` and ``theta_bar``."""
        return cls(THETA_H + theta_bar, XI_H + xi_bar, 0.0, ALPHA_H)


@dataclass
class SpinorField:
    """Two complex amplitudes per circle site, stored as ``psi[2, 2M+1]``."""

    grid: CircleGrid
    psi: np.ndarray

    def __post_init__(self):
        self.psi = np.asarray(self.psi, dtype=np.complex128)
        if self.psi.shape != (2, self.grid.size):
            raise ValueError(
                f"spinor must have shape (2, {self.grid.size}), got {self.psi.shape}"
            )

    @property
    def psiL(self) -> np.ndarray:
        return self.psi[0]

    @property
    def psiR(self) -> np.ndarray:
        return self.psi[1]

    def norm(self) -> float:
        return float(np.sum(np.abs(self.psi) ** 2))

    def copy(self) -> "SpinorField":
        return SpinorField(self.grid, self.psi.copy())

    @classmethod
    def localized(cls, grid: CircleGrid, spin=(1 / math.sqrt(2), 1j / math.sqrt(2)), site=0):
        """State supported on a single site with spin components ``spin``."""
        psi = np.zeros((2, grid.size), dtype=np.complex128)
        psi[:, grid.index(site)] = spin
        return cls(grid, psi)

    @classmethod
    def default(cls, grid: CircleGrid) -> "SpinorField":
        """``(b_L + i b_R)/sqrt(2)`` at the origin."""
        return cls.localized(grid)


def coin_matrix(angles: CoinAngles) -> np.ndarray:
    c, s = math.cos(angles.theta), math.sin(angles.theta)
    e = complex(math.cos(angles.xi), math.sin(angles.xi))
    return np.array([[e * c, 1j * s], [1j * s, c / e]], dtype=np.complex128)


def coin_matrix_extended(angles: CoinAngles) -> np.ndarray:
    """Four-angle coin ``e^{i alpha} [[e^{i xi} c, e^{i zeta} s], [-e^{-i zeta} s, e^{-i xi} c]]``.

    The lower-left entry carries ``e^{-i zeta}``; with ``e^{+i zeta}`` the
    matrix is not unitary unless ``zeta`` is a multiple of pi.
    """
    c, s = math.cos(angles.theta), math.sin(angles.theta)
    ex = np.exp(1j * angles.xi)
    ez = np.exp(1j * angles.zeta)
    return np.exp(1j * angles.alpha) * np.array(
        [[ex * c, ez * s], [-s / ez, c / ex]], dtype=np.complex128
    )


def coin_matrix_field(theta, xi, zeta, alpha) -> np.ndarray:
    """Vectorized :func:`coin_matrix_extended`; returns shape ``(..., 2, 2)``."""
    theta, xi, zeta, alpha = np.broadcast_arrays(
        *(np.asarray(x, dtype=float) for x in (theta, xi, zeta, alpha))
    )
    c, s = np.cos(theta), np.sin(theta)
    ex, ez, ea = np.exp(1j * xi), np.exp(1j * zeta), np.exp(1j * alpha)
    out = np.empty(theta.shape + (2, 2), dtype=np.complex128)
    out[..., 0, 0] = ea * ex * c
    out[..., 0, 1] = ea * ez * s
    out[..., 1, 0] = -ea * s / ez
    out[..., 1, 1] = ea * c / ex
    return out


def _shifted(psi: np.ndarray) -> np.ndarray:
    # (psiL_{m+1}, psiR_{m-1})
    return np.stack([np.roll(psi[0], -1), np.roll(psi[1], 1)])


def step_wavefunction(state: SpinorField, angles: CoinAngles) -> SpinorField:
    return SpinorField(state.grid, coin_matrix(angles) @ _shifted(state.psi))


def step_wavefunction_extended(state: SpinorField, angle_field) -> SpinorField:
    """One step with a site-dependent four-angle coin.

    ``angle_field`` is either a sequence of :class:`CoinAngles` (one per
    site, ordered ``m = -M..M``) or an array of coins ``(2M+1, 2, 2)``.
    """
    N = state.grid.size
    if isinstance(angle_field, np.ndarray) and angle_field.shape[-2:] == (2, 2):
        coins = angle_field
    else:
        angle_field = list(angle_field)
        if len(angle_field) != N:
            raise ConfigurationError(
                f"need one coin per site ({N}), got {len(angle_field)}", "angleField"
            )
        coins = coin_matrix_field(
            [a.theta for a in angle_field],
            [a.xi for a in angle_field],
            [a.zeta for a in angle_field],
            [a.alpha for a in angle_field],
        )
    if coins.shape != (N, 2, 2):
        raise ConfigurationError(
            f"need one coin per site ({N}), got shape {coins.shape}", "angleField"
        )
    shifted = _shifted(state.psi)
    return SpinorField(state.grid, np.einsum("mab,bm->am", coins, shifted))


def fourier_coin(angles: CoinAngles, k) -> np.ndarray:
    """Mode-space coin ``C(theta, xi, k)``; vectorized over ``k``."""
    k = np.asarray(k, dtype=float)
    c, s = math.cos(angles.theta), math.sin(angles.theta)
    e = np.exp(1j * angles.xi)
    em, ep = np.exp(-1j * k), np.exp(1j * k)
    out = np.empty(k.shape + (2, 2), dtype=np.complex128)
    out[..., 0, 0] = e * c * em
    out[..., 0, 1] = 1j * s * ep
    out[..., 1, 0] = 1j * s * em
    out[..., 1, 1] = c / e * ep
    return out


def check_wrap(grid: CircleGrid, steps: int, stacklevel=3):
    if steps >= grid.M:
        warnings.warn(
            f"{steps} steps on a circle with M={grid.M}: the front wraps around",
            WrapAroundWarning,
            stacklevel=stacklevel,
        )


def evolve_wavefunction(state: SpinorField, angle_sequence, record=None):
    """Evolve in physical space through a sequence of coins.

    Returns the final state, or a list of states at the step counts listed
    in ``record`` (0 means the initial state).
    """
    angle_sequence = list(angle_sequence)
    check_wrap(state.grid, len(angle_sequence))
    wanted = set(record) if record is not None else set()
    snaps = {}
    if 0 in wanted:
        snaps[0] = state.copy()
    for j, angles in enumerate(angle_sequence, start=1):
        state = step_wavefunction(state, angles)
        if j in wanted:
            snaps[j] = state.copy()
    if record is None:
        return state
    return [snaps[j] for j in sorted(wanted)]


def fourier_modes(state: SpinorField) -> np.ndarray:
    """Forward transform of both spin components, shape ``(2, 2M+1)``."""
    return dft_forward_array(state.psi, axis=-1)


def from_fourier_modes(grid: CircleGrid, modes: np.ndarray) -> SpinorField:
    return SpinorField(grid, dft_inverse_array(modes, axis=-1))


def reduced_density_series_pure(state: SpinorField, angles: CoinAngles, steps: int) -> np.ndarray:
    """Site-traced 2x2 spin density of a constant-coin walk at ``j = 0..steps``.

    The state is evolved mode by mode with :func:`fourier_coin`; the trace
    over sites is taken in mode space through Parseval's identity, so the
    cost per step is one 2x2 product per mode.
    """
    grid = state.grid
    check_wrap(grid, steps)
    C = fourier_coin(angles, grid.wavenumbers)
    modes = fourier_modes(state).T.copy()
    out = np.empty((steps + 1, 2, 2), dtype=np.complex128)
    N = grid.size
    for j in range(steps + 1):
        if j:
            modes = np.einsum("nab,nb->na", C, modes)
        out[j] = np.einsum("na,nb->ab", modes, modes.conj()) / N
    return out
