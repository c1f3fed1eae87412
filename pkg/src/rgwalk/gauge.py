"""Discrete gauge structure of the four-angle walk.

Fields live on a ``(j, m)`` rectangle stored as arrays of shape
``(T, 2M+1)``, periodic in ``m``.  A phase field ``phi`` of shape
``(T+1, 2M+1)`` acts on the angles of steps ``0..T-1`` through

    delta_{j,m} = (phi_{j,m+1} - phi_{j,m-1}) / 2
    sig_{j,m}   = phi_{j,m+1} + phi_{j,m-1} - 2 phi_{j+1,m}

with ``xi -> xi + delta``, ``zeta -> zeta - delta``, ``alpha -> alpha + sig/2``
and ``psi_{j,m} -> psi_{j,m} exp(-i phi_{j,m})``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, SingularParameterError
from .walk import ALPHA_H, XI_H


def _roll(u, shift):
    # u[..., m + shift] on the periodic axis
    return np.roll(u, -shift, axis=-1)


@dataclass(frozen=True)
class AngleField:
    """Four angle arrays of identical shape ``(T, 2M+1)``."""

    theta: np.ndarray
    xi: np.ndarray
    zeta: np.ndarray
    alpha: np.ndarray

    def __post_init__(self):
        arrays = [np.asarray(getattr(self, n), dtype=float) for n in ("theta", "xi", "zeta", "alpha")]
        shape = np.broadcast_shapes(*(a.shape for a in arrays))
        if len(shape) != 2:
            raise ConfigurationError("angle fields must be two-dimensional (j, m)", "angleField")
        for name, a in zip(("theta", "xi", "zeta", "alpha"), arrays):
            object.__setattr__(self, name, np.broadcast_to(a, shape).copy())

    @property
    def shape(self):
        return self.theta.shape

    @classmethod
    def from_fluctuations(cls, xi_bar, theta_bar, M: int) -> "AngleField":
        """Time-only fluctuations around the Hadamard point on ``2M+1`` sites."""
        xi_bar = np.asarray(xi_bar, dtype=float)
        theta_bar = np.asarray(theta_bar, dtype=float)
        N = 2 * M + 1
        ones = np.ones((len(xi_bar), N))
        return cls(
            (math.pi / 4 + theta_bar)[:, None] * ones,
            (XI_H + xi_bar)[:, None] * ones,
            0.0 * ones,
            ALPHA_H * ones,
        )


@dataclass(frozen=True)
class GaugeField:
    """Arbitrary phase field ``phi`` on ``(T+1, 2M+1)``."""

    phi: np.ndarray

    def __post_init__(self):
        phi = np.asarray(self.phi, dtype=float)
        if phi.ndim != 2 or phi.shape[0] < 2:
            raise ConfigurationError("phi must have shape (T+1, 2M+1) with T >= 1", "phi")
        object.__setattr__(self, "phi", phi)

    @property
    def delta(self) -> np.ndarray:
        p = self.phi[:-1]
        return (_roll(p, 1) - _roll(p, -1)) / 2

    @property
    def sigma(self) -> np.ndarray:
        p = self.phi[:-1]
        return _roll(p, 1) + _roll(p, -1) - 2 * self.phi[1:]


@dataclass(frozen=True)
class Potential2:
    """Scalar potential ``V`` and vector potential ``A`` on ``(T, 2M+1)``."""

    V: np.ndarray
    A: np.ndarray

    def __post_init__(self):
        V, A = np.broadcast_arrays(np.asarray(self.V, dtype=float), np.asarray(self.A, dtype=float))
        if not (np.all(np.isfinite(V)) and np.all(np.isfinite(A))):
            raise ValueError("potentials must be finite")
        object.__setattr__(self, "V", V.copy())
        object.__setattr__(self, "A", A.copy())


def metric_from_theta(theta):
    """Diagonal metric ``(1, -1/cos^2 theta)``."""
    c = np.cos(np.asarray(theta, dtype=float))
    if np.any(np.abs(c) < 1e-12):
        raise SingularParameterError("metric is singular where cos(theta) = 0")
    g11 = -1.0 / c**2
    if np.ndim(g11) == 0:
        return 1.0, float(g11)
    return np.ones_like(g11), g11


def potential_from_angles(xi_bar, M=None) -> Potential2:
    """Potential of time-only fluctuations: ``V = pi/2``, ``A_j = -xi_bar_j``.

    Returns arrays of shape ``(T, 1)`` (or ``(T, 2M+1)`` when ``M`` is given).
    """
    xi_bar = np.asarray(xi_bar, dtype=float)[:, None]
    width = 1 if M is None else 2 * M + 1
    return Potential2(np.full((len(xi_bar), width), math.pi / 2), np.broadcast_to(-xi_bar, (len(xi_bar), width)))


def potential_from_field(angles: AngleField) -> Potential2:
    """Potential of a general angle field: ``V = alpha - 3 pi/2``, ``A = pi/2 - xi``.

    The constant offsets match :func:`potential_from_angles` on the
    Hadamard-centred family and do not enter the electric field.
    """
    return Potential2(angles.alpha - 3 * math.pi / 2, XI_H - angles.xi)


def gauge_transform(angles: AngleField, phi: GaugeField) -> AngleField:
    T, N = angles.shape
    if phi.phi.shape != (T + 1, N):
        raise ConfigurationError(
            f"phi must have shape {(T + 1, N)} for an angle field of shape {(T, N)}, got {phi.phi.shape}",
            "phi",
        )
    d, s = phi.delta, phi.sigma
    return AngleField(angles.theta, angles.xi + d, angles.zeta - d, angles.alpha + s / 2)


def transform_state(psi: np.ndarray, phi: GaugeField, j: int) -> np.ndarray:
    """``psi exp(-i phi_j)`` for a spinor array of shape ``(2, 2M+1)``."""
    return psi * np.exp(-1j * phi.phi[j])[None, :]


def discrete_ds(u) -> np.ndarray:
    """Centred space difference ``(u_{j,m+1} - u_{j,m-1})/2``, periodic in ``m``."""
    u = np.asarray(u, dtype=float)
    return (_roll(u, 1) - _roll(u, -1)) / 2


def discrete_dt(u) -> np.ndarray:
    """``(2 u_{j+1,m} - u_{j,m+1} - u_{j,m-1})/2``; one time slice shorter than ``u``."""
    u = np.asarray(u, dtype=float)
    if u.ndim != 2 or u.shape[0] < 2:
        raise ConfigurationError("discrete_dt needs at least two time slices", "u")
    cur = u[:-1]
    return (2 * u[1:] - _roll(cur, 1) - _roll(cur, -1)) / 2


def electric_field(pot: Potential2) -> np.ndarray:
    """``E = -D_s V + D_t A`` on time slices ``0..T-2``."""
    if pot.V.shape[0] < 2:
        raise ConfigurationError("electric_field needs at least two time slices", "pot")
    return -discrete_ds(pot.V)[:-1] + discrete_dt(pot.A)


def electric_field_time(xi_bar) -> np.ndarray:
    """Time-only field ``E_j`` of the Hadamard-centred family."""
    return electric_field(potential_from_angles(xi_bar))[:, 0]
