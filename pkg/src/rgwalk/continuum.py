"""Two-step subsampling and the small-parameter generator of the mean walk.

Over two steps the averaged mode operator squared stays close to the
identity when ``K``, ``p`` and ``sigma`` are all small, so
``rho_hat(t + 1) - rho_hat(t)`` is approximated by ``(S - 1) rho_hat`` with
``S`` the second-order expansion of ``R_bar^2``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .density import FourierModeVector, basis_change
from .noise import averaged_r, normalize_case

# entries (1-based) of the published gravitational table whose second-order
# part differs from the expansion of the squared operator
PUBLISHED_G_DISAGREEMENTS = ((1, 4), (2, 2), (2, 3), (3, 3), (3, 4), (4, 1), (4, 2), (4, 3))


@dataclass(frozen=True)
class GeneratorMatrix:
    """4x4 u-basis matrix ``S`` together with its expansion point."""

    matrix: np.ndarray
    K: float
    p: float
    sigma: float
    case: str

    def generator(self) -> np.ndarray:
        """``S - 1``, the right-hand side of the continuum equation."""
        return self.matrix - np.eye(4)


def generator_g(K, p, sigma) -> GeneratorMatrix:
    """Gravitational ``S`` exactly as the published second-order table.

    Products are kept unexpanded, so terms beyond second order remain.
    """
    a = 1 - sigma**2 / 6
    c = 1 - sigma**2 / 3
    q = 1 - p**2 / 2
    k = 1 - 4 * K**2
    S = np.array(
        [
            [k, 2j * K, 2j * K * q * a, 2 * K * p * a],
            [2j * K * q * c, k * q * c, p**2 * a, 2j * p * a],
            [2j * K * a, -4 * K**2 * a, k * q * c, -1j * p * k * c],
            [-2 * K * p * a, 1j * p * k * a, -1j * p, 1 - 4 * p**2],
        ],
        dtype=np.complex128,
    )
    return GeneratorMatrix(S, float(K), float(p), float(sigma), "gravitational")


def generator_numeric(case, K, p, sigma) -> GeneratorMatrix:
    """``R_bar(K, p, sigma)^2`` from the closed-form averaged operator."""
    R = averaged_r(case, K, p, sigma)
    return GeneratorMatrix(R @ R, float(K), float(p), float(sigma), normalize_case(case))


class _Poly:
    """Polynomial in ``(K, p, sigma)`` truncated at total degree 2."""

    DEG = 2

    def __init__(self, coef=None):
        self.c = np.zeros((3, 3, 3), dtype=np.complex128) if coef is None else coef

    @classmethod
    def const(cls, x):
        P = cls()
        P.c[0, 0, 0] = x
        return P

    @classmethod
    def mono(cls, x, i, j, k):
        P = cls()
        P.c[i, j, k] = x
        return P

    def __add__(self, other):
        other = other if isinstance(other, _Poly) else _Poly.const(other)
        return _Poly(self.c + other.c)

    __radd__ = __add__

    def __neg__(self):
        return _Poly(-self.c)

    def __sub__(self, other):
        return self + (-other if isinstance(other, _Poly) else -other)

    def __rsub__(self, other):
        return -self + other

    def __mul__(self, other):
        if not isinstance(other, _Poly):
            return _Poly(self.c * other)
        out = np.zeros_like(self.c)
        for a, b in itertools.product(np.argwhere(self.c), np.argwhere(other.c)):
            e = a + b
            if e.sum() <= self.DEG:
                out[tuple(e)] += self.c[tuple(a)] * other.c[tuple(b)]
        return _Poly(out)

    __rmul__ = __mul__

    def __call__(self, K, p, sigma):
        i, j, k = np.indices(self.c.shape)
        return complex(np.sum(self.c * K**i * p**j * sigma**k))


def _taylor_rbar(case):
    """Averaged operator with every entry expanded to second order."""
    K, p, s = _Poly.mono(1, 1, 0, 0), _Poly.mono(1, 0, 1, 0), _Poly.mono(1, 0, 0, 1)
    c2K, s2K = 1 - 2 * (K * K), 2 * K
    c2p, s2p = 1 - 2 * (p * p), 2 * p
    b = 1 - (s * s) * (1 / 6)          # sinc(sigma)
    a = 1 - (s * s) * (1 / 24)         # sinc(sigma / 2)
    Z = _Poly()
    if case == "gravitational":
        return [
            [c2K, 1j * s2K, Z, Z],
            [Z, Z, b * c2p, -1j * b * s2p],
            [1j * b * s2K, b * c2K, Z, Z],
            [Z, Z, 1j * s2p, -1 * c2p],
        ]
    return [
        [c2K, 1j * s2K, Z, Z],
        [Z, Z, a * c2p, -1j * a * s2p],
        [1j * a * s2K, a * c2K, (1 - b) * 0.5 * c2p, 0.5j * (b - 1) * s2p],
        [Z, Z, 0.5j * (1 + b) * s2p, -0.5 * (b + 1) * c2p],
    ]


_TAYLOR_CACHE = {}


def taylor_square(case):
    """Second-order polynomial entries of ``R_bar^2`` as a 4x4 nested list."""
    case = normalize_case(case)
    if case not in _TAYLOR_CACHE:
        R = _taylor_rbar(case)
        _TAYLOR_CACHE[case] = [
            [sum((R[i][k] * R[k][j] for k in range(4)), _Poly()) for j in range(4)]
            for i in range(4)
        ]
    return _TAYLOR_CACHE[case]


def generator_taylor(case, K, p, sigma) -> GeneratorMatrix:
    """Second-order Taylor polynomial of ``R_bar^2`` around ``K = p = sigma = 0``."""
    S2 = taylor_square(case)
    S = np.array([[S2[i][j](K, p, sigma) for j in range(4)] for i in range(4)])
    return GeneratorMatrix(S, float(K), float(p), float(sigma), normalize_case(case))


def taylor_coefficients(case, entry) -> dict:
    """Non-zero monomial coefficients of one entry (1-based) of the expansion.

    Keys are exponent triples ``(deg K, deg p, deg sigma)``.
    """
    P = taylor_square(case)[entry[0] - 1][entry[1] - 1]
    return {tuple(int(x) for x in idx): complex(P.c[tuple(idx)])
            for idx in np.argwhere(np.abs(P.c) > 1e-15)}


def order_ratio(reference, approx, direction, eps=1e-3):
    """Halving ratio ``err(eps)/err(eps/2)`` of ``max |reference - approx|``.

    ``reference`` and ``approx`` map ``(K, p, sigma)`` to 4x4 arrays.  A
    remainder of order ``n`` gives a ratio close to ``2**n``.  Also returns
    the per-entry ratios.
    """
    d = np.asarray(direction, dtype=float)

    def err(e):
        K, p, s = e * d
        return np.abs(np.asarray(reference(K, p, s)) - np.asarray(approx(K, p, s)))

    e1, e2 = err(eps), err(eps / 2)
    with np.errstate(divide="ignore", invalid="ignore"):
        entry_ratio = e1 / e2
    return float(e1.max() / e2.max()), entry_ratio


def published_g_failures(direction=(1.0, 1.0, 1.0), eps=1e-3, min_ratio=6.0):
    """Entries (1-based) of the published gravitational table whose distance
    to the squared operator shrinks slower than third order along
    ``direction`` (halving ratio below ``min_ratio``)."""
    _, ratios = order_ratio(
        lambda K, p, s: generator_numeric("g", K, p, s).matrix,
        lambda K, p, s: generator_g(K, p, s).matrix,
        direction,
        eps,
    )
    bad = []
    for i in range(4):
        for j in range(4):
            r = ratios[i, j]
            if np.isfinite(r) and r < min_ratio:
                bad.append((i + 1, j + 1))
    return bad


def two_step_subsample(trajectory):
    """Keep the states at odd steps ``j = 2r + 1`` of ``trajectory[j]``."""
    trajectory = list(trajectory)
    if len(trajectory) < 2:
        raise ValueError("trajectory must contain at least two states")
    out = trajectory[1::2]
    if not out:
        raise ValueError("subsampling left no states")
    return out


def integrate_continuum(rho0_mode: FourierModeVector, case, K, p, sigma, t,
                        generator="taylor") -> FourierModeVector:
    """Solve ``d rho_hat/dt = (S - 1) rho_hat`` for one mode up to time ``t``.

    ``generator`` selects ``S``: ``"taylor"`` (second-order expansion),
    ``"published"`` (the verbatim gravitational table) or ``"square"``
    (``R_bar^2`` itself).
    """
    mode = basis_change(rho0_mode, "u")
    if generator == "taylor":
        S = generator_taylor(case, K, p, sigma)
    elif generator == "published":
        if normalize_case(case) != "gravitational":
            raise ValueError("the published table exists for the gravitational case only")
        S = generator_g(K, p, sigma)
    elif generator == "square":
        S = generator_numeric(case, K, p, sigma)
    else:
        raise ValueError(f"unknown generator {generator!r}")
    comp = expm(S.generator() * float(t)) @ mode.comp
    return FourierModeVector(mode.K, mode.p, comp, "u")
