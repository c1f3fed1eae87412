"""Closed-form long-time results and the eigen-analysis behind them.

At small ``K`` the averaged mode operator has a leading eigenvalue
``1 - alpha(p, sigma) K^2 + O(K^4)`` whose eigenvector tends to ``u1``.  The
mean density transform therefore behaves like ``(1/2) exp(-alpha j K^2) u1``
and the walk spreads diffusively.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .errors import ConfigurationError, DegeneracyError, DomainError, SingularParameterError, ValidityWarning
from .noise import averaged_r, check_sigma, normalize_case, sinc

_SINGULAR = 1e-12


def _scalar_or_array(x):
    return float(x) if np.ndim(x) == 0 else x


def alpha_electric(p, sigma):
    """Curvature of the leading eigenvalue for random ``xi``; vectorized over ``p``."""
    sigma = check_sigma(sigma)
    b, a2 = sinc(sigma), sinc(sigma / 2) ** 2
    c = np.cos(2 * np.asarray(p, dtype=float))
    base = 3 + b**2
    num = base + 2 * a2 * (1 + b) + 4 * c * (b + a2)
    den = base - 2 * a2 * (1 + b) + 4 * c * (b - a2)
    if np.any(np.abs(den) < _SINGULAR):
        raise SingularParameterError(f"alpha_electric denominator vanishes at sigma={sigma}")
    return _scalar_or_array(2 * num / den)


def alpha_gravitational(sigma, p=None):
    """Curvature of the leading eigenvalue for random ``theta``.

    Independent of ``p``; when ``p`` is given the value is broadcast to its shape.
    """
    sigma = check_sigma(sigma)
    b2 = sinc(sigma) ** 2
    if 1 - b2 < _SINGULAR:
        raise SingularParameterError("alpha_gravitational diverges as sigma -> 0 (ballistic limit)")
    value = float(2 * (1 + b2) / (1 - b2))
    if p is None:
        return value
    return _scalar_or_array(np.full(np.shape(p), value))


def alpha(case, p, sigma):
    if normalize_case(case) == "electric":
        return alpha_electric(p, sigma)
    return alpha_gravitational(sigma, p)


def s_factor(sigma) -> float:
    sigma = check_sigma(sigma)
    b, a2 = sinc(sigma), sinc(sigma / 2) ** 2
    rad = (3 + b**2 - 2 * a2 * (1 + b)) ** 2 - 16 * (b - a2) ** 2
    if rad < -1e-12:
        raise DomainError(f"s_factor radicand {rad:.3e} is negative at sigma={sigma}")
    return float(math.sqrt(max(rad, 0.0)))


def diffusion_g(sigma) -> float:
    return alpha_gravitational(sigma)


def diffusion_e(sigma) -> float:
    sigma = check_sigma(sigma)
    b, a2 = sinc(sigma), sinc(sigma / 2) ** 2
    den = b - a2
    if abs(den) < _SINGULAR:
        raise SingularParameterError(f"diffusion_e denominator vanishes at sigma={sigma}")
    s = s_factor(sigma)
    if s < _SINGULAR:
        raise SingularParameterError(f"s_factor vanishes at sigma={sigma}")
    return float(2 / den * ((b + a2) + 2 * a2 * (b**2 + 2 * b - 3) / s))


def diffusion(case, sigma) -> float:
    if normalize_case(case) == "electric":
        return diffusion_e(sigma)
    return diffusion_g(sigma)


def diffusion_from_alpha(case, sigma, epsabs=1e-10) -> float:
    """``(1/2 pi) int_{-pi}^{pi} alpha(p, sigma) dp`` by adaptive quadrature."""
    val, _ = integrate.quad(lambda p: alpha(case, p, sigma), 0.0, math.pi,
                            epsabs=epsabs, epsrel=1e-12, limit=200)
    return val / math.pi


@dataclass(frozen=True)
class EigenPair:
    eigenvalue: complex
    eigenvector: np.ndarray
    K: float
    p: float
    sigma: float
    case: str

    def residual(self) -> float:
        R = averaged_r(self.case, self.K, self.p, self.sigma)
        w = self.eigenvector
        return float(np.linalg.norm(R @ w - self.eigenvalue * w) / np.linalg.norm(w))


def eigenvalues(case, K, p, sigma) -> np.ndarray:
    return np.linalg.eigvals(averaged_r(case, K, p, sigma))


def leading_eigenpair(case, K, p, sigma) -> EigenPair:
    """Eigenpair of the exact averaged operator connected to ``(1, u1)`` at ``K = 0``.

    The branch is the eigenvector with the largest overlap with ``u1``; the
    eigenvector is scaled so that its first u-component equals 1.
    """
    case = normalize_case(case)
    R = averaged_r(case, K, p, sigma)
    lam, W = np.linalg.eig(R)
    overlap = np.abs(W[0]) / np.linalg.norm(W, axis=0)
    order = np.argsort(overlap)[::-1]
    best = order[0]
    others = [r for r in range(4) if r != best]
    close = [r for r in others if abs(lam[r] - lam[best]) < 1e-10]
    if close or overlap[order[1]] > overlap[best] - 1e-10:
        cands = [(complex(lam[r]), W[:, r] / W[0, r] if W[0, r] != 0 else W[:, r])
                 for r in [best] + (close or [order[1]])]
        raise DegeneracyError(
            f"leading eigenvalue is ambiguous at K={K}, p={p}, sigma={sigma}", cands
        )
    w = W[:, best] / W[0, best]
    return EigenPair(complex(lam[best]), w, float(K), float(p), float(sigma), case)


def spectral_gap(case, p, sigma) -> float:
    """``1 - max |lambda_r|`` over the subleading eigenvalues at ``K = 0``."""
    lam = np.sort(np.abs(eigenvalues(case, 0.0, p, sigma)))
    return float(1 - lam[-2])


def alpha_from_eigenvalue(case, p, sigma, Ks=None) -> float:
    """Richardson-extrapolated ``(1 - lambda_1)/K^2`` as ``K -> 0``.

    By default ``K1 = 1e-2``, shrunk by ``(gap/0.1)^1.5`` when the
    subleading spectrum at ``K = 0`` comes within 0.1 of the unit circle, and
    ``K2 = K1/10``.  The quadratic law only holds while ``alpha K^2`` stays
    small against the gap.
    """
    if Ks is None:
        gap = max(spectral_gap(case, p, sigma), 1e-12)
        K1 = 1e-2 * min(1.0, gap / 0.1) ** 1.5
        Ks = (K1, K1 / 10)
    K1, K2 = Ks
    f1 = (1 - leading_eigenpair(case, K1, p, sigma).eigenvalue.real) / K1**2
    f2 = (1 - leading_eigenpair(case, K2, p, sigma).eigenvalue.real) / K2**2
    return (K1**2 * f2 - K2**2 * f1) / (K1**2 - K2**2)


def w1_gravitational(K, p, sigma) -> np.ndarray:
    """First-order eigenvector of the gravitational operator, first component 1."""
    b = sinc(check_sigma(sigma))
    d = 1 - b**2
    return np.array([1.0, 2j * K * b**2 / d, 2j * K * b / d, -2 * K * b * math.tan(p) / d])


def asymptotic_mode_amplitude(j, K, p, sigma, case) -> complex:
    """u1 amplitude ``(1/2) exp(-alpha j K^2)`` of the long-time mode."""
    if j < 1:
        raise ValueError("j must be at least 1")
    a = alpha(case, p, sigma)
    return 0.5 * np.exp(-a * j * np.asarray(K, dtype=float) ** 2)


def asymptotic_density(j, m_grid, sigma, case, epsabs=1e-13):
    """Long-time density ``(1/4 pi^2) int dp int dK exp(-alpha j K^2) exp(-i K m)``.

    The K-integral is the Gaussian integral over the whole line; dropping the
    tails beyond ``|K| = pi`` costs at most ``exp(-alpha j pi^2)``.  The
    p-integral is done by adaptive quadrature.
    """
    case = normalize_case(case)
    m = np.asarray(m_grid, dtype=float)
    if case == "gravitational":
        a_min = alpha_gravitational(sigma)
    else:
        ps = np.linspace(0, math.pi, 257)
        a_min = float(np.min(alpha_electric(ps, sigma)))
    if a_min * j * math.pi**2 < 30:
        warnings.warn(
            f"alpha j pi^2 = {a_min * j * math.pi**2:.3g} is not large; the Gaussian form is inaccurate",
            ValidityWarning,
            stacklevel=2,
        )

    def integrand(p):
        a = alpha(case, p, sigma) * j
        return math.sqrt(math.pi / a) * np.exp(-(m**2) / (4 * a))

    if case == "gravitational":
        return integrand(0.0) / (2 * math.pi)
    val, _ = integrate.quad_vec(integrand, 0.0, math.pi, epsabs=epsabs, epsrel=1e-10)
    return val / (2 * math.pi**2)


def oracle_table(sigma_grid):
    """Rows ``(sigma, D_e, D_g, alpha_g)`` with per-row flags.

    Singular entries are kept as NaN with ``singular=True``.  ``decreasing``
    compares each row with the previous one (True on the first row).
    """
    rows = []
    prev = None
    for s in sigma_grid:
        s = float(s)
        row = {"sigma": s, "D_e": math.nan, "D_g": math.nan, "alpha_g": math.nan,
               "singular": False}
        try:
            row["D_g"] = diffusion_g(s)
            row["alpha_g"] = alpha_gravitational(s)
            row["D_e"] = diffusion_e(s)
        except (SingularParameterError, DomainError, ConfigurationError):
            row["singular"] = True
        row["g_below_e"] = bool(row["D_g"] < row["D_e"])
        if prev is None or prev["singular"] or row["singular"]:
            row["decreasing"] = not row["singular"]
        else:
            row["decreasing"] = bool(row["D_g"] < prev["D_g"] and row["D_e"] < prev["D_e"])
        rows.append(row)
        prev = row
    return rows
