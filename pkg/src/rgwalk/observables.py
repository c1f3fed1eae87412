"""Diagnostics computed from density fields, spin densities and profiles."""

from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .density import DensityField
from .errors import ConfigurationError, ContractViolation, NumericalValidityError, WrapAroundWarning


@dataclass
class ObservableSeries:
    """Real samples ``values[i]`` taken at steps ``times[i]``."""

    name: str
    times: np.ndarray
    values: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=int)
        self.values = np.asarray(self.values, dtype=float)
        if self.times.shape != self.values.shape or self.times.ndim != 1:
            raise ValueError("times and values must be 1-D arrays of equal length")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("values must be finite")

    def window(self, j1, j2) -> "ObservableSeries":
        keep = (self.times >= j1) & (self.times <= j2)
        return ObservableSeries(self.name, self.times[keep], self.values[keep], dict(self.metadata))

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        buf.write(f"#name={self.name}\n")
        for key in sorted(self.metadata):
            buf.write(f"#{key}={self.metadata[key]}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["j", "value"])
        for j, v in zip(self.times, self.values):
            w.writerow([int(j), repr(float(v))])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text

    @classmethod
    def from_csv(cls, path) -> "ObservableSeries":
        meta, times, values = {}, [], []
        with open(path, newline="") as fh:
            for line in fh:
                line = line.rstrip("\n")
                if line.startswith("#"):
                    key, _, value = line[1:].partition("=")
                    meta[key] = value
                elif line and line != "j,value":
                    j, v = line.split(",")
                    times.append(int(j))
                    values.append(float(v))
        name = meta.pop("name", "series")
        return cls(name, np.array(times), np.array(values), meta)


def _require_v(rho: DensityField):
    if rho.basis != "v":
        raise ContractViolation("observables need a v-basis field; convert first")


def probability_profile(rho: DensityField) -> np.ndarray:
    """``N_m = rho_LL_{m,m} + rho_RR_{m,m}``."""
    _require_v(rho)
    return (np.diagonal(rho.comp[0]) + np.diagonal(rho.comp[3])).real.copy()


def spin_coherence(rho: DensityField) -> float:
    """``max_{m,m'} |rho_LR_{m,m'}|``."""
    _require_v(rho)
    return float(np.abs(rho.comp[1]).max())


def reduced_spin_density(rho: DensityField) -> np.ndarray:
    """Site-traced 2x2 spin density ``sum_m rho_{m,m}``."""
    _require_v(rho)
    d = np.array([np.trace(c) for c in rho.comp])
    return d.reshape(2, 2)


def shannon_entropy(rho_r, tol=1e-10) -> float:
    """Base-2 entropy ``-sum lambda log2 lambda`` of a 2x2 spin density."""
    rho_r = np.asarray(rho_r, dtype=np.complex128)
    lam = np.linalg.eigvalsh((rho_r + rho_r.conj().T) / 2)
    if lam.min() < -tol:
        raise NumericalValidityError(f"spin density has eigenvalue {lam.min():.3e} < 0")
    lam = np.clip(lam, 0.0, None)
    lam = lam[lam > 0]
    return float(max(0.0, -np.sum(lam * np.log2(lam))))


def entropy_series(rho_r_series) -> np.ndarray:
    """Entropy of each 2x2 matrix in a ``(T, 2, 2)`` stack."""
    rho = np.asarray(rho_r_series)
    herm = (rho + np.conj(np.swapaxes(rho, -1, -2))) / 2
    lam = np.clip(np.linalg.eigvalsh(herm), 0.0, None)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(lam > 0, -lam * np.log2(np.where(lam > 0, lam, 1.0)), 0.0)
    return terms.sum(axis=-1)


@dataclass(frozen=True)
class Displacement:
    """Mean square displacement with a flag for mass at the circle edge."""

    value: float
    wrapped: bool

    def __float__(self):
        return self.value


def _sites(N):
    M = (len(N) - 1) // 2
    return np.arange(-M, M + 1)


def _check_profile(N, tol=1e-6):
    N = np.asarray(N, dtype=float)
    if N.ndim != 1 or len(N) % 2 == 0:
        raise ValueError("profile must be 1-D with an odd number of sites")
    if abs(N.sum() - 1) > tol:
        raise ValueError(f"profile must sum to 1 within {tol}, got {N.sum()}")
    return N


def mean_square_displacement(N, edge_tol=1e-12) -> Displacement:
    """``sum_m m^2 N_m``; ``wrapped`` is set when ``|N_{+-M}| > edge_tol``."""
    N = _check_profile(N)
    m = _sites(N)
    wrapped = bool(abs(N[0]) > edge_tol or abs(N[-1]) > edge_tol)
    if wrapped:
        warnings.warn("profile has mass on the circle edge", WrapAroundWarning, stacklevel=2)
    return Displacement(float(np.sum(m.astype(float) ** 2 * N)), wrapped)


def profile_kurtosis(N) -> float:
    """``sum m^4 N / (sum m^2 N)^2``."""
    N = _check_profile(N)
    m = _sites(N).astype(float)
    m2 = np.sum(m**2 * N)
    if m2 <= 0:
        raise NumericalValidityError("degenerate profile: zero second moment")
    return float(np.sum(m**4 * N) / m2**2)


@dataclass(frozen=True)
class DiffusionFit:
    D: float
    intercept: float
    residual: float
    points: int


def fit_diffusion_coefficient(series: ObservableSeries, window) -> DiffusionFit:
    """Least-squares line through ``m^2(j)`` on ``window``; ``D`` is slope/2.

    ``residual`` is the RMS deviation from the line relative to the RMS of
    the data in the window.
    """
    j1, j2 = window
    if not j2 > j1:
        raise ConfigurationError("window must satisfy j2 > j1", "window")
    w = series.window(j1, j2)
    if len(w.times) < 3:
        raise ConfigurationError("fewer than 3 points in the fit window", "window")
    t = w.times.astype(float)
    A = np.vstack([t, np.ones_like(t)]).T
    coef, *_ = np.linalg.lstsq(A, w.values, rcond=None)
    resid = w.values - A @ coef
    scale = math.sqrt(np.mean(w.values**2)) or 1.0
    return DiffusionFit(float(coef[0] / 2), float(coef[1]),
                        float(math.sqrt(np.mean(resid**2)) / scale), len(t))


def moving_average(values, window: int = 10) -> np.ndarray:
    """Trailing mean over ``window`` samples (shorter at the start)."""
    v = np.asarray(values, dtype=float)
    c = np.cumsum(np.concatenate([[0.0], v]))
    idx = np.arange(1, len(v) + 1)
    lo = np.maximum(idx - window, 0)
    return (c[idx] - c[lo]) / (idx - lo)


def decay_time(values, times=None, window: int = 10, level=None):
    """First time at which the moving average of ``values`` drops below
    ``level`` (default ``values[0]/e``); ``None`` when it never does."""
    v = np.asarray(values, dtype=float)
    times = np.arange(len(v)) if times is None else np.asarray(times)
    level = v[0] / math.e if level is None else level
    below = np.nonzero(moving_average(v, window) < level)[0]
    return None if below.size == 0 else int(times[below[0]])


def relative_decay_time(values, reference, window: int = 10):
    """First step where ``avg(values)/avg(reference)`` drops below ``1/e``.

    Both series are smoothed separately with :func:`moving_average` so that
    zeros of the reference do not produce spurious ratios.
    """
    num = moving_average(np.abs(values), window)
    den = moving_average(np.abs(reference), window)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = num / den
    below = np.nonzero(ratio < 1 / math.e)[0]
    return None if below.size == 0 else int(below[0])


def reduced_coherence_time(case, sigma, M: int, steps: int, window: int = 10, backend=None):
    """Decay time of the site-traced spin coherence relative to the pure walk.

    ``|rho_r^LR|`` of the mean walk at noise ``sigma`` is compared with the
    same quantity at ``sigma = 0``; see :func:`relative_decay_time`.
    """
    from .noise import reduced_density_series

    noisy = reduced_density_series(case, sigma, M, steps, backend)[:, 0, 1]
    pure = reduced_density_series(case, 0.0, M, steps, backend)[:, 0, 1]
    return relative_decay_time(noisy, pure, window)
