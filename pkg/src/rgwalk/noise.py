"""Time-random coin angles and the exactly averaged dynamics.

In the electric case ``theta`` stays at pi/4 and ``xi`` is drawn uniformly in
``(pi/2 - sigma/2, pi/2 + sigma/2)`` at every step; in the gravitational
case ``xi`` stays at pi/2 and ``theta`` is drawn in
``(pi/4 - sigma/2, pi/4 + sigma/2)``.  Because the draws are independent and
the angles do not depend on position, the mean density operator obeys a
closed linear recursion mode by mode, with the averaged operators returned by
:func:`averaged_r_electric` and :func:`averaged_r_gravitational`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import kernels
from .density import (
    U_FROM_V,
    V_FROM_U,
    DensityField,
    FourierModeVector,
    basis_change,
    density_dft,
    density_idft,
    mode_coordinates,
    step_density_q,
    to_u,
    to_v,
)
from .errors import ConfigurationError
from .lattice import CircleGrid
from .walk import THETA_H, XI_H, CoinAngles, SpinorField, check_wrap, coin_matrix

CASES = ("electric", "gravitational")
_ALIASES = {"e": "electric", "g": "gravitational", "electric": "electric",
            "gravitational": "gravitational"}
TWO_PI = 2 * math.pi


def normalize_case(case: str) -> str:
    try:
        return _ALIASES[str(case).lower()]
    except KeyError:
        raise ConfigurationError(
            f"unknown field case {case!r}; expected 'electric' or 'gravitational'", "case"
        ) from None


def check_sigma(sigma) -> float:
    """Validate a noise amplitude.  ``sigma = 0`` is accepted as the
    deterministic limit."""
    sigma = float(sigma)
    if not (0.0 <= sigma < TWO_PI):
        raise ConfigurationError(f"sigma must lie in [0, 2 pi), got {sigma}", "sigma")
    return sigma


def sinc(x):
    """Unnormalized cardinal sine ``sin(x)/x`` with ``sinc(0) = 1``."""
    return np.sinc(np.asarray(x, dtype=float) / np.pi)


@dataclass(frozen=True)
class NoiseConfig:
    case: str
    sigma: float
    seed: int = 0
    realizations: int = 1

    def __post_init__(self):
        object.__setattr__(self, "case", normalize_case(self.case))
        object.__setattr__(self, "sigma", check_sigma(self.sigma))
        if int(self.seed) != self.seed or not 0 <= self.seed < 2**64:
            raise ConfigurationError("seed must be an integer in [0, 2**64)", "seed")
        if int(self.realizations) != self.realizations or self.realizations < 1:
            raise ConfigurationError("realizations must be a positive integer", "realizations")

    @property
    def center(self) -> float:
        return XI_H if self.case == "electric" else THETA_H

    @property
    def interval(self):
        return (self.center - self.sigma / 2, self.center + self.sigma / 2)

    def angles(self, omega: float) -> CoinAngles:
        """Coin angles for the sampled value ``omega``."""
        if self.case == "electric":
            return CoinAngles(THETA_H, omega)
        return CoinAngles(omega, XI_H)

    def rng(self, index: int = 0) -> np.random.Generator:
        """Independent generator for realization ``index``."""
        return np.random.default_rng(np.random.SeedSequence([int(self.seed), int(index)]))


def sample_angle(cfg: NoiseConfig, rng: np.random.Generator) -> float:
    """One uniform draw on the noise interval of ``cfg``."""
    check_sigma(cfg.sigma)
    return cfg.center + cfg.sigma * (rng.random() - 0.5)


def sample_sequence(cfg: NoiseConfig, steps: int, index: int = 0) -> np.ndarray:
    """Angles ``omega_1..omega_steps`` of realization ``index``."""
    rng = cfg.rng(index)
    return cfg.center + cfg.sigma * (rng.random(int(steps)) - 0.5)


@dataclass
class RealizationRecord:
    """Seed and sampled angles of one realization, replayable bit for bit."""

    seed: int
    angles: np.ndarray
    case: str = "electric"
    sigma: float = 0.0
    index: int = 0

    @classmethod
    def draw(cls, cfg: NoiseConfig, steps: int, index: int = 0) -> "RealizationRecord":
        return cls(cfg.seed, sample_sequence(cfg, steps, index), cfg.case, cfg.sigma, index)

    def save(self, path):
        lines = [
            f"# seed={self.seed}",
            f"# case={self.case}",
            f"# sigma={self.sigma!r}",
            f"# index={self.index}",
        ]
        lines += ["%.17g" % a for a in self.angles]
        Path(path).write_text("\n".join(lines) + "\n")

    @classmethod
    def load(cls, path) -> "RealizationRecord":
        meta = {}
        angles = []
        for line in Path(path).read_text().splitlines():
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, value = line[1:].strip().partition("=")
                meta[key.strip()] = value.strip()
            else:
                angles.append(float(line))
        return cls(
            int(meta.get("seed", 0)),
            np.array(angles),
            meta.get("case", "electric"),
            float(meta.get("sigma", 0.0)),
            int(meta.get("index", 0)),
        )

    def coins(self):
        cfg = NoiseConfig(self.case, self.sigma, self.seed)
        return [cfg.angles(a) for a in self.angles]


def _blank(K, p):
    K, p = np.broadcast_arrays(np.asarray(K, dtype=float), np.asarray(p, dtype=float))
    return K, p, np.zeros(K.shape + (4, 4), dtype=np.complex128)


def averaged_r_electric(K, p, sigma) -> np.ndarray:
    """Mean one-step mode operator for random ``xi``, u-basis, shape ``(..., 4, 4)``."""
    sigma = check_sigma(sigma)
    K, p, R = _blank(K, p)
    a, b = sinc(sigma / 2), sinc(sigma)
    c2K, s2K, c2p, s2p = np.cos(2 * K), np.sin(2 * K), np.cos(2 * p), np.sin(2 * p)
    R[..., 0, 0] = c2K
    R[..., 0, 1] = 1j * s2K
    R[..., 1, 2] = a * c2p
    R[..., 1, 3] = -1j * a * s2p
    R[..., 2, 0] = 1j * a * s2K
    R[..., 2, 1] = a * c2K
    R[..., 2, 2] = (1 - b) / 2 * c2p
    R[..., 2, 3] = 1j * (b - 1) / 2 * s2p
    R[..., 3, 2] = 1j * (1 + b) / 2 * s2p
    R[..., 3, 3] = -(b + 1) / 2 * c2p
    return R


def averaged_r_gravitational(K, p, sigma) -> np.ndarray:
    """Mean one-step mode operator for random ``theta``, u-basis."""
    sigma = check_sigma(sigma)
    K, p, R = _blank(K, p)
    b = sinc(sigma)
    c2K, s2K, c2p, s2p = np.cos(2 * K), np.sin(2 * K), np.cos(2 * p), np.sin(2 * p)
    R[..., 0, 0] = c2K
    R[..., 0, 1] = 1j * s2K
    R[..., 1, 2] = b * c2p
    R[..., 1, 3] = -1j * b * s2p
    R[..., 2, 0] = 1j * b * s2K
    R[..., 2, 1] = b * c2K
    R[..., 3, 2] = 1j * s2p
    R[..., 3, 3] = -c2p
    return R


def averaged_r(case, K, p, sigma) -> np.ndarray:
    if normalize_case(case) == "electric":
        return averaged_r_electric(K, p, sigma)
    return averaged_r_gravitational(K, p, sigma)


def averaged_r_kderivs(case, p, sigma, order: int) -> np.ndarray:
    """K-derivatives of :func:`averaged_r` at ``K = 0``, shape ``(order+1, ..., 4, 4)``.

    The operator is affine in ``cos 2K`` and ``sin 2K``, so the derivatives
    follow from three evaluations.
    """
    Rp = averaged_r(case, math.pi / 4, p, sigma)
    Rm = averaged_r(case, -math.pi / 4, p, sigma)
    R0 = averaged_r(case, 0.0, p, sigma)
    Bs = (Rp - Rm) / 2
    Bc = R0 - (Rp + Rm) / 2
    out = [R0]
    for n in range(1, order + 1):
        # n-th derivatives of cos 2K and sin 2K at 0
        dc = (1, 0, -1, 0)[n % 4] * 2.0**n
        ds = (0, 1, 0, -1)[n % 4] * 2.0**n
        out.append(dc * Bc + ds * Bs)
    return np.stack(out)


def averaged_q(cfg: NoiseConfig) -> np.ndarray:
    """Mean site-pair coin in the v-basis.

    At ``K = p = 0`` every mode phase is 1, so the averaged mode operator
    reduces to the averaged pair coin.
    """
    return V_FROM_U @ averaged_r(cfg.case, 0.0, 0.0, cfg.sigma) @ U_FROM_V


def _records(steps, record):
    if record is None:
        return list(range(steps + 1))
    wanted = sorted(set(int(j) for j in record))
    if wanted and (wanted[0] < 0 or wanted[-1] > steps):
        raise ConfigurationError("recorded steps must lie in [0, steps]", "record")
    return wanted


def evolve_averaged(rho0: DensityField, cfg: NoiseConfig, steps: int, method="fourier",
                    record=None, backend=None):
    """Exact mean density trajectory.

    ``method`` is ``"fourier"`` (each native mode evolved by its averaged
    operator) or ``"physical"`` (the averaged pair coin applied in site
    space).  Returns the list of v-basis fields at the steps in ``record``
    (all steps ``0..steps`` by default).
    """
    steps = int(steps)
    if steps < 0:
        raise ConfigurationError("steps must be non-negative", "steps")
    grid = rho0.grid
    rho0 = basis_change(rho0, "v")
    wanted = _records(steps, record)
    check_wrap(grid, steps)
    out = []
    if method == "physical":
        Qbar = averaged_q(cfg)
        rho, j = rho0, 0
        for target in wanted:
            while j < target:
                rho = step_density_q(rho, Qbar, backend)
                j += 1
            out.append(rho)
        return out
    if method != "fourier":
        raise ConfigurationError(f"unknown method {method!r}", "method")
    N = grid.size
    K, p = mode_coordinates(grid)
    R = np.ascontiguousarray(averaged_r(cfg.case, K, p, cfg.sigma).reshape(N * N, 4, 4))
    v = np.ascontiguousarray(to_u(density_dft(rho0)).reshape(4, N * N).T)
    j = 0
    for target in wanted:
        kernels.evolve_modes(R, v, target - j, backend)
        j = target
        out.append(density_idft(grid, to_v(v.T.reshape(4, N, N)), "v"))
    return out


def evolve_mode(mode: FourierModeVector, case, sigma, steps: int) -> FourierModeVector:
    """Evolve a single mode vector ``steps`` times with the averaged operator."""
    mode = basis_change(mode, "u")
    R = averaged_r(case, mode.K, mode.p, sigma)
    comp = np.linalg.matrix_power(R, int(steps)) @ mode.comp
    return FourierModeVector(mode.K, mode.p, comp, "u")


def evolve_modes_u(case, K, p, sigma, steps: int, initial=None, backend=None) -> np.ndarray:
    """Evolve many modes at once; returns u-coefficients of shape ``(..., 4)``.

    ``initial`` defaults to the transformed initial state ``(u1 - i u4)/2``.
    """
    K, p = np.broadcast_arrays(np.asarray(K, dtype=float), np.asarray(p, dtype=float))
    shape = K.shape
    R = np.ascontiguousarray(averaged_r(case, K, p, sigma).reshape(-1, 4, 4))
    if initial is None:
        initial = np.array([0.5, 0, 0, -0.5j])
    # explicit copy: a broadcast view is read-only and the kernel works in place
    v = np.array(np.broadcast_to(initial, shape + (4,)).reshape(-1, 4), dtype=np.complex128, order="C")
    kernels.evolve_modes(R, v, int(steps), backend)
    return v.reshape(shape + (4,))


def line_p_grid(M: int) -> np.ndarray:
    """Relative wavenumbers of the ``K = 0`` modes on a circle of half-width ``M``."""
    return CircleGrid(M).wavenumbers


@dataclass
class MomentSeries:
    """Profile moments of the exact mean walk at ``j = 0..steps``."""

    total: np.ndarray
    m2: np.ndarray
    m4: np.ndarray
    metadata: dict = field(default_factory=dict)

    @property
    def steps(self) -> np.ndarray:
        return np.arange(len(self.total))

    @property
    def kurtosis(self) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            return self.m4 / self.m2**2


def moment_series(case, sigma, M: int, steps: int, order: int = 4, backend=None) -> MomentSeries:
    """Moments ``sum N``, ``sum m^2 N`` and ``sum m^4 N`` of the mean profile.

    The profile transform is ``N_hat(2K) = mean_p 2 a1(K, p)`` with ``a1`` the
    u1 coefficient, so the moments are K-derivatives at ``K = 0``.  Those are
    propagated with the Leibniz rule over the ``K = 0`` modes of a circle of
    half-width ``M``; the result is exact while ``steps < M``.
    """
    if order < 2 or order > 7:
        raise ConfigurationError("order must lie in [2, 7]", "order")
    check_wrap(CircleGrid(M), steps)
    p = line_p_grid(M)
    D = np.ascontiguousarray(averaged_r_kderivs(case, p, sigma, order))
    v = np.zeros((order + 1, p.size, 4), dtype=np.complex128)
    v[0, :, 0] = 0.5
    v[0, :, 3] = -0.5j
    out = kernels.jet_means(D, v, steps, backend)
    d = 2.0 * out[:, :, 0].real
    m4 = d[:, 4] / 16 if order >= 4 else np.full(steps + 1, np.nan)
    return MomentSeries(d[:, 0], -d[:, 2] / 4, m4,
                        {"case": normalize_case(case), "sigma": sigma, "M": M})


def reduced_density_series(case, sigma, M: int, steps: int, backend=None) -> np.ndarray:
    """Site-traced spin density of the mean walk, shape ``(steps+1, 2, 2)``.

    Uses only the ``K = 0`` modes: ``rho_r = mean_p rho_hat(0, p)``.
    Exact while ``steps < M``.
    """
    check_wrap(CircleGrid(M), steps)
    p = line_p_grid(M)
    D = np.ascontiguousarray(averaged_r(case, 0.0, p, sigma)[None])
    v = np.zeros((1, p.size, 4), dtype=np.complex128)
    v[0, :, 0] = 0.5
    v[0, :, 3] = -0.5j
    u = kernels.jet_means(D, v, steps, backend)[:, 0, :]
    return to_v(u, axis=1).reshape(steps + 1, 2, 2)


@dataclass
class MonteCarloResult:
    """Ensemble mean of ``rho`` with per-entry standard errors."""

    mean: DensityField
    stderr: np.ndarray
    profile: np.ndarray
    profile_stderr: np.ndarray
    realizations: int


def _pure_run(psi, coins):
    for B in coins:
        shifted = np.stack([np.roll(psi[0], -1), np.roll(psi[1], 1)])
        psi = B @ shifted
    return psi


def monte_carlo_average(psi0: SpinorField, cfg: NoiseConfig, steps: int,
                        realizations=None, seed=None) -> MonteCarloResult:
    """Average ``density_from_pure`` over independent realizations.

    Realization ``r`` draws its angles from the substream ``(seed, r)`` so the
    estimate does not depend on how realizations are scheduled.
    """
    if realizations is None:
        realizations = cfg.realizations
    if seed is not None:
        cfg = NoiseConfig(cfg.case, cfg.sigma, seed, cfg.realizations)
    if int(realizations) < 1:
        raise ConfigurationError("realizations must be at least 1", "realizations")
    grid = psi0.grid
    N = grid.size
    check_wrap(grid, steps)
    s1 = np.zeros((4, N, N), dtype=np.complex128)
    s2 = np.zeros((4, N, N))
    p1 = np.zeros(N)
    p2 = np.zeros(N)
    for r in range(int(realizations)):
        coins = [coin_matrix(cfg.angles(a)) for a in sample_sequence(cfg, steps, r)]
        psi = _pure_run(psi0.psi, coins)
        rho = np.einsum("am,bn->abmn", psi, psi.conj()).reshape(4, N, N)
        s1 += rho
        s2 += np.abs(rho) ** 2
        prof = np.sum(np.abs(psi) ** 2, axis=0)
        p1 += prof
        p2 += prof**2
    n = int(realizations)
    mean = s1 / n
    pmean = p1 / n
    if n > 1:
        var = np.maximum(s2 - n * np.abs(mean) ** 2, 0.0) / (n - 1)
        pvar = np.maximum(p2 - n * pmean**2, 0.0) / (n - 1)
        se, pse = np.sqrt(var / n), np.sqrt(pvar / n)
    else:
        se = np.full(mean.shape, np.nan)
        pse = np.full(N, np.nan)
    return MonteCarloResult(DensityField(grid, mean, "v"), se, pmean, pse, n)
