"""Command-line experiment runner.

Exit codes: 0 success, 1 configuration error, 2 numerical-validity error,
3 cross-check failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import warnings
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import __version__
from .asymptotics import oracle_table
from .continuum import generator_numeric, generator_taylor, order_ratio, published_g_failures
from .density import DensityField, default_initial_density, density_from_pure
from .errors import ConfigurationError, CrossCheckError, NumericalValidityError, WrapAroundWarning
from .gauge import AngleField, GaugeField, electric_field, gauge_transform, potential_from_field, transform_state
from .lattice import CircleGrid
from .noise import (
    NoiseConfig,
    evolve_averaged,
    moment_series,
    monte_carlo_average,
    check_sigma,
    normalize_case,
    reduced_density_series,
)
from .observables import (
    ObservableSeries,
    entropy_series,
    fit_diffusion_coefficient,
    probability_profile,
    reduced_spin_density,
    shannon_entropy,
    spin_coherence,
)
from .walk import CoinAngles, SpinorField, coin_matrix, coin_matrix_field, step_wavefunction_extended

METHODS = ("pure", "monte-carlo", "exact-averaged")
FORMATS = ("csv", "json")
OBSERVABLES = ("profile", "coherence", "entropy", "msd", "kurtosis")
# full-grid averaged evolution is used up to this many sites
FULL_GRID_LIMIT = 401


@dataclass
class ExperimentConfig:
    case: str = "gravitational"
    sigma: float = 0.5
    M: int = 128
    steps: int = 100
    method: str = "exact-averaged"
    realizations: int = 100
    seed: int = 0
    observables: tuple = OBSERVABLES
    out: str = ""
    format: str = "csv"
    allow_wrap: bool = False
    snapshots: tuple = ()

    def validate(self) -> "ExperimentConfig":
        self.case = normalize_case(self.case)
        try:
            self.sigma = float(self.sigma)
            self.M = int(self.M)
            self.steps = int(self.steps)
            self.realizations = int(self.realizations)
            self.seed = int(self.seed)
        except (TypeError, ValueError) as exc:
            raise ConfigurationError(f"bad numeric value: {exc}") from None
        if self.method not in METHODS:
            raise ConfigurationError(f"method must be one of {METHODS}", "method")
        if self.format not in FORMATS:
            raise ConfigurationError(f"format must be one of {FORMATS}", "format")
        if self.M < 1:
            raise ConfigurationError("M must be positive", "M")
        if self.steps < 0:
            raise ConfigurationError("steps must be non-negative", "steps")
        if self.method == "monte-carlo" and self.realizations < 1:
            raise ConfigurationError("realizations must be at least 1", "realizations")
        if self.steps >= self.M and not self.allow_wrap:
            raise ConfigurationError(
                f"steps ({self.steps}) must be below M ({self.M}) unless allow_wrap is set", "steps"
            )
        check_sigma(self.sigma)
        if self.method != "pure":
            NoiseConfig(self.case, self.sigma, self.seed, max(self.realizations, 1))
        self.observables = tuple(self.observables)
        unknown = set(self.observables) - set(OBSERVABLES)
        if unknown:
            raise ConfigurationError(f"unknown observables {sorted(unknown)}", "observables")
        self.snapshots = tuple(sorted({int(s) for s in self.snapshots} or {self.steps}))
        if any(s < 0 or s > self.steps for s in self.snapshots):
            raise ConfigurationError("snapshots must lie in [0, steps]", "snapshots")
        return self


@dataclass
class ResultBundle:
    profiles: dict = field(default_factory=dict)
    series: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)
    fitted_D: float = math.nan


def _metadata(cfg: ExperimentConfig) -> dict:
    meta = {
        "version": __version__,
        "case": cfg.case,
        "sigma": cfg.sigma,
        "M": cfg.M,
        "steps": cfg.steps,
        "method": cfg.method,
        "seed": cfg.seed,
        "tolerance": 1e-12,
    }
    if cfg.method == "monte-carlo":
        meta["realizations"] = cfg.realizations
    return meta


def _series(name, values, meta):
    values = np.asarray(values, dtype=float) + 0.0
    return ObservableSeries(name, np.arange(len(values)), values, dict(meta))


def _run_pure(cfg, bundle):
    grid = CircleGrid(cfg.M)
    state = SpinorField.default(grid)
    B = coin_matrix(CoinAngles.hadamard())
    m = grid.sites.astype(float)
    coh, ent, msd = [], [], []
    psi = state.psi
    for j in range(cfg.steps + 1):
        if j:
            psi = B @ np.stack([np.roll(psi[0], -1), np.roll(psi[1], 1)])
        prof = np.sum(np.abs(psi) ** 2, axis=0)
        coh.append(np.abs(psi[0]).max() * np.abs(psi[1]).max())
        ent.append(shannon_entropy(psi @ psi.conj().T))
        msd.append(float(np.sum(m**2 * prof)))
        if j in cfg.snapshots:
            bundle.profiles[j] = prof
    return coh, ent, msd


def _run_monte_carlo(cfg, bundle):
    grid = CircleGrid(cfg.M)
    ncfg = NoiseConfig(cfg.case, cfg.sigma, cfg.seed, cfg.realizations)
    psi0 = SpinorField.default(grid)
    m = grid.sites.astype(float)
    # statistics of the mean walk at every step, accumulated over realizations
    from .noise import sample_sequence

    T = cfg.steps + 1
    prof_sum = np.zeros((T, grid.size))
    rr_sum = np.zeros((T, 2, 2), dtype=np.complex128)
    lr_sum = np.zeros((T, grid.size, grid.size), dtype=np.complex128) if T * grid.size**2 <= 2e7 else None
    for r in range(cfg.realizations):
        psi = psi0.psi
        angles = sample_sequence(ncfg, cfg.steps, r)
        for j in range(T):
            if j:
                B = coin_matrix(ncfg.angles(angles[j - 1]))
                psi = B @ np.stack([np.roll(psi[0], -1), np.roll(psi[1], 1)])
            prof_sum[j] += np.sum(np.abs(psi) ** 2, axis=0)
            rr_sum[j] += psi @ psi.conj().T
            if lr_sum is not None:
                lr_sum[j] += np.outer(psi[0], psi[1].conj())
    n = cfg.realizations
    profiles = prof_sum / n
    for j in cfg.snapshots:
        bundle.profiles[j] = profiles[j]
    msd = profiles @ (m**2)
    ent = entropy_series(rr_sum / n)
    if lr_sum is None:
        bundle.metadata["coherence"] = "skipped: grid too large"
        coh = None
    else:
        coh = np.abs(lr_sum / n).reshape(T, -1).max(axis=1)
    return coh, ent, msd


def _run_exact(cfg, bundle):
    mom = moment_series(cfg.case, cfg.sigma, max(cfg.M, cfg.steps + 1), cfg.steps)
    rr = reduced_density_series(cfg.case, cfg.sigma, max(cfg.M, cfg.steps + 1), cfg.steps)
    ent = entropy_series(rr)
    coh = None
    grid = CircleGrid(cfg.M)
    if grid.size <= FULL_GRID_LIMIT:
        ncfg = NoiseConfig(cfg.case, cfg.sigma, cfg.seed)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", WrapAroundWarning)
            traj = evolve_averaged(default_initial_density(grid), ncfg, cfg.steps,
                                   record=range(cfg.steps + 1))
        coh = [spin_coherence(r) for r in traj]
        for j in cfg.snapshots:
            bundle.profiles[j] = probability_profile(traj[j])
    else:
        bundle.metadata["profiles"] = "skipped: grid too large for full-field evolution"
        bundle.metadata["coherence"] = "skipped: grid too large for full-field evolution"
    bundle.series["kurtosis"] = _series("kurtosis", np.nan_to_num(mom.kurtosis, nan=0.0), bundle.metadata)
    return coh, ent, mom.m2


def run_experiment(cfg: ExperimentConfig) -> ResultBundle:
    cfg.validate()
    bundle = ResultBundle(metadata=_metadata(cfg))
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", WrapAroundWarning)
        if cfg.method == "pure":
            coh, ent, msd = _run_pure(cfg, bundle)
        elif cfg.method == "monte-carlo":
            coh, ent, msd = _run_monte_carlo(cfg, bundle)
        else:
            coh, ent, msd = _run_exact(cfg, bundle)
    if any(issubclass(w.category, WrapAroundWarning) for w in caught) or cfg.steps >= cfg.M:
        bundle.metadata["warning"] = "wrap-around"
    meta = bundle.metadata
    if cfg.steps >= 6:
        fit = fit_diffusion_coefficient(_series("msd", msd, {}), (cfg.steps // 2, cfg.steps))
        bundle.fitted_D = fit.D
        meta["fitted_D"] = fit.D
        meta["fit_residual"] = fit.residual
    kurt = bundle.series.pop("kurtosis", None)
    if coh is not None:
        bundle.series["coherence"] = _series("coherence", coh, meta)
    bundle.series["entropy"] = _series("entropy", ent, meta)
    bundle.series["msd"] = _series("msd", msd, meta)
    if kurt is not None:
        bundle.series["kurtosis"] = _series("kurtosis", kurt.values, meta)
    bundle.series = {k: v for k, v in bundle.series.items()
                     if k in cfg.observables}
    if "profile" not in cfg.observables:
        bundle.profiles = {}
    return bundle


def _meta_lines(meta):
    return "".join(f"#{k}={meta[k]}\n" for k in sorted(meta))


def profiles_csv(bundle: ResultBundle) -> str:
    buf = io.StringIO()
    buf.write(_meta_lines(bundle.metadata))
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["j", "m", "N"])
    for j in sorted(bundle.profiles):
        prof = bundle.profiles[j]
        M = (len(prof) - 1) // 2
        for m, val in zip(range(-M, M + 1), prof):
            w.writerow([j, m, repr(float(val))])
    return buf.getvalue()


def bundle_json(bundle: ResultBundle) -> str:
    doc = {
        "metadata": bundle.metadata,
        "fitted_D": None if math.isnan(bundle.fitted_D) else bundle.fitted_D,
        "series": {k: {"j": s.times.tolist(), "value": s.values.tolist()} for k, s in bundle.series.items()},
        "profiles": {str(j): p.tolist() for j, p in sorted(bundle.profiles.items())},
    }
    return json.dumps(doc, indent=1, sort_keys=True, default=_json_default)


def _json_default(x):
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    raise TypeError(type(x).__name__)


def write_bundle(bundle: ResultBundle, out: str, fmt: str):
    """Write ``bundle`` to directory ``out`` (stdout when ``out`` is empty)."""
    if not out:
        sys.stdout.write(bundle_json(bundle) if fmt == "json" else _summary(bundle))
        return
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    if fmt == "json":
        (path / "result.json").write_text(bundle_json(bundle) + "\n")
        return
    if bundle.profiles:
        (path / "profiles.csv").write_text(profiles_csv(bundle))
    for name, series in bundle.series.items():
        series.to_csv(path / f"{name}.csv")


def _summary(bundle):
    lines = [_meta_lines(bundle.metadata).rstrip("\n")]
    for name, s in bundle.series.items():
        lines.append(f"{name}: j={s.times[-1]} value={float(s.values[-1])!r}")
    return "\n".join(lines) + "\n"


def read_config_file(path) -> dict:
    """Flat ``key=value`` file; ``#`` starts a comment."""
    values = {}
    for n, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigurationError(f"{path}:{n}: expected key=value", key.strip())
        values[key.strip().replace("-", "_")] = value.strip()
    known = {f.name for f in fields(ExperimentConfig)}
    for key in values:
        if key not in known:
            raise ConfigurationError(f"unknown configuration key {key!r}", key)
    for key in ("observables", "snapshots"):
        if key in values:
            values[key] = tuple(v.strip() for v in values[key].split(",") if v.strip())
    if "allow_wrap" in values:
        values["allow_wrap"] = values["allow_wrap"].lower() in ("1", "true", "yes")
    return values


def _add_run_flags(p, method=None):
    p.add_argument("--config", help="key=value configuration file")
    p.add_argument("--case", choices=["electric", "gravitational", "e", "g"])
    p.add_argument("--sigma", type=float)
    p.add_argument("--M", type=int)
    p.add_argument("--steps", type=int)
    if method is None:
        p.add_argument("--method", choices=METHODS)
    p.add_argument("--realizations", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--observables", help="comma-separated subset of " + ",".join(OBSERVABLES))
    p.add_argument("--snapshots", help="comma-separated steps at which profiles are kept")
    p.add_argument("--allow-wrap", action="store_true", default=None)
    p.add_argument("--out", help="output directory (stdout when omitted)")
    p.add_argument("--format", choices=FORMATS)
    p.set_defaults(fixed_method=method)


def config_from_args(args) -> ExperimentConfig:
    values = read_config_file(args.config) if args.config else {}
    for name in ("case", "sigma", "M", "steps", "realizations", "seed", "out", "format", "allow_wrap"):
        v = getattr(args, name, None)
        if v is not None:
            values[name] = v
    if getattr(args, "method", None):
        values["method"] = args.method
    if args.fixed_method:
        values["method"] = args.fixed_method
    for key in ("observables", "snapshots"):
        v = getattr(args, key, None)
        if v:
            values[key] = tuple(x.strip() for x in v.split(",") if x.strip())
    return ExperimentConfig(**values).validate()


def cross_check(cfg: ExperimentConfig, factor: float = 4.0) -> dict:
    """Compare the Monte Carlo and exact mean profiles at the final step."""
    grid = CircleGrid(cfg.M)
    ncfg = NoiseConfig(cfg.case, cfg.sigma, cfg.seed, cfg.realizations)
    mc = monte_carlo_average(SpinorField.default(grid), ncfg, cfg.steps)
    exact = evolve_averaged(default_initial_density(grid), ncfg, cfg.steps, record=[cfg.steps])[0]
    dist = float(np.abs(mc.profile - probability_profile(exact)).sum())
    se = float(np.sum(mc.profile_stderr))
    return {"l1_distance": dist, "standard_error": se, "factor": factor,
            "passed": bool(dist <= factor * se)}


def cmd_run(args):
    cfg = config_from_args(args)
    if getattr(args, "cross_check", False):
        report = cross_check(cfg)
        sys.stdout.write(json.dumps(report, sort_keys=True) + "\n")
        if not report["passed"]:
            raise CrossCheckError(
                f"L1 distance {report['l1_distance']:.3e} exceeds "
                f"{report['factor']} x standard error {report['standard_error']:.3e}"
            )
        return 0
    bundle = run_experiment(cfg)
    write_bundle(bundle, cfg.out, cfg.format)
    return 0


def cmd_observables(args):
    """Post-process a saved ``.npz`` of v-basis density snapshots."""
    data = np.load(args.states)
    comps = data["comp"]
    steps = data["steps"] if "steps" in data else np.arange(len(comps))
    M = (comps.shape[-1] - 1) // 2
    grid = CircleGrid(M)
    rows = []
    for j, comp in zip(steps, comps):
        rho = DensityField(grid, comp, "v")
        prof = probability_profile(rho)
        m = grid.sites.astype(float)
        rows.append({
            "j": int(j),
            "trace": float(prof.sum()),
            "coherence": spin_coherence(rho),
            "entropy": shannon_entropy(reduced_spin_density(rho)),
            "msd": float(np.sum(m**2 * prof)),
        })
    _emit_rows(rows, args.format, args.out, {"source": Path(args.states).name})
    return 0


def _emit_rows(rows, fmt, out, meta=None):
    meta = meta or {}
    if fmt == "json":
        text = json.dumps({"metadata": meta, "rows": rows}, indent=1, sort_keys=True) + "\n"
    else:
        buf = io.StringIO()
        buf.write(_meta_lines(meta))
        if rows:
            w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
            w.writeheader()
            for r in rows:
                w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})
        text = buf.getvalue()
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_oracles(args):
    if args.sigmas:
        grid = [float(s) for s in args.sigmas.split(",")]
    else:
        lo, hi, n = args.sigma_min, args.sigma_max, args.points
        grid = [lo + (hi - lo) * i / (n - 1) for i in range(n)] if n > 1 else [lo]
    rows = oracle_table(grid)
    _emit_rows(rows, args.format, args.out, {"version": __version__})
    return 0


def cmd_continuum_check(args):
    direction = [float(x) for x in args.direction.split(",")]
    ratio, _ = order_ratio(
        lambda K, p, s: generator_numeric(args.case, K, p, s).matrix,
        lambda K, p, s: generator_taylor(args.case, K, p, s).matrix,
        direction, args.eps,
    )
    report = {"case": normalize_case(args.case), "taylor_ratio": ratio,
              "taylor_passed": bool(6 <= ratio <= 10)}
    if report["case"] == "gravitational":
        report["published_failing_entries"] = [list(e) for e in published_g_failures(direction, args.eps)]
    sys.stdout.write(json.dumps(report, sort_keys=True) + "\n")
    if not report["taylor_passed"]:
        raise CrossCheckError(f"halving ratio {ratio:.3f} outside [6, 10]")
    return 0


def gauge_check(M=32, steps=32, fields_count=20, seed=0):
    """Largest deviation of ``E`` and of ``N`` under random gauge transforms."""
    rng = np.random.default_rng(seed)
    grid = CircleGrid(M)
    N = grid.size
    angles = AngleField(
        np.pi / 4 + rng.uniform(-0.5, 0.5, (steps, N)),
        np.pi / 2 + rng.uniform(-0.5, 0.5, (steps, N)),
        rng.uniform(-0.5, 0.5, (steps, N)),
        rng.uniform(0, 2 * np.pi, (steps, N)),
    )
    E0 = electric_field(potential_from_field(angles))
    ref = [SpinorField.default(grid)]
    for j in range(steps):
        a = angles
        ref.append(step_wavefunction_extended(ref[-1], coin_matrix_field(a.theta[j], a.xi[j], a.zeta[j], a.alpha[j])))
    dE = dN = 0.0
    for _ in range(fields_count):
        phi = GaugeField(rng.uniform(-np.pi, np.pi, (steps + 1, N)))
        b = gauge_transform(angles, phi)
        dE = max(dE, float(np.abs(electric_field(potential_from_field(b)) - E0).max()))
        st = SpinorField(grid, transform_state(ref[0].psi, phi, 0))
        for j in range(steps):
            st = step_wavefunction_extended(st, coin_matrix_field(b.theta[j], b.xi[j], b.zeta[j], b.alpha[j]))
            dN = max(dN, float(np.abs(np.sum(np.abs(st.psi) ** 2, axis=0)
                                      - np.sum(np.abs(ref[j + 1].psi) ** 2, axis=0)).max()))
    return {"max_dE": dE, "max_dN": dN, "fields": fields_count, "M": M, "steps": steps}


def cmd_gauge_check(args):
    report = gauge_check(args.M, args.steps, args.fields, args.seed)
    report["passed"] = bool(report["max_dE"] <= 1e-12 and report["max_dN"] <= 1e-12)
    sys.stdout.write(json.dumps(report, sort_keys=True) + "\n")
    if not report["passed"]:
        raise CrossCheckError("gauge invariance violated beyond 1e-12")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rgwalk", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("evolve", help="run one experiment")
    _add_run_flags(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("ensemble", help="Monte Carlo average over realizations")
    _add_run_flags(p, "monte-carlo")
    p.add_argument("--cross-check", action="store_true",
                   help="compare with the exact mean and fail when the L1 distance exceeds 4 standard errors")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("averaged", help="exact mean dynamics")
    _add_run_flags(p, "exact-averaged")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("observables", help="post-process saved density snapshots")
    p.add_argument("states", help=".npz file with arrays 'comp' (T, 4, N, N) and optional 'steps'")
    p.add_argument("--out")
    p.add_argument("--format", choices=FORMATS, default="csv")
    p.set_defaults(func=cmd_observables)

    p = sub.add_parser("oracles", help="closed-form diffusion coefficients on a sigma grid")
    p.add_argument("--sigmas", help="comma-separated sigma values")
    p.add_argument("--sigma-min", type=float, default=0.05)
    p.add_argument("--sigma-max", type=float, default=2 * math.pi - 0.05)
    p.add_argument("--points", type=int, default=100)
    p.add_argument("--out")
    p.add_argument("--format", choices=FORMATS, default="csv")
    p.set_defaults(func=cmd_oracles)

    p = sub.add_parser("continuum-check", help="order test of the second-order generator")
    p.add_argument("--case", default="gravitational", choices=["electric", "gravitational", "e", "g"])
    p.add_argument("--direction", default="1,1,1")
    p.add_argument("--eps", type=float, default=1e-3)
    p.set_defaults(func=cmd_continuum_check)

    p = sub.add_parser("gauge-check", help="gauge invariance of E and N under random phase fields")
    p.add_argument("--M", type=int, default=32)
    p.add_argument("--steps", type=int, default=32)
    p.add_argument("--fields", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_gauge_check)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return int(args.func(args) or 0)
    except ConfigurationError as exc:
        where = f" [{exc.field}]" if getattr(exc, "field", None) else ""
        sys.stderr.write(f"configuration error{where}: {exc}\n")
        return 1
    except NumericalValidityError as exc:
        sys.stderr.write(f"numerical error: {exc}\n")
        return 2
    except CrossCheckError as exc:
        sys.stderr.write(f"cross-check failed: {exc}\n")
        return 3


if __name__ == "__main__":
    sys.exit(main())
