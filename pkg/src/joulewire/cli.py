"""``joulewire`` command line: validate or run one experiment from a config file.

Exit status: 0 when every check passed, 1 for failed checks or solver
errors, 2 for configuration errors, 3 for I/O errors.
"""

from __future__ import annotations

import argparse
import logging
import os
import platform
import sys
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy

from . import __version__, experiments as ex
from .config import ConfigError, RunConfig, load_config
from .entropy import joule_report
from .negf import WireModel
from .probes import FloatingProblem, solve_floating_exact, solve_floating_sommerfeld

log = logging.getLogger("joulewire")

EXIT_OK, EXIT_CHECK, EXIT_CONFIG, EXIT_IO = 0, 1, 2, 3

RATIO_SWEEP_HEADER = ("N", "gamma_over_t", "N_gamma_over_t", "ratio", "power", "S_dot_probes", "conservation_max_abs")
PROFILES_HEADER = ("site", "mu_P", "T_P")
DEFICIT_FIT_HEADER = ("gamma_over_t", "intercept", "slope", "r_squared", "n_points")
DISTRIBUTION_HEADER = ("energy", "f_local", "f_probe")
SHARES_HEADER = ("site", "injection", "share")
RESISTANCE_HEADER = ("gamma_over_t", "resistance")
SOLUTION_HEADER = ("site", "mu_P", "T_P", "residual_particle", "residual_heat")
SUMMARY_HEADER = ("quantity", "value")


def fmt(value) -> str:
    """17 significant digits; None becomes an empty field."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, str):
        return value
    return "%.17g" % float(value)


@dataclass
class Table:
    name: str
    header: tuple[str, ...]
    rows: list[tuple] = field(default_factory=list)

    def render(self) -> str:
        lines = [",".join(self.header)]
        lines += [",".join(fmt(v) for v in row) for row in self.rows]
        return "\n".join(lines) + "\n"


@dataclass
class Outcome:
    tables: list[Table] = field(default_factory=list)
    checks: list[tuple[str, bool, str]] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)
    conservation: list[float] = field(default_factory=list)
    row_errors: list[str] = field(default_factory=list)

    def check(self, name: str, ok: bool, detail: str = "") -> None:
        self.checks.append((name, bool(ok), detail))

    @property
    def failed(self) -> list[tuple[str, bool, str]]:
        return [c for c in self.checks if not c[1]]


# --- experiments ---------------------------------------------------------------

def _conservation_check(out: Outcome, values) -> None:
    values = [v for v in values if np.isfinite(v)]
    out.conservation.extend(values)
    worst = max(values) if values else 0.0
    out.check("conservation", worst <= ex.CONSERVATION_TOL, f"max |sum of currents| = {worst:.3g}")


def _run_solve(cfg: RunConfig, workers: int) -> Outcome:
    out = Outcome()
    model = WireModel(cfg.N, cfg.t, cfg.gamma_p * cfg.t, cfg.onsite)
    mu1, mu2 = ex.bias(cfg.mu0, cfg.delta_mu)
    problem = FloatingProblem.from_model(model, mu1, mu2, cfg.T0)
    if cfg.mode == "sommerfeld":
        sol = solve_floating_sommerfeld(problem)
        rep = joule_report(sol, problem)
        tol = 1e-12
    else:
        sol = solve_floating_exact(model, mu1, mu2, cfg.T0, tol=cfg.tol, max_iter=cfg.max_iter, epsabs=cfg.epsabs)
        rep = joule_report(sol, problem, mode="exact", model=model, epsabs=cfg.epsabs)
        tol = cfg.tol
    sites = np.arange(1, cfg.N + 1)
    out.tables.append(Table("solution.csv", SOLUTION_HEADER, list(zip(
        sites, sol.mus, sol.temps, sol.residual_particle, sol.residual_heat))))
    summary = [
        ("power", rep.power), ("S_dot_probes", rep.probe_total_S), ("ratio", rep.ratio),
        ("conservation_max_abs", rep.conservation_max_abs), ("iterations", sol.iterations),
    ]
    out.tables.append(Table("summary.csv", SUMMARY_HEADER, summary))
    _conservation_check(out, [rep.conservation_max_abs])
    resid = float(max(np.max(np.abs(sol.residual_particle), initial=0.0), np.max(np.abs(sol.residual_heat), initial=0.0)))
    out.check("floating residual", resid <= max(tol, 1e-12) * 10, f"max residual = {resid:.3g}")
    if rep.ratio is None:
        out.notes.append("ratio undefined (zero power); written as an empty field")
    return out


def _run_profiles(cfg: RunConfig, workers: int) -> Outcome:
    out = Outcome()
    prof = ex.profiles(cfg.N, cfg.gamma_p, cfg.t, cfg.T0, cfg.delta_mu, cfg.mu0,
                       exact=cfg.mode == "exact", points=cfg.grid_points)
    out.tables.append(Table("profiles.csv", PROFILES_HEADER, list(zip(prof.sites, prof.mus, prof.temps))))
    point = ex.solve_point(cfg.N, cfg.gamma_p, cfg.t, cfg.T0, cfg.delta_mu, cfg.mu0)
    _conservation_check(out, [point.report.conservation_max_abs])
    out.notes.append(f"mu monotone: {prof.mu_monotone}")
    out.notes.append(f"single interior T maximum: {prof.single_interior_max}")
    out.notes.append(f"symmetry error: {prof.symmetry_error:.3g}")
    return out


def _sweep_spec(cfg: RunConfig, n_values) -> ex.SweepSpec:
    return ex.SweepSpec(tuple(n_values), cfg.gammas, cfg.t, cfg.T0, cfg.delta_mu, cfg.mu0)


def _sweep_table(rows: list[ex.SweepRow]) -> Table:
    return Table("ratio_sweep.csv", RATIO_SWEEP_HEADER, [
        (r.N, r.gamma_over_t, r.N_gamma_over_t, r.ratio, r.power, r.S_dot_probes, r.conservation_max_abs)
        for r in rows
    ])


def _record_rows(out: Outcome, rows: list[ex.SweepRow]) -> None:
    out.row_errors += [f"N={r.N} gamma/t={r.gamma_over_t:g}: {r.error}" for r in rows if r.error]
    _conservation_check(out, [r.conservation_max_abs for r in rows])
    nulls = sum(r.ratio is None and r.error is None for r in rows)
    if nulls:
        out.notes.append(f"{nulls} rows with undefined ratio (zero power); ratio field left empty")


def _run_sweep(cfg: RunConfig, workers: int) -> Outcome:
    out = Outcome()
    rows = ex.sweep_ratio(_sweep_spec(cfg, cfg.n_values), workers)
    out.tables.append(_sweep_table(rows))
    _record_rows(out, rows)
    return out


def _run_deficit_fit(cfg: RunConfig, workers: int) -> Outcome:
    out = Outcome()
    spec = _sweep_spec(cfg, cfg.n_values)
    rows = ex.sweep_ratio(spec, workers)
    out.tables.append(_sweep_table(rows))
    _record_rows(out, rows)
    fits = ex.deficit_fit(spec, cfg.n_min, rows=rows)
    out.tables.append(Table("deficit_fit.csv", DEFICIT_FIT_HEADER, [
        (f.gamma_over_t, f.fit.intercept, f.fit.slope, f.fit.r_squared, f.fit.n_points) for f in fits
    ]))
    return out


def _run_distributions(cfg: RunConfig, workers: int) -> Outcome:
    out = Outcome()
    state = ex.local_equilibrium(cfg.N, cfg.gamma_p, cfg.t, cfg.T0, cfg.delta_mu, cfg.mu0, cfg.grid_points)
    snaps = ex.distribution_snapshots(cfg.N, cfg.gamma_p, cfg.t, cfg.T0, cfg.delta_mu,
                                      sites=cfg.sites or None, mu0=cfg.mu0, state=state)
    for s in snaps:
        out.tables.append(Table(f"distributions_site{s.site}.csv", DISTRIBUTION_HEADER,
                                list(zip(s.energies, s.f_local, s.f_probe))))
        out.notes.append(f"site {s.site}: max |f_local - f_probe| = {s.max_deviation:.3g}")
    deficit = state.deficits()
    out.check("entropy deficit non-negative", bool(np.all(deficit.delta >= -1e-12)),
              f"min delta S = {float(np.min(deficit.delta)):.3g}")
    resid = float(np.max(np.abs(np.concatenate((state.solution.residual_particle, state.solution.residual_heat)))))
    out.check("floating residual", resid <= 1e-9, f"max residual = {resid:.3g}")
    return out


def _run_shares(cfg: RunConfig, workers: int) -> Outcome:
    out = Outcome()
    point = ex.solve_point(cfg.N, cfg.gamma_p, cfg.t, cfg.T0, cfg.delta_mu, cfg.mu0)
    rep = point.report
    sh = ex.shares_from_point(point)
    shares = sh.shares if sh.defined else [None] * cfg.N
    out.tables.append(Table("entropy_shares.csv", SHARES_HEADER, list(zip(sh.sites, sh.injection, shares))))
    _conservation_check(out, [rep.conservation_max_abs])
    if sh.defined:
        total = float(np.sum(sh.shares))
        out.check("shares sum to one", abs(total - 1.0) <= 1e-9, f"sum = {total!r}")
    else:
        out.notes.append("total probe entropy is zero; shares undefined and left empty")
    return out


def _run_resistance(cfg: RunConfig, workers: int) -> Outcome:
    out = Outcome()
    fit = ex.resistance_scan(cfg.N, cfg.gammas or None, cfg.regime, cfg.t, cfg.T0)
    out.tables.append(Table("resistance.csv", RESISTANCE_HEADER, list(zip(fit.gammas, fit.resistances))))
    label = "slope" if fit.regime == "weak" else "quadratic coefficient"
    links = "N" if fit.regime == "weak" else "(N-1)"
    out.notes.append(f"{fit.regime} fit: intercept {fit.intercept:.10g}, {label} {fit.slope_or_quad_coeff:.10g}, "
                     f"{label}/{links} {fit.per_link:.10g}, R^2 {fit.fit_residual:.10g}")
    if fit.regime_mismatch:
        out.notes.append("warning: couplings outside the regime window or poor fit quality")
    out.check("positive resistances", bool(np.all(fit.resistances > 0)), "")
    return out


RUNNERS = {
    "solve": _run_solve,
    "profiles": _run_profiles,
    "sweep-ratio": _run_sweep,
    "deficit-fit": _run_deficit_fit,
    "distributions": _run_distributions,
    "entropy-shares": _run_shares,
    "resistance": _run_resistance,
}


# --- estimates ----------------------------------------------------------------

def estimate_seconds(cfg: RunConfig) -> float:
    """Deliberately pessimistic wall-clock guess from a few cheap per-point costs."""
    def somm(n: int) -> float:
        return 2e-3 + 2e-6 * n**2

    def grid_exact(n: int) -> float:
        return 0.05 + cfg.grid_points * 1e-6 * n**2.2

    if cfg.experiment in ("sweep-ratio", "deficit-fit"):
        return sum(somm(n) for n in cfg.n_values) * len(cfg.gammas)
    if cfg.experiment == "resistance":
        return cfg.sweep_points * somm(cfg.N)
    if cfg.experiment == "distributions" or (cfg.experiment == "profiles" and cfg.mode == "exact"):
        return somm(cfg.N) + grid_exact(cfg.N)
    if cfg.experiment == "solve" and cfg.mode == "exact":
        return 0.5 * cfg.N**3
    return somm(cfg.N)


def _bucket(seconds: float) -> str:
    for limit in (60, 300, 1800, 3600):
        if 10 * seconds < limit:
            return f"< {limit} s"
    return f"about {seconds / 60:.0f} min or more"


def validation_report(cfg: RunConfig) -> list[str]:
    n = cfg.sweep_points
    unit = "sweep point" if n == 1 else "sweep points"
    lines = [f"config OK: experiment {cfg.experiment}",
             f"{n} {unit}, estimated {_bucket(estimate_seconds(cfg))}"]
    lines += [f"warning: {w}" for w in cfg.warnings]
    return lines


# --- output ------------------------------------------------------------------

def _atomic_write(path: Path, text: str) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def manifest_text(cfg: RunConfig, out: Outcome, stages: dict[str, float], workers: int, status: int) -> str:
    lines = ["# joulewire run manifest", "", "[config]"]
    lines += [f"{k} = {v}" for k, v in sorted(cfg.source.items())]
    lines += ["", "[files]"]
    lines += [f"{t.name} rows={len(t.rows)}" for t in out.tables]
    lines += ["", "[versions]", f"joulewire = {__version__}", f"python = {platform.python_version()}",
              f"numpy = {np.__version__}", f"scipy = {scipy.__version__}"]
    lines += ["", "[timing]"]
    lines += [f"{stage} = {sec:.3f} s" for stage, sec in stages.items()]
    lines += [f"workers = {workers}"]
    worst = max(out.conservation) if out.conservation else 0.0
    lines += ["", "[conservation]", f"points = {len(out.conservation)}", f"max_abs = {worst:.3e}",
              f"tolerance = {ex.CONSERVATION_TOL:.0e}"]
    lines += ["", "[checks]"]
    lines += [f"{'PASS' if ok else 'FAIL'} {name}" + (f": {detail}" if detail else "") for name, ok, detail in out.checks]
    lines += [f"row error: {e}" for e in out.row_errors]
    if out.notes or cfg.warnings:
        lines += ["", "[notes]"] + [f"warning: {w}" for w in cfg.warnings] + out.notes
    lines += ["", f"exit_status = {status}"]
    return "\n".join(lines) + "\n"


# --- entry points --------------------------------------------------------------

def _workers(arg: int | None) -> int:
    env = os.environ.get("JOULEWIRE_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"JOULEWIRE_THREADS={env!r} is not an integer") from None
    return max(1, arg or 1)


def _load(path: str) -> RunConfig:
    try:
        return load_config(path)
    except (OSError, UnicodeDecodeError) as exc:
        raise OSError(f"cannot read config {path}: {exc}") from exc


def cmd_validate(args) -> int:
    cfg = _load(args.config)
    for line in validation_report(cfg):
        print(line)
    return EXIT_OK


def cmd_run(args) -> int:
    cfg = _load(args.config)
    workers = _workers(args.threads)
    outdir = Path(args.output_dir or cfg.output_dir)
    for w in cfg.warnings:
        print(f"warning: {w}", file=sys.stderr)
    try:
        outdir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        print(f"error: cannot create output directory {outdir}: {exc}", file=sys.stderr)
        return EXIT_IO

    stages: dict[str, float] = {}
    t0 = time.perf_counter()
    try:
        out = RUNNERS[cfg.experiment](cfg, workers)
    except (ArithmeticError, ValueError, RuntimeError, np.linalg.LinAlgError) as exc:
        out = Outcome()
        out.check("solver", False, f"{type(exc).__name__}: {exc}")
    stages["compute"] = time.perf_counter() - t0

    status = EXIT_OK if not out.failed and not out.row_errors else EXIT_CHECK
    t1 = time.perf_counter()
    try:
        for table in out.tables:
            _atomic_write(outdir / table.name, table.render())
        stages["write"] = time.perf_counter() - t1
        _atomic_write(outdir / "manifest.txt", manifest_text(cfg, out, stages, workers, status))
    except OSError as exc:
        print(f"error: writing outputs to {outdir}: {exc}", file=sys.stderr)
        return EXIT_IO

    for t in out.tables:
        print(f"wrote {outdir / t.name} ({len(t.rows)} rows)")
    if status != EXIT_OK:
        n_bad = len(out.failed) + len(out.row_errors)
        print(f"{n_bad} check(s) failed:", file=sys.stderr)
        for name, _, detail in out.failed:
            print(f"  {name}: {detail}", file=sys.stderr)
        for e in out.row_errors:
            print(f"  {e}", file=sys.stderr)
    return status


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="joulewire", description="Floating-probe quantum wire simulator.")
    p.add_argument("--version", action="version", version=f"joulewire {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run the experiment in a config file")
    run.add_argument("config")
    run.add_argument("--output-dir", help="overrides output_dir from the config")
    run.add_argument("--threads", type=int, default=None, help="worker processes (JOULEWIRE_THREADS overrides)")
    run.add_argument("--seedless", action="store_true", help="accepted for compatibility; runs are deterministic")
    run.set_defaults(func=cmd_run)
    val = sub.add_parser("validate", help="parse and check a config without running it")
    val.add_argument("config")
    val.set_defaults(func=cmd_validate)
    return p


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
