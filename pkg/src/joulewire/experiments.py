"""Parameter sweeps and fits over probed wires.

Every sweep point is an independent job; tables come back in input order no
matter how many workers run them.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from . import quadrature
from .entropy import SOMMERFELD_ENTROPY, EntropyDeficit, EntropyReport, entropy_deficits, joule_report
from .negf import LocalSpectra, Terminal, WireModel, fermi, local_spectra, make_terminals
from .probes import (
    FloatingProblem,
    ProbeSolution,
    solve_floating_exact,
    solve_floating_sommerfeld,
)

Array = np.ndarray

log = logging.getLogger(__name__)

CONSERVATION_TOL = 1e-10


def _map(func: Callable, items: Sequence, workers: int = 1) -> list:
    if workers <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, items, chunksize=max(1, len(items) // (4 * workers))))


@dataclass(frozen=True)
class SweepSpec:
    n_values: tuple[int, ...]
    gamma_values: tuple[float, ...]  # gamma_p / t
    t: float = 2.7
    T0: float = 232.0
    delta_mu: float = 0.2
    mu0: float = 0.0
    outputs: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "n_values", tuple(int(n) for n in self.n_values))
        object.__setattr__(self, "gamma_values", tuple(float(g) for g in self.gamma_values))
        if not self.n_values or not self.gamma_values:
            raise ValueError("n_values and gamma_values must be non-empty")
        if min(self.n_values) < 1:
            raise ValueError("every N must be >= 1")
        if min(self.gamma_values) < 0:
            raise ValueError("gamma_p / t must be >= 0")
        if self.delta_mu < 0:
            raise ValueError("delta_mu must be >= 0")
        if self.T0 <= 0 or self.t <= 0:
            raise ValueError("T0 and t must be > 0")

    @property
    def sommerfeld_doubtful(self) -> bool:
        """Bias larger than the band half-width: the linearisation at mu_0 is not trustworthy."""
        return self.delta_mu > 2.0 * self.t

    @property
    def size(self) -> int:
        return len(self.n_values) * len(self.gamma_values)


def bias(mu0: float, delta_mu: float) -> tuple[float, float]:
    """Source and drain potentials placed symmetrically about mu0 (source higher)."""
    return mu0 + 0.5 * delta_mu, mu0 - 0.5 * delta_mu


@dataclass(frozen=True)
class SolvedPoint:
    model: WireModel
    problem: FloatingProblem
    solution: ProbeSolution
    report: EntropyReport


def solve_point(
    n_sites: int, gamma_over_t: float, t: float, T0: float, delta_mu: float, mu0: float = 0.0
) -> SolvedPoint:
    model = WireModel(n_sites, t, gamma_over_t * t, band_center=0.0)
    mu1, mu2 = bias(mu0, delta_mu)
    problem = FloatingProblem.from_model(model, mu1, mu2, T0)
    solution = solve_floating_sommerfeld(problem)
    return SolvedPoint(model, problem, solution, joule_report(solution, problem))


@dataclass(frozen=True)
class SweepRow:
    N: int
    gamma_over_t: float
    ratio: float | None
    power: float
    S_dot_probes: float
    conservation_max_abs: float
    error: str | None = None

    @property
    def N_gamma_over_t(self) -> float:
        return self.N * self.gamma_over_t


def _sweep_job(args: tuple) -> SweepRow:
    n, g, t, T0, dmu, mu0 = args
    try:
        rep = solve_point(n, g, t, T0, dmu, mu0).report
    except (ArithmeticError, ValueError, RuntimeError, np.linalg.LinAlgError) as exc:
        return SweepRow(n, g, None, float("nan"), float("nan"), float("nan"), f"{type(exc).__name__}: {exc}")
    err = None
    if rep.conservation_max_abs > CONSERVATION_TOL:
        err = f"conservation violated: {rep.conservation}"
    return SweepRow(n, g, rep.ratio, rep.power, rep.probe_total_S, rep.conservation_max_abs, err)


def sweep_ratio(spec: SweepSpec, workers: int = 1) -> list[SweepRow]:
    """Entropy ratio for every (N, gamma_p) pair, ordered by N then gamma_p."""
    if spec.sommerfeld_doubtful:
        log.warning("delta_mu = %g eV exceeds the band half-width; Sommerfeld validity doubtful", spec.delta_mu)
    jobs = [(n, g, spec.t, spec.T0, spec.delta_mu, spec.mu0) for n in spec.n_values for g in spec.gamma_values]
    return _map(_sweep_job, jobs, workers)


def ratio_table(rows: Iterable[SweepRow], gamma_over_t: float) -> tuple[Array, Array]:
    sel = [r for r in rows if r.gamma_over_t == gamma_over_t and r.error is None and r.ratio is not None]
    sel.sort(key=lambda r: r.N)
    return np.array([r.N for r in sel]), np.array([r.ratio for r in sel])


@dataclass(frozen=True)
class LinearFit:
    intercept: float
    slope: float
    r_squared: float
    n_points: int


def fit_inverse_n(n_values: Array, ratios: Array) -> LinearFit:
    """Least-squares ``ratio = intercept + slope / N``."""
    n_values = np.asarray(n_values, dtype=float)
    ratios = np.asarray(ratios, dtype=float)
    if n_values.size < 3:
        raise ValueError(f"need at least 3 points for a 1/N fit, got {n_values.size}")
    x = 1.0 / n_values
    a = np.column_stack((np.ones_like(x), x))
    coef, *_ = np.linalg.lstsq(a, ratios, rcond=None)
    resid = ratios - a @ coef
    ss_tot = np.sum((ratios - ratios.mean()) ** 2)
    # a series flat to rounding is fitted perfectly by its mean
    flat = ss_tot <= ratios.size * (64 * np.finfo(float).eps * max(1.0, float(np.max(np.abs(ratios))))) ** 2
    r2 = 1.0 if flat else 1.0 - np.sum(resid**2) / ss_tot
    return LinearFit(float(coef[0]), float(coef[1]), float(r2), int(n_values.size))


@dataclass(frozen=True)
class DeficitFit:
    gamma_over_t: float
    fit: LinearFit


def deficit_fit(spec: SweepSpec, n_min: int = 20, workers: int = 1, rows: list[SweepRow] | None = None) -> list[DeficitFit]:
    """Fit ratio against 1/N over the N >= n_min tail, separately for each gamma_p."""
    tail = tuple(n for n in spec.n_values if n >= n_min)
    if len(tail) < 3:
        raise ValueError(f"only {len(tail)} N values >= {n_min}; need at least 3")
    if rows is None:
        rows = sweep_ratio(
            SweepSpec(tail, spec.gamma_values, spec.t, spec.T0, spec.delta_mu, spec.mu0), workers
        )
    out = []
    for g in spec.gamma_values:
        n, r = ratio_table([row for row in rows if row.N >= n_min], g)
        out.append(DeficitFit(g, fit_inverse_n(n, r)))
    return out


def count_interior_maxima(values: Array, rtol: float = 1e-9) -> int:
    """Number of interior local maxima; runs of values equal within rtol count as one point."""
    values = np.asarray(values, dtype=float)
    scale = max(float(np.max(np.abs(values))), 1e-300)
    runs = [values[0]]
    for v in values[1:]:
        if abs(v - runs[-1]) > rtol * scale:
            runs.append(v)
    return sum(1 for i in range(1, len(runs) - 1) if runs[i] > runs[i - 1] and runs[i] > runs[i + 1])


@dataclass(frozen=True)
class Profile:
    sites: Array
    mus: Array
    temps: Array
    mu0: float
    T0: float

    @property
    def mu_monotone(self) -> bool:
        """Strictly decreasing from source to drain."""
        return bool(np.all(np.diff(self.mus) < 0))

    @property
    def single_interior_max(self) -> bool:
        return count_interior_maxima(self.temps) == 1

    @property
    def oscillating(self) -> bool:
        """Shape checks failed at finite bias: the 2k_F oscillation regime."""
        return not (self.mu_monotone and self.single_interior_max)

    @property
    def symmetry_error(self) -> float:
        """Largest deviation from mu antisymmetry and T symmetry about the center."""
        dmu = np.max(np.abs((self.mus - self.mu0) + (self.mus[::-1] - self.mu0)))
        dt = np.max(np.abs(self.temps - self.temps[::-1]))
        return float(max(dmu, dt))


def profiles(
    n_sites: int, gamma_over_t: float, t: float, T0: float, delta_mu: float, mu0: float = 0.0,
    *, exact: bool = False, points: int = 2001,
) -> Profile:
    """Probe chemical potential and temperature along the wire."""
    point = solve_point(n_sites, gamma_over_t, t, T0, delta_mu, mu0)
    sol = point.solution
    if exact:
        sol = _exact_on_grid(point, delta_mu, mu0, T0, points)[1]
    return Profile(np.arange(1, n_sites + 1), sol.mus, sol.temps, mu0, T0)


def _exact_on_grid(point: SolvedPoint, delta_mu: float, mu0: float, T0: float, points: int):
    grid = quadrature.uniform_grid(mu0, delta_mu, float(np.max(point.solution.temps)), points, point.model)
    mu1, mu2 = bias(mu0, delta_mu)
    sol = solve_floating_exact(point.model, mu1, mu2, T0, energies=grid, initial=point.solution)
    return grid, sol


@dataclass(frozen=True)
class LocalEquilibrium:
    """A wire whose probes float exactly on the grid that the local quantities use."""

    model: WireModel
    energies: Array
    solution: ProbeSolution
    terminals: list[Terminal]

    def spectra(self) -> LocalSpectra:
        return local_spectra(self.model, self.terminals, self.energies)

    def deficits(self) -> EntropyDeficit:
        return entropy_deficits(self.model, self.terminals, self.energies)


def local_equilibrium(
    n_sites: int, gamma_over_t: float, t: float, T0: float, delta_mu: float, mu0: float = 0.0,
    points: int = 2001,
) -> LocalEquilibrium:
    """Solve the probes exactly on a uniform grid.

    Floating exactly under the same quadrature that integrates the local
    entropies makes f_Pn the maximum-entropy distribution for the moments
    the probe fixes, so every entropy deficit is non-negative to rounding.
    """
    if gamma_over_t <= 0:
        raise ValueError("local distributions need gamma_p > 0")
    point = solve_point(n_sites, gamma_over_t, t, T0, delta_mu, mu0)
    grid, sol = _exact_on_grid(point, delta_mu, mu0, T0, points)
    mu1, mu2 = bias(mu0, delta_mu)
    terms = make_terminals(point.model, mu1, mu2, T0, sol.mus, sol.temps)
    return LocalEquilibrium(point.model, grid, sol, terms)


@dataclass(frozen=True)
class Snapshot:
    site: int
    energies: Array
    f_local: Array
    f_probe: Array

    @property
    def max_deviation(self) -> float:
        return float(np.max(np.abs(self.f_local - self.f_probe)))


def distribution_snapshots(
    n_sites: int, gamma_over_t: float, t: float, T0: float, delta_mu: float,
    sites: Sequence[int] | None = None, mu0: float = 0.0, points: int = 2001,
    state: LocalEquilibrium | None = None,
) -> list[Snapshot]:
    """Local non-equilibrium f_n next to the probe's Fermi function f_Pn (default sites: 1, center, N)."""
    if sites is None:
        sites = sorted({1, (n_sites + 1) // 2, n_sites})
    state = state or local_equilibrium(n_sites, gamma_over_t, t, T0, delta_mu, mu0, points)
    spectra = state.spectra()
    out = []
    for s in sites:
        if not 1 <= s <= n_sites:
            raise ValueError(f"site {s} outside 1..{n_sites}")
        probe = state.terminals[1 + s]
        f_probe = fermi(state.energies, probe.mu, probe.temperature)
        out.append(Snapshot(s, state.energies, spectra.occupation[:, s - 1], f_probe))
    return out


def entropy_deficit_profile(
    n_sites: int, gamma_over_t: float, t: float, T0: float, delta_mu: float, mu0: float = 0.0,
    points: int = 2001,
) -> EntropyDeficit:
    return local_equilibrium(n_sites, gamma_over_t, t, T0, delta_mu, mu0, points).deficits()


@dataclass(frozen=True)
class EntropyShares:
    sites: Array
    injection: Array
    total: float
    floor: float = 0.0  # rounding noise level of the total

    @property
    def defined(self) -> bool:
        return self.total > self.floor

    @property
    def shares(self) -> Array:
        if not self.defined:
            return np.full_like(self.injection, np.nan)
        return self.injection / self.total


def shares_from_point(point: SolvedPoint) -> EntropyShares:
    rep, problem = point.report, point.problem
    t_probes = problem.transmissions_at_mu0[2:, :]
    # each injection is 2c sum_b T (T_P - T_b); relative rounding in T_P is ~1e-16
    floor = 1e-12 * SOMMERFELD_ENTROPY * rep.lead_temperature * float(np.sum(t_probes))
    return EntropyShares(np.arange(1, problem.n_probes + 1), rep.probe_injection, rep.probe_total_S, floor)


def probe_entropy_shares(
    n_sites: int, gamma_over_t: float, t: float, T0: float, delta_mu: float, mu0: float = 0.0
) -> EntropyShares:
    """Entropy injected by each probe, normalised by the total (flagged undefined at zero total)."""
    return shares_from_point(solve_point(n_sites, gamma_over_t, t, T0, delta_mu, mu0))


# --- resistance ----------------------------------------------------------------

WEAK_GAMMAS = tuple(np.linspace(1e-3, 1e-2, 10))
STRONG_GAMMAS = tuple(np.linspace(50.0, 200.0, 16))


def resistance(n_sites: int, gamma_over_t: float, t: float = 2.7, T0: float = 100.0, delta_mu: float = 1e-3) -> float:
    """Two-terminal resistance in units of h/e^2 with all probes floating."""
    rep = solve_point(n_sites, gamma_over_t, t, T0, delta_mu).report
    return float(delta_mu / abs(rep.currents.particle[0]))


@dataclass(frozen=True)
class ResistanceFit:
    regime: str
    n_sites: int
    intercept: float
    slope_or_quad_coeff: float
    linear_coeff: float
    fit_residual: float  # R^2
    gammas: Array = field(repr=False)
    resistances: Array = field(repr=False)
    regime_mismatch: bool = False

    @property
    def per_link(self) -> float:
        """Coefficient per probe (weak) or per link between probes (strong)."""
        links = self.n_sites if self.regime == "weak" else self.n_sites - 1
        return self.slope_or_quad_coeff / links


def resistance_scan(
    n_sites: int, gamma_list: Sequence[float] | None = None, regime: str = "weak",
    t: float = 2.7, T0: float = 100.0, delta_mu: float = 1e-3,
) -> ResistanceFit:
    """Fit R(gamma_p/t): linear in the weak regime, quadratic in the strong one."""
    if regime not in ("weak", "strong"):
        raise ValueError(f"regime must be 'weak' or 'strong', got {regime!r}")
    if gamma_list is None:
        gamma_list = WEAK_GAMMAS if regime == "weak" else STRONG_GAMMAS
    x = np.asarray(gamma_list, dtype=float)
    if x.size < 5:
        raise ValueError("a resistance fit needs at least 5 couplings")
    if regime == "strong" and n_sites < 2:
        raise ValueError("the strong-coupling fit needs N >= 2")
    r = np.array([resistance(n_sites, g, t, T0, delta_mu) for g in x])
    deg = 1 if regime == "weak" else 2
    coef = np.polyfit(x, r, deg)
    resid = r - np.polyval(coef, x)
    ss_tot = np.sum((r - r.mean()) ** 2)
    r2 = float(1.0 - np.sum(resid**2) / ss_tot) if ss_tot > 0 else 1.0
    outside = np.any(x > 0.01) if regime == "weak" else np.any(x < 50)
    mismatch = bool(outside or r2 < 0.99)
    if mismatch:
        log.warning("resistance fit in %s regime: R^2 = %.4f, couplings outside default window: %s", regime, r2, outside)
    if regime == "weak":
        return ResistanceFit(regime, n_sites, float(coef[1]), float(coef[0]), float(coef[0]), r2, x, r, mismatch)
    return ResistanceFit(regime, n_sites, float(coef[2]), float(coef[0]), float(coef[1]), r2, x, r, mismatch)
