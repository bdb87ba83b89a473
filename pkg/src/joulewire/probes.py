"""Floating thermoelectric probes: Sommerfeld-linear and exact nonlinear solvers.

Each probe P_n adjusts (mu_Pn, T_Pn) so that it carries neither particle nor
heat current.  Currents are in natural units (h = 1): particle currents in
eV, heat currents in eV^2.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field

import numpy as np

from . import quadrature
from .negf import K_B, WireModel, fermi, transmission_at, transmission_on_grid

Array = np.ndarray

log = logging.getLogger(__name__)

# pi^2 k_B^2 / 6, the Sommerfeld coefficient of T^2 in heat currents
SOMMERFELD_HEAT = np.pi**2 * K_B**2 / 6.0


class DisconnectedProbeError(np.linalg.LinAlgError):
    def __init__(self, probe: int, detail: str = ""):
        self.probe = probe
        super().__init__(f"probe {probe} is not connected to the leads{detail}")


class UnphysicalTemperatureError(ValueError):
    """A probe's T^2 came out non-positive: the Sommerfeld regime does not hold."""

    def __init__(self, probes: list[int], t_squared: Array):
        self.probes = probes
        self.t_squared = t_squared
        super().__init__(f"non-positive T^2 for probes {probes}; Sommerfeld expansion not valid here")


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, last: ProbeSolution):
        self.last = last
        super().__init__(
            f"{message}; |I0|max={np.max(np.abs(last.residual_particle)):.3e}, "
            f"|I1|max={np.max(np.abs(last.residual_heat)):.3e}"
        )


class Method(enum.Enum):
    SOMMERFELD_LINEAR = "SommerfeldLinear"
    EXACT_NONLINEAR = "ExactNonlinear"


@dataclass(frozen=True)
class FloatingProblem:
    """Probe network linearised at mu_0 = (mu_1 + mu_2)/2.

    ``transmissions_at_mu0`` is the (N+2)x(N+2) terminal transmission matrix in
    canonical order (source, drain, probes).
    """

    transmissions_at_mu0: Array
    lead_mus: tuple[float, float]
    lead_temps: tuple[float, float]

    def __post_init__(self) -> None:
        t = np.asarray(self.transmissions_at_mu0, dtype=float)
        if t.ndim != 2 or t.shape[0] != t.shape[1] or t.shape[0] < 3:
            raise ValueError("transmissions must be a square matrix over >= 3 terminals")
        if min(self.lead_temps) <= 0:
            raise ValueError("lead temperatures must be > 0 K")
        object.__setattr__(self, "transmissions_at_mu0", t)

    @classmethod
    def from_model(
        cls, model: WireModel, mu_source: float, mu_drain: float, temperature: float,
        drain_temperature: float | None = None,
    ) -> FloatingProblem:
        mu0 = 0.5 * (mu_source + mu_drain)
        t_drain = temperature if drain_temperature is None else drain_temperature
        return cls(transmission_at(model, mu0), (mu_source, mu_drain), (temperature, t_drain))

    @property
    def n_probes(self) -> int:
        return self.transmissions_at_mu0.shape[0] - 2

    @property
    def mu0(self) -> float:
        return 0.5 * (self.lead_mus[0] + self.lead_mus[1])

    @property
    def decoupled(self) -> bool:
        """True when no probe exchanges particles with anything (gamma_p = 0)."""
        return not np.any(self.transmissions_at_mu0[2:, :])


@dataclass(frozen=True)
class ProbeSolution:
    mus: Array
    temps: Array
    residual_particle: Array
    residual_heat: Array
    method: Method
    iterations: int = 0
    info: dict = field(default_factory=dict, compare=False)

    def all_mus(self, problem: FloatingProblem) -> Array:
        return np.concatenate((problem.lead_mus, self.mus))

    def all_temps(self, problem: FloatingProblem) -> Array:
        return np.concatenate((problem.lead_temps, self.temps))


def _system_matrix(t: Array) -> Array:
    tpp = t[2:, 2:]
    m = -tpp.copy()
    np.fill_diagonal(m, t[2:, :].sum(axis=1) - np.diag(tpp))
    return m


def _check_connected(problem: FloatingProblem, m: Array) -> None:
    t = problem.transmissions_at_mu0
    to_leads = t[2:, 0] + t[2:, 1]
    diag = np.diag(m)
    for n in range(problem.n_probes):
        if diag[n] <= 0:
            raise DisconnectedProbeError(n + 1, " (zero total transmission)")
    cond = np.linalg.cond(m)
    if not np.isfinite(cond) or cond > 1e13:
        worst = int(np.argmin(to_leads)) + 1
        raise DisconnectedProbeError(worst, f" (system matrix condition number {cond:.3g})")


def solve_potentials(problem: FloatingProblem) -> Array:
    """Probe chemical potentials from the linearised zero-particle-current conditions."""
    if problem.decoupled:
        return np.full(problem.n_probes, problem.mu0)
    t = problem.transmissions_at_mu0
    m = _system_matrix(t)
    _check_connected(problem, m)
    mu1, mu2 = problem.lead_mus
    b = t[2:, 0] * mu1 + t[2:, 1] * mu2
    return np.linalg.solve(m, b)


def solve_temperatures(problem: FloatingProblem, mus: Array) -> Array:
    """Probe temperatures from the linearised zero-heat-current conditions (solved for T^2)."""
    if problem.decoupled:
        return np.full(problem.n_probes, float(np.mean(problem.lead_temps)))
    t = problem.transmissions_at_mu0
    m = _system_matrix(t)
    _check_connected(problem, m)
    all_mus = np.concatenate((problem.lead_mus, mus))
    joule = 0.5 * np.sum(t[2:, :] * (all_mus[None, :] - mus[:, None]) ** 2, axis=1)
    lead_t2 = np.asarray(problem.lead_temps, dtype=float) ** 2
    b = joule / SOMMERFELD_HEAT + t[2:, :2] @ lead_t2
    t_squared = np.linalg.solve(m, b)
    bad = np.flatnonzero(t_squared <= 0)
    if bad.size:
        raise UnphysicalTemperatureError([int(i) + 1 for i in bad], t_squared)
    return np.sqrt(t_squared)


def sommerfeld_probe_currents(problem: FloatingProblem, mus: Array, temps: Array) -> tuple[Array, Array]:
    """Linearised particle and heat currents into each probe."""
    t = problem.transmissions_at_mu0[2:, :]
    all_mus = np.concatenate((problem.lead_mus, mus))
    all_t2 = np.concatenate((problem.lead_temps, temps)) ** 2
    dmu = all_mus[None, :] - np.asarray(mus)[:, None]
    i0 = np.sum(t * dmu, axis=1)
    i1 = np.sum(t * (0.5 * dmu**2 + SOMMERFELD_HEAT * (all_t2[None, :] - np.asarray(temps)[:, None] ** 2)), axis=1)
    return i0, i1


def solve_floating_sommerfeld(problem: FloatingProblem) -> ProbeSolution:
    mus = solve_potentials(problem)
    temps = solve_temperatures(problem, mus)
    i0, i1 = sommerfeld_probe_currents(problem, mus, temps)
    return ProbeSolution(mus, temps, i0, i1, Method.SOMMERFELD_LINEAR)


# --- exact nonlinear solver ---------------------------------------------------


def _probe_integrand(t: Array, energies: Array, mus: Array, temps: Array) -> tuple[Array, Array]:
    """Probe residual densities and their Jacobian densities at each energy.

    Returns ``r`` of shape (E, 2N) ordered (I0_1..I0_N, I1_1..I1_N) and ``jac``
    of shape (E, 2N, 2N) with unknowns ordered (mu_1..mu_N, T_1..T_N).
    """
    e = energies[:, None]
    f = fermi(e, mus[None, :], temps[None, :])  # (E, M)
    pn = slice(2, None)
    tp = t[:, pn, :]  # (E, N, M)
    flux = np.einsum("enm,em->en", tp, f) - tp.sum(axis=2) * f[:, pn]
    x = e - mus[None, pn]
    r = np.concatenate((flux, x * flux), axis=1)

    fp = f[:, pn]
    kt = K_B * temps[None, pn]
    df_dmu = fp * (1.0 - fp) / kt
    df_dt = df_dmu * x / temps[None, pn]
    rowsum = tp.sum(axis=2)
    tpp = t[:, pn, pn]
    n = mus.size - 2
    diag = np.arange(n)

    def dflux(df: Array) -> Array:
        d = tpp * df[:, None, :]
        d[:, diag, diag] -= rowsum * df
        return d

    d_mu, d_t = dflux(df_dmu), dflux(df_dt)
    j1_mu = x[:, :, None] * d_mu
    j1_mu[:, diag, diag] -= flux
    jac = np.empty((energies.size, 2 * n, 2 * n))
    jac[:, :n, :n] = d_mu
    jac[:, :n, n:] = d_t
    jac[:, n:, :n] = j1_mu
    jac[:, n:, n:] = x[:, :, None] * d_t
    return r, jac


class _GridRule:
    def __init__(self, model: WireModel, energies: Array):
        self.energies = np.asarray(energies, dtype=float)
        self.weights = quadrature.simpson_weights(self.energies)
        self.t = transmission_on_grid(model, self.energies)

    def __call__(self, mus: Array, temps: Array) -> tuple[Array, Array]:
        r, jac = _probe_integrand(self.t, self.energies, mus, temps)
        return self.weights @ r, np.einsum("e,eij->ij", self.weights, jac)


class _AdaptiveRule:
    def __init__(self, model: WireModel, lo: float, hi: float, points: Array, epsabs: float):
        self.model, self.lo, self.hi, self.points, self.epsabs = model, lo, hi, points, epsabs
        self.evaluations = 0

    def __call__(self, mus: Array, temps: Array) -> tuple[Array, Array]:
        n = mus.size - 2

        def density(e: float) -> Array:
            energies = np.array([e])
            r, jac = _probe_integrand(transmission_on_grid(self.model, energies), energies, mus, temps)
            return np.concatenate((r[0], jac[0].ravel()))

        out = quadrature.integrate(density, self.lo, self.hi, points=self.points, epsabs=self.epsabs)
        self.evaluations += 1
        return out[: 2 * n], out[2 * n :].reshape(2 * n, 2 * n)


def solve_floating_exact(
    model: WireModel,
    mu_source: float,
    mu_drain: float,
    temperature: float,
    *,
    drain_temperature: float | None = None,
    tol: float = 1e-10,
    max_iter: int = 50,
    epsabs: float = 1e-12,
    energies: Array | None = None,
    initial: ProbeSolution | None = None,
) -> ProbeSolution:
    """Damped Newton solve of the full floating conditions with energy-dependent T_ab(e).

    By default each residual evaluation is an adaptive quadrature over a
    window that covers all Fermi windows.  Passing a uniform ``energies``
    grid switches to composite Simpson on that grid (transmissions are then
    computed once), which is what large-N callers should use.
    """
    t_drain = temperature if drain_temperature is None else drain_temperature
    problem = FloatingProblem.from_model(model, mu_source, mu_drain, temperature, t_drain)
    n = model.n_sites
    if initial is None:
        try:
            initial = solve_floating_sommerfeld(problem)
        except UnphysicalTemperatureError:
            initial = ProbeSolution(
                np.full(n, problem.mu0), np.full(n, max(temperature, t_drain)),
                np.zeros(n), np.zeros(n), Method.SOMMERFELD_LINEAR,
            )
    if problem.decoupled:
        return ProbeSolution(initial.mus, initial.temps, np.zeros(n), np.zeros(n), Method.EXACT_NONLINEAR)

    lead_mus = np.array([mu_source, mu_drain], dtype=float)
    lead_temps = np.array([temperature, t_drain], dtype=float)
    if energies is not None:
        rule = _GridRule(model, energies)
    else:
        t_max = 1.25 * max(float(np.max(initial.temps)), temperature, t_drain)
        lo, hi = quadrature.integration_window(model, lead_mus, t_max)
        rule = _AdaptiveRule(model, lo, hi, np.concatenate((lead_mus, [problem.mu0])), epsabs)

    def evaluate(x: Array) -> tuple[Array, Array]:
        mus = np.concatenate((lead_mus, x[:n]))
        temps = np.concatenate((lead_temps, x[n:]))
        return rule(mus, temps)

    def pack(x: Array, r: Array, iterations: int) -> ProbeSolution:
        return ProbeSolution(
            x[:n].copy(), x[n:].copy(), r[:n].copy(), r[n:].copy(), Method.EXACT_NONLINEAR, iterations
        )

    x = np.concatenate((initial.mus, initial.temps)).astype(float)
    r, jac = evaluate(x)
    norm = np.max(np.abs(r))
    for it in range(max_iter):
        if norm <= tol:
            return pack(x, r, it)
        step = np.linalg.solve(jac, -r)
        lam = 1.0
        for _ in range(21):
            trial = x + lam * step
            if np.all(trial[n:] > 0):
                r_new, jac_new = evaluate(trial)
                norm_new = np.max(np.abs(r_new))
                if norm_new < norm:
                    break
            lam *= 0.5
        else:
            raise ConvergenceError("step halving failed to reduce the residual", pack(x, r, it))
        x, r, jac, norm = trial, r_new, jac_new, norm_new
        log.debug("newton iteration %d: residual %.3e (step %.3g)", it + 1, norm, lam)
    if norm <= tol:
        return pack(x, r, max_iter)
    raise ConvergenceError(f"no convergence after {max_iter} iterations", pack(x, r, max_iter))
