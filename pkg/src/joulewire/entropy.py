"""Dissipative and unitary currents, Joule bookkeeping and local entropy deficits.

Sign convention: every current is the flow *into* the terminal.  The entropy
injected into the wire by probe n is therefore ``-IS[P_n]``.  All currents
are in natural units with h = 1 (particle: eV, heat/energy: eV^2,
entropy: eV^2/K per eV, i.e. eV/K).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit, xlogy

from . import quadrature
from .negf import K_B, Terminal, WireModel, check_terminals, fermi, local_spectra, transmission_on_grid
from .probes import SOMMERFELD_HEAT, FloatingProblem, ProbeSolution

Array = np.ndarray

# pi^2 k_B^2 / 3: integral of the single-particle entropy density per kelvin
SOMMERFELD_ENTROPY = 2.0 * SOMMERFELD_HEAT


@dataclass(frozen=True)
class FermiState:
    mu: float
    temperature: float

    def __post_init__(self) -> None:
        if not self.temperature > 0:
            raise ValueError(f"temperature must be > 0 K, got {self.temperature!r}")

    def occupation(self, energy):
        return fermi(energy, self.mu, self.temperature)


def fermi_entropy_density(state: FermiState, energy):
    """``-k_B [f ln f + (1-f) ln(1-f)]`` evaluated without forming f (stable in the tails)."""
    x = np.abs((np.asarray(energy, dtype=float) - state.mu) / (K_B * state.temperature))
    return K_B * (np.log1p(np.exp(-x)) + x * expit(-x))


def _entropy_density(energy, mus, temps):
    x = np.abs((energy - mus) / (K_B * temps))
    return K_B * (np.log1p(np.exp(-x)) + x * expit(-x))


def binary_entropy(f):
    """``-[f ln f + (1-f) ln(1-f)]`` in units of k_B, with 0 ln 0 = 0."""
    f = np.clip(f, 0.0, 1.0)
    return -(xlogy(f, f) + xlogy(1.0 - f, 1.0 - f))


@dataclass(frozen=True)
class Currents:
    """Per-terminal currents into each terminal."""

    particle: Array
    heat: Array
    energy: Array
    entropy: Array

    def conservation(self, mus: Array) -> dict[str, float]:
        return {
            "particle": abs(float(np.sum(self.particle))),
            "energy": abs(float(np.sum(self.energy))),
            "entropy": abs(float(np.sum(self.entropy))),
            "joule": abs(float(np.sum(self.heat) + np.dot(mus, self.particle))),
        }


def sommerfeld_currents(t_mu0: Array, mus: Array, temps: Array) -> Currents:
    """Leading-order currents with every transmission frozen at mu_0.

    Each summand is antisymmetric in (a, b) for symmetric T, so the
    particle, energy and entropy totals vanish to rounding.
    """
    mus = np.asarray(mus, dtype=float)
    temps = np.asarray(temps, dtype=float)
    dmu = mus[None, :] - mus[:, None]
    dt2 = temps[None, :] ** 2 - temps[:, None] ** 2
    i0 = np.sum(t_mu0 * dmu, axis=1)
    i1 = np.sum(t_mu0 * (0.5 * dmu**2 + SOMMERFELD_HEAT * dt2), axis=1)
    ie = np.sum(t_mu0 * (0.5 * (mus[None, :] ** 2 - mus[:, None] ** 2) + SOMMERFELD_HEAT * dt2), axis=1)
    i_s = SOMMERFELD_ENTROPY * np.sum(t_mu0 * (temps[None, :] - temps[:, None]), axis=1)
    return Currents(i0, i1, ie, i_s)


def _current_densities(t: Array, energies: Array, mus: Array, temps: Array) -> Array:
    """(E, 4, M) integrand rows: particle, heat, energy, entropy."""
    e = energies[:, None]
    f = fermi(e, mus[None, :], temps[None, :])
    s = _entropy_density(e, mus[None, :], temps[None, :])
    df = f[:, None, :] - f[:, :, None]  # f_b - f_a
    ds = s[:, None, :] - s[:, :, None]
    d0 = np.sum(t * df, axis=2)
    out = np.empty((energies.size, 4, mus.size))
    out[:, 0] = d0
    out[:, 1] = (e - mus[None, :]) * d0
    out[:, 2] = e * d0
    out[:, 3] = np.sum(t * ds, axis=2)
    return out


def exact_currents(
    model: WireModel,
    mus: Array,
    temps: Array,
    *,
    energies: Array | None = None,
    epsabs: float = 1e-12,
) -> Currents:
    """Currents from full energy integrals with exact T_ab(e).

    Adaptive quadrature by default; a uniform ``energies`` grid switches to
    composite Simpson on that grid.
    """
    mus = np.asarray(mus, dtype=float)
    temps = np.asarray(temps, dtype=float)
    if energies is not None:
        energies = np.asarray(energies, dtype=float)
        dens = _current_densities(transmission_on_grid(model, energies), energies, mus, temps)
        total = np.einsum("e,eam->am", quadrature.simpson_weights(energies), dens)
    else:
        lo, hi = quadrature.integration_window(model, mus, float(np.max(temps)))

        def density(e: float) -> Array:
            grid = np.array([e])
            return _current_densities(transmission_on_grid(model, grid), grid, mus, temps)[0].ravel()

        points = np.concatenate((mus, [0.5 * (mus[0] + mus[1])]))
        total = quadrature.integrate(density, lo, hi, points=points, epsabs=epsabs).reshape(4, -1)
    return Currents(total[0], total[1], total[2], total[3])


def _states(terminals: list[Terminal]) -> tuple[Array, Array]:
    return (
        np.array([term.mu for term in terminals], dtype=float),
        np.array([term.temperature for term in terminals], dtype=float),
    )


def bsi_current(
    nu: int,
    alpha: int,
    terminals: list[Terminal],
    transmissions: Array | WireModel,
    *,
    mode: str = "sommerfeld",
    **quad,
) -> float:
    """Particle (nu=0) or heat (nu=1) current into terminal ``alpha``.

    ``transmissions`` is the matrix at mu_0 in Sommerfeld mode and the
    :class:`WireModel` in exact mode.
    """
    if nu not in (0, 1):
        raise ValueError("nu must be 0 (particle) or 1 (heat)")
    cur = _dispatch(terminals, transmissions, mode, **quad)
    return float((cur.particle if nu == 0 else cur.heat)[alpha])


def unitary_entropy_current(
    alpha: int,
    terminals: list[Terminal],
    transmissions: Array | WireModel,
    *,
    mode: str = "sommerfeld",
    **quad,
) -> float:
    """Conserved (unitary) entropy current into terminal ``alpha``."""
    return float(_dispatch(terminals, transmissions, mode, **quad).entropy[alpha])


def _dispatch(terminals, transmissions, mode, **quad) -> Currents:
    mus, temps = _states(terminals)
    if mode == "sommerfeld":
        return sommerfeld_currents(np.asarray(transmissions, dtype=float), mus, temps)
    if mode == "exact":
        if not isinstance(transmissions, WireModel):
            raise TypeError("exact mode needs the WireModel to evaluate T(e)")
        return exact_currents(transmissions, mus, temps, **quad)
    raise ValueError(f"unknown mode {mode!r}; expected 'sommerfeld' or 'exact'")


@dataclass(frozen=True)
class EntropyReport:
    currents: Currents
    probe_total_S: float
    power: float
    ratio: float | None
    lead_temperature: float
    conservation: dict[str, float] = field(default_factory=dict)

    @property
    def ratio_defined(self) -> bool:
        return self.ratio is not None

    @property
    def probe_injection(self) -> Array:
        """Entropy injected into the wire by each probe, ``-IS[P_n]``."""
        return -self.currents.entropy[2:]

    @property
    def conservation_max_abs(self) -> float:
        return max(self.conservation.values())


def joule_report(
    solution: ProbeSolution,
    problem: FloatingProblem,
    *,
    mode: str = "sommerfeld",
    model: WireModel | None = None,
    **quad,
) -> EntropyReport:
    """Probe entropy injection versus Joule entropy for a solved probe network.

    The ratio ``T_0 * S_P / P`` is ``None`` when the electrochemical power
    vanishes (zero bias) or the leads are at different temperatures.
    """
    mus = solution.all_mus(problem)
    temps = solution.all_temps(problem)
    if mode == "sommerfeld":
        cur = sommerfeld_currents(problem.transmissions_at_mu0, mus, temps)
    elif mode == "exact":
        if model is None:
            raise TypeError("exact mode needs the WireModel")
        cur = exact_currents(model, mus, temps, **quad)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    s_dot = float(-np.sum(cur.entropy[2:]))
    mu1, mu2 = problem.lead_mus
    power = float(cur.particle[0] * (mu2 - mu1))
    t1, t2 = problem.lead_temps
    ratio = None
    if power > 0 and t1 == t2:
        ratio = t1 * s_dot / power
    return EntropyReport(cur, s_dot, power, ratio, t1, cur.conservation(mus))


@dataclass(frozen=True)
class SingleProbeAnalytic:
    mu_p: float
    temp_p: float
    t_12: float
    t_1p: float
    t_2p: float
    probe_entropy_rate: float
    joule_entropy_rate: float
    ratio: float
    ratio_leading_order: float


def single_probe_analytic(
    t: float, gamma_p: float, mus: tuple[float, float], T0: float, band_center: float = 0.0
) -> SingleProbeAnalytic:
    """Closed forms for one site carrying one probe between two chain leads.

    For a single site the real part of the lead self-energies cancels the
    energy, so the transmissions are Lorentzian-like with the lead width
    ``sqrt(4t^2 - e^2)`` (equal to 2t at the band center) evaluated at mu_0.

    ``ratio`` uses the exact Sommerfeld T_P; ``ratio_leading_order`` is the
    small-bias limit ``X / (2 (T_12 + X))`` with ``X = T_1P T_P2 / (T_1P + T_P2)``.
    """
    mu1, mu2 = mus
    mu0 = 0.5 * (mu1 + mu2)
    lead = float(np.sqrt(4.0 * t**2 - (mu0 - band_center) ** 2))
    gbar = lead + 0.5 * gamma_p
    t12 = lead**2 / gbar**2
    t1p = t2p = lead * gamma_p / gbar**2
    series = t1p * t2p / (t1p + t2p) if gamma_p > 0 else 0.0
    mu_p = (t1p * mu1 + t2p * mu2) / (t1p + t2p) if gamma_p > 0 else mu0
    mix = t1p * t2p / (t1p + t2p) ** 2 if gamma_p > 0 else 0.0
    temp_p = float(np.sqrt(T0**2 + mix * (mu1 - mu2) ** 2 / SOMMERFELD_ENTROPY))
    injected = (t1p + t2p) * SOMMERFELD_ENTROPY * (temp_p - T0)
    current = (t12 + series) * (mu2 - mu1)
    power = current * (mu2 - mu1)
    joule = power / T0
    ratio = injected / joule if power > 0 else float("nan")
    return SingleProbeAnalytic(
        mu_p, temp_p, t12, t1p, t2p, injected, joule, ratio, 0.5 * series / (t12 + series)
    )


@dataclass(frozen=True)
class EntropyDeficit:
    """Per-site entropies (k_B units) of the probe and the local distributions."""

    sites: Array
    S_n: Array
    S_Pn: Array

    @property
    def delta(self) -> Array:
        return self.S_Pn - self.S_n


def _weights(energies: Array) -> Array:
    try:
        return quadrature.simpson_weights(energies)
    except ValueError:
        w = np.zeros_like(energies)
        d = np.diff(energies)
        w[:-1] += 0.5 * d
        w[1:] += 0.5 * d
        return w


def entropy_deficits(model: WireModel, terminals: list[Terminal], energies: Array) -> EntropyDeficit:
    """``S_Pn - S_n`` for every site, integrated against the local spectrum g_n(e)."""
    check_terminals(model, terminals)
    if model.probe_coupling <= 0:
        raise ValueError("entropy deficit needs probe_coupling > 0")
    energies = np.asarray(energies, dtype=float)
    spectra = local_spectra(model, terminals, energies)
    mus, temps = _states(terminals)
    s_probe = _entropy_density(energies[:, None], mus[None, 2:], temps[None, 2:]) / K_B
    s_local = binary_entropy(spectra.occupation)
    w = _weights(energies)[:, None] * spectra.spectral_weight
    sites = np.arange(1, model.n_sites + 1)
    return EntropyDeficit(sites, np.sum(w * s_local, axis=0), np.sum(w * s_probe, axis=0))


def entropy_deficit(
    model: WireModel, terminals: list[Terminal], site: int, energies: Array
) -> tuple[float, float, float]:
    """``(S_n, S_Pn, delta)`` for one site."""
    d = entropy_deficits(model, terminals, energies)
    k = site - 1
    return float(d.S_n[k]), float(d.S_Pn[k]), float(d.delta[k])
