"""Single-particle model, Green's functions and transmissions of the probed wire.

Terminal ordering is fixed throughout the package: index 0 is the source
(attached to site 1), index 1 the drain (attached to site N) and index
``1 + n`` is the probe on site ``n`` (n = 1..N).  Sites are 1-based in the
public API and 0-based in arrays.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

Array = np.ndarray

K_B = 8.617333262e-5  # eV / K


class OutOfBandError(ValueError):
    """Energy outside the lead band; evanescent lead modes are not modelled."""


class SingularGreensError(ArithmeticError):
    pass


class UndefinedDistributionError(ValueError):
    pass


@dataclass(frozen=True)
class WireModel:
    """N-site tight-binding chain between two semi-infinite chain leads.

    ``onsite`` is a scalar or a length-N sequence of site energies (eV);
    ``probe_coupling`` is the wide-band broadening of every probe.
    """

    n_sites: int
    hopping: float
    probe_coupling: float = 0.0
    onsite: float | tuple[float, ...] = 0.0
    band_center: float = 0.0

    def __post_init__(self) -> None:
        if int(self.n_sites) != self.n_sites or self.n_sites < 1:
            raise ValueError(f"n_sites must be a positive integer, got {self.n_sites!r}")
        if not self.hopping > 0:
            raise ValueError(f"hopping must be > 0, got {self.hopping!r}")
        if not self.probe_coupling >= 0:
            raise ValueError(f"probe_coupling must be >= 0, got {self.probe_coupling!r}")
        if np.ndim(self.onsite) == 0:
            object.__setattr__(self, "onsite", float(self.onsite))
        else:
            values = tuple(float(v) for v in self.onsite)
            if len(values) != self.n_sites:
                raise ValueError(f"onsite has {len(values)} entries for {self.n_sites} sites")
            object.__setattr__(self, "onsite", values)
        offsets = np.abs(self.onsite_energies - self.band_center)
        if np.any(offsets >= 2.0 * self.hopping):
            raise ValueError("onsite energies must lie strictly inside the lead band")

    @property
    def onsite_energies(self) -> Array:
        return np.broadcast_to(np.asarray(self.onsite, dtype=float), (self.n_sites,)).copy()

    @property
    def n_terminals(self) -> int:
        return self.n_sites + 2

    def hamiltonian(self) -> Array:
        n = self.n_sites
        h = np.diag(self.onsite_energies)
        idx = np.arange(n - 1)
        h[idx, idx + 1] = self.hopping
        h[idx + 1, idx] = self.hopping
        return h

    def with_coupling(self, probe_coupling: float) -> WireModel:
        return WireModel(self.n_sites, self.hopping, probe_coupling, self.onsite, self.band_center)


class TerminalKind(enum.Enum):
    SOURCE = "source"
    DRAIN = "drain"
    PROBE = "probe"


@dataclass(frozen=True)
class Terminal:
    id: int
    kind: TerminalKind
    mu: float
    temperature: float
    site: int | None = None

    def __post_init__(self) -> None:
        if not self.temperature > 0:
            raise ValueError(f"terminal {self.id}: temperature must be > 0 K")
        if self.kind is TerminalKind.PROBE and (self.site is None or self.site < 1):
            raise ValueError(f"terminal {self.id}: probe needs a 1-based site")


def make_terminals(
    model: WireModel,
    mu_source: float,
    mu_drain: float,
    temperature: float,
    probe_mus: Array | None = None,
    probe_temps: Array | None = None,
    drain_temperature: float | None = None,
) -> list[Terminal]:
    """Terminals in canonical order; probes default to the source/drain midpoint state."""
    n = model.n_sites
    if probe_mus is None:
        probe_mus = np.full(n, 0.5 * (mu_source + mu_drain))
    if probe_temps is None:
        probe_temps = np.full(n, temperature)
    if len(probe_mus) != n or len(probe_temps) != n:
        raise ValueError("need one probe potential and temperature per site")
    t_drain = temperature if drain_temperature is None else drain_temperature
    terminals = [
        Terminal(0, TerminalKind.SOURCE, float(mu_source), float(temperature), site=1),
        Terminal(1, TerminalKind.DRAIN, float(mu_drain), float(t_drain), site=n),
    ]
    terminals += [
        Terminal(1 + s, TerminalKind.PROBE, float(m), float(T), site=s)
        for s, m, T in zip(range(1, n + 1), probe_mus, probe_temps)
    ]
    return terminals


def check_terminals(model: WireModel, terminals: list[Terminal]) -> None:
    if len(terminals) != model.n_terminals:
        raise ValueError(f"expected {model.n_terminals} terminals, got {len(terminals)}")
    kinds = [term.kind for term in terminals]
    if kinds[:2] != [TerminalKind.SOURCE, TerminalKind.DRAIN]:
        raise ValueError("terminals must start with the source and the drain")
    for n, term in enumerate(terminals[2:], start=1):
        if term.kind is not TerminalKind.PROBE or term.site != n:
            raise ValueError(f"terminal {2 + n - 1} must be the probe on site {n}")


@dataclass(frozen=True)
class Couplings:
    """Site-diagonal broadening of every terminal: Gamma^a = widths[a] |sites[a]><sites[a]|."""

    sites: Array  # 0-based
    widths: Array
    n_sites: int

    def matrices(self) -> Array:
        """Dense (M, N, N) stack of the broadening matrices."""
        m = len(self.sites)
        out = np.zeros((m, self.n_sites, self.n_sites))
        out[np.arange(m), self.sites, self.sites] = self.widths
        return out


@dataclass(frozen=True)
class GreensBundle:
    energy: float
    g_retarded: Array
    g_advanced: Array
    g_lesser: Array
    spectral: Array
    couplings: Couplings = field(repr=False)


@dataclass(frozen=True)
class TransmissionMatrix:
    energy: float
    t_matrix: Array
    gamma_list: Couplings | Array = field(repr=False)


def surface_green(energy, hopping: float, band_center: float = 0.0):
    """Retarded surface Green's function of a semi-infinite chain (in-band only).

    Uses the closed form ``(e - i sqrt(4t^2 - e^2)) / 2t^2`` which picks the
    branch with negative imaginary part.  Accepts scalars or arrays.
    """
    e = np.asarray(energy, dtype=float) - band_center
    disc = 4.0 * hopping**2 - e**2
    if np.any(disc <= 0):
        raise OutOfBandError(f"energy outside the open lead band |e - e0| < 2t = {2 * hopping}")
    g = (e - 1j * np.sqrt(disc)) / (2.0 * hopping**2)
    return g if g.ndim else complex(g)


def lead_broadening(energy, hopping: float, band_center: float = 0.0):
    """Gamma of a semi-infinite chain lead, ``-2 Im(t^2 g_s) = sqrt(4t^2 - e^2)``."""
    return -2.0 * np.imag(hopping**2 * surface_green(energy, hopping, band_center))


def _couplings(model: WireModel, lead_width: float) -> Couplings:
    n = model.n_sites
    sites = np.concatenate(([0, n - 1], np.arange(n)))
    widths = np.concatenate(([lead_width, lead_width], np.full(n, model.probe_coupling)))
    return Couplings(sites=sites, widths=widths.astype(float), n_sites=n)


def build_self_energy(model: WireModel, energy: float) -> tuple[Array, Couplings]:
    """Retarded self-energy of leads plus probes and the per-terminal broadening."""
    sigma_lead = model.hopping**2 * surface_green(energy, model.hopping, model.band_center)
    n = model.n_sites
    sigma = np.diag(np.full(n, -0.5j * model.probe_coupling))
    sigma[0, 0] += sigma_lead
    sigma[n - 1, n - 1] += sigma_lead
    return sigma, _couplings(model, -2.0 * sigma_lead.imag)


def _check_pivots(g: Array, energy) -> None:
    if not np.all(np.isfinite(g)):
        raise SingularGreensError(f"(e - H - Sigma) is singular near energy {energy}")


def retarded_on_grid(model: WireModel, energies: Array) -> tuple[Array, Array]:
    """Batched G^R over an energy grid; returns ``(G, lead_widths)`` with G of shape (E, N, N)."""
    energies = np.atleast_1d(np.asarray(energies, dtype=float))
    n = model.n_sites
    sigma_lead = model.hopping**2 * surface_green(energies, model.hopping, model.band_center)
    a = np.broadcast_to(-model.hamiltonian().astype(complex), (energies.size, n, n)).copy()
    diag = np.arange(n)
    a[:, diag, diag] += energies[:, None] + 0.5j * model.probe_coupling
    a[:, 0, 0] -= sigma_lead
    a[:, n - 1, n - 1] -= sigma_lead
    try:
        g = np.linalg.inv(a)
    except np.linalg.LinAlgError as exc:
        raise SingularGreensError(f"(e - H - Sigma) is singular on the grid: {exc}") from exc
    _check_pivots(g, energies)
    return g, -2.0 * np.imag(sigma_lead)


def fermi(energy, mu, temperature):
    return expit(-(np.asarray(energy) - mu) / (K_B * np.asarray(temperature)))


def greens_at(model: WireModel, terminals: list[Terminal], energy: float) -> GreensBundle:
    check_terminals(model, terminals)
    g_r, lead_w = retarded_on_grid(model, np.array([energy]))
    g_r = g_r[0]
    g_a = g_r.conj().T
    couplings = _couplings(model, float(lead_w[0]))
    occ = np.array([fermi(energy, term.mu, term.temperature) for term in terminals])
    # Sigma^< = i sum_a Gamma^a f_a, so that G^<_eq = 2 pi i A f
    sigma_less = np.zeros((model.n_sites,) * 2, dtype=complex)
    np.add.at(sigma_less, (couplings.sites, couplings.sites), 1j * couplings.widths * occ)
    g_less = g_r @ sigma_less @ g_a
    spectral = (1j / (2.0 * np.pi)) * (g_r - g_a)
    return GreensBundle(float(energy), g_r, g_a, g_less, spectral, couplings)


def transmission(bundle: GreensBundle, gammas: Couplings | Array | None = None) -> TransmissionMatrix:
    """T_ab = Tr[Gamma^a G^R Gamma^b G^A] for every terminal pair; diagonal stored as 0.

    ``gammas`` may be a :class:`Couplings` (fast path, site-diagonal widths)
    or a dense (M, N, N) stack, for which the trace is evaluated literally.
    """
    gammas = bundle.couplings if gammas is None else gammas
    if isinstance(gammas, Couplings):
        t = _site_transmissions(np.abs(bundle.g_retarded) ** 2, gammas.sites, gammas.widths)
    else:
        left = np.einsum("aij,jk->aik", gammas, bundle.g_retarded)
        right = np.einsum("bij,jk->bik", gammas, bundle.g_advanced)
        t = np.einsum("aij,bji->ab", left, right).real
        np.fill_diagonal(t, 0.0)
    return TransmissionMatrix(bundle.energy, t, gammas)


def _site_transmissions(g2: Array, sites: Array, widths: Array) -> Array:
    t = widths[:, None] * g2[..., sites[:, None], sites[None, :]] * widths[None, :]
    idx = np.arange(len(sites))
    t[..., idx, idx] = 0.0
    return t


def transmission_on_grid(model: WireModel, energies: Array) -> Array:
    """Terminal transmission matrices on a grid, shape (E, M, M)."""
    g, lead_w = retarded_on_grid(model, energies)
    g2 = np.abs(g) ** 2
    n = model.n_sites
    sites = np.concatenate(([0, n - 1], np.arange(n)))
    widths = np.empty((len(lead_w), n + 2))
    widths[:, :2] = lead_w[:, None]
    widths[:, 2:] = model.probe_coupling
    t = widths[:, :, None] * g2[:, sites[:, None], sites[None, :]] * widths[:, None, :]
    idx = np.arange(n + 2)
    t[:, idx, idx] = 0.0
    return t


def transmission_at(model: WireModel, energy: float) -> Array:
    return transmission_on_grid(model, np.array([energy]))[0]


def local_distribution(bundle: GreensBundle, probe_site: int) -> float:
    """Local non-equilibrium occupation sampled by the probe on ``probe_site`` (1-based)."""
    n = bundle.g_retarded.shape[0]
    if not 1 <= probe_site <= n:
        raise ValueError(f"probe_site {probe_site} outside 1..{n}")
    k = probe_site - 1
    probe_width = bundle.couplings.widths[1 + probe_site]
    weight = bundle.spectral[k, k].real
    if probe_width <= 0 or weight <= 0:
        raise UndefinedDistributionError(f"no spectral weight seen by probe {probe_site}")
    # Gamma^{P_n} is a multiple of |n><n| so the traces reduce to diagonal entries
    return float((bundle.g_lesser[k, k] / (2j * np.pi * weight)).real)


@dataclass(frozen=True)
class LocalSpectra:
    """Local spectral weight g_n(e) and occupation f_n(e) on a grid, shape (E, N)."""

    energies: Array
    spectral_weight: Array
    occupation: Array


def local_spectra(model: WireModel, terminals: list[Terminal], energies: Array) -> LocalSpectra:
    """Batched ``g_n`` and ``f_n`` for every site.

    ``f_n`` is reported for every site; it equals the probe-sampled
    distribution because every Gamma^{P_n} is proportional to |n><n|.
    """
    check_terminals(model, terminals)
    energies = np.asarray(energies, dtype=float)
    g, lead_w = retarded_on_grid(model, energies)
    g2 = np.abs(g) ** 2
    n = model.n_sites
    mus = np.array([term.mu for term in terminals])
    temps = np.array([term.temperature for term in terminals])
    occ = fermi(energies[:, None], mus[None, :], temps[None, :])  # (E, M)
    # -i G^<_nn = sum_a Gamma^a_ss |G_ns|^2 f_a
    less = model.probe_coupling * np.einsum("ens,es->en", g2, occ[:, 2:])
    less += lead_w[:, None] * (g2[:, :, 0] * occ[:, :1] + g2[:, :, n - 1] * occ[:, 1:2])
    weight = -np.imag(np.diagonal(g, axis1=1, axis2=2)) / np.pi
    with np.errstate(divide="ignore", invalid="ignore"):
        occupation = less / (2.0 * np.pi * weight)
    return LocalSpectra(energies, weight, occupation)
