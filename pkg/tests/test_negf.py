from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from joulewire.negf import (
    K_B,
    Couplings,
    OutOfBandError,
    UndefinedDistributionError,
    WireModel,
    fermi,
    greens_at,
    lead_broadening,
    local_distribution,
    local_spectra,
    make_terminals,
    retarded_on_grid,
    surface_green,
    transmission,
    transmission_at,
    transmission_on_grid,
)

from conftest import decimated_surface_green, dense_retarded


# --- model -------------------------------------------------------------------

def test_hamiltonian_is_symmetric_chain():
    h = WireModel(4, 2.7, 0.5, onsite=0.1).hamiltonian()
    assert np.allclose(h, h.T)
    assert np.allclose(np.diag(h), 0.1)
    assert np.allclose(np.diag(h, 1), 2.7)
    assert np.count_nonzero(np.triu(h, 2)) == 0


@pytest.mark.parametrize("kwargs", [
    dict(n_sites=0, hopping=1.0),
    dict(n_sites=3, hopping=0.0),
    dict(n_sites=3, hopping=-1.0),
    dict(n_sites=3, hopping=1.0, probe_coupling=-0.1),
    dict(n_sites=3, hopping=1.0, onsite=[0.0, 0.0]),
])
def test_invalid_models_rejected(kwargs):
    with pytest.raises(ValueError):
        WireModel(**kwargs)


def test_terminal_ordering():
    model = WireModel(3, 1.0, 0.2)
    terms = make_terminals(model, 0.1, -0.1, 100.0)
    assert len(terms) == model.n_terminals == 5
    assert [t.site for t in terms] == [1, 3, 1, 2, 3]
    assert terms[0].mu == 0.1 and terms[1].mu == -0.1


# --- surface Green's function -----------------------------------------------------

@pytest.mark.parametrize("energy", [-3.9, -2.0, -0.3, 0.05, 0.7, 3.5])
def test_surface_green_matches_decimation(energy):
    t = 2.0
    assert abs(surface_green(energy, t) - decimated_surface_green(energy, t)) < 1e-7


def test_surface_green_band_center_value():
    # at the band center g_s = -i/t exactly
    assert surface_green(0.0, 2.7) == pytest.approx(-1j / 2.7, abs=1e-15)
    assert lead_broadening(0.0, 2.7) == pytest.approx(5.4, rel=1e-15)


@given(e=st.floats(-0.999, 0.999), t=st.floats(0.1, 10.0))
def test_surface_green_dyson_identity(e, t):
    # g = 1 / (E - t^2 g) for the semi-infinite chain, with Im g < 0
    energy = 2.0 * t * e
    g = surface_green(energy, t)
    assert abs(g - 1.0 / (energy - t * t * g)) < 1e-9 / t
    assert g.imag < 0


@pytest.mark.parametrize("energy", [-2.0, 2.0, 5.0])
def test_out_of_band_raises(energy):
    with pytest.raises(OutOfBandError):
        surface_green(energy, 1.0)


# --- retarded Green's function and transmissions -----------------------------------

@pytest.mark.parametrize("n,gamma,energy", [(1, 0.3, 0.2), (4, 0.0, -0.5), (7, 1.5, 1.1), (12, 0.05, 0.02)])
def test_retarded_matches_dense_inverse(n, gamma, energy):
    model = WireModel(n, 1.0, gamma)
    g, lead_w = retarded_on_grid(model, np.array([energy]))
    ref, ref_w = dense_retarded(n, 1.0, gamma, energy)
    assert np.allclose(g[0], ref, atol=1e-7)
    assert lead_w[0] == pytest.approx(ref_w, rel=1e-7)


def test_single_site_transmissions_closed_form():
    # one site, gamma_p = t, band center: T12 = (2t)^2 / (2t + t/2)^2, T1P = 2t * t / (5t/2)^2
    t = transmission_at(WireModel(1, 2.7, 2.7), 0.0)
    assert t[0, 1] == pytest.approx(0.64, rel=1e-13)
    assert t[0, 2] == pytest.approx(0.32, rel=1e-13)
    assert t[1, 2] == pytest.approx(0.32, rel=1e-13)


@pytest.mark.parametrize("n", [1, 2, 5, 40])
def test_clean_chain_is_ballistic(n):
    energies = np.linspace(-1.9, 1.9, 7)
    t = transmission_on_grid(WireModel(n, 1.0, 0.0), energies)
    assert np.allclose(t[:, 0, 1], 1.0, atol=1e-10)


def test_trace_formula_dual_route():
    model = WireModel(6, 1.3, 0.4, onsite=np.linspace(-0.2, 0.3, 6))
    bundle = greens_at(model, make_terminals(model, 0.05, -0.05, 80.0), 0.37)
    fast = transmission(bundle).t_matrix
    dense = transmission(bundle, bundle.couplings.matrices()).t_matrix
    assert np.allclose(fast, dense, atol=1e-14)
    # literal Tr[Gamma^a G^R Gamma^b G^A] for one pair
    gam = bundle.couplings.matrices()
    lit = np.trace(gam[0] @ bundle.g_retarded @ gam[3] @ bundle.g_advanced).real
    assert fast[0, 3] == pytest.approx(lit, rel=1e-12)


@settings(max_examples=40, deadline=None)
@given(
    n=st.integers(1, 15),
    gamma=st.floats(0.0, 5.0),
    e=st.floats(-0.95, 0.95),
)
def test_transmission_symmetry_and_sum_rule(n, gamma, e):
    model = WireModel(n, 1.0, gamma)
    energy = 2.0 * e
    bundle = greens_at(model, make_terminals(model, 0.0, 0.0, 100.0), energy)
    t = transmission(bundle).t_matrix
    assert np.all(t >= -1e-14)
    assert np.allclose(t, t.T, atol=1e-12)
    # sum rule: sum_b T_ab = Tr[Gamma^a A'] with A' = i(G - G^+) and the diagonal removed
    gam = bundle.couplings.matrices()
    a = 1j * (bundle.g_retarded - bundle.g_advanced)
    diag = np.einsum("aij,jk,akl,li->a", gam, bundle.g_retarded, gam, bundle.g_advanced).real
    expect = np.einsum("aij,ji->a", gam, a).real - diag
    assert np.allclose(t.sum(axis=1), expect, atol=1e-11)


# --- lesser function and local occupation -----------------------------------------

def test_equilibrium_occupation_is_fermi():
    model = WireModel(5, 1.0, 0.3)
    mu, temp = 0.1, 300.0
    terms = make_terminals(model, mu, mu, temp, np.full(5, mu), np.full(5, temp))
    for e in (-0.05, 0.1, 0.2):
        bundle = greens_at(model, terms, e)
        for site in range(1, 6):
            assert local_distribution(bundle, site) == pytest.approx(fermi(e, mu, temp), abs=1e-12)
        g_less = bundle.g_lesser
        assert np.allclose(g_less, -g_less.conj().T, atol=1e-14)
        assert np.allclose(g_less, 2j * np.pi * bundle.spectral * fermi(e, mu, temp), atol=1e-12)


def test_occupation_matches_weighted_fermi_oracle():
    # f_n = sum_a Gamma_a |G_{n s_a}|^2 f_a / sum_a Gamma_a |G_{n s_a}|^2
    n, t, gamma, e = 4, 1.0, 0.5, -0.3
    model = WireModel(n, t, gamma)
    mus = np.linspace(0.08, -0.08, n)
    terms = make_terminals(model, 0.1, -0.1, 150.0, mus, np.full(n, 170.0))
    g, lead_w = dense_retarded(n, t, gamma, e)
    sites = np.array([0, n - 1, *range(n)])
    widths = np.array([lead_w, lead_w, *[gamma] * n])
    f = np.array([fermi(e, x.mu, x.temperature) for x in terms])
    bundle = greens_at(model, terms, e)
    for k in range(n):
        w = widths * np.abs(g[k, sites]) ** 2
        assert local_distribution(bundle, k + 1) == pytest.approx((w @ f) / w.sum(), abs=1e-7)


def test_batched_spectra_match_pointwise():
    model = WireModel(4, 1.0, 0.5)
    terms = make_terminals(model, 0.1, -0.1, 150.0, np.linspace(0.08, -0.08, 4), np.full(4, 170.0))
    energies = np.linspace(-0.3, 0.3, 5)
    spec = local_spectra(model, terms, energies)
    for i, e in enumerate(energies):
        bundle = greens_at(model, terms, e)
        for s in range(4):
            assert spec.occupation[i, s] == pytest.approx(local_distribution(bundle, s + 1), abs=1e-13)
            assert spec.spectral_weight[i, s] == pytest.approx(bundle.spectral[s, s].real, rel=1e-12)


def test_occupation_bounded_between_reservoirs():
    model = WireModel(6, 1.0, 0.8)
    terms = make_terminals(model, 0.2, -0.2, 100.0, np.zeros(6), np.full(6, 100.0))
    occ = local_spectra(model, terms, np.linspace(-0.5, 0.5, 41)).occupation
    assert np.all(occ >= -1e-14) and np.all(occ <= 1 + 1e-14)


def test_undefined_distribution_outside_band():
    model = WireModel(2, 1.0, 0.0)
    bundle = greens_at(model, make_terminals(model, 0.0, 0.0, 100.0), 0.5)
    object.__setattr__(bundle, "spectral", np.zeros_like(bundle.spectral))
    with pytest.raises(UndefinedDistributionError):
        local_distribution(bundle, 1)
    with pytest.raises(ValueError):
        local_distribution(bundle, 0)


def test_fermi_is_stable_at_extremes():
    assert fermi(1.0, 0.0, 1.0) == pytest.approx(np.exp(-1.0 / K_B), abs=1e-300)
    assert fermi(-1.0, 0.0, 1.0) == 1.0
    assert fermi(0.0, 0.0, 300.0) == 0.5


def test_couplings_matrices_shape():
    c = Couplings(np.array([0, 2, 0, 1, 2]), np.array([2.0, 2.0, 0.5, 0.5, 0.5]), 3)
    m = c.matrices()
    assert m.shape == (5, 3, 3)
    assert m[1, 2, 2] == 2.0 and m[3, 1, 1] == 0.5 and m.sum() == pytest.approx(5.5)
