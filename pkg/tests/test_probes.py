from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from joulewire.negf import K_B, WireModel, fermi, surface_green
from joulewire.probes import (
    SOMMERFELD_HEAT,
    ConvergenceError,
    DisconnectedProbeError,
    FloatingProblem,
    Method,
    solve_floating_exact,
    solve_floating_sommerfeld,
    sommerfeld_probe_currents,
)

C = np.pi**2 * K_B**2 / 6.0


def linear_currents(t, mus, temps):
    """Hand-written linear-response particle and energy currents into every terminal."""
    m = len(mus)
    i0 = np.zeros(m)
    ie = np.zeros(m)
    for a in range(m):
        for b in range(m):
            if a != b:
                i0[a] += t[a, b] * (mus[b] - mus[a])
                ie[a] += t[a, b] * (0.5 * (mus[b] ** 2 - mus[a] ** 2) + C * (temps[b] ** 2 - temps[a] ** 2))
    return i0, ie


def exact_probe_currents(n, t, gamma, mus, temps, epsabs=1e-13):
    """Particle and energy current into each probe by scalar quad, one integral per quantity."""
    m = n + 2

    def tmat(e):
        gs = surface_green(e, t)
        h = np.diag(np.full(n - 1, t), 1) + np.diag(np.full(n - 1, t), -1)
        sig = np.diag(np.full(n, -0.5j * gamma))
        sig[0, 0] += t * t * gs
        sig[-1, -1] += t * t * gs
        g2 = np.abs(np.linalg.inv(e * np.eye(n) - h - sig)) ** 2
        lw = -2.0 * (t * t * gs).imag
        sites = [0, n - 1, *range(n)]
        w = [lw, lw, *[gamma] * n]
        out = np.array([[w[a] * g2[sites[a], sites[b]] * w[b] for b in range(m)] for a in range(m)])
        np.fill_diagonal(out, 0.0)
        return out

    def flux(e, p, weight):
        tm = tmat(e)
        f = np.array([fermi(e, mus[b], temps[b]) for b in range(m)])
        return weight(e) * np.sum(tm[p] * (f - f[p]))

    tmax = max(temps)
    lo = max(-2 * t * (1 - 1e-9), min(mus) - 40 * K_B * tmax)
    hi = min(2 * t * (1 - 1e-9), max(mus) + 40 * K_B * tmax)
    brk = sorted(set(mus))
    i0 = [quad(flux, lo, hi, args=(p, lambda e: 1.0), epsabs=epsabs, limit=500, points=brk)[0] for p in range(2, m)]
    ie = [quad(flux, lo, hi, args=(p, lambda e: e), epsabs=epsabs, limit=500, points=brk)[0] for p in range(2, m)]
    return np.array(i0), np.array(ie)


def test_heat_constant():
    assert SOMMERFELD_HEAT == pytest.approx(np.pi**2 * K_B**2 / 6.0, rel=1e-15)


@settings(max_examples=30, deadline=None)
@given(n=st.integers(1, 40), g=st.floats(0.05, 10.0), dmu=st.floats(1e-4, 0.3), T0=st.floats(20.0, 400.0))
def test_sommerfeld_solution_floats(n, g, dmu, T0):
    model = WireModel(n, 2.7, g * 2.7)
    problem = FloatingProblem.from_model(model, dmu / 2, -dmu / 2, T0)
    sol = solve_floating_sommerfeld(problem)
    mus, temps = sol.all_mus(problem), sol.all_temps(problem)
    i0, ie = linear_currents(problem.transmissions_at_mu0, mus, temps)
    scale = np.max(problem.transmissions_at_mu0)
    assert np.max(np.abs(i0[2:])) <= 1e-12 * scale * max(dmu, 1e-3)
    assert np.max(np.abs(ie[2:])) <= 1e-13 * scale
    # probes sit between the reservoirs and are heated above them
    assert np.all(sol.mus <= dmu / 2 + 1e-15) and np.all(sol.mus >= -dmu / 2 - 1e-15)
    assert np.all(sol.temps >= T0 * (1 - 1e-12))
    # mirror symmetry of the uniform chain
    assert np.allclose(sol.mus, -sol.mus[::-1], atol=1e-12 * dmu + 1e-16)
    assert np.allclose(sol.temps, sol.temps[::-1], rtol=1e-9)
    assert sol.method is Method.SOMMERFELD_LINEAR


def test_single_site_closed_form():
    # N = 1 at band center: T_1P = T_2P = X, mu_P = mu_0, T_P^2 = T_0^2 + dmu^2 / (8 c) * ...
    t, gamma, T0, dmu = 2.7, 2.7, 232.0, 0.2
    problem = FloatingProblem.from_model(WireModel(1, t, gamma), dmu / 2, -dmu / 2, T0)
    sol = solve_floating_sommerfeld(problem)
    x = 2 * t * gamma / (2 * t + gamma / 2) ** 2
    assert problem.transmissions_at_mu0[0, 2] == pytest.approx(x, rel=1e-13)
    assert sol.mus[0] == pytest.approx(0.0, abs=1e-16)
    # energy balance: x * (dmu/2)^2 = 2 x c (T_P^2 - T0^2)
    tp2 = T0**2 + (dmu / 2) ** 2 / (2 * C)
    assert sol.temps[0] == pytest.approx(np.sqrt(tp2), rel=1e-12)


def test_currents_helper_matches_hand_written():
    problem = FloatingProblem.from_model(WireModel(5, 1.0, 0.7), 0.04, -0.03, 90.0, 110.0)
    mus = np.array([0.03, 0.01, 0.0, -0.01, -0.02])
    temps = np.array([120.0, 130.0, 125.0, 118.0, 112.0])
    i0, i1 = sommerfeld_probe_currents(problem, mus, temps)
    r0, re = linear_currents(problem.transmissions_at_mu0, np.r_[0.04, -0.03, mus], np.r_[90.0, 110.0, temps])
    assert np.allclose(i0, r0[2:], atol=1e-15)
    # heat current = energy current - mu_P * particle current
    assert np.allclose(i1, re[2:] - mus * r0[2:], atol=1e-15)


def test_decoupled_probes_take_reservoir_average():
    problem = FloatingProblem.from_model(WireModel(4, 1.0, 0.0), 0.1, -0.1, 100.0)
    assert problem.decoupled
    sol = solve_floating_sommerfeld(problem)
    assert np.all(sol.mus == 0.0) and np.all(sol.temps == 100.0)


def test_disconnected_probe_detected():
    t = np.zeros((4, 4))
    t[0, 1] = t[1, 0] = 1.0
    t[0, 2] = t[2, 0] = 0.5  # probe 2 (index 3) talks to nobody
    problem = FloatingProblem(t, (0.1, -0.1), (100.0, 100.0))
    with pytest.raises(DisconnectedProbeError) as err:
        solve_floating_sommerfeld(problem)
    assert err.value.probe == 2


def test_invalid_problem_rejected():
    with pytest.raises(ValueError):
        FloatingProblem(np.zeros((2, 2)), (0.0, 0.0), (100.0, 100.0))
    with pytest.raises(ValueError):
        FloatingProblem(np.zeros((3, 3)), (0.0, 0.0), (0.0, 100.0))


@pytest.mark.parametrize("n,g", [(1, 1.0), (2, 0.5), (3, 2.0)])
def test_exact_solution_floats_under_independent_quadrature(n, g):
    t, T0, dmu = 1.0, 150.0, 0.05
    model = WireModel(n, t, g * t)
    sol = solve_floating_exact(model, dmu / 2, -dmu / 2, T0, tol=1e-12, epsabs=1e-14)
    assert sol.method is Method.EXACT_NONLINEAR
    mus = np.r_[dmu / 2, -dmu / 2, sol.mus]
    temps = np.r_[T0, T0, sol.temps]
    i0, ie = exact_probe_currents(n, t, g * t, mus, temps)
    assert np.max(np.abs(i0)) < 1e-11
    assert np.max(np.abs(ie)) < 1e-11


def test_exact_and_sommerfeld_agree_at_small_bias():
    model = WireModel(3, 1.0, 1.0)
    dmu, T0 = 2e-3, 30.0
    som = solve_floating_sommerfeld(FloatingProblem.from_model(model, dmu / 2, -dmu / 2, T0))
    ex = solve_floating_exact(model, dmu / 2, -dmu / 2, T0)
    assert np.allclose(ex.mus, som.mus, atol=1e-3 * dmu)
    assert np.allclose(ex.temps, som.temps, rtol=1e-3)


def test_grid_rule_matches_adaptive_rule():
    model = WireModel(4, 2.7, 2.7)
    dmu, T0 = 0.1, 100.0
    adaptive = solve_floating_exact(model, dmu / 2, -dmu / 2, T0)
    grid = np.linspace(-0.5 * 2.7, 0.5 * 2.7, 8001)
    simpson = solve_floating_exact(model, dmu / 2, -dmu / 2, T0, energies=grid)
    assert np.allclose(simpson.mus, adaptive.mus, atol=1e-9)
    assert np.allclose(simpson.temps, adaptive.temps, rtol=1e-8)


def test_convergence_error_carries_last_iterate():
    model = WireModel(3, 1.0, 1.0)
    with pytest.raises(ConvergenceError) as err:
        solve_floating_exact(model, 0.3, -0.3, 50.0, tol=1e-30, max_iter=1)
    last = err.value.last
    assert last.mus.shape == (3,) and np.all(last.temps > 0)


def test_exact_decoupled_shortcut():
    sol = solve_floating_exact(WireModel(3, 1.0, 0.0), 0.1, -0.1, 100.0)
    assert np.all(sol.mus == 0.0)
    assert np.all(sol.residual_particle == 0.0)
