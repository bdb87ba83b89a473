"""Energy windows and quadrature rules shared by the exact (integral) code paths."""

from __future__ import annotations

import logging
from typing import Callable

import numpy as np
from scipy.integrate import quad_vec

from .negf import K_B, WireModel

Array = np.ndarray

log = logging.getLogger(__name__)

# Fermi-window tails beyond this many k_B T are below 1e-17 relative
TAIL_KT = 40.0


class QuadratureError(RuntimeError):
    pass


def integration_window(
    model: WireModel, mus: Array, t_max: float, *, tail_kt: float = TAIL_KT
) -> tuple[float, float]:
    """Window around the mean lead potential that covers every Fermi window, clipped to the band."""
    mus = np.asarray(mus, dtype=float)
    center = 0.5 * (mus.max() + mus.min())
    half = 6.0 * float(np.ptp(mus)) + tail_kt * K_B * t_max
    edge = 2.0 * model.hopping * (1.0 - 1e-9)
    lo = max(center - half, model.band_center - edge)
    hi = min(center + half, model.band_center + edge)
    return lo, hi


def uniform_grid(
    mu0: float, delta_mu: float, t_max: float, points: int = 2001, model: WireModel | None = None
) -> Array:
    """Uniform grid over mu0 +/- max(10 k_B T_max, 5 |dmu|), optionally clipped to the band."""
    half = max(10.0 * K_B * t_max, 5.0 * abs(delta_mu))
    lo, hi = mu0 - half, mu0 + half
    if model is not None:
        edge = 2.0 * model.hopping * (1.0 - 1e-9)
        lo = max(lo, model.band_center - edge)
        hi = min(hi, model.band_center + edge)
    return np.linspace(lo, hi, points)


def simpson_weights(energies: Array) -> Array:
    """Composite Simpson weights for a uniform grid with an odd number of points."""
    n = len(energies)
    if n < 3 or n % 2 == 0:
        raise ValueError("Simpson's rule needs an odd number (>= 3) of grid points")
    h = (energies[-1] - energies[0]) / (n - 1)
    if not np.allclose(np.diff(energies), h, rtol=1e-9, atol=0.0):
        raise ValueError("Simpson weights require a uniform grid")
    w = np.full(n, 2.0)
    w[1::2] = 4.0
    w[0] = w[-1] = 1.0
    return w * h / 3.0


def integrate(
    func: Callable[[float], Array],
    lo: float,
    hi: float,
    *,
    points: Array | None = None,
    epsabs: float = 1e-12,
    limit: int = 4000,
) -> Array:
    """Adaptive Gauss-Kronrod integration of a vector-valued integrand."""
    if points is not None:
        points = sorted({float(p) for p in points if lo < p < hi})
    value, err, info = quad_vec(
        func, lo, hi, epsabs=epsabs, epsrel=0.0, norm="max", limit=limit,
        points=points or None, full_output=True,
    )
    if info.status == 2:
        # rounding error floor: the estimate is as good as double precision allows
        log.debug("quadrature on [%g, %g] stopped at rounding floor, error estimate %.3g", lo, hi, err)
    elif not info.success:
        raise QuadratureError(
            f"adaptive quadrature failed on [{lo}, {hi}]: {info.message} (error estimate {err:.3g})"
        )
    return value
