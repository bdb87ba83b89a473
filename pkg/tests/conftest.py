from __future__ import annotations

import numpy as np


def decimated_surface_green(energy: float, hopping: float, eta: float = 1e-10, iters: int = 200) -> complex:
    """Lopez-Sancho renormalisation for a 1D chain: independent of the closed form."""
    z = energy + 1j * eta
    eps_s = eps = 0.0 + 0j
    alpha = beta = complex(hopping)
    for _ in range(iters):
        g = 1.0 / (z - eps)
        eps_s = eps_s + alpha * g * beta
        eps = eps + alpha * g * beta + beta * g * alpha
        alpha, beta = alpha * g * alpha, beta * g * beta
        if abs(alpha) < 1e-300:
            break
    return 1.0 / (z - eps_s)


def dense_retarded(n: int, t: float, gamma: float, energy: float, onsite=None):
    """Textbook (E - H - Sigma)^-1 with decimated leads and wide-band probes."""
    h = np.diag(np.full(n - 1, t), 1) + np.diag(np.full(n - 1, t), -1)
    if onsite is not None:
        h = h + np.diag(onsite)
    gs = decimated_surface_green(energy, t)
    sigma = np.zeros((n, n), dtype=complex)
    sigma[0, 0] += t * t * gs
    sigma[-1, -1] += t * t * gs
    sigma -= 0.5j * gamma * np.eye(n)
    g = np.linalg.inv(energy * np.eye(n) - h - sigma)
    lead_w = -2.0 * (t * t * gs).imag
    return g, lead_w


# one line per acceptance criterion, printed at the end of the session
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
