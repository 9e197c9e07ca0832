"""Pure-python (numpy) reference kernels.

These are the always-available implementations of the hot inner loops; the
compiled extension in _kernels.pyx reproduces them exactly.  Field arrays are
(ny+1, nx): row index is y (walls at first/last row), column index is x
(periodic).
"""

from __future__ import annotations

import numpy as np

BACKEND = "python"


def arakawa_channel(psi: np.ndarray, omega: np.ndarray, dx: float, dy: float) -> np.ndarray:
    """Energy/enstrophy-conserving Jacobian J(psi, omega) on the channel.

    Piecewise-linear Jacobian assembled over the two diagonal triangulations
    of the grid and averaged; equivalent to the classical three-term Jacobian
    average in the interior, with boundary rows that keep the discrete integrals
    sum(J), sum(omega*J) and sum(psi*J) exactly zero whenever psi is constant
    along each wall (trapezoidal row weights).
    """
    ny1, nx = psi.shape
    f = psi
    g = omega

    def roll(a):
        return np.roll(a, -1, axis=1)

    f00, g00 = f[:-1, :], g[:-1, :]
    f10, g10 = roll(f)[:-1, :], roll(g)[:-1, :]
    f01, g01 = f[1:, :], g[1:, :]
    f11, g11 = roll(f)[1:, :], roll(g)[1:, :]

    def tri(fa, fb, fc, ga, gb, gc):
        return (fb - fa) * (gc - ga) - (fc - fa) * (gb - ga)

    # triangulation A: diagonal P00-P11; triangulation B: diagonal P10-P01
    ta1 = tri(f00, f10, f11, g00, g10, g11)
    ta2 = tri(f00, f11, f01, g00, g11, g01)
    tb1 = tri(f00, f10, f01, g00, g10, g01)
    tb2 = tri(f10, f11, f01, g10, g11, g01)

    acc = np.zeros_like(psi)

    def add(rows, cells):
        if rows == "lo":
            acc[:-1, :] += cells
        else:
            acc[1:, :] += cells

    def shift(c):
        return np.roll(c, 1, axis=1)

    # vertex contributions, raw/6 each (area factors cancel)
    add("lo", ta1)            # P00
    add("lo", shift(ta1))     # P10
    add("hi", shift(ta1))     # P11
    add("lo", ta2)            # P00
    add("hi", shift(ta2))     # P11
    add("hi", ta2)            # P01
    add("lo", tb1)            # P00
    add("lo", shift(tb1))     # P10
    add("hi", tb1)            # P01
    add("lo", shift(tb2))     # P10
    add("hi", shift(tb2))     # P11
    add("hi", tb2)            # P01

    mass = np.full(psi.shape, 2.0 * dx * dy)
    mass[0, :] = dx * dy
    mass[-1, :] = dx * dy
    return acc / (6.0 * mass)


def thomas_factor(lower: np.ndarray, diag: np.ndarray, upper: np.ndarray):
    """LU factor a batch of tridiagonal systems.

    lower/diag/upper: (nsys, n) with lower[:, 0] and upper[:, -1] unused.
    Returns (w, dfac, upper) for thomas_solve.
    """
    nsys, n = diag.shape
    w = np.zeros_like(diag)
    dfac = diag.copy()
    for j in range(1, n):
        w[:, j] = lower[:, j] / dfac[:, j - 1]
        dfac[:, j] = diag[:, j] - w[:, j] * upper[:, j - 1]
    return w, dfac, upper.copy()


def thomas_solve(factors, rhs: np.ndarray) -> np.ndarray:
    """Solve the factored batch for rhs of shape (nsys, n)."""
    w, dfac, upper = factors
    nsys, n = dfac.shape
    y = rhs.copy()
    for j in range(1, n):
        y[:, j] -= w[:, j] * y[:, j - 1]
    x = y
    x[:, -1] = y[:, -1] / dfac[:, -1]
    for j in range(n - 2, -1, -1):
        x[:, j] = (y[:, j] - upper[:, j] * x[:, j + 1]) / dfac[:, j]
    return x


def _rigid_rhs(pi, k, p_k, lam1, lam2, i3big):
    w = ((1.0 - k) * pi[2] - p_k) / i3big
    return np.array(
        [
            -pi[1] * pi[2] / lam2 + pi[1] * w,
            pi[0] * pi[2] / lam1 - pi[0] * w,
            (1.0 / lam2 - 1.0 / lam1) * pi[0] * pi[1],
        ]
    )


def _sample_steps(nsteps: int, stride: int) -> list[int]:
    steps = list(range(0, nsteps + 1, max(1, stride)))
    if steps[-1] != nsteps:
        steps.append(nsteps)
    return steps


def rigid_rk4_controlled(pi0, k, p_k, lam1, lam2, i3big, dt, nsteps, stride):
    """RK4 on the closed-loop momentum equation; returns (samples, times)."""
    steps = _sample_steps(nsteps, stride)
    out = np.empty((len(steps), 3))
    ts = np.empty(len(steps))
    pi = np.asarray(pi0, dtype=float).copy()
    si = 0
    for step in range(nsteps + 1):
        if step == steps[si]:
            out[si] = pi
            ts[si] = step * dt
            si += 1
            if si == len(steps):
                break
        k1 = _rigid_rhs(pi, k, p_k, lam1, lam2, i3big)
        k2 = _rigid_rhs(pi + 0.5 * dt * k1, k, p_k, lam1, lam2, i3big)
        k3 = _rigid_rhs(pi + 0.5 * dt * k2, k, p_k, lam1, lam2, i3big)
        k4 = _rigid_rhs(pi + dt * k3, k, p_k, lam1, lam2, i3big)
        pi = pi + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return out, ts


def rigid_rk4_free(pi0, q, lam1, lam2, i3big, dt, nsteps, stride):
    """Free dynamics: same closed-loop kernel with k = 0, p_k = q."""
    return rigid_rk4_controlled(pi0, 0.0, q, lam1, lam2, i3big, dt, nsteps, stride)
