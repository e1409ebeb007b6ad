"""Compiled inner loops: radial ODE shooting and the tridiagonal Cayley step."""

from __future__ import annotations

import numpy as np
from numba import njit

OVERSHOOT = 1
UNDERSHOOT = -1
UNDECIDED = 0


@njit(cache=True, inline="always")
def _rhs(r, q, p, k, b, N, pw):
    aq = abs(q)
    return q - k * r ** (-b) * aq**pw * q - (N - 1) * p / r


@njit(cache=True, inline="always")
def _rk4(r, q, p, dr, k, b, N, pw):
    k1q = p
    k1p = _rhs(r, q, p, k, b, N, pw)
    rm = r + 0.5 * dr
    k2q = p + 0.5 * dr * k1p
    k2p = _rhs(rm, q + 0.5 * dr * k1q, p + 0.5 * dr * k1p, k, b, N, pw)
    k3q = p + 0.5 * dr * k2p
    k3p = _rhs(rm, q + 0.5 * dr * k2q, p + 0.5 * dr * k2p, k, b, N, pw)
    re = r + dr
    k4q = p + dr * k3p
    k4p = _rhs(re, q + dr * k3q, p + dr * k3p, k, b, N, pw)
    qn = q + dr / 6.0 * (k1q + 2.0 * k2q + 2.0 * k3q + k4q)
    pn = p + dr / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p)
    return qn, pn


@njit(cache=True)
def series_start(q0, r, k, b, N):
    """Value and slope of the regular solution near the origin."""
    pw = (4.0 - 2.0 * b) / N
    kq = k * q0**pw
    A = -k * q0 ** (1.0 + pw) / ((2.0 - b) * (N - b))
    B = q0 / (2.0 * N)
    C = -(1.0 + pw) * kq * A / ((4.0 - 2.0 * b) * (N + 2.0 - 2.0 * b))
    D = (A - (1.0 + pw) * kq * B) / ((4.0 - b) * (N + 2.0 - b))
    q = q0 + A * r ** (2.0 - b) + B * r**2 + C * r ** (4.0 - 2.0 * b) + D * r ** (4.0 - b)
    p = (
        (2.0 - b) * A * r ** (1.0 - b)
        + 2.0 * B * r
        + (4.0 - 2.0 * b) * C * r ** (3.0 - 2.0 * b)
        + (4.0 - b) * D * r ** (3.0 - b)
    )
    return q, p


@njit(cache=True)
def shoot(q0, mesh, k, b, N, out_q, out_p):
    """Integrate from the series start along ``mesh``.

    Returns (status, last) where ``last`` is the final index written.  The
    run stops as soon as Q crosses zero (overshoot) or Q' turns positive
    (undershoot).  If neither happens the status is decided by the sign of
    the growing-mode component at the end of the mesh.
    """
    pw = (4.0 - 2.0 * b) / N
    q, p = series_start(q0, mesh[0], k, b, N)
    out_q[0] = q
    out_p[0] = p
    m = mesh.shape[0]
    for i in range(m - 1):
        r = mesh[i]
        q, p = _rk4(r, q, p, mesh[i + 1] - r, k, b, N, pw)
        out_q[i + 1] = q
        out_p[i + 1] = p
        if q <= 0.0:
            return OVERSHOOT, i + 1
        if p > 0.0:
            return UNDERSHOOT, i + 1
    r = mesh[m - 1]
    grow = p + q * (1.0 + 0.5 * (N - 1) / r)
    if grow > 0.0:
        return UNDERSHOOT, m - 1
    return OVERSHOOT, m - 1


@njit(cache=True)
def step_defect(mesh, q, p, last, k, b, N, scale):
    """Largest local defect per unit length from step doubling.

    Compares one RK4 step with two half steps on each mesh interval up to
    ``last``; the difference over 15 estimates the local error once the
    rounding floor is removed.
    """
    pw = (4.0 - 2.0 * b) / N
    worst = 0.0
    for i in range(last):
        r = mesh[i]
        dr = mesh[i + 1] - r
        q1, p1 = _rk4(r, q[i], p[i], dr, k, b, N, pw)
        qh, ph = _rk4(r, q[i], p[i], 0.5 * dr, k, b, N, pw)
        q2, p2 = _rk4(r + 0.5 * dr, qh, ph, 0.5 * dr, k, b, N, pw)
        # differences at the rounding level carry no information about dr
        floor = 64.0 * 2.220446049250313e-16 * (abs(q2) + abs(p2) + scale)
        e = max(max(abs(q2 - q1), abs(p2 - p1)) - floor, 0.0) / 15.0 / dr / scale
        if e > worst:
            worst = e
    return worst


@njit(cache=True)
def cayley_step(u, a, lower, diag, upper, out):
    """Solve (I - i a L) out = (I + i a L) u for tridiagonal L.

    Thomas elimination; the system is strictly diagonally dominant, so no
    pivoting is required.
    """
    n = u.shape[0]
    ia = 1j * a
    cp = np.empty(n, dtype=np.complex128)
    dp = np.empty(n, dtype=np.complex128)
    # right-hand side
    rhs0 = u[0] + ia * (diag[0] * u[0] + upper[0] * u[1])
    b0 = 1.0 - ia * diag[0]
    cp[0] = -ia * upper[0] / b0
    dp[0] = rhs0 / b0
    for j in range(1, n):
        lu = lower[j - 1] * u[j - 1]
        rhs = u[j] + ia * (lu + diag[j] * u[j])
        if j < n - 1:
            rhs += ia * upper[j] * u[j + 1]
        aj = -ia * lower[j - 1]
        denom = (1.0 - ia * diag[j]) - aj * cp[j - 1]
        if j < n - 1:
            cp[j] = -ia * upper[j] / denom
        dp[j] = (rhs - aj * dp[j - 1]) / denom
    out[n - 1] = dp[n - 1]
    for j in range(n - 2, -1, -1):
        out[j] = dp[j] - cp[j] * out[j + 1]
    return out


@njit(cache=True)
def phase_rotate(u, dt, pot, pw, out):
    """out_j = u_j exp(i dt pot_j |u_j|^pw)."""
    for j in range(u.shape[0]):
        z = u[j]
        a = (z.real * z.real + z.imag * z.imag) ** (0.5 * pw)
        th = dt * pot[j] * a
        out[j] = z * (np.cos(th) + 1j * np.sin(th))
    return out


@njit(cache=True)
def dirichlet_form(u, face_area, h):
    """sum_j A_{j+1/2} |u_{j+1} - u_j|^2 / h with the odd ghost at the wall."""
    n = u.shape[0]
    s = 0.0
    for j in range(n - 1):
        d = u[j + 1] - u[j]
        s += face_area[j] * (d.real * d.real + d.imag * d.imag)
    z = u[n - 1]
    s += face_area[n - 1] * 2.0 * (z.real * z.real + z.imag * z.imag)
    return s / h
