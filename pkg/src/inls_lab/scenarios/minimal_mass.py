"""Backward construction of a critical-mass blow-up solution for a
coefficient that is flat near the origin.

The backward runs are carried out in pseudo-conformal variables
y = x/(T-t), s = 1/(T-t), where u(t,x) = s^{N/2} e^{-i s|x|^2/4} w(s, s x)
and w solves

    i w_s + Δw + k(y/s) |y|^-b |w|^p w = 0.

Q_T becomes the standing wave e^{is} Q, so every eps starts from a profile
of fixed width.  The datum is the discrete ground state of the evolution
stencil, which makes e^{is} Q_h an exact solution of the semi-discrete
flow wherever k(y/s) = k(0).  Backward evolution uses the conjugation
symmetry: conj(w(s1 - tau)) solves the same equation in tau.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.linalg import solve_banded

from .. import _kernels as K
from ..domain import Coefficient, Domain, RadialField, laplacian_bands, make_domain, mass_norm, weighted_norm
from ..errors import ParameterError, UnderResolutionError, UnresolvedSingularityError
from ..evolve import BlowupReport, Stepper, fit_blowup_time
from ..groundstate import GroundState

__all__ = [
    "BackwardRun",
    "MinimalMassReport",
    "discrete_ground_state",
    "backward_run",
    "minimal_mass_construct",
    "log_linear_fit",
    "lens_to_physical",
    "lens_forward",
]


def log_linear_fit(x: np.ndarray, d: np.ndarray) -> tuple[float, float, float]:
    """Least squares log d = a + m x; returns (m, a, R^2)."""
    x = np.asarray(x, float)
    y = np.log(np.asarray(d, float))
    m, a = np.polyfit(x, y, 1)
    resid = y - (a + m * x)
    ss = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss if ss > 0 else math.nan
    return float(m), float(a), r2


def discrete_ground_state(g: GroundState, d: Domain, tol: float = 1e-13, max_iter: int = 30) -> np.ndarray:
    """Newton solve of L Q - Q + k0 w |Q|^p Q = 0 on ``d``, started from Q.

    L is the evolution stencil and w the cell average of r^-b, so the
    result is a stationary state of the split-step scheme's continuous-time
    limit.
    """
    lo, di, up = laplacian_bands(d)
    pw = (4.0 - 2.0 * d.b) / d.N
    pot = g.k * d.cell_weight / d.cell_volume
    q = g.evaluate(d.r).copy()
    ab = np.zeros((3, d.n))
    for _ in range(max_iter):
        lq = di * q
        lq[:-1] += up * q[1:]
        lq[1:] += lo * q[:-1]
        F = lq - q + pot * q ** (1.0 + pw)
        ab[0, 1:] = up
        ab[1] = di - 1.0 + (1.0 + pw) * pot * q**pw
        ab[2, :-1] = lo
        dq = solve_banded((1, 1), ab, -F)
        q = q + dq
        if np.max(np.abs(dq)) < tol * np.max(np.abs(q)):
            return q
    raise UnderResolutionError("discrete ground state: Newton iteration did not converge")


def lens_to_physical(w: np.ndarray, dy: Domain, s: float, dx: Domain) -> RadialField:
    """u(x) = s^{N/2} e^{-i s |x|^2/4} w(s x) on ``dx`` by even cubic interpolation."""
    y = dy.r
    yy = np.concatenate((-y[::-1], y))
    re = CubicSpline(yy, np.concatenate((w.real[::-1], w.real)))
    im = CubicSpline(yy, np.concatenate((w.imag[::-1], w.imag)))
    ys = s * dx.r
    vals = np.zeros(dx.n, dtype=np.complex128)
    inside = ys <= y[-1]
    vals[inside] = re(ys[inside]) + 1j * im(ys[inside])
    vals *= s ** (0.5 * dx.N) * np.exp(-0.25j * s * dx.r**2)
    return RadialField(vals, dx)


@dataclass
class BackwardRun:
    eps: float
    times: np.ndarray  # decreasing, from T-eps to T-eps0
    distance: np.ndarray
    final: np.ndarray  # w(s0) on the lens grid
    mass2: float
    steps: int
    resolved: bool = True
    slope: float = math.nan
    intercept: float = math.nan
    r2: float = math.nan

    def as_dict(self) -> dict:
        return {
            "eps": self.eps,
            "times": self.times.tolist(),
            "distance": self.distance.tolist(),
            "mass2": self.mass2,
            "steps": self.steps,
            "resolved": self.resolved,
            "slope": self.slope,
            "intercept": self.intercept,
            "r2": self.r2,
        }


def _lens_pot(c: Coefficient, dy: Domain, s: float) -> np.ndarray:
    return c.value(dy.r / s) * dy.cell_weight / dy.cell_volume


def backward_run(
    T: float,
    eps: float,
    eps0: float,
    c: Coefficient,
    qh: np.ndarray,
    dy: Domain,
    ds0: float = 0.005,
    samples: int = 24,
    step_power: float = 2.0,
) -> BackwardRun:
    """Evolve w(1/eps) = e^{i/eps} Q_h back to s0 = 1/eps0.

    The step is ds = ds0 (s0/s)^step_power.  Splitting error is O(ds^2)
    per unit s and is concentrated in the first cell, where the r^-b weight
    makes the rotation stiff; shrinking ds with s keeps the error committed
    at large s summable as eps -> 0.  d(t) = ||v(t) - Q_T(t)||_{L^sigma_b} is
    measured against the discrete Q_T, e^{is} Q_h, and mapped to physical
    variables through ||u||_{L^sigma_b} = s^{2/sigma} ||w||_{L^sigma_b}.
    """
    s1, s0 = 1.0 / eps, 1.0 / eps0
    sig = dy.sigma
    lo, di, up = laplacian_bands(dy)
    pw = (4.0 - 2.0 * dy.b) / dy.N
    flat = bool(np.all(c.value(dy.r / s0) == c.k0))
    pot_flat = c.k0 * dy.cell_weight / dy.cell_volume
    targets = list(1.0 / (T - (T - np.geomspace(eps, eps0, samples))))  # decreasing s values
    z = np.conj(np.exp(1j * s1) * qh).astype(np.complex128)
    buf = np.empty_like(z)
    s = s1
    steps = 0
    dist = [0.0]
    ti = 1
    while ti < len(targets):
        ds = ds0 * (s0 / s) ** step_power
        target = targets[ti]
        landed = s - ds <= target * (1.0 + 1e-14)
        if landed:
            ds = s - target
        pot = pot_flat if flat else _lens_pot(c, dy, s - 0.5 * ds)
        z = K.phase_rotate(z, 0.5 * ds, pot, pw, buf)
        z = K.cayley_step(z, 0.5 * ds, lo, di, up, np.empty_like(z))
        z = K.phase_rotate(z, 0.5 * ds, pot, pw, z)
        steps += 1
        s = target if landed else s - ds
        if not np.all(np.isfinite(z)):
            raise UnresolvedSingularityError(f"non-finite lens-frame state at s={s:g}")
        if landed:
            w = np.conj(z)
            diff = RadialField(w - np.exp(1j * s) * qh, dy)
            dist.append(s ** (2.0 / sig) * weighted_norm(diff))
            ti += 1
    w = np.conj(z)
    taus = 1.0 / np.array(targets)
    return BackwardRun(eps, T - taus, np.array(dist), w, mass_norm(RadialField(w, dy)), steps)


def _physical(w: np.ndarray, s: float, c: Coefficient, st: Stepper) -> tuple[float, float]:
    """(||grad u||^2, E(u)) of the physical field carried by w at lens time s."""
    dy = st.domain
    v = w * np.exp(-0.25j * dy.r**2 / s)
    grad2 = s * s * st.grad2(v)
    pot = dy.omega * float(np.dot(c.value(dy.r / s) * dy.cell_weight, np.abs(w) ** dy.sigma)) / dy.sigma
    return grad2, 0.5 * grad2 - s * s * pot


def lens_forward(
    w0: np.ndarray,
    s0: float,
    T: float,
    c: Coefficient,
    dy: Domain,
    ds0: float = 0.005,
    step_power: float = 1.0,
    grad_cap: float = 16.0,
    res_tol: float = 0.15,
    max_steps: int = 10_000_000,
) -> BlowupReport:
    """Forward run in lens variables from w(s0) until ||grad u|| grows by ``grad_cap``.

    Times and invariants are reported for the physical field, so the
    blow-up time is fitted from 1/||grad u|| against t = T - 1/s.
    """
    st = Stepper(dy)
    lo, di, up = st.lower, st.diag, st.upper
    pw = st.pw
    w = np.array(w0, dtype=np.complex128)
    m0 = st.mass2(w)
    G0, e0 = _physical(w, s0, c, st)
    g0 = math.sqrt(G0)
    ts, gs = [T - 1.0 / s0], [g0]
    s, steps = s0, 0
    capped, resolved = False, True
    while steps < max_steps:
        if dy.h * math.sqrt(st.grad2(w) / m0) > res_tol:
            resolved = False
            break
        ds = ds0 * (s0 / s) ** step_power
        pot = c.value(dy.r / (s + 0.5 * ds)) * dy.cell_weight / dy.cell_volume
        w = K.phase_rotate(w, 0.5 * ds, pot, pw, np.empty_like(w))
        w = K.cayley_step(w, 0.5 * ds, lo, di, up, np.empty_like(w))
        w = K.phase_rotate(w, 0.5 * ds, pot, pw, w)
        s += ds
        steps += 1
        if not np.all(np.isfinite(w)):
            raise UnresolvedSingularityError(f"non-finite lens-frame state at s={s:g}")
        if steps % 10 == 0:
            G, _ = _physical(w, s, c, st)
            ts.append(T - 1.0 / s)
            gs.append(math.sqrt(G))
            if gs[-1] >= grad_cap * g0:
                capped = True
                break
    G, e = _physical(w, s, c, st)
    drift = abs(st.mass2(w) - m0) / m0
    ok = resolved and drift < 1e-8
    return BlowupReport(
        blew_up=bool(capped and ok),
        t_stop=float(T - 1.0 / s),
        grad_growth=float(math.sqrt(G) / g0),
        fitted_T=fit_blowup_time(np.array(ts), np.array(gs)) if capped else math.nan,
        resolution_ok=bool(ok),
        mass_drift=float(drift),
        energy_drift=float(abs(e - e0) / max(abs(e0), 1e-3 * 0.5 * G0, 1e-300)),
        steps=steps,
    )


@dataclass
class MinimalMassReport:
    T: float
    eps0: float
    runs: list[BackwardRun]
    pairwise: np.ndarray  # pairwise[i, j] = ||v_i - v_j||_{L^sigma_b} at T - eps0
    consecutive: list[float]
    forward: BlowupReport | None
    forward_mass2: float
    target_mass2: float
    extra: dict = field(default_factory=dict)

    @property
    def cauchy(self) -> bool:
        c = self.consecutive
        return all(b < a for a, b in zip(c[:-1], c[1:]))

    def as_dict(self) -> dict:
        return {
            "T": self.T,
            "eps0": self.eps0,
            "runs": [r.as_dict() for r in self.runs],
            "pairwise": self.pairwise.tolist(),
            "consecutive": self.consecutive,
            "cauchy": self.cauchy,
            "forward": None if self.forward is None else self.forward.as_dict(),
            "forward_mass2": self.forward_mass2,
            "target_mass2": self.target_mass2,
            **self.extra,
        }


def minimal_mass_construct(
    T: float,
    eps_list,
    eps0: float,
    c: Coefficient,
    g: GroundState,
    lens_r_max: float = 32.0,
    lens_n: int = 2048,
    ds0: float = 0.005,
    step_power: float = 2.0,
    samples: int = 24,
    forward_cap: float = 16.0,
    forward: bool = True,
) -> MinimalMassReport:
    """Backward runs for each eps, their Cauchy distances and a forward check.

    ``eps_list`` must be decreasing with entries in (0, eps0) and
    eps0 < T/2.  The forward run starts from the smallest-eps candidate at
    T-eps0 and stops once ||grad u|| has grown by ``forward_cap``; it is
    done in lens variables with ds proportional to 1/s.
    """
    eps_list = [float(e) for e in eps_list]
    if not (0 < eps0 < T / 2):
        raise ParameterError(f"eps0 must satisfy 0 < eps0 < T/2 (got eps0={eps0!r}, T={T!r})")
    if any(b >= a for a, b in zip(eps_list[:-1], eps_list[1:])) or not all(0 < e < eps0 for e in eps_list):
        raise ParameterError("eps_list must be decreasing with entries in (0, eps0)")
    if not math.isclose(g.k, c.k0, rel_tol=1e-12):
        raise ParameterError(f"ground state coupling {g.k} differs from k(0) = {c.k0}")
    dx = c.domain
    dy = make_domain(dx.N, dx.b, lens_r_max, lens_n)
    qh = discrete_ground_state(g, dy)
    runs = []
    for e in eps_list:
        run = backward_run(T, e, eps0, c, qh, dy, ds0, samples, step_power)
        ok = np.isfinite(run.distance) & (run.distance > 0)
        if np.count_nonzero(ok) >= 3:
            run.slope, run.intercept, run.r2 = log_linear_fit(1.0 / (T - run.times[ok]), run.distance[ok])
        runs.append(run)
    s0 = 1.0 / eps0
    scale = s0 ** (2.0 / dy.sigma)
    k = len(runs)
    pair = np.zeros((k, k))
    for i in range(k):
        for j in range(i + 1, k):
            diff = RadialField(runs[i].final - runs[j].final, dy)
            pair[i, j] = pair[j, i] = scale * weighted_norm(diff)
    consecutive = [float(pair[i, i + 1]) for i in range(k - 1)]
    extra = {"lens_mass2": mass_norm(RadialField(qh, dy)), "lens_r_max": lens_r_max, "lens_n": lens_n,
             "ds0": ds0, "step_power": step_power}
    rep = None
    if forward:
        rep = lens_forward(runs[-1].final, s0, T, c, dy, ds0, 1.0, forward_cap)
    fmass = mass_norm(RadialField(runs[-1].final, dy))
    return MinimalMassReport(T, eps0, runs, pair, consecutive, rep, fmass, g.mass2, extra)
