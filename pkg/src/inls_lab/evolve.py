"""Strang-split time integration of the radial INLS flow.

One step is a half nonlinear phase rotation, a Crank-Nicolson (Cayley) step
of the discrete Laplacian and another half rotation.  Both sub-steps are
exact isometries of the discrete mass, so mass is conserved to round-off.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import _kernels as K
from .domain import (
    Coefficient,
    Domain,
    RadialField,
    _check_same,
    integrate_radial,
    laplacian_bands,
    mass_norm,
    sigma_of,
)
from .errors import DiagnosticError, DomainTooSmallError, ParameterError, UnresolvedSingularityError

__all__ = [
    "StepControls",
    "EvolutionLog",
    "BlowupReport",
    "Stepper",
    "nonlinear_phase_step",
    "linear_step",
    "evolve",
    "free_propagator",
    "dispersive_check",
    "dispersive_check_bilinear",
    "fit_blowup_time",
]


@dataclass(frozen=True)
class StepControls:
    """Time-stepping and logging parameters.

    ``g_ref`` defaults to the gradient norm of the initial datum.  Samples
    are written every ``sample_every`` steps and at every time listed in
    ``snapshot_times``, where the full field is also stored.  Fields are
    additionally stored the first time ||grad u|| / g_ref exceeds each entry
    of ``snapshot_growth``.  ``res_tol`` bounds h ||grad u|| / ||u||, the
    mean grid wavenumber, for a state to count as resolved.  ``phase_tol``
    caps the largest nonlinear phase increment of one step.
    """

    dt0: float = 1e-3
    t_end: float = 1.0
    g_ref: float | None = None
    dt_floor: float = 1e-12
    grad_cap: float = 100.0
    sample_every: int = 10
    ball_radii: tuple[float, ...] = ()
    virial_cutoffs: tuple = ()
    snapshot_times: tuple[float, ...] = ()
    snapshot_growth: tuple[float, ...] = ()
    res_tol: float = 0.15
    phase_tol: float = 0.02
    max_steps: int = 50_000_000

    def __post_init__(self):
        if not (self.dt0 > self.dt_floor > 0):
            raise ParameterError("step controls must satisfy dt0 > dt_floor > 0")
        if not self.grad_cap > 1:
            raise ParameterError("grad_cap must satisfy grad_cap > 1")
        if not self.t_end >= 0:
            raise ParameterError("t_end must satisfy t_end ≥ 0")
        if not self.phase_tol > 0:
            raise ParameterError("phase_tol must satisfy phase_tol > 0")
        if self.sample_every < 1:
            raise ParameterError("sample_every must be a positive integer")


@dataclass
class EvolutionLog:
    """Time series of monitored quantities plus stored snapshots."""

    columns: list[str]
    rows: list[tuple] = field(default_factory=list)
    snapshots: list[tuple[float, RadialField]] = field(default_factory=list)
    growth_snapshots: list[tuple[float, float, RadialField]] = field(default_factory=list)

    def column(self, name: str) -> np.ndarray:
        i = self.columns.index(name)
        return np.array([row[i] for row in self.rows])

    @property
    def t(self) -> np.ndarray:
        return self.column("t")

    def to_csv(self, path: str | Path) -> None:
        with Path(path).open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(self.columns)
            for row in self.rows:
                w.writerow([repr(float(x)) for x in row])


@dataclass(frozen=True)
class BlowupReport:
    blew_up: bool
    t_stop: float
    grad_growth: float
    fitted_T: float
    resolution_ok: bool
    mass_drift: float
    energy_drift: float
    steps: int

    def as_dict(self) -> dict:
        return dict(self.__dict__)


class Stepper:
    """Precomputed split-step operators for a coefficient (or the free flow)."""

    def __init__(self, d: Domain, c: Coefficient | None = None):
        self.domain = d
        self.lower, self.diag, self.upper = laplacian_bands(d)
        self.pw = (4.0 - 2.0 * d.b) / d.N
        if c is None:
            self.pot = np.zeros(d.n)
        else:
            _check_same(d, c.domain)
            # cell average of k r^-b so the split flow matches the discrete energy
            self.pot = c.k * d.cell_weight / d.cell_volume
        self._buf = np.empty(d.n, dtype=np.complex128)

    def phase(self, u: np.ndarray, dt: float) -> np.ndarray:
        return K.phase_rotate(u, dt, self.pot, self.pw, np.empty_like(u))

    def linear(self, u: np.ndarray, dt: float) -> np.ndarray:
        if dt == 0.0:
            return u.copy()
        return K.cayley_step(u, 0.5 * dt, self.lower, self.diag, self.upper, np.empty_like(u))

    def strang(self, u: np.ndarray, dt: float) -> np.ndarray:
        u = K.phase_rotate(u, 0.5 * dt, self.pot, self.pw, self._buf)
        u = K.cayley_step(u, 0.5 * dt, self.lower, self.diag, self.upper, np.empty_like(u))
        return K.phase_rotate(u, 0.5 * dt, self.pot, self.pw, u)

    def max_rotation_rate(self, u: np.ndarray) -> float:
        """Largest local frequency of the nonlinear phase rotation."""
        return float(np.max(self.pot * np.abs(u) ** self.pw))

    def grad2(self, u: np.ndarray) -> float:
        d = self.domain
        return d.omega * K.dirichlet_form(u, d.face_area, d.h)

    def mass2(self, u: np.ndarray) -> float:
        d = self.domain
        return d.omega * float(np.dot(u.real**2 + u.imag**2, d.cell_volume))

    def energy(self, u: np.ndarray) -> float:
        d = self.domain
        pot = d.omega * float(np.dot(self.pot * d.cell_volume, np.abs(u) ** d.sigma)) / d.sigma
        return 0.5 * self.grad2(u) - pot


def nonlinear_phase_step(u: RadialField, dt: float, c: Coefficient) -> RadialField:
    """Exact flow of i u_t + k |x|^-b |u|^p u = 0 over time dt.

    The weight |x|^-b is averaged over each grid cell.
    """
    st = Stepper(u.domain, c)
    return RadialField(st.phase(np.array(u.values), dt), u.domain)


def linear_step(u: RadialField, dt: float) -> RadialField:
    """One Crank-Nicolson step of i u_t + Δu = 0."""
    st = Stepper(u.domain)
    return RadialField(st.linear(np.array(u.values), dt), u.domain)


def fit_blowup_time(t: np.ndarray, g: np.ndarray, frac: float = 0.1) -> float:
    """Blow-up time from a linear fit of 1/||grad u|| against t.

    Uses the samples with ||grad u|| above ``frac`` times its final value.
    """
    t = np.asarray(t, float)
    g = np.asarray(g, float)
    sel = g >= frac * g[-1]
    if np.count_nonzero(sel) < 4:
        return math.nan
    y = 1.0 / g[sel]
    slope, icpt = np.polyfit(t[sel], y, 1)
    if slope >= 0:
        return math.nan
    return float(-icpt / slope)


def _ball_masses(u: np.ndarray, d: Domain, radii) -> list[float]:
    a = (u.real**2 + u.imag**2) * d.cell_volume
    cum = np.cumsum(a) * d.omega
    out = []
    for rho in radii:
        j = np.searchsorted(d.r, rho, side="right")
        out.append(float(cum[j - 1]) if j > 0 else 0.0)
    return out


def evolve(
    u0: RadialField, c: Coefficient, ctl: StepControls
) -> tuple[RadialField, EvolutionLog, BlowupReport]:
    """Integrate from t = 0 to ``ctl.t_end`` or until blow-up is declared.

    The step is dt = dt0 min(1, (g_ref / ||grad u||)^2), further limited so
    that no cell rotates by more than ``phase_tol`` in the nonlinear
    sub-step, and clipped so that every requested snapshot time is hit
    exactly.  The run stops when the
    gradient norm reaches ``grad_cap * g_ref`` or the state leaves the
    resolved regime (``res_tol``).
    """
    from .virial import z_weight_values

    d = u0.domain
    _check_same(d, c.domain)
    if c.k0 <= 0:
        warnings.warn("coefficient violates k(0) > 0", RuntimeWarning, stacklevel=2)
    st = Stepper(d, c)
    u = np.array(u0.values)
    g_ref = ctl.g_ref if ctl.g_ref is not None else math.sqrt(st.grad2(u))
    if not g_ref > 0:
        raise DiagnosticError("reference gradient norm must be positive")
    m0 = st.mass2(u)
    e0 = st.energy(u)
    kin0 = 0.5 * st.grad2(u)
    cols = ["t", "mass2", "energy", "grad2", "dt"]
    cols += [f"ball_{rho:g}" for rho in ctl.ball_radii]
    cols += [f"z_{w.R:g}" for w in ctl.virial_cutoffs]
    log = EvolutionLog(cols)
    snaps = sorted(x for x in ctl.snapshot_times if 0.0 <= x <= ctl.t_end)
    levels = sorted(ctl.snapshot_growth)

    def record(t, dt, G):
        row = [t, st.mass2(u), st.energy(u), G, dt]
        row += _ball_masses(u, d, ctl.ball_radii)
        row += [z_weight_values(u, w) for w in ctl.virial_cutoffs]
        log.rows.append(tuple(row))

    t = 0.0
    steps = 0
    dt = 0.0
    G = st.grad2(u)
    if snaps and snaps[0] == 0.0:
        log.snapshots.append((0.0, RadialField(u.copy(), d)))
        snaps.pop(0)
    record(t, dt, G)
    resolved = True
    capped = False
    eps_t = 1e-14 * max(1.0, ctl.t_end)
    while True:
        g = math.sqrt(G)
        if g / g_ref >= ctl.grad_cap:
            capped = True
            break
        if d.h * g / math.sqrt(m0) > ctl.res_tol:
            resolved = False
            break
        if t >= ctl.t_end - eps_t or steps >= ctl.max_steps:
            break
        dt = ctl.dt0 * min(1.0, (g_ref / g) ** 2)
        rot = st.max_rotation_rate(u)
        if rot * dt > ctl.phase_tol:
            dt = ctl.phase_tol / rot
        if dt < ctl.dt_floor:
            rep = _report(False, t, g / g_ref, log, False, m0, e0, kin0, steps, st, u)
            raise UnresolvedSingularityError(
                f"unresolved singular behavior: dt={dt:.2e} below floor at t={t:.6g}",
                field=RadialField(u, d), log=log, report=rep,
            )
        target = snaps[0] if snaps else ctl.t_end
        landed = False
        if t + dt >= target - eps_t:
            dt = target - t
            landed = True
        u = st.strang(u, dt)
        steps += 1
        t = target if landed else t + dt
        G = st.grad2(u)
        if not math.isfinite(G):
            raise UnresolvedSingularityError(f"non-finite state at t={t:.6g}", log=log)
        snap_now = landed and snaps and abs(t - snaps[0]) <= eps_t
        if snap_now:
            log.snapshots.append((t, RadialField(u.copy(), d)))
            snaps.pop(0)
        while levels and math.sqrt(G) / g_ref >= levels[0]:
            log.growth_snapshots.append((t, math.sqrt(G), RadialField(u.copy(), d)))
            levels.pop(0)
        if snap_now or steps % ctl.sample_every == 0:
            record(t, dt, G)
    if log.rows[-1][0] != t:
        record(t, dt, G)
    field_ = RadialField(u, d)
    rep = _report(capped, t, math.sqrt(G) / g_ref, log, resolved, m0, e0, kin0, steps, st, u)
    return field_, log, rep


def _report(capped, t, growth, log, resolved, m0, e0, kin0, steps, st, u) -> BlowupReport:
    m = st.mass2(u)
    e = st.energy(u)
    drift = abs(m - m0) / m0
    # near-zero energies are measured against a small fraction of the kinetic term
    e_scale = max(abs(e0), 1e-3 * kin0, 1e-300)
    ok = resolved and drift < 1e-8
    fitted = math.nan
    if capped:
        fitted = fit_blowup_time(log.t, np.sqrt(log.column("grad2")))
    return BlowupReport(
        blew_up=bool(capped and ok),
        t_stop=float(t),
        grad_growth=float(growth),
        fitted_T=fitted,
        resolution_ok=bool(ok),
        mass_drift=float(drift),
        energy_drift=float(abs(e - e0) / e_scale),
        steps=steps,
    )


def free_propagator(f: RadialField, t: float, dt0: float = 1e-2) -> RadialField:
    """S(t) f by Crank-Nicolson steps no longer than ``dt0`` (t may be negative)."""
    if t == 0.0:
        return f
    st = Stepper(f.domain)
    nsteps = max(1, math.ceil(abs(t) / dt0 - 1e-12))
    dt = t / nsteps
    u = np.array(f.values)
    for _ in range(nsteps):
        u = st.linear(u, dt)
    return RadialField(u, f.domain)


def _dispersive_slope(g0: RadialField, b: float, times: Sequence[float], dt0: float, guard: float):
    times = sorted(times)
    if len(times) < 2:
        raise DiagnosticError("dispersive check needs at least two times")
    if min(times) < 1.0 or max(times) > 100.0:
        raise ParameterError("dispersive check times must lie in [1, 100]")
    d = g0.domain
    m_tot = mass_norm(g0)
    if m_tot == 0.0:
        raise DiagnosticError("zero field: weighted norm vanishes and the exponent is undefined")
    sigma = sigma_of(d.N, b)
    outer = d.r > 0.9 * d.r_max
    st = Stepper(d)
    u = np.array(g0.values)
    t = 0.0
    norms = []
    for target in times:
        n = max(1, math.ceil((target - t) / dt0 - 1e-12))
        dt = (target - t) / n
        for _ in range(n):
            u = st.linear(u, dt)
        t = target
        a2 = u.real**2 + u.imag**2
        leak = d.omega * float(np.dot(a2[outer], d.cell_volume[outer])) / m_tot
        if leak > guard:
            raise DomainTooSmallError(
                f"domain too small: mass fraction {leak:.2e} beyond 0.9 r_max at t={t:g}"
            )
        w = integrate_radial(np.abs(u) ** sigma, d, power=-b)
        norms.append(w ** (1.0 / sigma))
    norms = np.array(norms)
    slope = float(np.polyfit(np.log(times), np.log(norms), 1)[0])
    return slope, np.array(times), norms


def dispersive_check(
    f: RadialField,
    b: float,
    times: Sequence[float],
    dt0: float = 0.01,
    guard: float = 1e-6,
    return_norms: bool = False,
):
    """Fitted decay exponent of ||S(t)[|x|^-b |f|^(sigma-1)]|| in L^sigma_b.

    The contract is slope ≤ -2/sigma_b + 0.05.
    """
    d = f.domain
    sigma = sigma_of(d.N, b)
    g = RadialField(d.r ** (-b) * np.abs(f.values) ** (sigma - 1.0), d)
    slope, ts, norms = _dispersive_slope(g, b, times, dt0, guard)
    return (slope, ts, norms) if return_norms else slope


def dispersive_check_bilinear(
    u: RadialField,
    v: RadialField,
    b: float,
    times: Sequence[float],
    dt0: float = 0.01,
    guard: float = 1e-6,
    return_norms: bool = False,
):
    """Same harness with g = |x|^-b |u|^(sigma-2) v."""
    d = u.domain
    _check_same(d, v.domain)
    sigma = sigma_of(d.N, b)
    g = RadialField(d.r ** (-b) * np.abs(u.values) ** (sigma - 2.0) * v.values, d)
    slope, ts, norms = _dispersive_slope(g, b, times, dt0, guard)
    return (slope, ts, norms) if return_norms else slope
