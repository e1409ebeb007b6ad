"""Positive radial ground states by shooting and bisection.

The profile solves  Q'' + (N-1)/r Q' - Q + k r^-b Q^(1+p) = 0,  p = (4-2b)/N,
with Q'(0) = 0 and Q -> 0.  The ODE is integrated with classical RK4 on a
mesh that contains every grid node, starts from a regular series expansion
very close to the origin and is graded geometrically so that the step never
exceeds a small fraction of r.  Bisection on Q(0) runs to adjacent floating
point numbers; past the radius where the two bracketing trajectories
separate, the profile is continued by the decaying solution of the
linearised equation.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import integrate, special
from scipy.interpolate import CubicHermiteSpline

from . import _kernels as K
from .domain import Domain, RadialField, grad_norm, mass_norm, sigma_of
from .errors import DiagnosticError, NoBracketError, ParameterError, UnderResolutionError

__all__ = [
    "GroundState",
    "solve_ground_state",
    "pohozaev_residuals",
    "decay_rate",
    "load_or_solve",
    "CACHE_ENV",
]

CACHE_ENV = "INLS_LAB_CACHE"
TRUNCATION = 1e-14
_GRADING = 0.005  # maximal step / r near the origin
_SPLIT = 1e-6  # relative separation of the bracketing trajectories at the cut


def _shooting_mesh(d: Domain) -> tuple[np.ndarray, np.ndarray]:
    """Fine mesh through every node and the index of each node in it."""
    h = d.h
    r0 = d.r[0]
    rs = r0 * 1e-4
    ng = int(math.ceil(math.log(r0 / rs) / math.log1p(_GRADING)))
    pieces = [rs * (r0 / rs) ** (np.arange(ng) / ng)]
    counts = np.maximum(4, np.ceil(h / (_GRADING * d.r[:-1]))).astype(int)
    node_idx = np.empty(d.n, dtype=np.int64)
    node_idx[0] = ng
    pos = ng
    for j in range(d.n - 1):
        m = counts[j]
        pieces.append(d.r[j] + h * np.arange(m) / m)
        pos += m
        node_idx[j + 1] = pos
    pieces.append(d.r[-1:])
    mesh = np.concatenate(pieces)
    return mesh, node_idx


def _tail_shape(r: np.ndarray, N: int):
    """Decaying solution r^-nu K_nu(r) of Q'' + (N-1)/r Q' = Q, scaled by e^r."""
    nu = N / 2.0 - 1.0
    val = r ** (-nu) * special.kve(nu, r)
    der = -(r ** (-nu)) * special.kve(nu + 1.0, r)
    return val, der


@dataclass(frozen=True, eq=False)
class GroundState:
    """Ground state Q_k with its integral invariants.

    ``mass2``, ``grad2`` and ``weighted`` are integrals over R^N computed on
    the fine shooting mesh, so they do not carry the O(h^2) error of the
    evolution grid.  ``profile`` is Q sampled on the grid nodes.
    """

    k: float
    domain: Domain
    profile: RadialField
    mass2: float
    grad2: float
    weighted: float
    theta: float
    theta_residual: float
    shoot_value: float
    residual: float
    r_cut: float
    r_trunc: float
    bracket: tuple[float, float]
    _spline: CubicHermiteSpline = field(repr=False)
    _mesh_start: float = field(repr=False)
    _tail_anchor: tuple[float, float] = field(repr=False)

    @property
    def N(self) -> int:
        return self.domain.N

    @property
    def b(self) -> float:
        return self.domain.b

    @property
    def sigma(self) -> float:
        return self.domain.sigma

    @property
    def energy(self) -> float:
        return 0.5 * self.grad2 - self.k * self.weighted / self.sigma

    @property
    def norm(self) -> float:
        return math.sqrt(self.mass2)

    def evaluate(self, r, derivative: bool = False) -> np.ndarray:
        """Q (or Q') at arbitrary radii, zero beyond the truncation radius."""
        r = np.asarray(r, dtype=float)
        out = np.zeros_like(r)
        rs = self._mesh_start
        inner = r < rs
        if np.any(inner):
            vals = np.array(
                [K.series_start(self.shoot_value, x, self.k, self.b, self.N) for x in np.maximum(r[inner], 1e-300)]
            )
            out[inner] = vals[:, 1 if derivative else 0]
        mid = (r >= rs) & (r <= self.r_cut)
        if np.any(mid):
            out[mid] = self._spline(r[mid], 1 if derivative else 0)
        tail = (r > self.r_cut) & (r < self.r_trunc)
        if np.any(tail):
            qc, sc = self._tail_anchor
            val, der = _tail_shape(r[tail], self.N)
            f = (der if derivative else val) / sc * np.exp(-(r[tail] - self.r_cut))
            out[tail] = qc * f
        return out


def _hermite_trapezoid(x, f, df):
    dx = np.diff(x)
    return float(np.sum(0.5 * dx * (f[1:] + f[:-1]) + dx**2 / 12.0 * (df[:-1] - df[1:])))


def _classify(q0, mesh, k, b, N, bq, bp):
    status, last = K.shoot(q0, mesh, k, b, N, bq, bp)
    return status, last


def _bracket(mesh, k, b, N):
    """Scan [1e-3, 1e3] for an undershoot/overshoot pair."""
    bq = np.empty_like(mesh)
    bp = np.empty_like(mesh)
    grid = np.logspace(-3, 3, 61)
    prev = None
    for q0 in grid:
        s, _ = _classify(q0, mesh, k, b, N, bq, bp)
        if prev is not None and prev[1] == K.UNDERSHOOT and s == K.OVERSHOOT:
            return prev[0], q0
        prev = (q0, s)
    raise NoBracketError(
        f"no ground state bracket in [1e-3, 1e3] for N={N}, b={b}, k={k}"
    )


def _bisect(lo, hi, mesh, k, b, N):
    bq = np.empty_like(mesh)
    bp = np.empty_like(mesh)
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        s, _ = _classify(mid, mesh, k, b, N, bq, bp)
        if s == K.OVERSHOOT:
            hi = mid
        else:
            lo = mid
    return lo, hi


def _build(k: float, d: Domain, lo: float, hi: float, tol: float) -> GroundState:
    N, b = d.N, d.b
    mesh, node_idx = _shooting_mesh(d)
    ql, pl = np.empty_like(mesh), np.empty_like(mesh)
    qh, ph = np.empty_like(mesh), np.empty_like(mesh)
    _, last_l = K.shoot(lo, mesh, k, b, N, ql, pl)
    _, last_h = K.shoot(hi, mesh, k, b, N, qh, ph)
    last = min(last_l, last_h)
    q = 0.5 * (ql[: last + 1] + qh[: last + 1])
    p = 0.5 * (pl[: last + 1] + ph[: last + 1])
    split = np.abs(qh[: last + 1] - ql[: last + 1]) > _SPLIT * np.abs(q)
    bad = np.flatnonzero(split | (q <= 0) | (p >= 0))
    cut = (bad[0] - 1) if bad.size else last
    cut = max(cut, 8)
    x = mesh[: cut + 1]
    q = q[: cut + 1]
    p = p[: cut + 1]
    q0 = 0.5 * (lo + hi)

    residual = K.step_defect(x, q, p, cut, k, b, N, q0)
    if residual > 100.0 * tol:
        raise UnderResolutionError(
            f"ground-state ODE residual {residual:.3e} exceeds 100*tol={100 * tol:.1e}; refine the grid"
        )

    r_cut = float(x[-1])
    qc = float(q[-1])
    val_c, _ = _tail_shape(np.array([r_cut]), N)
    sc = float(val_c[0])
    # truncation radius: tail value reaches TRUNCATION
    def tail_val(r):
        v, _ = _tail_shape(np.atleast_1d(r), N)
        return qc * v[0] / sc * math.exp(-(r - r_cut))

    if qc <= TRUNCATION:
        r_trunc = r_cut
    else:
        hi_r = r_cut + 1.0
        while tail_val(hi_r) > TRUNCATION:
            hi_r = r_cut + 2.0 * (hi_r - r_cut)
        from scipy.optimize import brentq

        r_trunc = brentq(lambda r: tail_val(r) - TRUNCATION, r_cut, hi_r, xtol=1e-12)

    # second derivative from the equation for the Hermite corrections
    pw = (4.0 - 2.0 * b) / N
    q2 = q - k * x ** (-b) * q ** (1.0 + pw) - (N - 1) * p / x
    spline = CubicHermiteSpline(x, q, p)
    sigma = sigma_of(N, b)
    omega = d.omega

    fm = x ** (N - 1) * q**2
    dfm = (N - 1) * x ** (N - 2) * q**2 + 2.0 * x ** (N - 1) * q * p
    fg = x ** (N - 1) * p**2
    dfg = (N - 1) * x ** (N - 2) * p**2 + 2.0 * x ** (N - 1) * p * q2
    fw = x ** (N - 1 - b) * q**sigma
    dfw = (N - 1 - b) * x ** (N - 2 - b) * q**sigma + sigma * x ** (N - 1 - b) * q ** (sigma - 1) * p
    rs = x[0]
    mass2 = _hermite_trapezoid(x, fm, dfm) + q0**2 * rs**N / N
    grad2 = _hermite_trapezoid(x, fg, dfg)
    weighted = _hermite_trapezoid(x, fw, dfw) + q0**sigma * rs ** (N - b) / (N - b)

    if r_trunc > r_cut:
        def tail(r, which):
            v, dv = _tail_shape(np.atleast_1d(r), N)
            e = qc / sc * math.exp(-(r - r_cut))
            qq, pp = v[0] * e, dv[0] * e
            if which == 0:
                return r ** (N - 1) * qq**2
            if which == 1:
                return r ** (N - 1) * pp**2
            return r ** (N - 1 - b) * qq**sigma

        for which in range(3):
            val, _ = integrate.quad(tail, r_cut, r_trunc, args=(which,), epsabs=0.0, epsrel=1e-10, limit=200)
            if which == 0:
                mass2 += val
            elif which == 1:
                grad2 += val
            else:
                weighted += val

    # profile on the grid nodes
    nodes = d.r
    prof = np.zeros(d.n)
    inside = np.flatnonzero(node_idx <= cut)
    prof[inside] = q[node_idx[inside]]
    g = GroundState(
        k=k, domain=d, profile=RadialField(prof, d),
        mass2=omega * mass2, grad2=omega * grad2, weighted=omega * weighted,
        theta=math.nan, theta_residual=math.nan, shoot_value=q0, residual=residual,
        r_cut=r_cut, r_trunc=r_trunc, bracket=(lo, hi), _spline=spline,
        _mesh_start=float(rs), _tail_anchor=(qc, sc),
    )
    rest = nodes > r_cut
    if np.any(rest):
        prof[rest] = g.evaluate(nodes[rest])
        object.__setattr__(g, "profile", RadialField(prof, d))
    try:
        theta, res = decay_rate(g)
    except DiagnosticError:
        theta, res = math.nan, math.nan
    object.__setattr__(g, "theta", theta)
    object.__setattr__(g, "theta_residual", res)
    return g


def solve_ground_state(k: float, d: Domain, tol: float = 1e-9) -> GroundState:
    """Shoot for the positive radial ground state with coupling ``k``.

    ``tol`` bounds both the relative width of the final bracket on Q(0) and,
    through ``100 * tol``, the local ODE defect per unit length.
    """
    if not (math.isfinite(k) and k > 0):
        raise ParameterError(f"k must satisfy k > 0 (got {k!r})")
    if not (math.isfinite(tol) and tol > 0):
        raise ParameterError(f"tol must satisfy tol > 0 (got {tol!r})")
    mesh, _ = _shooting_mesh(d)
    lo, hi = _bracket(mesh, k, d.b, d.N)
    lo, hi = _bisect(lo, hi, mesh, k, d.b, d.N)
    if (hi - lo) > tol * hi:
        raise UnderResolutionError(f"bisection stalled at relative width {(hi - lo) / hi:.2e}")
    return _build(k, d, lo, hi, tol)


def pohozaev_residuals(g: GroundState) -> tuple[float, float, float]:
    """Relative defects of the two Pohozaev identities and of E_k[Q_k] = 0."""
    N, b = g.N, g.b
    res1 = abs(g.grad2 - N / (2.0 - b) * g.mass2) / g.mass2
    res2 = abs(g.k * g.weighted - (1.0 + N / (2.0 - b)) * g.mass2) / g.mass2
    res3 = abs(g.energy) / g.mass2
    return res1, res2, res3


def decay_rate(g: GroundState, window: tuple[float, float] | None = None) -> tuple[float, float]:
    """Least-squares slope of -log Q over a tail window, and the RMS misfit.

    The default window is [0.3, 0.7] times the radius where the profile ends
    (truncation or domain edge).
    """
    r = g.domain.r
    q = g.profile.values.real
    if window is None:
        r_end = min(g.r_trunc, g.domain.r_max)
        window = (0.3 * r_end, 0.7 * r_end)
    sel = (r >= window[0]) & (r <= window[1]) & (q > 0)
    if np.count_nonzero(sel) < 8:
        raise DiagnosticError("tail window is empty; enlarge the domain")
    x = r[sel]
    y = -np.log(q[sel])
    A = np.vstack([x, np.ones_like(x)]).T
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    fit = A @ coef
    return float(coef[0]), float(np.sqrt(np.mean((y - fit) ** 2)))


# -- disk cache ---------------------------------------------------------------


def _cache_dir() -> Path:
    base = os.environ.get(CACHE_ENV)
    if base:
        return Path(base)
    return Path.home() / ".cache" / "inls-lab"


def _cache_key(k: float, d: Domain) -> str:
    raw = json.dumps([d.N, d.b, k, d.n, d.r_max]).encode()
    return f"gs_N{d.N}_b{d.b:g}_k{k:g}_n{d.n}_r{d.r_max:g}_" + hashlib.sha1(raw).hexdigest()[:10]


def _grid_res1(profile: RadialField) -> float:
    d = profile.domain
    m = mass_norm(profile)
    return abs(grad_norm(profile) - d.N / (2.0 - d.b) * m) / m


def load_or_solve(k: float, d: Domain, tol: float = 1e-9, cache_dir: Path | str | None = None) -> GroundState:
    """Solve with an on-disk cache keyed by (N, b, k, n, r_max).

    The cache stores the profile as CSV (r, Q) and the final bracket in a
    JSON sidecar.  On a hit the state is rebuilt from the bracket and the
    grid Pohozaev defect is recomputed and compared with the stored CSV
    before the entry is trusted.
    """
    folder = Path(cache_dir) if cache_dir is not None else _cache_dir()
    stem = _cache_key(k, d)
    csv_path = folder / f"{stem}.csv"
    meta_path = folder / f"{stem}.json"
    if csv_path.exists() and meta_path.exists():
        try:
            meta = json.loads(meta_path.read_text())
            with csv_path.open() as fh:
                rows = list(csv.reader(fh))[1:]
            stored = RadialField(np.array([float(q) for _, q in rows]), d)
            if abs(_grid_res1(stored) - meta["grid_res1"]) <= 1e-9:
                g = _build(k, d, meta["bracket"][0], meta["bracket"][1], tol)
                if np.max(np.abs(g.profile.values - stored.values)) <= 1e-12:
                    return g
        except (OSError, ValueError, KeyError, IndexError, UnderResolutionError):
            pass
    g = solve_ground_state(k, d, tol)
    try:
        folder.mkdir(parents=True, exist_ok=True)
        with csv_path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["r", "Q"])
            for r, q in zip(d.r, g.profile.values.real):
                w.writerow([repr(float(r)), repr(float(q))])
        meta = {
            "N": d.N, "b": d.b, "k": k, "n": d.n, "r_max": d.r_max,
            "bracket": list(g.bracket), "grid_res1": _grid_res1(g.profile),
            "mass2": g.mass2, "grad2": g.grad2, "weighted": g.weighted,
        }
        meta_path.write_text(json.dumps(meta, indent=1))
    except OSError:
        pass
    return g
