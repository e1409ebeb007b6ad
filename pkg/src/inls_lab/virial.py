"""Localized virial weight and the second-derivative identity for z_R.

The weight is phi_R(x) = R^2 phi(|x| / R) with phi(r) = int_0^r v(s) ds and

    v(s) = 2s                      on [0, 1]
    v(s) = 2s - 2(s - 1)^l         on (1, s_J],  s_J = 1 + (1/l)^(1/(l-1))
    v(s) = quintic, decreasing     on (s_J, 2)
    v(s) = 0                       on [2, inf)

The quintic matches v, v' = 0 and v'' at s_J and vanishes to second order
at s = 2, so v is C^2 and Δ^2 phi is bounded.  Every derivative is
evaluated from these closed forms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numpy.polynomial import Polynomial

from .domain import (
    Coefficient,
    Domain,
    RadialField,
    _check_same,
    face_gradient,
    face_weights,
    integrate_radial,
)
from .errors import DiagnosticError, ParameterError

__all__ = [
    "VirialCutoff",
    "VirialTerms",
    "build_cutoff",
    "cutoff_profile",
    "z_weight",
    "z_weight_values",
    "virial_terms",
    "verify_virial",
    "phi0_decomposition",
]


def _junction(l: int) -> float:
    return 1.0 + (1.0 / l) ** (1.0 / (l - 1))


def _quintic(l: int) -> tuple[Polynomial, float]:
    """Quintic in t = s - s_J on [0, 2 - s_J]."""
    sJ = _junction(l)
    L = 2.0 - sJ
    va = 2.0 * sJ - 2.0 * (sJ - 1.0) ** l
    c2 = -l * (l - 1) * (sJ - 1.0) ** (l - 2)  # v''(s_J)/2
    M = np.array(
        [[L**3, L**4, L**5], [3 * L**2, 4 * L**3, 5 * L**4], [6 * L, 12 * L**2, 20 * L**3]]
    )
    rhs = -np.array([va + c2 * L**2, 2.0 * c2 * L, 2.0 * c2])
    c3, c4, c5 = np.linalg.solve(M, rhs)
    P = Polynomial([va, 0.0, c2, c3, c4, c5])
    # P' = t (t - L)^2 q(t) with q linear, so P is strictly decreasing on
    # (0, L) iff q < 0 at both ends
    q, rem = divmod(P.deriv(), Polynomial([0.0, 1.0]) * Polynomial([-L, 1.0]) ** 2)
    assert q.degree() <= 1 and np.max(np.abs(rem.coef)) < 1e-8 * np.max(np.abs(P.coef))
    assert q(0.0) < 0.0 and q(L) < 0.0, "cutoff interpolant is not monotone"
    return P, sJ


def cutoff_profile(s: np.ndarray, l: int) -> dict[str, np.ndarray]:
    """phi, v = phi', v', v'', v''' at unscaled radii ``s``."""
    s = np.asarray(s, dtype=float)
    P, sJ = _quintic(l)
    Pi = P.integ()
    phi_J = sJ**2 - 2.0 * (sJ - 1.0) ** (l + 1) / (l + 1)
    phi_end = phi_J + Pi(2.0 - sJ)
    out = {key: np.zeros_like(s) for key in ("phi", "v", "dv", "d2v", "d3v")}
    a = s <= 1.0
    out["phi"][a] = s[a] ** 2
    out["v"][a] = 2.0 * s[a]
    out["dv"][a] = 2.0
    b = (s > 1.0) & (s <= sJ)
    x = s[b] - 1.0
    out["phi"][b] = s[b] ** 2 - 2.0 * x ** (l + 1) / (l + 1)
    out["v"][b] = 2.0 * s[b] - 2.0 * x**l
    out["dv"][b] = 2.0 - 2.0 * l * x ** (l - 1)
    out["d2v"][b] = -2.0 * l * (l - 1) * x ** (l - 2)
    out["d3v"][b] = -2.0 * l * (l - 1) * (l - 2) * x ** (l - 3) if l > 2 else 0.0
    c = (s > sJ) & (s < 2.0)
    t = s[c] - sJ
    out["phi"][c] = phi_J + Pi(t)
    out["v"][c] = P(t)
    out["dv"][c] = P.deriv(1)(t)
    out["d2v"][c] = P.deriv(2)(t)
    out["d3v"][c] = P.deriv(3)(t)
    out["phi"][s >= 2.0] = phi_end
    return out


def _scaled(r: np.ndarray, l: int, R: float, N: int) -> dict[str, np.ndarray]:
    p = cutoff_profile(r / R, l)
    w = R * p["v"]  # d phi_R / dr
    w1 = p["dv"]
    w2 = p["d2v"] / R
    w3 = p["d3v"] / R**2
    bil = w3 + 2.0 * (N - 1) * w2 / r + (N - 1) * (N - 3) * (w1 / r**2 - w / r**3)
    bil[r <= R] = 0.0  # phi_R = |x|^2 there
    # radial derivative of the Laplacian, continuous since v is C^2
    dlap = w2 + (N - 1) * (w1 / r - w / r**2)
    dlap[r <= R] = 0.0
    return {
        "phi": R**2 * p["phi"],
        "dphi": w,
        "d2phi": w1,
        "lap": w1 + (N - 1) * w / r,
        "bilap": bil,
        "dlap": dlap,
    }


@dataclass(frozen=True, eq=False)
class VirialCutoff:
    """phi_R and its derivatives tabulated on the nodes and faces of a domain."""

    l: int
    R: float
    domain: Domain
    r_junction: float = field(init=False)
    phi: np.ndarray = field(init=False, repr=False)
    dphi: np.ndarray = field(init=False, repr=False)
    d2phi: np.ndarray = field(init=False, repr=False)
    lap: np.ndarray = field(init=False, repr=False)
    bilap: np.ndarray = field(init=False, repr=False)
    face_dphi: np.ndarray = field(init=False, repr=False)
    face_d2phi: np.ndarray = field(init=False, repr=False)
    face_dlap: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        d = self.domain
        set_ = object.__setattr__
        set_(self, "r_junction", _junction(self.l))
        node = _scaled(d.r, self.l, self.R, d.N)
        for key in ("phi", "dphi", "d2phi", "lap", "bilap"):
            set_(self, key, node[key])
        face = _scaled(d.face_r, self.l, self.R, d.N)
        set_(self, "face_dphi", face["dphi"])
        set_(self, "face_d2phi", face["d2phi"])
        set_(self, "face_dlap", face["dlap"])


def build_cutoff(l: int, R: float, d: Domain) -> VirialCutoff:
    """Tabulate phi_R with shape parameter ``l > 2/b`` at scale ``R``."""
    if int(l) != l or l < 2:
        raise ParameterError(f"l must be an integer ≥ 2 (got {l!r})")
    if d.b <= 0.0 or not l > 2.0 / d.b:
        raise ParameterError(f"l must satisfy l > 2/b (got l={l}, b={d.b})")
    if not R > 0:
        raise ParameterError(f"R must satisfy R > 0 (got {R!r})")
    return VirialCutoff(int(l), float(R), d)


def z_weight_values(u: np.ndarray, w: VirialCutoff) -> float:
    d = w.domain
    return d.omega * float(np.dot(w.phi * (u.real**2 + u.imag**2), d.cell_volume))


def z_weight(u: RadialField, w: VirialCutoff) -> float:
    """z_R = int phi_R |u|^2 dx."""
    _check_same(u.domain, w.domain)
    return integrate_radial(w.phi * u.abs2, u.domain)


@dataclass(frozen=True)
class VirialTerms:
    e_term: float
    K1: float
    K2: float
    K3: float
    K4: float
    K1_gradient: float
    K1_radial: float

    @property
    def rhs(self) -> float:
        return self.e_term + self.K1 + self.K2 + self.K3 + self.K4

    def as_dict(self) -> dict:
        d = dict(self.__dict__)
        d["rhs"] = self.rhs
        return d


def _face_int(g: np.ndarray, d: Domain) -> float:
    return float(d.omega * np.dot(g, face_weights(d)))


def virial_terms(u: RadialField, u0_energy: float, c: Coefficient, w: VirialCutoff) -> VirialTerms:
    """Right-hand side of z_R'' = 16 E + K1 + K2 + K3 + K4 for a radial field."""
    d = u.domain
    _check_same(d, c.domain)
    _check_same(d, w.domain)
    N, b, sigma = d.N, d.b, d.sigma
    rf, du = face_gradient(u)
    g2 = du.real**2 + du.imag**2
    k1a = -4.0 * _face_int((2.0 - w.face_dphi / rf) * g2, d)
    k1b = -4.0 * _face_int((w.face_dphi / rf - w.face_d2phi) * g2, d)
    r = d.r
    dens = np.abs(u.values) ** sigma
    Phi = (2.0 - b) * (2.0 - w.d2phi) + (2.0 * N - 2.0 + b) * (2.0 - w.dphi / r)
    k2 = 2.0 / (N + 2.0 - b) * integrate_radial(Phi * c.k * dens, d, power=-b)
    # -int |u|^2 Δ^2 phi after one integration by parts; Δ^2 phi jumps with
    # v''', so a pointwise rule on it is only first order
    a2 = u.abs2
    da2 = np.empty(d.n)
    da2[:-1] = np.diff(a2) / d.h
    da2[-1] = -2.0 * a2[-1] / d.h
    k3 = _face_int(da2 * w.face_dlap, d)
    if c.is_constant:
        k4 = 0.0
    else:
        k4 = 2.0 * N / (N + 2.0 - b) * integrate_radial(r * c.dk * (w.dphi / r) * dens, d, power=-b)
    return VirialTerms(16.0 * u0_energy, k1a + k1b, k2, k3, k4, k1a, k1b)


@dataclass(frozen=True)
class VirialCheck:
    max_relative_mismatch: float
    times: np.ndarray
    z: np.ndarray
    z_fd: np.ndarray
    rhs: np.ndarray
    terms: list


def verify_virial(
    snapshots: Sequence[tuple[float, RadialField]],
    c: Coefficient,
    w: VirialCutoff,
    u0_energy: float,
    detail: bool = False,
):
    """Compare the centred second difference of z_R with 16 E + sum K.

    ``snapshots`` are (t, field) pairs at uniformly spaced times, e.g. the
    ``snapshots`` attribute of an :class:`EvolutionLog`.  The mismatch is
    relative to the largest |16 E + sum K| over the interior times.
    """
    if len(snapshots) < 5:
        raise DiagnosticError("virial verification needs at least 5 snapshots")
    t = np.array([s[0] for s in snapshots])
    dts = np.diff(t)
    if np.max(np.abs(dts - dts.mean())) > 1e-9 * max(1.0, abs(t[-1])):
        raise DiagnosticError("snapshots must be uniformly spaced in time")
    dt = dts.mean()
    z = np.array([z_weight(f, w) for _, f in snapshots])
    fd = (z[2:] - 2.0 * z[1:-1] + z[:-2]) / dt**2
    terms = [virial_terms(f, u0_energy, c, w) for _, f in snapshots[1:-1]]
    rhs = np.array([x.rhs for x in terms])
    scale = float(np.max(np.abs(rhs)))
    if scale == 0.0:
        scale = 1.0
    mism = float(np.max(np.abs(fd - rhs)) / scale)
    if detail:
        return VirialCheck(mism, t[1:-1], z[1:-1], fd, rhs, terms)
    return mism


def phi0_decomposition(
    u: RadialField,
    c: Coefficient,
    l0: float,
    u0_energy: float,
    l: int,
    z0_fd: float | None = None,
) -> dict:
    """Every summand of the exterior gradient control at R = l0/4.

    With phi_0 = phi_R, R = l0/4, the identity reads

        4 int (2 - phi_0'/r)|grad u|^2 = 16 E - z_0'' - int |u|^2 Δ^2 phi_0
            - 4 int (phi_0'/r - phi_0'') |u_r|^2
            + 2/(N+2-b) int Phi_0 k |x|^-b |u|^sigma + K_4,

    and the left side bounds 8 int_{|x| ≥ l0/2} |grad u|^2.  ``z0_fd`` is a
    finite-difference value of z_0''; without it z_0'' is taken from the
    identity itself and the residual is zero by construction.
    """
    d = u.domain
    w = build_cutoff(l, 0.25 * l0, d)
    terms = virial_terms(u, u0_energy, c, w)
    rf, du = face_gradient(u)
    g2 = du.real**2 + du.imag**2
    outer = _face_int(np.where(rf >= 0.5 * l0, 8.0 * g2, 0.0), d)
    lhs = -terms.K1_gradient
    z2 = terms.rhs if z0_fd is None else z0_fd
    rhs = terms.e_term - z2 + terms.K3 + terms.K1_radial + terms.K2 + terms.K4
    parts = {
        "exterior_gradient": outer,
        "weighted_gradient": lhs,
        "energy_term": terms.e_term,
        "z0_second_derivative": z2,
        "bilaplacian_term": terms.K3,
        "radial_term": terms.K1_radial,
        "phi0_term": terms.K2,
        "k_gradient_term": terms.K4,
    }
    scale = max(abs(v) for v in parts.values()) or 1.0
    r = d.r
    N, b = d.N, d.b
    Phi = (2.0 - b) * (2.0 - w.d2phi) + (2.0 * N - 2.0 + b) * (2.0 - w.dphi / r)
    parts.update(
        identity_residual=abs(lhs - rhs) / scale,
        exterior_bounded=bool(outer <= lhs * (1.0 + 1e-12) + 1e-300),
        dphi_outside_max=float(np.max(np.abs(w.dphi[r > 0.5 * l0]), initial=0.0)),
        Phi0_inside_max=float(np.max(np.abs(Phi[r <= 0.25 * l0]), initial=0.0)),
        finite=bool(all(math.isfinite(v) for v in (outer, lhs, rhs))),
    )
    return parts
