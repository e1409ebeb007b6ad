"""Concentration diagnostics for focusing solutions: ball masses, the
rescaled profile and its H^1 distance to the ground state."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from ..domain import Domain, RadialField, face_gradient, face_weights, grad_norm, integrate_radial, mass_norm
from ..errors import DiagnosticError
from ..groundstate import GroundState

__all__ = [
    "ConcentrationReport",
    "ball_mass",
    "bump",
    "rescaled_profile",
    "h1_inner",
    "profile_distance",
    "concentration_report",
]


def ball_mass(u: RadialField, rho: float) -> float:
    """Mass of u in {|x| ≤ rho}, interpolating linearly in r^N inside the cut cell."""
    d = u.domain
    if rho <= 0.0:
        return 0.0
    cells = d.omega * u.abs2 * d.cell_volume
    if rho >= d.r_max:
        return float(np.sum(cells))
    j = int(rho // d.h)
    lo, hi = j * d.h, (j + 1) * d.h
    frac = (rho**d.N - lo**d.N) / (hi**d.N - lo**d.N)
    return float(np.sum(cells[:j]) + frac * cells[j])


def bump(r: np.ndarray, radius: float = 1.0) -> np.ndarray:
    """Smooth compactly supported psi with psi(0) = 1 and support |x| < radius."""
    s = np.asarray(r, dtype=float) / radius
    out = np.zeros_like(s)
    inside = s < 1.0
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - s[inside] ** 2))
    return out


def rescaled_profile(u: RadialField, lam: float, target: Domain) -> RadialField:
    """y -> lam^{N/2} u(lam y) sampled on ``target`` by even cubic interpolation."""
    d = u.domain
    r = d.r
    x = np.concatenate((-r[::-1], r))
    vals = np.asarray(u.values)
    y = lam * target.r
    out = np.zeros(target.n, dtype=np.complex128)
    inside = y <= r[-1]
    if np.any(inside):
        re = CubicSpline(x, np.concatenate((vals.real[::-1], vals.real)))
        im = CubicSpline(x, np.concatenate((vals.imag[::-1], vals.imag)))
        out[inside] = re(y[inside]) + 1j * im(y[inside])
    return RadialField(lam ** (0.5 * d.N) * out, target)


def h1_inner(f: RadialField, q: RadialField) -> complex:
    """<f, q>_{H^1} = int f conj(q) + int grad f . conj(grad q) with the grid stencil."""
    d = f.domain
    l2 = d.omega * complex(np.dot(f.values * np.conj(q.values), d.cell_volume))
    _, df = face_gradient(f)
    _, dq = face_gradient(q)
    return l2 + d.omega * complex(np.dot(df * np.conj(dq), face_weights(d)))


def profile_distance(v: RadialField, q: RadialField, gamma: float | None = None) -> tuple[float, float]:
    """(min over the phase of ||e^{i gamma} v - q||_{H^1}, minimizing gamma).

    With ``gamma`` given the distance at that phase is returned instead.
    """
    vv = h1_inner(v, v).real
    qq = h1_inner(q, q).real
    vq = h1_inner(v, q)
    if gamma is None:
        gamma = -math.atan2(vq.imag, vq.real)
        d2 = vv + qq - 2.0 * abs(vq)
    else:
        d2 = vv + qq - 2.0 * (np.exp(1j * gamma) * vq).real
    return math.sqrt(max(d2, 0.0)), float(gamma)


@dataclass(frozen=True)
class ConcentrationReport:
    mass2: float
    grad_norm: float
    lam: float
    rho: float
    ball_mass_rho: float
    ball_masses: dict = field(default_factory=dict)
    profile_distance: float = math.nan
    gamma: float = math.nan
    delta_test: float = math.nan

    def as_dict(self) -> dict:
        out = dict(self.__dict__)
        out["ball_masses"] = {f"{k:g}": v for k, v in self.ball_masses.items()}
        return out


def concentration_report(
    u: RadialField,
    g: GroundState,
    radii=(),
    bump_radius: float = 1.0,
    rho: float | None = None,
) -> ConcentrationReport:
    """Concentration diagnostics of ``u`` against the ground state ``g`` at k(0).

    The rescale is lam = ||grad Q|| / ||grad u|| with both norms on their
    grids, so u = Q gives lam = 1 and distance 0.  ``rho`` defaults to
    ||grad u||^{-1/2}.
    """
    gn = math.sqrt(grad_norm(u))
    if gn == 0.0:
        raise DiagnosticError("zero gradient norm: the rescale is undefined")
    q = g.profile
    lam = math.sqrt(grad_norm(q)) / gn
    if rho is None:
        rho = gn ** -0.5
    v = rescaled_profile(u, lam, q.domain)
    dist, gamma = profile_distance(v, q)
    psi = bump(u.domain.r, bump_radius)
    delta = abs(integrate_radial(u.abs2 * psi, u.domain) - g.mass2)
    return ConcentrationReport(
        mass2=mass_norm(u),
        grad_norm=gn,
        lam=lam,
        rho=rho,
        ball_mass_rho=ball_mass(u, rho),
        ball_masses={float(x): ball_mass(u, x) for x in radii},
        profile_distance=dist,
        gamma=gamma,
        delta_test=delta,
    )
