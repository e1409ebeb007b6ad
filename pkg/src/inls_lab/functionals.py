"""Mass, energy, the sharp Gagliardo-Nirenberg inequality and its corollaries."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .domain import (
    Coefficient,
    Domain,
    RadialField,
    _check_same,
    face_gradient,
    face_weights,
    grad_norm,
    integrate_radial,
    mass_norm,
    sigma_of,
    weighted_integral,
)
from .errors import DiagnosticError
from .groundstate import GroundState

__all__ = [
    "EnergyReport",
    "energy",
    "constant_energy",
    "gn_constant",
    "gn_check",
    "energy_lower_bound_check",
    "gnref_ratio",
    "make_gn_corpus",
    "GN_CORPUS_SEED",
]

GN_CORPUS_SEED = 20240611


@dataclass(frozen=True)
class EnergyReport:
    kinetic: float
    potential: float
    total: float
    frozen_total: float


def potential_integral(u: RadialField, c: Coefficient) -> float:
    """int k(x) |x|^-b |u|^sigma_b dx."""
    d = u.domain
    _check_same(d, c.domain)
    return integrate_radial(c.k * np.abs(u.values) ** d.sigma, d, power=-d.b)


def energy(u: RadialField, c: Coefficient) -> EnergyReport:
    """Energy with coefficient ``c`` and with the frozen constant k(0)."""
    d = u.domain
    _check_same(d, c.domain)
    kin = 0.5 * grad_norm(u)
    w = weighted_integral(u)
    pot = integrate_radial(c.k * np.abs(u.values) ** d.sigma, d, power=-d.b) / d.sigma
    return EnergyReport(kin, pot, kin - pot, kin - c.k0 * w / d.sigma)


def constant_energy(u: RadialField, k: float) -> float:
    """E_k[u] for a constant coupling k."""
    d = u.domain
    return 0.5 * grad_norm(u) - k * weighted_integral(u) / d.sigma


def gn_constant(g: GroundState) -> float:
    """Sharp constant C = sigma_b / (2 k ||Q_k||^((4-2b)/N))."""
    return g.sigma / (2.0 * g.k * g.mass2 ** ((2.0 - g.b) / g.N))


def gn_check(f: RadialField, g: GroundState) -> float:
    """Ratio of the weighted integral to its sharp Gagliardo-Nirenberg bound."""
    d = f.domain
    m = mass_norm(f)
    gr = grad_norm(f)
    if m == 0.0 or gr == 0.0:
        raise DiagnosticError("Gagliardo-Nirenberg ratio undefined for a zero field")
    return weighted_integral(f) / (gn_constant(g) * gr * m ** ((2.0 - d.b) / d.N))


def energy_lower_bound_check(u: RadialField, g: GroundState) -> tuple[float, float]:
    """(E_k[u], 1/2 ||grad u||^2 (1 - (||u|| / ||Q_k||)^((4-2b)/N)))."""
    d = u.domain
    lhs = constant_energy(u, g.k)
    ratio = math.sqrt(mass_norm(u) / g.mass2)
    rhs = 0.5 * grad_norm(u) * (1.0 - ratio ** ((4.0 - 2.0 * d.b) / d.N))
    return lhs, rhs


def gnref_ratio(f: RadialField, A: float) -> float:
    """Exterior weighted integral over its localized Gagliardo-Nirenberg bound.

    Numerator: int_{|x|>=A} |x|^-b |f|^sigma.  Denominator:
    (int_{|x|>=A/2} |f|^2)^((2-b)/N) * (int_{A/2<=|x|<=A} |f|^2 + int_{|x|>=A/2} |grad f|^2).
    Returns NaN when the denominator vanishes.
    """
    d = f.domain
    r = d.r
    a2 = f.abs2
    num = integrate_radial(np.where(r >= A, np.abs(f.values) ** d.sigma, 0.0), d, power=-d.b)
    outer = integrate_radial(np.where(r >= 0.5 * A, a2, 0.0), d)
    shell = integrate_radial(np.where((r >= 0.5 * A) & (r <= A), a2, 0.0), d)
    rf, du = face_gradient(f)
    gout = float(d.omega * np.dot(np.where(rf >= 0.5 * A, np.abs(du) ** 2, 0.0), face_weights(d)))
    den = outer ** ((2.0 - d.b) / d.N) * (shell + gout)
    return num / den if den > 0 else math.nan


def make_gn_corpus(d: Domain, count: int = 200, seed: int = GN_CORPUS_SEED) -> list[RadialField]:
    """Deterministic random smooth fields: complex polynomials in r^2 times Gaussians.

    Each field is a sum of one to three terms P(r^2) exp(-r^2 / w^2) with
    widths drawn log-uniformly from [0.3, 3] and cubic P with complex
    normal coefficients.
    """
    rng = np.random.default_rng(seed)
    r2 = d.r**2
    out = []
    for _ in range(count):
        u = np.zeros(d.n, dtype=np.complex128)
        for _ in range(rng.integers(1, 4)):
            w = math.exp(rng.uniform(math.log(0.3), math.log(3.0)))
            coef = rng.normal(size=4) + 1j * rng.normal(size=4)
            s = r2 / w**2
            u += (coef[0] + coef[1] * s + coef[2] * s**2 + coef[3] * s**3) * np.exp(-s)
        out.append(RadialField(u, d))
    return out
