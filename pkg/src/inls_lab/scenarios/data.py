"""Initial data families: fixed shapes rescaled to a target mass, and
concentrated negative-energy data built from the ground state."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from ..domain import Coefficient, Domain, RadialField, mass_norm
from ..errors import ParameterError
from ..functionals import energy
from ..groundstate import GroundState

__all__ = ["SHAPES", "shape_field", "with_mass", "NegativeEnergyData", "negative_energy_data", "scaled_energy"]


def _ground_state_shape(d: Domain, g: GroundState) -> np.ndarray:
    return g.evaluate(d.r)


def _gaussian_shape(d: Domain, g: GroundState) -> np.ndarray:
    return np.exp(-(d.r**2))


def _sech_shape(d: Domain, g: GroundState) -> np.ndarray:
    return 1.0 / np.cosh(d.r)


SHAPES = {
    "ground_state": _ground_state_shape,
    "gaussian": _gaussian_shape,
    "sech": _sech_shape,
}


def shape_field(shape: str, d: Domain, g: GroundState) -> RadialField:
    """Unnormalized real profile of one of the named shapes."""
    try:
        f = SHAPES[shape]
    except KeyError:
        raise ParameterError(f"unknown data shape {shape!r}; expected one of {sorted(SHAPES)}") from None
    return RadialField(f(d, g), d)


def with_mass(f: RadialField, mass: float) -> RadialField:
    """``f`` multiplied by the constant that makes its L^2 norm equal ``mass``."""
    m = math.sqrt(mass_norm(f))
    if m == 0.0:
        raise ParameterError("cannot rescale a zero field")
    return f * (mass / m)


def _scaled_integrals(g: GroundState, lam: float, c: Coefficient) -> tuple[float, float]:
    """(||grad Q||^2, int k(y/lam) |y|^-b Q^sigma dy) on the fine profile."""
    N, b, s = g.N, g.b, g.sigma

    def f(y):
        q = g.evaluate(np.array([y]))[0]
        return float(c.value(y / lam)[0]) * y ** (N - 1 - b) * q**s

    # the integrand carries y^(N-1-b), integrable at 0; split at a few scales
    pts = [0.0, min(1e-3, g.r_trunc), 1.0, 4.0, g.r_trunc]
    pts = sorted(set(p for p in pts if p <= g.r_trunc))
    total = 0.0
    for a, bnd in zip(pts[:-1], pts[1:]):
        val, _ = integrate.quad(f, a, bnd, epsabs=0.0, epsrel=1e-11, limit=400)
        total += val
    return g.grad2, g.domain.omega * total


def scaled_energy(g: GroundState, eps: float, lam: float, c: Coefficient) -> float:
    """E[(1+eps) lam^(N/2) Q(lam x)] under coefficient ``c``, by fine quadrature.

    With y = lam x the energy is lam^2 times the energy of (1+eps) Q under the
    coefficient y -> k(y / lam).
    """
    grad2, pot = _scaled_integrals(g, lam, c)
    a = 1.0 + eps
    return lam**2 * (0.5 * a**2 * grad2 - a**g.sigma * pot / g.sigma)


@dataclass(frozen=True)
class NegativeEnergyData:
    field: RadialField
    lam: float
    eps: float
    energy_fine: float
    energy_grid: float
    doublings: int


def negative_energy_data(eps: float, g: GroundState, c: Coefficient, lam0: float = 1.0,
                         max_doublings: int = 60) -> NegativeEnergyData:
    """Data (1+eps) lam^(N/2) Q(lam x) with E ≤ -1/eps.

    ``g`` is the ground state at coupling k(0).  The scale starts at ``lam0``
    and doubles until the fine-quadrature energy reaches -1/eps; this always
    terminates because the lam^2 coefficient tends to a negative limit as lam
    grows.
    """
    if not 0.0 < eps < 1.0:
        raise ParameterError(f"eps must satisfy 0 < eps < 1 (got {eps!r})")
    if not math.isclose(g.k, c.k0, rel_tol=1e-12):
        raise ParameterError(f"ground state coupling {g.k} differs from k(0) = {c.k0}")
    lam = float(lam0)
    target = -1.0 / eps
    e = scaled_energy(g, eps, lam, c)
    n = 0
    while e > target:
        if n >= max_doublings:
            raise ParameterError(f"no scale with E ≤ {target:g} after {max_doublings} doublings")
        lam *= 2.0
        n += 1
        e = scaled_energy(g, eps, lam, c)
    d = c.domain
    vals = (1.0 + eps) * lam ** (0.5 * d.N) * g.evaluate(lam * d.r)
    f = RadialField(vals, d)
    return NegativeEnergyData(f, lam, eps, e, energy(f, c).total, n)
