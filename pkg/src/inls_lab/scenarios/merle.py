"""Numerical check of a singular-kernel integral inequality used to close
the uniform estimates in the minimal-mass construction."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from ..errors import DiagnosticError, ParameterError

__all__ = ["MerleCheck", "merle_ratio", "merle_quadrature_check", "find_ell_star", "merle_asymptote"]


def merle_ratio(T: float, alpha: float, ell: float, c1: float, t: float) -> float:
    """int_t^T |t-s|^-alpha (T-s)^(-2(1-alpha)) e^(-ell/(T-s)) ds / (c1 e^(-ell/(T-t))).

    s = t + w^(1/(1-alpha)) removes the endpoint singularity; the factor
    e^(ell/(T-t)) is folded into the integrand so nothing underflows.
    """
    tau = T - t
    if not tau > 0:
        raise ParameterError(f"t must satisfy t < T (got t={t!r}, T={T!r})")
    beta = 1.0 / (1.0 - alpha)
    wmax = tau ** (1.0 - alpha)

    def f(w):
        rem = tau - w**beta  # T - s
        if rem <= 0.0:
            return 0.0
        return rem ** (-2.0 * (1.0 - alpha)) * math.exp(ell / tau - ell / rem)

    # the integrand lives within ~ tau^2/ell of w = 0 when ell/tau is large
    width = min(wmax, (tau * tau / max(ell, 1e-300)) ** (1.0 - alpha) * 40.0)
    pts = [0.0, width, wmax] if width < wmax else [0.0, wmax]
    total = 0.0
    for a, b in zip(pts[:-1], pts[1:]):
        val, err = integrate.quad(f, a, b, epsabs=0.0, epsrel=1e-10, limit=500)
        if not math.isfinite(val) or err > 1e-6 * max(abs(val), 1e-300):
            raise DiagnosticError(f"quadrature did not converge at t={t:g} (estimate {val:g} ± {err:g})")
        total += val
    return beta * total / c1


def merle_asymptote(alpha: float, ell: float, c1: float) -> float:
    """Limit of the ratio as t -> T: Gamma(1-alpha) ell^(alpha-1) / c1."""
    return math.gamma(1.0 - alpha) * ell ** (alpha - 1.0) / c1


def default_t_grid(T: float, count: int = 64) -> np.ndarray:
    """Times from 0 to T - 10^-3 T, dense towards T."""
    return T - T * np.geomspace(1.0, 1e-3, count)


@dataclass(frozen=True)
class MerleCheck:
    ell: float
    max_ratio: float
    t_at_max: float
    ratios: np.ndarray
    times: np.ndarray

    @property
    def holds(self) -> bool:
        return self.max_ratio <= 1.0


def merle_quadrature_check(T: float, alpha: float, ell: float, c1: float, t_grid=None) -> MerleCheck:
    """Largest ratio over ``t_grid`` (default: 64 times in [0, T) dense towards T)."""
    if not 0.0 < alpha < 1.0:
        raise ParameterError(f"alpha must satisfy 0 < alpha < 1 (got {alpha!r})")
    for name, v in (("T", T), ("ell", ell), ("c1", c1)):
        if not v > 0:
            raise ParameterError(f"{name} must satisfy {name} > 0 (got {v!r})")
    ts = default_t_grid(T) if t_grid is None else np.asarray(t_grid, dtype=float)
    ratios = np.array([merle_ratio(T, alpha, ell, c1, t) for t in ts])
    i = int(np.argmax(ratios))
    return MerleCheck(ell, float(ratios[i]), float(ts[i]), ratios, ts)


def find_ell_star(T: float, alpha: float, c1: float, ell0: float = 0.1, max_doublings: int = 40,
                  t_grid=None) -> tuple[float, list[MerleCheck]]:
    """Smallest ell = ell0 2^j with max ratio ≤ 1, and every check on the way."""
    ell = ell0
    history = []
    for _ in range(max_doublings + 1):
        chk = merle_quadrature_check(T, alpha, ell, c1, t_grid)
        history.append(chk)
        if chk.holds:
            return ell, history
        ell *= 2.0
    raise DiagnosticError(f"no ell ≤ {ell0 * 2.0**max_doublings:g} satisfies the inequality")
