"""Growth of the coefficient-deficit integral along a focusing trajectory
for a coefficient with a cusp-type maximum at the origin."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from ..domain import Coefficient, RadialField, grad_norm, integrate_radial
from ..errors import DiagnosticError, ParameterError
from ..evolve import BlowupReport, StepControls, evolve
from ..functionals import energy
from ..groundstate import GroundState
from .data import scaled_energy

__all__ = ["deficit_integral", "NonexistenceReport", "nonexistence_diagnostic", "focusing_slope"]


def deficit_integral(u: RadialField, c: Coefficient) -> float:
    """I = int (k(0) - k(x)) |x|^-b |u|^sigma dx."""
    d = u.domain
    return integrate_radial((c.k0 - c.k) * np.abs(u.values) ** d.sigma, d, power=-d.b)


def focusing_slope(lam: np.ndarray, val: np.ndarray, decades: float = 1.0) -> tuple[float, float]:
    """Least-squares slope of log val against log lam over the last ``decades`` of lam.

    Returns (slope, lam span actually used, in decades).
    """
    lam = np.asarray(lam, float)
    val = np.asarray(val, float)
    sel = (lam <= lam[-1] * 10.0**decades) & (val > 0)
    if np.count_nonzero(sel) < 4:
        raise DiagnosticError("trajectory did not focus over the requested window")
    x, y = np.log(lam[sel]), np.log(val[sel])
    slope = float(np.polyfit(x, y, 1)[0])
    return slope, float((x.max() - x.min()) / math.log(10.0))


@dataclass
class NonexistenceReport:
    alpha0: float
    eps: float
    lam0: float
    energy0: float
    times: np.ndarray
    lam: np.ndarray
    deficit: np.ndarray
    energy: np.ndarray
    slope: float
    span: float
    report: BlowupReport
    window: tuple = field(default=(math.nan, math.nan))

    @property
    def contract(self) -> bool:
        return bool(self.slope <= self.alpha0 - 1.0 + 0.15)

    def as_dict(self) -> dict:
        return {
            "alpha0": self.alpha0,
            "eps": self.eps,
            "lam0": self.lam0,
            "energy0": self.energy0,
            "slope": self.slope,
            "expected_slope": self.alpha0 - 1.0,
            "span_decades": self.span,
            "window": list(self.window),
            "report": self.report.as_dict(),
        }


def nonexistence_diagnostic(
    c: Coefficient,
    g: GroundState,
    ctl: StepControls,
    eps: float = 0.05,
    lam0: float = 2.0,
    levels: int = 33,
    energy_tol: float = 0.05,
) -> NonexistenceReport:
    """Track I(t) and lam(t) = ||grad Q|| / ||grad u(t)|| along a focusing run.

    The datum is (1+eps) lam^{N/2} Q(lam x), starting at ``lam0`` and
    doubling until its energy is negative.  Fields are stored at ``levels``
    geometric gradient-growth levels up to ``ctl.grad_cap``.  Samples whose
    energy has drifted by more than ``energy_tol`` |E(u0)| are discarded as
    unresolved, and the slope of log I against log lam is fitted over the
    last decade of lam among the rest.
    """
    if c.family != "cusp":
        raise ParameterError(f"the diagnostic needs a cusp coefficient (got {c.family!r})")
    d = c.domain
    lam = lam0
    for _ in range(30):
        if scaled_energy(g, eps, lam, c) < 0.0:
            break
        lam *= 2.0
    else:
        raise DiagnosticError("no negative-energy scale found")
    u0 = RadialField((1.0 + eps) * lam ** (0.5 * d.N) * g.evaluate(lam * d.r), d)
    e0 = energy(u0, c).total
    lv = tuple(np.geomspace(1.0, ctl.grad_cap, levels)[1:])
    f, log, rep = evolve(u0, c, replace(ctl, snapshot_growth=lv))
    if not rep.blew_up:
        raise DiagnosticError("trajectory did not focus (diagnostic inapplicable)")
    qn = math.sqrt(grad_norm(g.profile))
    snaps = [(0.0, u0)] + [(t, u) for t, _, u in log.growth_snapshots]
    times = np.array([t for t, _ in snaps])
    lams = np.array([qn / math.sqrt(grad_norm(u)) for _, u in snaps])
    vals = np.array([deficit_integral(u, c) for _, u in snaps])
    ens = np.array([energy(u, c).total for _, u in snaps])
    keep = np.abs(ens - e0) <= energy_tol * abs(e0)
    if np.count_nonzero(keep) < 4:
        raise DiagnosticError("no energy-resolved focusing window")
    slope, span = focusing_slope(lams[keep], vals[keep])
    lam_end = float(lams[keep][-1])
    return NonexistenceReport(
        alpha0=c.params["alpha0"], eps=eps, lam0=lam, energy0=e0, times=times, lam=lams,
        deficit=vals, energy=ens, slope=slope, span=span, report=rep,
        window=(lam_end * 10.0, lam_end),
    )
