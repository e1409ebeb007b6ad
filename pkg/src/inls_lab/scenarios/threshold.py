"""Global existence versus blow-up across the ground-state mass threshold."""

from __future__ import annotations

import math
from dataclasses import dataclass

from ..domain import Coefficient
from ..errors import ParameterError, UnresolvedSingularityError
from ..evolve import BlowupReport, EvolutionLog, StepControls, evolve
from ..functionals import energy
from ..groundstate import GroundState
from .data import negative_energy_data, shape_field, with_mass

__all__ = ["ScanRow", "threshold_scan", "classify", "initial_datum", "monotone_ok"]


@dataclass
class ScanRow:
    shape: str
    mass_ratio: float
    energy: float
    status: str  # "global", "blowup" or "unresolved"
    report: BlowupReport | None
    log: EvolutionLog | None = None
    field: object = None

    def as_dict(self) -> dict:
        out = {"shape": self.shape, "mass_ratio": self.mass_ratio, "energy": self.energy, "status": self.status}
        if self.report is not None:
            out["report"] = self.report.as_dict()
        return out


def classify(rep: BlowupReport, t_end: float) -> str:
    if rep.blew_up:
        return "blowup"
    if rep.resolution_ok and rep.t_stop >= t_end * (1.0 - 1e-12):
        return "global"
    return "unresolved"


def initial_datum(shape: str, ratio: float, g: GroundState, c: Coefficient):
    """Datum of the given shape with mass ratio * ||Q_{k(0)}||.

    The ``negative_energy`` shape takes eps = ratio - 1 and must lie above
    the threshold.
    """
    if shape == "negative_energy":
        if not 1.0 < ratio < 2.0:
            raise ParameterError("negative_energy data need a mass ratio in (1, 2)")
        return negative_energy_data(ratio - 1.0, g, c).field
    return with_mass(shape_field(shape, c.domain, g), ratio * g.norm)


def threshold_scan(
    c: Coefficient,
    g: GroundState,
    masses,
    shape: str,
    ctl: StepControls,
    keep: bool = False,
) -> list[ScanRow]:
    """Evolve one datum per mass ratio and classify each run.

    ``masses`` are multiples of ||Q_{k(0)}||.  Runs that leave the resolved
    regime are reported as ``unresolved`` and carry no verdict.  With
    ``keep`` the logs and final fields are retained on the rows.
    """
    if not math.isclose(g.k, c.k0, rel_tol=1e-12):
        raise ParameterError(f"ground state coupling {g.k} differs from k(0) = {c.k0}")
    rows = []
    for ratio in masses:
        u0 = initial_datum(shape, float(ratio), g, c)
        e0 = energy(u0, c).total
        try:
            f, log, rep = evolve(u0, c, ctl)
            status = classify(rep, ctl.t_end)
        except UnresolvedSingularityError as exc:
            f, log, rep, status = exc.field, exc.log, exc.report, "unresolved"
        row = ScanRow(shape, float(ratio), e0, status, rep)
        if keep:
            row.log, row.field = log, f
        rows.append(row)
    return rows


def monotone_ok(rows: list[ScanRow]) -> bool:
    """No global run at a mass above a blow-up run of the same shape."""
    by_shape: dict[str, list[ScanRow]] = {}
    for row in rows:
        by_shape.setdefault(row.shape, []).append(row)
    for group in by_shape.values():
        blow = [r.mass_ratio for r in group if r.status == "blowup"]
        if blow and any(r.status == "global" and r.mass_ratio > min(blow) for r in group):
            return False
    return True
