"""Command-line front end: ``inls-lab run | list | ground-state``.

Configs are INI files with the sections ``[domain]``, ``[coefficient]``,
``[scenario]``, ``[controls]``, ``[output]`` and optionally ``[run]``.
Unknown sections or keys are rejected with the offending line number.

Exit status: 0 when every contract passes, 1 on a contract failure,
2 on a configuration error, 3 when the grid could not resolve the run.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import json
import math
import re
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import __version__
from .domain import (
    COEFFICIENT_FAMILIES,
    RadialField,
    check_hypotheses,
    make_coefficient,
    make_domain,
    mass_norm,
    sigma_of,
)
from .errors import (
    ConfigError,
    DiagnosticError,
    DomainTooSmallError,
    InlsError,
    ParameterError,
    UnderResolutionError,
    UnresolvedSingularityError,
)

SCHEMA_VERSION = "1.0"

EXIT_OK, EXIT_CONTRACT, EXIT_CONFIG, EXIT_RESOLUTION = 0, 1, 2, 3

SCENARIOS: dict[str, str] = {
    "ground-state": "shoot for Q_k and report its invariants and Pohozaev residuals",
    "gn-check": "sharp Gagliardo-Nirenberg ratio on a seeded random corpus and on Q",
    "evolve": "evolve one datum and report mass and energy drift",
    "virial-check": "finite-difference z_R'' against the localized virial identity",
    "threshold-scan": "classify runs as global or blow-up across the mass threshold",
    "concentration": "mass concentration and profile convergence along a blow-up run",
    "pseudo-conformal": "checks on the explicit pseudo-conformal blow-up profile",
    "dispersive-check": "decay exponent of the free flow in the weighted norm",
    "minimal-mass": "backward construction of a critical-mass blow-up solution",
    "nonexistence-diagnostic": "growth of the coefficient-deficit integral for a cusp coefficient",
    "merle-inequality": "quadrature check of the singular-kernel integral inequality",
}


# -- config schema ------------------------------------------------------------


def _floats(text: str) -> tuple[float, ...]:
    parts = [p for p in re.split(r"[,\s]+", text.strip()) if p]
    return tuple(float(p) for p in parts)


def _strs(text: str) -> tuple[str, ...]:
    return tuple(p for p in re.split(r"[,\s]+", text.strip()) if p)


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _int(text: str) -> int:
    v = float(text)
    if v != int(v):
        raise ValueError(f"not an integer: {text!r}")
    return int(v)


# key -> (parser, default); a default of ... marks a required key
DOMAIN_KEYS = {"N": (_int, ...), "b": (float, ...), "r_max": (float, 40.0), "n": (_int, 4096)}
CONTROL_KEYS = {
    "dt0": (float, 1e-3),
    "grad_cap": (float, 100.0),
    "dt_floor": (float, 1e-12),
    "t_end": (float, 1.0),
    "sample_every": (_int, 10),
    "virial_radii": (_floats, ()),
    "ball_radii": (_floats, ()),
    "res_tol": (float, 0.15),
    "phase_tol": (float, 0.02),
}
OUTPUT_KEYS = {"directory": (str, "inls-output"), "formats": (_strs, ("json", "csv"))}
RUN_KEYS = {"seed": (_int, 0)}

SCENARIO_KEYS: dict[str, dict[str, tuple[Callable, Any]]] = {
    "ground-state": {"k": (float, None), "tol": (float, 1e-9)},
    "gn-check": {"count": (_int, 200), "tolerance": (float, 1e-4)},
    "evolve": {"shape": (str, "gaussian"), "mass_ratio": (float, 0.9),
               "mass_tol": (float, 1e-8), "energy_tol": (float, 1e-4)},
    "virial-check": {"shape": (str, "gaussian"), "mass_ratio": (float, 0.9), "l": (_int, None),
                     "R": (float, 4.0), "snapshots": (_int, 64), "tolerance": (float, 0.01)},
    "threshold-scan": {"shapes": (_strs, ("ground_state", "gaussian", "sech")),
                       "masses": (_floats, (0.9,)), "include_negative_energy": (_bool, True),
                       "eps": (float, 0.2)},
    "concentration": {"eps": (float, 0.2), "levels": (_int, 11), "ball_fraction": (float, 0.9)},
    "pseudo-conformal": {"T": (float, 1.0), "lam": (float, 1.0), "times": (_floats, ()),
                         "exponent_tol": (float, 0.02), "residual_time": (float, 0.5)},
    "dispersive-check": {"times": (_floats, ()), "count": (_int, 12), "step": (float, 0.01),
                         "guard": (float, 1e-6)},
    "minimal-mass": {"T": (float, 1.0), "eps": (_floats, (1 / 8, 1 / 16, 1 / 32, 1 / 64)),
                     "eps0": (float, None), "lens_r_max": (float, 32.0), "lens_n": (_int, 2048),
                     "ds0": (float, 0.005), "step_power": (float, 2.0), "samples": (_int, 12),
                     "forward_cap": (float, 16.0), "forward": (_bool, True)},
    "nonexistence-diagnostic": {"eps": (float, 0.05), "lam0": (float, 2.0), "levels": (_int, 33),
                                "energy_tol": (float, 0.05)},
    "merle-inequality": {"T": (float, 1.0), "alpha": (float, 1.0 / 3.0), "c1": (float, 0.25),
                         "ell0": (float, 0.1), "max_doublings": (_int, 40)},
}


@dataclass
class RunConfig:
    path: Path
    domain: dict
    coefficient: dict
    scenario: str
    params: dict
    controls: dict
    output: dict
    seed: int

    def as_dict(self) -> dict:
        return {
            "domain": self.domain,
            "coefficient": self.coefficient,
            "scenario": {"name": self.scenario, **self.params},
            "controls": self.controls,
            "output": self.output,
            "seed": self.seed,
        }


def _key_lines(text: str) -> dict[tuple[str, str], int]:
    """(section, key) -> line number, for error messages."""
    out: dict[tuple[str, str], int] = {}
    section = ""
    for i, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        if not s or s[0] in "#;":
            continue
        m = re.match(r"\[([^\]]+)\]", s)
        if m:
            section = m.group(1).strip()
            out[(section, "")] = i
            continue
        m = re.match(r"([^=:]+?)\s*[=:]", s)
        if m:
            out[(section, m.group(1).strip())] = i
    return out


def _parse_block(raw: dict, schema: dict, section: str, lines: dict, path: Path) -> dict:
    out = {}
    for key, value in raw.items():
        where = f"{path}:{lines.get((section, key), '?')}"
        if key not in schema:
            raise ConfigError(f"{where}: unknown key {key!r} in [{section}] (allowed: {', '.join(sorted(schema))})")
        conv = schema[key][0]
        try:
            out[key] = conv(value)
        except ValueError as exc:
            raise ConfigError(f"{where}: bad value for {key!r} in [{section}]: {exc}") from None
    for key, (_, default) in schema.items():
        if key not in out:
            if default is ...:
                where = f"{path}:{lines.get((section, ''), '?')}"
                raise ConfigError(f"{where}: missing required key {key!r} in [{section}]")
            out[key] = default
    return out


def load_config(path: str | Path) -> RunConfig:
    """Parse and validate a run config; every problem raises ConfigError."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config: {exc.strerror}") from None
    cp = configparser.ConfigParser(interpolation=None, strict=True, default_section="__none__")
    cp.optionxform = str  # keys are case sensitive (N vs n)
    try:
        cp.read_string(text, source=str(path))
    except configparser.DuplicateOptionError as exc:
        raise ConfigError(f"{path}:{exc.lineno}: duplicate key {exc.option!r} in [{exc.section}]") from None
    except configparser.DuplicateSectionError as exc:
        raise ConfigError(f"{path}:{exc.lineno}: duplicate section [{exc.section}]") from None
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError(f"{path}:{exc.lineno}: key outside any section: {exc.line.strip()!r}") from None
    except configparser.ParsingError as exc:
        lineno, line = exc.errors[0]
        raise ConfigError(f"{path}:{lineno}: cannot parse line {line.strip()!r}") from None
    lines = _key_lines(text)
    allowed = {"domain", "coefficient", "scenario", "controls", "output", "run"}
    for sec in cp.sections():
        if sec not in allowed:
            raise ConfigError(f"{path}:{lines.get((sec, ''), '?')}: unknown section [{sec}]")
    for sec in ("domain", "coefficient", "scenario"):
        if not cp.has_section(sec):
            raise ConfigError(f"{path}: missing section [{sec}]")

    def raw(sec):
        return dict(cp.items(sec)) if cp.has_section(sec) else {}

    domain = _parse_block(raw("domain"), DOMAIN_KEYS, "domain", lines, path)
    coef_raw = raw("coefficient")
    family = coef_raw.pop("family", None)
    if family is None:
        raise ConfigError(f"{path}:{lines.get(('coefficient', ''), '?')}: missing required key 'family' in [coefficient]")
    if family not in COEFFICIENT_FAMILIES:
        raise ConfigError(
            f"{path}:{lines.get(('coefficient', 'family'), '?')}: unknown coefficient family {family!r} "
            f"(expected one of {', '.join(sorted(COEFFICIENT_FAMILIES))})"
        )
    coef_schema = {k: (float, v) for k, v in COEFFICIENT_FAMILIES[family][1].items()}
    coefficient = {"family": family, **_parse_block(coef_raw, coef_schema, "coefficient", lines, path)}
    sc_raw = raw("scenario")
    name = sc_raw.pop("name", None)
    if name not in SCENARIOS:
        raise ConfigError(
            f"{path}:{lines.get(('scenario', 'name'), lines.get(('scenario', ''), '?'))}: "
            f"unknown scenario {name!r} (run 'inls-lab list')"
        )
    params = _parse_block(sc_raw, SCENARIO_KEYS[name], "scenario", lines, path)
    controls = _parse_block(raw("controls"), CONTROL_KEYS, "controls", lines, path)
    output = _parse_block(raw("output"), OUTPUT_KEYS, "output", lines, path)
    bad = set(output["formats"]) - {"json", "csv"}
    if bad or "json" not in output["formats"]:
        raise ConfigError(f"{path}:{lines.get(('output', 'formats'), '?')}: formats must include json and may add csv")
    seed = _parse_block(raw("run"), RUN_KEYS, "run", lines, path)["seed"]
    return RunConfig(path, domain, coefficient, name, params, controls, output, seed)


# -- results ------------------------------------------------------------------


@dataclass
class Contract:
    name: str
    anchor: str
    passed: bool
    value: Any = None
    threshold: Any = None

    def as_dict(self) -> dict:
        return {"name": self.name, "anchor": self.anchor, "passed": bool(self.passed),
                "value": _jsonable(self.value), "threshold": _jsonable(self.threshold)}


@dataclass
class Outcome:
    results: dict = field(default_factory=dict)
    contracts: list[Contract] = field(default_factory=list)
    tables: dict[str, tuple[list[str], list]] = field(default_factory=dict)

    def check(self, name, anchor, passed, value=None, threshold=None):
        self.contracts.append(Contract(name, anchor, bool(passed), value, threshold))


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else repr(x)
    return x


def _write_csv(path: Path, columns: list[str], rows) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(columns)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])


# -- scenario runners -----------------------------------------------------------


def _setup(cfg: RunConfig):
    from .groundstate import load_or_solve

    dom = cfg.domain
    d = make_domain(dom["N"], dom["b"], dom["r_max"], dom["n"])
    params = {k: v for k, v in cfg.coefficient.items() if k != "family"}
    c = make_coefficient(cfg.coefficient["family"], d, **params)
    return d, c, load_or_solve


def _controls(cfg: RunConfig, **over):
    from .evolve import StepControls
    from .virial import build_cutoff

    k = dict(cfg.controls)
    radii = k.pop("virial_radii")
    if radii:
        d = make_domain(cfg.domain["N"], cfg.domain["b"], cfg.domain["r_max"], cfg.domain["n"])
        l = int(math.floor(2.0 / d.b)) + 1 if d.b > 0 else 2
        k["virial_cutoffs"] = tuple(build_cutoff(l, R, d) for R in radii)
    k["ball_radii"] = tuple(k["ball_radii"])
    k.update(over)
    return StepControls(**k)


def _profile_table(g) -> tuple[list[str], list]:
    d = g.domain
    return ["r", "Q"], list(zip(d.r, g.profile.values.real))


def run_ground_state(cfg, d, c, solve, out: Outcome):
    from .groundstate import pohozaev_residuals

    p = cfg.params
    k = c.k0 if p["k"] is None else p["k"]
    g = solve(k, d, p["tol"])
    res = pohozaev_residuals(g)
    out.results.update({
        "k": k, "Q0": g.shoot_value, "mass2": g.mass2, "grad2": g.grad2, "weighted": g.weighted,
        "energy": g.energy, "theta": g.theta, "theta_residual": g.theta_residual,
        "ode_residual": g.residual, "pohozaev_residuals": list(res),
        "r_cut": g.r_cut, "r_trunc": g.r_trunc,
    })
    for i, r in enumerate(res, 1):
        out.check(f"pohozaev_{i}", "ground-state Pohozaev identities", r < 1e-5, r, 1e-5)
    out.tables["ground_state"] = _profile_table(g)


def run_gn_check(cfg, d, c, solve, out: Outcome):
    from .functionals import gn_check, gn_constant, make_gn_corpus

    p = cfg.params
    g = solve(c.k0, d)
    fields = make_gn_corpus(d, p["count"], cfg.seed)
    ratios = np.array([gn_check(f, g) for f in fields])
    ext = gn_check(g.profile, g)
    out.results.update({"gn_constant": gn_constant(g), "max_ratio": float(ratios.max()),
                        "extremizer_ratio": ext, "count": len(ratios)})
    out.check("corpus_bound", "sharp Gagliardo-Nirenberg inequality", ratios.max() <= 1 + p["tolerance"],
              float(ratios.max()), 1 + p["tolerance"])
    out.check("extremizer", "ground state attains the sharp constant", abs(ext - 1) <= 1e-5, ext, "1 ± 1e-5")
    out.tables["gn_ratios"] = (["index", "ratio"], list(enumerate(ratios)))


def _datum(shape, ratio, g, c):
    from .scenarios.threshold import initial_datum

    try:
        return initial_datum(shape, ratio, g, c)
    except KeyError:
        raise ParameterError(f"unknown datum shape {shape!r}") from None


def run_evolve(cfg, d, c, solve, out: Outcome):
    from .evolve import evolve

    p = cfg.params
    g = solve(c.k0, d)
    ctl = _controls(cfg)
    u0 = _datum(p["shape"], p["mass_ratio"], g, c)
    f, log, rep = evolve(u0, c, ctl)
    out.results["report"] = rep.as_dict()
    out.results["hypotheses"] = check_hypotheses(c).as_dict()
    out.tables["trajectory"] = (log.columns, log.rows)
    out.check("mass_conservation", "mass conservation", rep.mass_drift < p["mass_tol"], rep.mass_drift, p["mass_tol"])
    if not rep.blew_up:
        out.check("energy_conservation", "energy conservation", rep.energy_drift < p["energy_tol"],
                  rep.energy_drift, p["energy_tol"])


def run_virial_check(cfg, d, c, solve, out: Outcome):
    from .evolve import evolve
    from .functionals import energy
    from .virial import build_cutoff, verify_virial

    p = cfg.params
    g = solve(c.k0, d)
    l = p["l"] if p["l"] is not None else int(math.floor(2.0 / d.b)) + 1
    w = build_cutoff(l, p["R"], d)
    u0 = _datum(p["shape"], p["mass_ratio"], g, c)
    e0 = energy(u0, c).total
    m = p["snapshots"]
    ctl = _controls(cfg, snapshot_times=tuple(np.linspace(0.0, cfg.controls["t_end"], m)))
    f, log, rep = evolve(u0, c, ctl)
    if len(log.snapshots) < m:
        raise UnderResolutionError(f"run stopped after {len(log.snapshots)} of {m} snapshots")
    chk = verify_virial(log.snapshots, c, w, e0, detail=True)
    k4 = np.array([t.K4 for t in chk.terms])
    out.results.update({"l": l, "R": p["R"], "energy": e0, "max_relative_mismatch": chk.max_relative_mismatch,
                        "report": rep.as_dict()})
    out.tables["virial"] = (["t", "z", "z_fd", "rhs", "K1", "K2", "K3", "K4"],
                            [(t, z, fd, r, x.K1, x.K2, x.K3, x.K4)
                             for t, z, fd, r, x in zip(chk.times, chk.z, chk.z_fd, chk.rhs, chk.terms)])
    out.check("identity", "localized virial identity", chk.max_relative_mismatch < p["tolerance"],
              chk.max_relative_mismatch, p["tolerance"])
    if c.is_constant:
        out.check("K4_zero", "coefficient term vanishes for constant k", bool(np.all(k4 == 0.0)), float(np.max(np.abs(k4))), 0.0)
    elif check_hypotheses(c).condition_i:
        out.check("K4_sign", "coefficient term nonpositive when r k' <= 0", bool(np.all(k4 <= 0.0)), float(k4.max()), 0.0)


def run_threshold_scan(cfg, d, c, solve, out: Outcome):
    from .scenarios.threshold import monotone_ok, threshold_scan

    p = cfg.params
    g = solve(c.k0, d)
    ctl = _controls(cfg)
    rows = []
    for shape in p["shapes"]:
        rows += threshold_scan(c, g, p["masses"], shape, ctl)
    if p["include_negative_energy"]:
        rows += threshold_scan(c, g, [1.0 + p["eps"]], "negative_energy", ctl)
    out.results["rows"] = [r.as_dict() for r in rows]
    out.tables["scan"] = (["shape", "mass_ratio", "energy", "status", "grad_growth", "t_stop"],
                          [(r.shape, r.mass_ratio, r.energy, r.status, r.report.grad_growth, r.report.t_stop)
                           for r in rows])
    unresolved = [r for r in rows if r.status == "unresolved"]
    if unresolved:
        out.results["unresolved"] = len(unresolved)
    sub = [r for r in rows if r.mass_ratio < 1.0]
    out.check("subcritical_global", "global existence below the ground-state mass",
              all(r.status == "global" for r in sub), [r.status for r in sub], "global")
    neg = [r for r in rows if r.shape == "negative_energy"]
    if neg:
        out.check("negative_energy_blowup", "negative-energy data above the threshold blow up",
                  all(r.status == "blowup" for r in neg), [r.status for r in neg], "blowup")
    out.check("monotone", "no global run above a blow-up mass", monotone_ok(rows), None, None)


def run_concentration(cfg, d, c, solve, out: Outcome):
    from .evolve import evolve
    from .scenarios.concentration import concentration_report
    from .scenarios.data import negative_energy_data

    p = cfg.params
    g = solve(c.k0, d)
    cap = cfg.controls["grad_cap"]
    ctl = _controls(cfg, snapshot_growth=tuple(np.geomspace(cap / 10.0, cap, p["levels"])))
    data = negative_energy_data(p["eps"], g, c)
    f, log, rep = evolve(data.field, c, ctl)
    if not rep.blew_up:
        raise DiagnosticError("the run did not blow up, so concentration is undefined")
    reps = [concentration_report(u, g) for _, _, u in log.growth_snapshots]
    dist = np.array([r.profile_distance for r in reps])
    last = reps[-1]
    out.results.update({"lam": data.lam, "report": rep.as_dict(), "final": last.as_dict()})
    out.tables["concentration"] = (["t", "grad_norm", "lam", "rho", "ball_mass", "profile_distance", "gamma"],
                                   [(t, G, r.lam, r.rho, r.ball_mass_rho, r.profile_distance, r.gamma)
                                    for (t, G, _), r in zip(log.growth_snapshots, reps)])
    out.tables["trajectory"] = (log.columns, log.rows)
    frac = last.ball_mass_rho / g.mass2
    out.check("ball_mass", "mass concentration in balls of radius ||grad u||^-1/2",
              frac >= p["ball_fraction"], frac, p["ball_fraction"])
    out.check("profile_convergence", "rescaled profile approaches the ground-state orbit",
              bool(np.all(np.diff(dist) < 0)), dist.tolist(), "strictly decreasing")


def run_pseudo_conformal(cfg, d, c, solve, out: Outcome):
    from .scenarios.pseudo import PseudoConformalProfile, pc_residual, pc_weighted_fit

    p = cfg.params
    if not c.is_constant:
        raise ParameterError("the pseudo-conformal profile needs a constant coefficient")
    g = solve(c.k0, d)
    T, lam = p["T"], p["lam"]
    times = p["times"] or tuple(T - T * np.geomspace(0.5, 1e-2, 12))
    prof = PseudoConformalProfile(T, lam, g)
    masses = np.array([prof.mass2(t) for t in times])
    mass_err = float(np.max(np.abs(masses / g.mass2 - 1.0)))
    expo, norms = pc_weighted_fit(T, lam, times, g)
    target = 2.0 / d.sigma
    t_res = p["residual_time"] * T
    d2 = make_domain(d.N, d.b, d.r_max, 2 * d.n)
    r1 = pc_residual(T, lam, t_res, g, d)
    r2 = pc_residual(T, lam, t_res, g, d2)
    ratio = r1 / r2
    out.results.update({"mass_error": mass_err, "exponent": expo, "expected_exponent": target,
                        "residual": r1, "residual_refined": r2, "refinement_ratio": ratio})
    out.tables["weighted_norm"] = (["t", "weighted_norm"], list(zip(times, norms)))
    out.check("mass_invariance", "pseudo-conformal profile conserves mass", mass_err < 1e-8, mass_err, 1e-8)
    out.check("growth_exponent", "weighted norm grows like (T-t)^(-2/sigma)",
              abs(expo - target) <= p["exponent_tol"] * target, expo, target)
    out.check("residual_order", "PDE residual is second order in h", 3.0 <= ratio <= 5.0, ratio, "4 ± 1")


def run_dispersive_check(cfg, d, c, solve, out: Outcome):
    from .evolve import dispersive_check

    p = cfg.params
    gd = make_domain(d.N, d.b, min(d.r_max, 40.0), 4096)
    g = solve(c.k0, gd)
    f = RadialField(g.evaluate(d.r).astype(complex), d)
    times = p["times"] or tuple(np.geomspace(1.0, 100.0, p["count"]))
    slope, ts, norms = dispersive_check(f, d.b, times, p["step"], p["guard"], return_norms=True)
    bound = -2.0 / sigma_of(d.N, d.b) + 0.05
    out.results.update({"slope": slope, "bound": bound})
    out.tables["dispersive"] = (["t", "weighted_norm"], list(zip(ts, norms)))
    out.check("decay_rate", "free flow decays like t^(-2/sigma) in the weighted norm", slope <= bound, slope, bound)


def run_minimal_mass(cfg, d, c, solve, out: Outcome):
    from .scenarios.minimal_mass import minimal_mass_construct

    p = cfg.params
    if c.family != "flat_top":
        raise ParameterError("the construction needs a flat_top coefficient")
    g = solve(c.k0, d)
    eps0 = p["eps0"] if p["eps0"] is not None else p["T"] / 4.0
    rep = minimal_mass_construct(
        p["T"], p["eps"], eps0, c, g, lens_r_max=p["lens_r_max"], lens_n=p["lens_n"], ds0=p["ds0"],
        step_power=p["step_power"], samples=p["samples"], forward_cap=p["forward_cap"], forward=p["forward"],
    )
    out.results.update(rep.as_dict())
    out.tables["distances"] = (["eps", "t", "d"], [(r.eps, t, x) for r in rep.runs for t, x in zip(r.times, r.distance)])
    for r in rep.runs:
        out.check(f"fit_eps_{r.eps:g}", "exponential approach to Q_T: log d linear in 1/(T-t) with negative slope",
                  r.slope < 0 and r.r2 > 0.95, {"slope": r.slope, "r2": r.r2}, {"slope": "< 0", "r2": 0.95})
        mono = bool(np.all(np.diff(r.distance) >= 0))
        out.check(f"monotone_eps_{r.eps:g}", "deviation accumulates backward in time", mono, None, None)
    out.check("cauchy", "candidates converge as eps -> 0", rep.cauchy, rep.consecutive, "strictly decreasing")
    if p["forward"]:
        f = rep.forward
        ok = f is not None and f.blew_up and abs(f.fitted_T - p["T"]) <= 0.1 * p["T"]
        out.check("forward_blowup", "candidate blows up near T", ok,
                  None if f is None else f.fitted_T, f"{p['T']} ± 10%")
        merr = abs(math.sqrt(rep.forward_mass2) - g.norm) / g.norm
        out.check("critical_mass", "candidate carries the ground-state mass", merr <= 1e-3, merr, 1e-3)


def run_nonexistence(cfg, d, c, solve, out: Outcome):
    from .scenarios.nonexistence import nonexistence_diagnostic

    p = cfg.params
    g = solve(c.k0, d)
    ctl = _controls(cfg)
    rep = nonexistence_diagnostic(c, g, ctl, p["eps"], p["lam0"], p["levels"], p["energy_tol"])
    out.results.update(rep.as_dict())
    out.tables["deficit"] = (["t", "lam", "deficit", "energy"], list(zip(rep.times, rep.lam, rep.deficit, rep.energy)))
    out.check("deficit_growth", "deficit integral grows like lam^(alpha0-1)", rep.contract,
              rep.slope, rep.alpha0 - 1.0 + 0.15)


def run_merle(cfg, d, c, solve, out: Outcome):
    from .scenarios.merle import find_ell_star, merle_asymptote, merle_quadrature_check

    p = cfg.params
    T, a, c1 = p["T"], p["alpha"], p["c1"]
    ell, hist = find_ell_star(T, a, c1, p["ell0"], p["max_doublings"])
    small = merle_quadrature_check(T, a, p["ell0"], c1)
    out.results.update({"ell_star": ell, "max_ratio": hist[-1].max_ratio, "asymptote": merle_asymptote(a, ell, c1),
                        "ratio_at_ell0": small.max_ratio})
    out.tables["merle"] = (["ell", "max_ratio", "t_at_max"], [(h.ell, h.max_ratio, h.t_at_max) for h in hist])
    out.check("large_ell", "inequality holds for large ell", hist[-1].holds, hist[-1].max_ratio, 1.0)
    out.check("small_ell_fails", "largeness of ell is necessary", small.max_ratio > 1.0, small.max_ratio, "> 1")


RUNNERS = {
    "ground-state": run_ground_state,
    "gn-check": run_gn_check,
    "evolve": run_evolve,
    "virial-check": run_virial_check,
    "threshold-scan": run_threshold_scan,
    "concentration": run_concentration,
    "pseudo-conformal": run_pseudo_conformal,
    "dispersive-check": run_dispersive_check,
    "minimal-mass": run_minimal_mass,
    "nonexistence-diagnostic": run_nonexistence,
    "merle-inequality": run_merle,
}


def execute(cfg: RunConfig) -> tuple[int, dict]:
    """Run a parsed config, write its artifacts and return (exit code, summary)."""
    outdir = Path(cfg.output["directory"])
    if not outdir.is_absolute():
        outdir = cfg.path.parent / outdir
    outdir.mkdir(parents=True, exist_ok=True)
    out = Outcome()
    status = "completed"
    error = None
    t0 = time.perf_counter()
    try:
        d, c, solve = _setup(cfg)
        RUNNERS[cfg.scenario](cfg, d, c, solve, out)
        code = EXIT_OK if all(x.passed for x in out.contracts) else EXIT_CONTRACT
    except (UnderResolutionError, DomainTooSmallError) as exc:
        code, status, error = EXIT_RESOLUTION, "unresolved", str(exc)
        if isinstance(exc, UnresolvedSingularityError) and exc.report is not None:
            out.results["report"] = exc.report.as_dict()
    except ParameterError as exc:
        code, status, error = EXIT_CONFIG, "invalid", str(exc)
    except DiagnosticError as exc:
        code, status, error = EXIT_CONTRACT, "diagnostic-failed", str(exc)
    summary = {
        "schema_version": SCHEMA_VERSION,
        "package_version": __version__,
        "scenario": cfg.scenario,
        "status": status,
        "passed": code == EXIT_OK,
        "exit_code": code,
        "error": error,
        "config": cfg.as_dict(),
        "contracts": [x.as_dict() for x in out.contracts],
        "results": _jsonable(out.results),
    }
    (outdir / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    if "csv" in cfg.output["formats"]:
        for name, (cols, rows) in out.tables.items():
            _write_csv(outdir / f"{name}.csv", cols, rows)
    summary["elapsed_seconds"] = time.perf_counter() - t0  # not written, keeps summary.json deterministic
    return code, summary


# -- entry point --------------------------------------------------------------


def _cmd_run(args) -> int:
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    code, summary = execute(cfg)
    for x in summary["contracts"]:
        print(f"{'PASS' if x['passed'] else 'FAIL'}  {x['name']}: {x['value']} (threshold {x['threshold']})")
    if summary["error"]:
        print(f"{summary['status']}: {summary['error']}", file=sys.stderr)
    print(f"{cfg.scenario}: exit {code}, summary in {Path(cfg.output['directory'])}")
    return code


def _cmd_list(args) -> int:
    width = max(map(len, SCENARIOS))
    for name, desc in SCENARIOS.items():
        print(f"{name:<{width}}  {desc}")
    return EXIT_OK


def _cmd_ground_state(args) -> int:
    from .groundstate import load_or_solve, pohozaev_residuals

    try:
        d = make_domain(args.N, args.b, args.r_max, args.n)
        g = load_or_solve(args.k, d)
    except ParameterError as exc:
        print(f"parameter error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except UnderResolutionError as exc:
        print(f"resolution error: {exc}", file=sys.stderr)
        return EXIT_RESOLUTION
    res = pohozaev_residuals(g)
    print(json.dumps(_jsonable({
        "N": args.N, "b": args.b, "k": args.k, "Q0": g.shoot_value, "mass2": g.mass2, "grad2": g.grad2,
        "weighted": g.weighted, "theta": g.theta, "pohozaev_residuals": list(res),
    }), indent=2))
    return EXIT_OK if max(res) < 1e-5 else EXIT_CONTRACT


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="inls-lab", description="Radial mass-critical inhomogeneous NLS laboratory.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    p = sub.add_parser("run", help="run the scenario described by a config file")
    p.add_argument("config")
    p.set_defaults(func=_cmd_run)
    p = sub.add_parser("list", help="list scenario names")
    p.set_defaults(func=_cmd_list)
    p = sub.add_parser("ground-state", help="solve for Q_k and print its invariants")
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--b", type=float, required=True)
    p.add_argument("--k", type=float, default=1.0)
    p.add_argument("--r-max", dest="r_max", type=float, default=40.0)
    p.add_argument("--n", type=int, default=8192)
    p.set_defaults(func=_cmd_ground_state)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InlsError as exc:  # anything not mapped above
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONTRACT


if __name__ == "__main__":
    sys.exit(main())
