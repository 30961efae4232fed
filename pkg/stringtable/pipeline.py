"""Pipeline: stage definitions, shared state and the run loop.

Each stage reads its inputs from ``state``, stores the Python objects it
builds there, and returns a JSON summary. ``run_pipeline`` drives the stages
in order and collects the cross-checks into a ReportBundle.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field, replace

import numpy as np

from stringtable.config import RunConfig
from stringtable.errors import ClassificationConflict, FormulaMismatch, ReconstructionMismatch
from stringtable.tools.billiard import (
    PhasePoint,
    area_preserving_determinant,
    find_diameters,
    next_bounce,
    orbit,
    orbit_rows,
)
from stringtable.tools.curves import (
    branch_crossings,
    invariance_residual,
    one_sided_slopes,
    one_sided_slopes_fd,
    radial_defect,
    radial_second_derivative_fd,
    sample_curves,
    singular_points,
)
from stringtable.tools.spectrum import spectrum
from stringtable.tools.table import (
    choose_string_length,
    derivative_agreement,
    make_string_table,
    table_rows,
    width_spread,
)
from stringtable.tools.trig_series import TrigPoly
from stringtable.tools.twist import (
    PotentialSpec,
    TwistSystem,
    build_potential,
    corner_slopes,
    curve_deviation,
    curve_from_energy,
    one_sided_slopes_fd as twist_slopes_fd,
)
from stringtable.tools.vanishing import (
    SymmetricFunction,
    build_g,
    recover_perturbation,
    to_trigpoly,
)
from stringtable.tools.write import (
    phase_figure,
    sanitize_filename,
    table_figure,
    twist_figure,
    write_csv,
    write_json,
)

logger = logging.getLogger(__name__)

# ---------------------------------------------------------------------------
# Stage definitions
# ---------------------------------------------------------------------------

STAGES = [
    {"name": "build_g", "description": "Odd-symmetric g vanishing on the lifted direction set."},
    {"name": "recover", "description": "Perturbation f, translation c and h from g; reconstruction check."},
    {"name": "table", "description": "String table, positivity/convexity, constant-width check."},
    {"name": "diameters", "description": "Zeros of h' on [0, pi) and the 2-periodic chords."},
    {"name": "singular", "description": "Transversal crossings of the branches and their corner slopes."},
    {"name": "curves", "description": "Branches lambda_+- and splices; invariance residuals."},
    {"name": "spectrum", "description": "Hyperbolicity of every diameter by three routes."},
    {"name": "symplectic", "description": "det dT^2 in area-preserving coordinates at random phase points."},
    {"name": "twist", "description": "Potential with prescribed maxima, separatrix corners, energy drift."},
    {"name": "write", "description": "JSON reports, CSV exports and SVG figures."},
]

SUBCOMMANDS = {
    "table": ["build_g", "recover", "table", "write"],
    "curves": ["build_g", "recover", "table", "diameters", "singular", "curves", "write"],
    "spectrum": [
        "build_g", "recover", "table", "diameters", "singular", "curves",
        "spectrum", "symplectic", "write",
    ],
    "twist": ["twist", "write"],
}

SWEEP_STAGES = ["build_g", "recover", "table", "diameters", "singular"]
DRIFT_DURATION = 100.0
DEGENERATE_SLOPE_TOL = 1e-6
CIRCLE_MAP_TOL = 1e-9
SEPARATRIX_TOL = 1e-4

# Python objects passed between stages; cleared at the start of every run.
state: dict = {}


@dataclass
class Check:
    """One acceptance cross-check: passes when value <= limit."""

    name: str
    value: float
    limit: float

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.value) and self.value <= self.limit)

    def to_dict(self) -> dict:
        return {"name": self.name, "value": self.value, "limit": self.limit, "passed": self.passed}


@dataclass
class ReportBundle:
    """Everything a run produced: stage summaries, checks, failures and files."""

    config: RunConfig
    summaries: dict[str, dict] = field(default_factory=dict)
    checks: list[Check] = field(default_factory=list)
    failures: list[str] = field(default_factory=list)
    paths: dict[str, str] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return not self.failures and all(c.passed for c in self.checks)

    @property
    def exit_status(self) -> int:
        return 0 if self.passed else 2

    def to_dict(self) -> dict:
        return {
            "name": self.config.name,
            "config": self.config.to_dict(),
            "stages": self.summaries,
            "checks": [c.to_dict() for c in self.checks],
            "failures": list(self.failures),
            "passed": self.passed,
        }


def _check(name: str, value: float, limit: float) -> Check:
    check = Check(name, float(value), float(limit))
    state.setdefault("checks", []).append(check)
    if not check.passed:
        logger.warning("Check %s failed: %.3e > %.1e", name, check.value, limit)
    return check


def _require(*keys: str) -> str | None:
    missing = [k for k in keys if k not in state]
    if missing:
        return json.dumps({"error": f"Must run the stage producing {missing[0]!r} first"})
    return None


# ---------------------------------------------------------------------------
# Stage execution
# ---------------------------------------------------------------------------


def _stage_build_g(config: RunConfig) -> dict:
    if config.series is not None:
        g = SymmetricFunction.from_trig(TrigPoly.from_json(config.series), tag=config.variant)
        source = "series"
    elif config.direction_set.is_empty():
        g = SymmetricFunction.from_trig(TrigPoly.constant(0.0))
        source = "circle"
    else:
        g = build_g(config.direction_set, config.variant, config.amplitude, config.weights)
        source = "direction_set"
        if config.backend == "trigpoly":
            g, residual = to_trigpoly(g, config.degree, config.fit_grid)
            state["fit_residual"] = residual
    state["g"] = g
    state["source"] = source
    _check("g_symmetry", g.symmetry_defect(), 1e-12)
    return {"source": source, "tag": g.tag, "has_poly": g.poly is not None}


def _stage_recover(config: RunConfig) -> dict:
    tol = config.tolerance("reconstruction")
    g = state["g"]
    pd = recover_perturbation(g, degree=config.degree, grid=config.fit_grid, tol=tol)
    state["perturbation"] = pd
    _check("reconstruction", pd.reconstruction_error, tol)
    summary = {
        "backend": pd.backend,
        "c": [pd.c.x, pd.c.y],
        "reconstruction_error": pd.reconstruction_error,
        "fit_residual": pd.fit_residual,
        "projection_defect": pd.projection_defect,
    }
    if g.poly is not None and g.poly.degree > 0:
        other = recover_perturbation(g, route="differential", degree=config.degree,
                                     grid=config.fit_grid, tol=tol)
        gap = float(np.abs((pd.f - other.f).coeffs).max())
        summary["route_gap"] = gap
        _check("route_agreement", gap, tol)
    return summary


def _stage_table(config: RunConfig) -> dict:
    pd = state["perturbation"]
    ell = choose_string_length(pd, config.tau, config.scan_grid) if config.ell == "auto" else config.ell
    st = make_string_table(pd, config.tau, ell, config.scan_grid)
    state["table"] = st
    spread = width_spread(st.body())
    _check("constant_width", spread, config.tolerance("width"))
    summary = {"tau": st.tau, "ell": st.ell, "width_spread": spread}
    if st.is_circle:
        t = np.linspace(0.0, 2 * np.pi, 257)
        radius = float(np.max(np.abs(np.abs(np.asarray(st.boundary(t))) - (ell + 1) / 2)))
        _check("circle_radius", radius, config.tolerance("circle"))
        worst = 0.0
        for t0, theta in [(0.0, 0.7), (1.3, 1.1), (4.0, 2.2)]:
            image = next_bounce(st, PhasePoint(t0, theta))
            worst = max(worst, abs(np.angle(np.exp(1j * (image.t - t0 - 2 * theta)))))
        _check("circle_map", worst, CIRCLE_MAP_TOL)
        summary["radius_deviation"] = radius
    else:
        agreement = derivative_agreement(st)
        _check("derivative_agreement", agreement, 1e-5)
        summary["derivative_agreement"] = agreement
    return summary


def _stage_diameters(config: RunConfig) -> dict:
    scan = find_diameters(state["table"], config.scan_grid)
    state["scan"] = scan
    return {
        "count": len(scan.diameters),
        "continua": len(scan.continua),
        "degenerate": scan.degenerate,
        "minimum_gap": scan.minimum_gap if scan.diameters else None,
    }


def _stage_singular(config: RunConfig) -> dict:
    st = state["table"]
    points = singular_points(st, state["scan"])
    state["singular"] = points
    tol = config.tolerance("slope")
    worst_slope = worst_radial = 0.0
    for p in points:
        exact = np.array(one_sided_slopes(st, p.t0))
        approx = np.array(one_sided_slopes_fd(st, p.t0))
        worst_slope = max(worst_slope, float(np.abs(exact - approx).max()))
        worst_radial = max(
            worst_radial, abs(radial_second_derivative_fd(st, p.t0) - radial_defect(st, p.t0))
        )
    if points:
        _check("corner_slopes", worst_slope, tol)
        _check("radial_second_derivative", worst_radial, tol)
    return {
        "count": len(points),
        "t0": [p.t0 for p in points],
        "continuum": bool(state["scan"].degenerate),
    }


def _stage_curves(config: RunConfig) -> dict:
    st = state["table"]
    sample = sample_curves(st, config.curve_samples, state["scan"])
    state["curves"] = sample
    tol = config.tolerance("invariance")
    residuals = {}
    for branch in ("plus", "minus", "spliced", "spliced_min"):
        residuals[branch] = invariance_residual(
            st, branch, config.curve_samples, sample=sample, stride=config.invariance_stride
        )
        _check(f"invariance_{branch}", residuals[branch], tol)
    return {
        "samples": config.curve_samples,
        "residuals": residuals,
        "feet": len(sample.crossings),
        "crossings": len(branch_crossings(sample)),
    }


def _stage_spectrum(config: RunConfig) -> dict:
    results = spectrum(state["table"], state["scan"])
    state["spectrum"] = results
    counts: dict[str, int] = {}
    for r in results:
        counts[r.classification] = counts.get(r.classification, 0) + 1
    return {"count": len(results), "classes": counts}


def _stage_symplectic(config: RunConfig) -> dict:
    st = state["table"]
    rng = np.random.default_rng(0)
    t = rng.uniform(0.0, 2 * np.pi, config.determinant_samples)
    theta = rng.uniform(0.3, np.pi - 0.3, config.determinant_samples)
    worst = max(
        abs(area_preserving_determinant(st, PhasePoint(float(a), float(b)), order=2) - 1.0)
        for a, b in zip(t, theta)
    )
    _check("symplectic_determinant", worst, config.tolerance("determinant"))
    return {"samples": config.determinant_samples, "max_deviation": worst}


def _stage_twist(config: RunConfig) -> dict:
    twist = config.twist
    if twist is None:
        return {"skipped": True}
    spec = PotentialSpec.from_dict(vars(twist))
    pot = build_potential(spec, twist.amplitude)
    system = TwistSystem(twist.a, twist.b, pot)
    curve = curve_from_energy(pot, twist.b)
    state["twist"] = (system, curve)

    tol = config.tolerance("slope")
    corners = []
    worst_corner = worst_flat = 0.0
    gaps = np.diff(np.concatenate([pot.maxima, pot.maxima[:1] + 1.0]))
    nearest = np.minimum(gaps, np.roll(gaps, 1))
    for x0, degenerate, gap in zip(pot.maxima, pot.degenerate, nearest):
        exact = np.array(corner_slopes(pot, twist.b, float(x0)))
        approx = np.array(twist_slopes_fd(curve, float(x0), step=min(1e-5, gap / 300)))
        if degenerate:
            worst_flat = max(worst_flat, float(np.abs(approx).max()))
        else:
            worst_corner = max(worst_corner, float(np.abs(exact - approx).max()))
        corners.append({"X0": float(x0), "degenerate": bool(degenerate),
                        "slopes": exact.tolist(), "slopes_fd": approx.tolist()})
    if not pot.degenerate.all():
        _check("twist_corner_slopes", worst_corner, tol)
    if pot.degenerate.any():
        _check("twist_flat_slopes", worst_flat, DEGENERATE_SLOPE_TOL)

    X = (np.arange(8) + 0.5) / 8
    P = np.linspace(0.2, 1.0, 8)
    start = system.energy(X, P)
    X1, P1 = system.flow(X, P, DRIFT_DURATION)
    drift = float(np.abs(system.energy(X1, P1) - start).max())
    _check("energy_drift", drift, config.tolerance("energy_drift"))
    deviation = curve_deviation(system, curve)
    _check("separatrix_invariance", deviation, SEPARATRIX_TOL)

    state["twist_corners"] = corners
    return {"maxima": len(corners), "energy": curve.energy, "drift": drift,
            "curve_deviation": deviation}


def _twist_orbits(config: RunConfig) -> list[tuple[np.ndarray, np.ndarray]]:
    system, curve = state["twist"]
    top = float(np.max(curve.rows()["P"])) or 1.0
    X = np.full(config.twist.orbits, 0.5)
    P = np.linspace(-1.5 * top, 1.5 * top, config.twist.orbits)
    xs, ps = [X.copy()], [P.copy()]
    for _ in range(config.twist.periods):
        X, P = system.flow(X, P, 1.0, step=1e-2)
        xs.append(X.copy())
        ps.append(P.copy())
    return [(np.array(xs)[:, j], np.array(ps)[:, j]) for j in range(X.size)]


def _stage_write(config: RunConfig) -> dict:
    out = config.out_dir / sanitize_filename(config.name)
    paths: dict[str, str] = {}
    if "table" in state:
        st = state["table"]
        paths["table"] = str(write_csv(table_rows(st, config.curve_samples), out / "table.csv"))
        if config.orbit:
            start = PhasePoint(float(config.orbit["t"]), float(config.orbit["theta"]))
            rows = orbit_rows(st, orbit(st, start, int(config.orbit.get("steps", 100))))
            paths["orbit"] = str(write_csv(rows, out / "orbit.csv"))
    if "curves" in state:
        paths["curves"] = str(write_csv(state["curves"].rows(), out / "curves.csv"))
    if "singular" in state:
        points = [p.to_dict() for p in state["singular"]]
        paths["singular_points"] = str(write_json(points, out / "singular_points.json"))
    if "spectrum" in state:
        rows = [r.to_dict() for r in state["spectrum"]]
        paths["spectrum"] = str(write_json(rows, out / "spectrum.json"))
    if "twist_corners" in state:
        paths["twist"] = str(write_json(state["twist_corners"], out / "twist.json"))
    if config.emit_svg:
        if "table" in state:
            diameters = state["scan"].diameters if "scan" in state else []
            paths["table_svg"] = str(table_figure(state["table"], diameters, out / "table.svg",
                                                  title=config.name))
        if "curves" in state:
            paths["phase_svg"] = str(phase_figure(state["curves"], state.get("singular", []),
                                                  out / "phase.svg", title=config.name))
        if "twist" in state:
            paths["twist_svg"] = str(twist_figure(state["twist"][1], _twist_orbits(config),
                                                  out / "twist.svg", title=config.name))
    state["paths"] = paths
    return {"directory": str(out), "files": sorted(paths)}


_DISPATCH = {
    "build_g": (_stage_build_g, ()),
    "recover": (_stage_recover, ("g",)),
    "table": (_stage_table, ("perturbation",)),
    "diameters": (_stage_diameters, ("table",)),
    "singular": (_stage_singular, ("table", "scan")),
    "curves": (_stage_curves, ("table", "scan")),
    "spectrum": (_stage_spectrum, ("table", "scan")),
    "symplectic": (_stage_symplectic, ("table",)),
    "twist": (_stage_twist, ()),
    "write": (_stage_write, ()),
}


def execute_stage(name: str, config: RunConfig) -> str:
    """Execute a stage by name and return a JSON summary.

    Updates the global state dict with Python objects.
    """
    if name not in _DISPATCH:
        return json.dumps({"error": f"Unknown stage: {name}"})
    func, needs = _DISPATCH[name]
    missing = _require(*needs)
    if missing:
        return missing
    summary = func(config)
    return json.dumps({"status": "success", **summary}, sort_keys=True, default=float)


# ---------------------------------------------------------------------------
# Runs
# ---------------------------------------------------------------------------


def run_pipeline(config: RunConfig, stages: list[str] | None = None) -> ReportBundle:
    """Run ``stages`` (default: every stage that applies) and write report.json.

    Cross-check failures (conflicting classifications, formula or
    reconstruction mismatches) end the run early and are recorded in the
    bundle; other StringTableErrors propagate.
    """
    state.clear()
    if stages is None:
        stages = SUBCOMMANDS["spectrum"][:-1] + (["twist"] if config.twist else []) + ["write"]
    bundle = ReportBundle(config=config)

    for name in stages:
        logger.info("Running stage: %s", name)
        try:
            result = json.loads(execute_stage(name, config))
        except (ClassificationConflict, FormulaMismatch, ReconstructionMismatch) as exc:
            logger.error("Stage %s failed a cross-check: %s", name, exc)
            bundle.failures.append(f"{name}: {exc}")
            if "write" in stages and name != "write":
                execute_stage("write", config)
            break
        if "error" in result:
            logger.error("Stage %s: %s", name, result["error"])
            bundle.failures.append(f"{name}: {result['error']}")
            break
        result.pop("status", None)
        bundle.summaries[name] = result

    bundle.checks = list(state.get("checks", []))
    bundle.paths = dict(state.get("paths", {}))
    if "write" in stages:
        out = config.out_dir / sanitize_filename(config.name)
        bundle.paths["report"] = str(write_json(bundle.to_dict(), out / "report.json"))
    logger.info(
        "Run %s: %d checks, %d failed, %d stage failures",
        config.name, len(bundle.checks), sum(not c.passed for c in bundle.checks),
        len(bundle.failures),
    )
    return bundle


@dataclass
class SweepReport:
    """Singular-point locations per tau and their drift across the family."""

    taus: list[float]
    locations: list[list[float]]
    drift: float
    limit: float

    @property
    def passed(self) -> bool:
        return self.drift <= self.limit

    @property
    def exit_status(self) -> int:
        return 0 if self.passed else 2

    def to_dict(self) -> dict:
        return {
            "taus": self.taus,
            "locations": self.locations,
            "drift": self.drift,
            "limit": self.limit,
            "passed": self.passed,
        }


def sweep(config: RunConfig, limit: float = 1e-6) -> SweepReport:
    """Repeat the singular-point stages for tau = fraction * config.tau.

    The zeros of g do not depend on tau, so the transversal crossings of every
    tau > 0 table must sit at the same t.
    """
    taus = [float(f) * config.tau for f in config.sweep]
    locations: list[list[float]] = []
    for tau in taus:
        bundle = run_pipeline(replace(config, tau=tau), SWEEP_STAGES)
        if bundle.failures:
            locations.append([])
            continue
        locations.append([p.t0 for p in state["singular"]])

    drift = 0.0
    reference = next((loc for tau, loc in zip(taus, locations) if tau > 0 and loc), None)
    for tau, loc in zip(taus, locations):
        if tau == 0 or reference is None:
            continue
        if len(loc) != len(reference):
            drift = float("inf")
            break
        if not loc:
            continue
        # nearest reference point, distances taken on the circle
        offsets = np.subtract.outer(np.array(loc), np.array(reference))
        nearest = np.abs(np.angle(np.exp(1j * offsets))).min(axis=1)
        drift = max(drift, float(nearest.max()))
    report = SweepReport(taus, locations, drift, limit)
    path = config.out_dir / sanitize_filename(config.name) / "sweep.json"
    write_json(report.to_dict(), path)
    logger.info("Sweep over %d values of tau: drift %.3e", len(taus), drift)
    return report
