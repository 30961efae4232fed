"""Invariant curves: the two pencil branches of T^2, their splices and corners.

The branch lambda_- is the ray from Gamma(t) through the centre of the inner
circle; lambda_+ is its reflection. T maps one branch onto the other, so each
is T^2-invariant and the pointwise max/min splices are T-invariant.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from stringtable.errors import ClassificationConflict, DegenerateTangent, NotACriticalPoint
from stringtable.tools.billiard import (
    Diameter,
    DiameterScan,
    PhasePoint,
    find_diameters,
    hdot,
    iterate,
)
from stringtable.tools.table import StringTable, curvature_of_boundary
from stringtable.tools.trig_series import sample_grid

logger = logging.getLogger(__name__)

CURVE_SAMPLES = 4096
CRITICAL_TOL = 1e-8
TRANSVERSAL_TOL = 1e-10
SLOPE_STEP = 1e-5


def lambda_pm(st: StringTable, t):
    """(lambda_+, lambda_-) = arccos(+-<Gamma, Gamma'> / (|Gamma| |Gamma'|)).

    Raises:
        DegenerateTangent: Gamma'(t) vanishes.
    """
    gamma, d1, _ = st.boundary_derivatives(t)
    speed = np.abs(d1)
    if np.min(speed) < 1e-12:
        raise DegenerateTangent(f"Gamma' vanishes near t = {t}")
    cosine = (np.conj(gamma) * d1).real / (np.abs(gamma) * speed)
    cosine = np.clip(cosine, -1.0, 1.0)
    plus, minus = np.arccos(cosine), np.arccos(-cosine)
    if np.ndim(plus) == 0:
        return float(plus), float(minus)
    return plus, minus


@dataclass
class CurveSample:
    """Both branches and the splices on a uniform grid of [0, 2pi)."""

    t: np.ndarray
    plus: np.ndarray
    minus: np.ndarray
    crossings: list[float] = field(default_factory=list)

    @property
    def spliced(self) -> np.ndarray:
        return np.maximum(self.plus, self.minus)

    @property
    def spliced_min(self) -> np.ndarray:
        return np.minimum(self.plus, self.minus)

    def rows(self) -> dict[str, np.ndarray]:
        return {
            "t": self.t,
            "lambda_plus": self.plus,
            "lambda_minus": self.minus,
            "spliced": self.spliced,
            "spliced_min": self.spliced_min,
        }


def _feet(scan: DiameterScan) -> list[float]:
    feet = [d.t0 for d in scan.diameters] + [d.t0 + np.pi for d in scan.diameters]
    return sorted(feet)


def sample_curves(
    st: StringTable, samples: int = CURVE_SAMPLES, scan: DiameterScan | None = None
) -> CurveSample:
    """Sample lambda_+- and mark the crossings at the zeros of h'."""
    t = sample_grid(samples)
    plus, minus = lambda_pm(st, t)
    scan = scan or find_diameters(st)
    return CurveSample(t, plus, minus, _feet(scan))


def branch_crossings(sample: CurveSample) -> list[float]:
    """Sign changes of lambda_+ - lambda_- on the sample grid (cell midpoints).

    Samples where the branches agree exactly count as crossings themselves.
    """
    diff = sample.plus - sample.minus
    wrapped = np.concatenate([diff, diff[:1]])
    t = np.concatenate([sample.t, [2 * np.pi]])
    idx = np.flatnonzero(np.sign(wrapped[:-1]) * np.sign(wrapped[1:]) < 0)
    found = [float(0.5 * (t[i] + t[i + 1])) for i in idx]
    found += [float(sample.t[i]) for i in np.flatnonzero(diff == 0.0)]
    return sorted(found)


class _Branches:
    """Periodic cubic interpolants of both branches."""

    def __init__(self, sample: CurveSample):
        t = np.concatenate([sample.t, [2 * np.pi]])
        self.plus = CubicSpline(t, np.concatenate([sample.plus, sample.plus[:1]]), bc_type="periodic")
        self.minus = CubicSpline(t, np.concatenate([sample.minus, sample.minus[:1]]), bc_type="periodic")

    def __call__(self, branch: str, t):
        t = np.mod(t, 2 * np.pi)
        if branch == "plus":
            return self.plus(t)
        if branch == "minus":
            return self.minus(t)
        if branch == "spliced":
            return np.maximum(self.plus(t), self.minus(t))
        return np.minimum(self.plus(t), self.minus(t))


def invariance_residual(
    st: StringTable,
    branch: str = "plus",
    samples: int = CURVE_SAMPLES,
    sample: CurveSample | None = None,
    stride: int = 1,
) -> float:
    """Largest theta-distance between the image of the curve and the curve.

    Branches "plus" and "minus" are mapped by T^2, the splices "spliced" and
    "spliced_min" by T. ``stride`` maps every stride-th sample only.
    """
    if sample is None or sample.t.size != samples:
        t = sample_grid(samples)
        plus, minus = lambda_pm(st, t)
        sample = CurveSample(t, plus, minus)
    branches = _Branches(sample)
    order = 2 if branch in ("plus", "minus") else 1
    values = {
        "plus": sample.plus,
        "minus": sample.minus,
        "spliced": sample.spliced,
        "spliced_min": sample.spliced_min,
    }[branch]

    worst = 0.0
    for i in range(0, sample.t.size, stride):
        image = iterate(st, PhasePoint(float(sample.t[i]), float(values[i])), order)
        worst = max(worst, abs(image.theta - float(branches(branch, image.t))))
    logger.debug("Invariance residual of %s: %.3e", branch, worst)
    return worst


# ---------------------------------------------------------------------------
# Corners
# ---------------------------------------------------------------------------


def _require_critical(st: StringTable, t0: float) -> None:
    value = float(hdot(st, t0))
    if abs(value) > CRITICAL_TOL:
        raise NotACriticalPoint(f"h'({t0:.6f}) = {value:.3e} is not zero")


def radial_defect(st: StringTable, t0: float) -> float:
    """1/|Gamma| - k at t0, the second arc-length derivative of |Gamma| there."""
    return 1.0 / abs(st.boundary(t0)) - curvature_of_boundary(st, t0)


def branch_slopes(st: StringTable, t0: float) -> tuple[float, float]:
    """Arc-length slopes (lambda_+', lambda_-') at a diameter foot."""
    _require_critical(st, t0)
    kappa = radial_defect(st, t0)
    return -kappa, kappa


def branch_slopes_fd(st: StringTable, t0: float, step: float = SLOPE_STEP) -> tuple[float, float]:
    """Finite-difference counterpart of branch_slopes."""
    speed = float(st.speed(t0))
    plus_r, minus_r = lambda_pm(st, t0 + step)
    plus_l, minus_l = lambda_pm(st, t0 - step)
    return (plus_r - plus_l) / (2 * step * speed), (minus_r - minus_l) / (2 * step * speed)


def one_sided_slopes(st: StringTable, t0: float) -> tuple[float, float]:
    """(left, right) arc-length slopes of the max-splice at a diameter foot.

    Raises:
        NotACriticalPoint: h'(t0) is not zero.
    """
    a, b = branch_slopes(st, t0)
    return min(a, b), max(a, b)


def one_sided_slopes_fd(st: StringTable, t0: float, step: float = SLOPE_STEP) -> tuple[float, float]:
    """One-sided differences of the max-splice in arc length."""
    speed = float(st.speed(t0))
    centre = max(lambda_pm(st, t0))
    left = (centre - max(lambda_pm(st, t0 - step))) / (step * speed)
    right = (max(lambda_pm(st, t0 + step)) - centre) / (step * speed)
    return left, right


def radial_second_derivative_fd(st: StringTable, t0: float, step: float = 1e-4) -> float:
    """d^2|Gamma|/dxi^2 at a critical point by differences of the analytic S'."""
    def lead(s):
        return float(st.geometry(s).S1)

    def central(h):
        return (lead(t0 + h) - lead(t0 - h)) / (2 * h)

    sddot = (4 * central(step / 2) - central(step)) / 3
    return -sddot / float(st.speed(t0)) ** 2


@dataclass(frozen=True)
class SingularPoint:
    """A crossing of the two branches at a diameter foot."""

    t0: float
    slopes: tuple[float, float]
    sddot: float
    sddot_fd: float
    classification: str  # "transversal" | "tangential" | "continuum-boundary"

    def to_dict(self) -> dict:
        return {
            "t0": self.t0,
            "slopes": list(self.slopes),
            "sddot": self.sddot,
            "sddot_fd": self.sddot_fd,
            "class": self.classification,
        }


def transversality(
    st: StringTable, t0: float, step: float = 1e-4, tol: float = TRANSVERSAL_TOL
) -> SingularPoint:
    """Classify the crossing at t0 by two routes.

    (a) s'' = (h''/2)(1 - 2h''/(ell + 1 - h)) from h alone.
    (b) s'' from Richardson differences of the analytic s'.

    Raises:
        NotACriticalPoint: h'(t0) is not zero.
        ClassificationConflict: The routes disagree on zero/nonzero or sign.
    """
    _require_critical(st, t0)
    _, G1, _, H = st.fields(t0)
    hddot = -float(G1)
    predicted = 0.5 * hddot * (1.0 - 2.0 * hddot / (st.ell + 1.0 - float(H)))
    measured = -radial_second_derivative_fd(st, t0, step) * float(st.speed(t0)) ** 2

    zero_a = abs(predicted) <= tol
    zero_b = abs(measured) <= tol
    if zero_a != zero_b or (not zero_a and np.sign(predicted) != np.sign(measured)):
        raise ClassificationConflict(
            f"At t0 = {t0:.9f}: closed form s'' = {predicted:.3e}, differences give {measured:.3e}"
        )
    if st.is_circle:
        verdict = "continuum-boundary"
    else:
        verdict = "tangential" if zero_a else "transversal"
    slopes = one_sided_slopes(st, t0)
    return SingularPoint(float(t0), slopes, predicted, measured, verdict)


def _steps(diameters: list[Diameter]) -> list[float]:
    """FD step per diameter: 1/32 of the distance to its neighbours, at most 1e-4.

    Near a flat diameter next to a short gap the bump tail decays like
    exp(-gap/step); at 1/32 it is below any classification threshold.
    """
    if len(diameters) < 2:
        return [1e-4] * len(diameters)
    t = np.array([d.t0 for d in diameters])
    gaps = np.diff(np.concatenate([t[-1:] - np.pi, t, t[:1] + np.pi]))
    nearest = np.minimum(gaps[:-1], gaps[1:])
    return [float(min(1e-4, g / 32)) for g in nearest]


def singular_points(st: StringTable, scan: DiameterScan | None = None) -> list[SingularPoint]:
    """Transversal crossings on [0, 2pi), sorted by t0."""
    scan = scan or find_diameters(st)
    if scan.degenerate:
        logger.info("Continuum of diameters: no singular points")
        return []
    points = []
    for diameter, step in zip(scan.diameters, _steps(scan.diameters)):
        for foot in (diameter.t0, diameter.t0 + np.pi):
            point = transversality(st, foot, step)
            if point.classification == "transversal":
                points.append(point)
    points.sort(key=lambda p: p.t0)
    logger.info("%d transversal singular points, minimum gap %.3e",
                len(points), minimum_gap(points))
    return points


def minimum_gap(points: list[SingularPoint]) -> float:
    if len(points) < 2:
        return float("inf")
    t = np.array([p.t0 for p in points])
    return float(np.diff(np.concatenate([t, [t[0] + 2 * np.pi]])).min())
