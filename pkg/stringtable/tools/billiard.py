"""Billiard map: bounces, Jacobians and 2-periodic diameters of a string table.

Phase coordinates are (t, theta): t is the tangent-angle parameter of the
bounce point and theta in (0, pi) the angle from the positive tangent to the
outgoing ray.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.optimize import brentq

from stringtable.errors import NoConvergence, TangentialShot
from stringtable.tools.table import SCAN_GRID, StringTable

logger = logging.getLogger(__name__)

TWO_PI = 2 * np.pi
THETA_MIN = 1e-6
BRACKET_POINTS = 512
JACOBIAN_STEP = 1e-6
PLATEAU_TOL = 1e-11
FLAT_TOL = 1e-12
ROOT_XTOL = 1e-14
SIDE_TOL = 1e-14


class PhasePoint(NamedTuple):
    t: float
    theta: float

    def reversed(self) -> "PhasePoint":
        """The same chord travelled backwards."""
        return PhasePoint(self.t, np.pi - self.theta)


def _wrap(dt):
    """Representative of an angle difference in [-pi, pi)."""
    return np.mod(dt + np.pi, TWO_PI) - np.pi


def _unit_tangent(st: StringTable, t: float) -> complex:
    d1 = st.boundary_derivatives(t)[1]
    d1 = complex(np.asarray(d1))
    return d1 / abs(d1)


def _cross(a: complex, b) -> float:
    return (np.conj(a) * b).imag


def _polish(func, lo: float, hi: float, limits: tuple[float, float]) -> float:
    """Root of an increasing func near [lo, hi], endpoints re-evaluated one at a time.

    Scalar and vectorised evaluations can disagree in sign at rounding level
    when the root sits on a scan point: an endpoint within SIDE_TOL of zero is
    the root, and agreeing signs move the bracket one cell outward.
    """
    cell = TWO_PI / BRACKET_POINTS
    f_lo, f_hi = func(lo), func(hi)
    for _ in range(BRACKET_POINTS):
        if abs(f_lo) <= SIDE_TOL:
            return lo
        if abs(f_hi) <= SIDE_TOL:
            return hi
        if f_lo < 0.0 < f_hi:
            return brentq(func, lo, hi, xtol=ROOT_XTOL, maxiter=200)
        if f_hi < 0.0:
            lo, f_lo = hi, f_hi
            hi = min(hi + cell, limits[1])
            f_hi = func(hi)
        else:
            hi, f_hi = lo, f_lo
            lo = max(lo - cell, limits[0])
            f_lo = func(lo)
    raise NoConvergence(f"No sign change of the chord function near [{lo:.6f}, {hi:.6f}]")


def next_bounce(st: StringTable, p: PhasePoint) -> PhasePoint:
    """Apply the billiard map once.

    Raises:
        TangentialShot: theta within THETA_MIN of 0 or pi.
        NoConvergence: The chord root could not be bracketed or polished.
    """
    t, theta = float(p.t), float(p.theta)
    if not (THETA_MIN < theta < np.pi - THETA_MIN):
        raise TangentialShot(f"theta = {theta:.3e} is too close to the tangent")

    start = complex(np.asarray(st.boundary(t)))
    ray = _unit_tangent(st, t) * np.exp(1j * theta)

    def side(s):
        return _cross(ray, np.asarray(st.boundary(s)) - start)

    # side < 0 right after departure and > 0 right before returning
    s = t + TWO_PI * np.arange(1, BRACKET_POINTS) / BRACKET_POINTS
    values = side(s)
    positive = np.flatnonzero(values > 0)
    if positive.size == 0:
        lo, hi = s[-1], t + TWO_PI - 1e-3 * (np.pi - theta)
    elif positive[0] == 0:
        lo, hi = t + 1e-3 * theta, s[0]
    else:
        lo, hi = s[positive[0] - 1], s[positive[0]]
    limits = (t + 1e-3 * theta, t + TWO_PI - 1e-3 * (np.pi - theta))
    try:
        root = _polish(lambda x: float(side(x)), lo, hi, limits)
    except (ValueError, RuntimeError) as exc:
        raise NoConvergence(f"Bounce from t = {t:.6f}, theta = {theta:.6f}: {exc}") from exc

    arrival = _unit_tangent(st, root)
    incoming = np.angle(np.conj(arrival) * ray)
    return PhasePoint(float(np.mod(root, TWO_PI)), float(-incoming))


def iterate(st: StringTable, p: PhasePoint, times: int) -> PhasePoint:
    for _ in range(times):
        p = next_bounce(st, p)
    return p


def orbit(st: StringTable, p: PhasePoint, steps: int) -> list[PhasePoint]:
    """p and its first ``steps`` images."""
    points = [PhasePoint(float(np.mod(p.t, TWO_PI)), float(p.theta))]
    for _ in range(steps):
        points.append(next_bounce(st, points[-1]))
    return points


def orbit_rows(st: StringTable, points: list[PhasePoint]) -> list[dict]:
    """Rows (iteration, t, theta, x, y) of an orbit dump."""
    rows = []
    for i, p in enumerate(points):
        z = complex(np.asarray(st.boundary(p.t)))
        rows.append({"iteration": i, "t": p.t, "theta": p.theta, "x": z.real, "y": z.imag})
    return rows


# ---------------------------------------------------------------------------
# Jacobians
# ---------------------------------------------------------------------------


def jacobian_fd(
    st: StringTable, p: PhasePoint, order: int = 1, step: float = JACOBIAN_STEP
) -> np.ndarray:
    """Jacobian of T (order 1) or T^2 (order 2) in (t, theta) coordinates.

    Central differences at steps h and h/2, combined by Richardson extrapolation.
    """
    base = np.array([p.t, p.theta], dtype=float)
    image = np.array(iterate(st, p, order))

    def column(j: int, h: float) -> np.ndarray:
        e = np.zeros(2)
        e[j] = h
        plus = np.array(iterate(st, PhasePoint(*(base + e)), order))
        minus = np.array(iterate(st, PhasePoint(*(base - e)), order))
        diff = plus - minus
        diff[0] = _wrap(plus[0] - image[0]) - _wrap(minus[0] - image[0])
        return diff / (2 * h)

    jac = np.empty((2, 2))
    for j in range(2):
        jac[:, j] = (4 * column(j, step / 2) - column(j, step)) / 3
    return jac


def area_preserving_determinant(st: StringTable, p: PhasePoint, order: int = 1) -> float:
    """det of the Jacobian in (arc length, -cos theta) coordinates; 1 for a billiard."""
    jac = jacobian_fd(st, p, order)
    image = iterate(st, p, order)
    weight_in = float(st.speed(p.t)) * np.sin(p.theta)
    weight_out = float(st.speed(image.t)) * np.sin(image.theta)
    return float(np.linalg.det(jac) * weight_out / weight_in)


# ---------------------------------------------------------------------------
# Diameters
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Diameter:
    """A 2-periodic chord orthogonal to the boundary at t0 and t0 + pi."""

    t0: float
    d: float
    h: float
    hddot: float
    kind: str  # "isolated" | "flat"

    def phase_point(self) -> PhasePoint:
        return PhasePoint(self.t0, np.pi / 2)

    def to_dict(self) -> dict:
        return {"t0": self.t0, "d": self.d, "h": self.h, "hddot": self.hddot, "kind": self.kind}


@dataclass
class DiameterScan:
    """Zeros of h' on [0, pi): isolated diameters plus continuum intervals."""

    diameters: list[Diameter] = field(default_factory=list)
    continua: list[tuple[float, float]] = field(default_factory=list)
    degenerate: bool = False  # h' vanishes identically

    @property
    def minimum_gap(self) -> float:
        if len(self.diameters) < 2:
            return float("inf")
        t = np.array([d.t0 for d in self.diameters])
        gaps = np.diff(np.concatenate([t, [t[0] + np.pi]]))
        return float(gaps.min())


def hdot(st: StringTable, t):
    """h'(t) = -tau g(t)."""
    return -np.asarray(st.fields(t)[0])


def _window(t, step: float):
    """Map angles into the scan window [-step/2, pi - step/2)."""
    return np.mod(np.asarray(t) + step / 2, np.pi) - step / 2


def _diameter(st: StringTable, t0: float, kind: str | None) -> Diameter:
    t0 = float(np.mod(t0, np.pi))
    G, G1, _, H = st.fields(t0)
    near, far = st.boundary(t0), st.boundary(t0 + np.pi)
    hddot = -float(G1)
    if kind is None:
        kind = "isolated" if abs(hddot) > FLAT_TOL else "flat"
    return Diameter(t0, abs(near) + abs(far), float(H), hddot, kind)


def find_diameters(
    st: StringTable, grid: int = SCAN_GRID, plateau_tol: float = PLATEAU_TOL
) -> DiameterScan:
    """Locate every zero of h' on [0, pi).

    Sign changes are polished with Brent's method. Runs of |h'| < plateau_tol
    on three or more samples are continua unless the profile of g knows the
    exact components inside them.
    """
    step = TWO_PI / grid
    t = -step / 2 + step * np.arange(grid // 2 + 1)
    g = st.perturbation.g
    if g.knots.size:
        t = np.unique(np.concatenate([t, _window(g.knots, step)]))
    y = hdot(st, t)
    tiny = np.abs(y) < plateau_tol
    if tiny.all():
        logger.info("h' vanishes identically: every diameter is 2-periodic")
        return DiameterScan(degenerate=True)

    atoms = []
    if g.zeros is not None:
        atoms = [(float(_window(a.lo, step)), a) for a in g.zeros.atoms[: g.zeros.half]]

    def polish(lo: float, hi: float) -> float:
        return brentq(lambda s: float(hdot(st, s)), lo, hi, xtol=ROOT_XTOL, maxiter=200)

    roots: list[tuple[float, str | None]] = []
    continua: list[tuple[float, float]] = []
    seen_atoms: set[int] = set()
    n = t.size
    i = 0
    while i < n:
        if not tiny[i]:
            if i + 1 < n and not tiny[i + 1] and y[i] * y[i + 1] < 0:
                roots.append((polish(t[i], t[i + 1]), None))
            i += 1
            continue
        j = i
        while j + 1 < n and tiny[j + 1]:
            j += 1
        lo, hi = max(i - 1, 0), min(j + 1, n - 1)
        inside = [
            (x, a) for x, a in atoms
            if t[lo] - 1e-12 <= x <= t[hi] + 1e-12 and id(a) not in seen_atoms
        ]
        if inside:
            for x, a in inside:
                seen_atoms.add(id(a))
                if a.kind == "interval":
                    continua.append((float(np.mod(a.lo, np.pi)), float(np.mod(a.lo, np.pi) + a.hi - a.lo)))
                else:
                    roots.append((x, a.kind))
        elif not atoms and j - i >= 2:
            continua.append((float(t[i]), float(t[j])))
        elif y[lo] * y[hi] < 0:
            roots.append((polish(t[lo], t[hi]), None))
        else:
            k = i + int(np.argmin(np.abs(y[i: j + 1])))
            roots.append((float(t[k]), "flat"))
        i = j + 1

    if len(continua) >= 2 and continua[0][0] <= t[0] and continua[-1][1] >= t[-1]:
        first, last = continua.pop(0), continua.pop()
        continua.append((last[0], first[1] + np.pi))

    diameters: list[Diameter] = []
    for root, kind in sorted(roots, key=lambda r: np.mod(r[0], np.pi)):
        candidate = _diameter(st, root, kind)
        if diameters and abs(_wrap(2 * (candidate.t0 - diameters[-1].t0)) / 2) < 1e-9:
            continue
        diameters.append(candidate)
    if len(diameters) > 1 and abs(diameters[-1].t0 - diameters[0].t0 - np.pi) < 1e-9:
        diameters.pop()

    scan = DiameterScan(diameters=diameters, continua=sorted(continua))
    logger.info(
        "Found %d diameters and %d continua on [0, pi)", len(diameters), len(continua)
    )
    return scan
