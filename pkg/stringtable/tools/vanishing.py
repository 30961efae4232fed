"""Vanishing builder: odd-symmetric functions g with a prescribed zero set.

Builds g with g(t + pi) = -g(t) vanishing exactly on the lift of a closed set of
directions, then recovers the perturbation data (f, c, h) of the table from it.
Two representations are supported: closed-form bump sums (exact zeros) and
trigonometric polynomials (closed-form geometry downstream).
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.special import expit

from stringtable.errors import (
    AsymmetricCoefficients,
    EmptyComplement,
    EmptyDirectionSet,
    NonpositiveWidth,
    OverlappingComponents,
    ReconstructionMismatch,
)
from stringtable.tools.trig_series import (
    DEFAULT_DEGREE,
    DEFAULT_FIT_GRID,
    Point2,
    TrigPoly,
    derivative,
    evaluate,
    fit_callable,
    path_integral_complex,
    project_V,
    projection_defect,
    sample_grid,
)

logger = logging.getLogger(__name__)

TWO_PI = 2 * np.pi
SEPARATION_TOL = 1e-12
RECONSTRUCTION_TOL = 1e-8
EDGE = 1.0 / 700.0


# ---------------------------------------------------------------------------
# Direction sets
# ---------------------------------------------------------------------------


@dataclass
class Accumulation:
    """A truncated monotone sequence of isolated directions converging to target."""

    target: float
    side: str = "right"
    ratio: float = 0.5
    count: int = 12
    spread: float | None = None  # distance of the first point; None = half the free gap

    def points(self, spread: float, period: float = np.pi) -> list[float]:
        sign = 1.0 if self.side == "right" else -1.0
        return [
            float(np.mod(self.target + sign * spread * self.ratio**j, period))
            for j in range(self.count)
        ]


@dataclass
class DirectionSetSpec:
    """Closed set of undirected directions, angles in radians in [0, pi)."""

    intervals: list[tuple[float, float]] = field(default_factory=list)
    isolated: list[float] = field(default_factory=list)
    accumulations: list[Accumulation] = field(default_factory=list)

    @classmethod
    def from_dict(cls, data: dict) -> "DirectionSetSpec":
        return cls(
            intervals=[(float(u), float(v)) for u, v in data.get("intervals", [])],
            isolated=[float(u) for u in data.get("isolated", [])],
            accumulations=[Accumulation(**acc) for acc in data.get("accumulations", [])],
        )

    @classmethod
    def load(cls, path: str | Path) -> "DirectionSetSpec":
        with open(path, "r") as f:
            return cls.from_dict(json.load(f))

    def to_dict(self) -> dict:
        return {
            "intervals": [list(iv) for iv in self.intervals],
            "isolated": list(self.isolated),
            "accumulations": [vars(acc).copy() for acc in self.accumulations],
        }

    def is_empty(self) -> bool:
        return not (self.intervals or self.isolated or self.accumulations)


@dataclass(frozen=True)
class Atom:
    """One connected component of the zero set: a point (lo == hi) or an interval."""

    lo: float
    hi: float
    kind: str  # "isolated" | "flat" | "interval"

    @property
    def is_point(self) -> bool:
        return self.kind != "interval"

    def shifted(self, offset: float) -> "Atom":
        return Atom(self.lo + offset, self.hi + offset, self.kind)


@dataclass(frozen=True)
class CircleSet:
    """Lift of a direction set to [0, 2pi): every atom at u and u + pi."""

    atoms: tuple[Atom, ...]

    @property
    def half(self) -> int:
        return len(self.atoms) // 2

    def points(self, kind: str | None = None) -> np.ndarray:
        return np.array(
            [a.lo for a in self.atoms if a.is_point and (kind is None or a.kind == kind)]
        )

    def contains(self, t: float, tol: float = 1e-10) -> bool:
        t = float(np.mod(t, TWO_PI))
        for a in self.atoms:
            for shift in (-TWO_PI, 0.0, TWO_PI):
                if a.lo - tol <= t + shift <= a.hi + tol:
                    return True
        return False


def _free_gap(target: float, side: str, others: list[float]) -> float:
    """Distance from target to the nearest other component on one side, mod pi."""
    sign = 1.0 if side == "right" else -1.0
    dists = [np.mod(sign * (o - target), np.pi) for o in others]
    dists = [d for d in dists if d > SEPARATION_TOL]
    return min(dists, default=np.pi)


def half_atoms(spec: DirectionSetSpec) -> list[Atom]:
    """Components of the direction set in [0, pi), sorted, before lifting."""
    atoms: list[Atom] = []
    for u, v in spec.intervals:
        if not (0.0 <= u < v < np.pi):
            raise OverlappingComponents(f"Interval [{u}, {v}] must satisfy 0 <= u < v < pi")
        atoms.append(Atom(u, v, "interval"))

    anchors = [a.lo for a in atoms] + [a.hi for a in atoms] + list(spec.isolated)
    anchors += [acc.target for acc in spec.accumulations]
    targets = {float(np.mod(acc.target, np.pi)) for acc in spec.accumulations}

    for u in spec.isolated:
        u = float(np.mod(u, np.pi))
        if any(abs(u - t) < SEPARATION_TOL for t in targets):
            continue
        atoms.append(Atom(u, u, "isolated"))
    for u in sorted(targets):
        if not any(a.lo - SEPARATION_TOL <= u <= a.hi + SEPARATION_TOL for a in atoms):
            atoms.append(Atom(u, u, "flat"))
    for acc in spec.accumulations:
        spread = acc.spread
        if spread is None:
            spread = 0.5 * _free_gap(acc.target, acc.side, anchors)
        if not (0.0 < acc.ratio < 1.0) or acc.count < 1 or spread <= 0:
            raise OverlappingComponents(f"Invalid accumulation record: {acc}")
        atoms.extend(Atom(u, u, "isolated") for u in acc.points(spread))

    atoms.sort(key=lambda a: a.lo)
    for prev, nxt in zip(atoms, atoms[1:]):
        if nxt.lo - prev.hi <= SEPARATION_TOL:
            raise OverlappingComponents(f"Components {prev} and {nxt} overlap")
    if atoms and atoms[0].lo + np.pi - atoms[-1].hi <= SEPARATION_TOL:
        raise OverlappingComponents(f"Components {atoms[-1]} and {atoms[0]} overlap across pi")
    return atoms


def lift(spec: DirectionSetSpec) -> CircleSet:
    """Lift the direction set to the circle: each component at u and u + pi."""
    atoms = half_atoms(spec)
    lifted = tuple(atoms + [a.shifted(np.pi) for a in atoms])
    logger.debug("Lifted %d components to %d", len(atoms), len(lifted))
    return CircleSet(lifted)


# ---------------------------------------------------------------------------
# Cutoff and bump functions
# ---------------------------------------------------------------------------


def smooth_step(x):
    """Smooth cutoff psi: 0 on (-inf, -1], 1 on [0, inf), and its two derivatives.

    On (-1, 0) with y = x + 1: psi = 1 / (1 + exp(1/y - 1/(1-y))).
    """
    shape = np.shape(x)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    # within EDGE of either end psi is 0 or 1 to below 1e-300
    psi = (x >= -EDGE).astype(float)
    d1 = np.zeros_like(x)
    d2 = np.zeros_like(x)
    inside = (x > EDGE - 1) & (x < -EDGE)
    if np.any(inside):
        y = x[inside] + 1.0
        z = -x[inside]
        sigma = expit(1.0 / z - 1.0 / y)
        s1 = sigma * (1.0 - sigma)
        r = 1.0 / y**2 + 1.0 / z**2
        dr = -2.0 / y**3 + 2.0 / z**3
        psi[inside] = sigma
        d1[inside] = s1 * r
        d2[inside] = s1 * ((1.0 - 2.0 * sigma) * r**2 + dr)
    return psi.reshape(shape), d1.reshape(shape), d2.reshape(shape)


def bump(a: float, b: float, t):
    """psi_a^b(t) = exp(-1/a - 1/b) psi(t/a) psi(-t/b) arctan(t).

    Vanishes exactly on (-a, b)^c and at 0, with nonzero slope at 0.
    """
    if a <= 0 or b <= 0:
        raise NonpositiveWidth(f"Bump widths must be positive, got a={a}, b={b}")
    t = np.asarray(t, dtype=float)
    left, _, _ = smooth_step(t / a)
    right, _, _ = smooth_step(-t / b)
    value = np.exp(-1.0 / a - 1.0 / b) * left * right * np.arctan(t)
    if value.ndim == 0:
        return float(value)
    return value


def _half_bump(x, w):
    """psi(-x/w) arctan(x) on [0, w) with first and second derivatives in x."""
    p, p1, p2 = smooth_step(-x / w)
    p1 = -p1 / w
    p2 = p2 / w**2
    a = np.arctan(x)
    a1 = 1.0 / (1.0 + x**2)
    a2 = -2.0 * x * a1**2
    return p * a, p1 * a + p * a1, p2 * a + 2 * p1 * a1 + p * a2


def _flat_bump(x, w):
    """psi(x/w - 1) psi(-x/w): flat at both ends of [0, w]."""
    p, p1, p2 = smooth_step(x / w - 1.0)
    q, q1, q2 = smooth_step(-x / w)
    return (
        p * q,
        (p1 * q - p * q1) / w,
        (p2 * q - 2 * p1 * q1 + p * q2) / w**2,
    )


def node_weight(left: float, right: float, weights: str) -> float:
    if weights == "exponential":
        return float(np.exp(-1.0 / left - 1.0 / right))
    return left * right / (left + right)


# ---------------------------------------------------------------------------
# Symmetric functions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GapTable:
    """Per-gap data of a bump-sum profile, gaps starting at ``start``."""

    start: np.ndarray
    width: np.ndarray
    sign: np.ndarray
    left: np.ndarray  # node weight at the gap start (0 if the node is flat)
    right: np.ndarray  # node weight at the gap end
    flat: np.ndarray  # flat bump weight (0 unless both ends are flat)

    def evaluate(self, t, scale: float):
        t = np.asarray(t, dtype=float)
        origin = self.start[0]
        tt = origin + np.mod(t - origin, TWO_PI)
        j = np.clip(np.searchsorted(self.start, tt, side="right") - 1, 0, self.start.size - 1)
        w = self.width[j]
        x = tt - self.start[j]
        inside = (x >= 0) & (x < w)
        x = np.where(inside, x, 0.5 * w)
        y = w - x

        l0, l1, l2 = _half_bump(x, w)
        r0, r1, r2 = _half_bump(y, w)
        f0, f1, f2 = _flat_bump(x, w)
        amp = np.where(inside, self.sign[j] * scale, 0.0)
        g0 = amp * (self.left[j] * l0 + self.right[j] * r0 + self.flat[j] * f0)
        g1 = amp * (self.left[j] * l1 - self.right[j] * r1 + self.flat[j] * f1)
        g2 = amp * (self.left[j] * l2 + self.right[j] * r2 + self.flat[j] * f2)
        return g0, g1, g2

    def knots(self, per_gap: int = 8) -> np.ndarray:
        frac = np.arange(per_gap + 1) / per_gap
        pts = self.start[:, None] + self.width[:, None] * frac[None, :]
        return np.mod(pts.ravel(), TWO_PI)


@dataclass(frozen=True, eq=False)
class SymmetricFunction:
    """An odd-symmetric function g(t + pi) = -g(t) with two derivatives."""

    value: Callable
    first: Callable
    second: Callable
    zeros: CircleSet | None
    tag: str  # "transversal" | "flat"
    poly: TrigPoly | None = None
    knots: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __call__(self, t):
        return self.value(t)

    @classmethod
    def from_trig(cls, poly: TrigPoly, tag: str = "transversal") -> "SymmetricFunction":
        """Wrap a polynomial with odd harmonics only."""
        n = poly.degree
        k = np.arange(-n, n + 1)
        even = np.abs(poly.coeffs[k % 2 == 0]).max(initial=0.0)
        if even > 1e-12:
            raise AsymmetricCoefficients(
                f"g must carry odd harmonics only; even content {even:.3e}"
            )
        d1, d2 = derivative(poly, 1), derivative(poly, 2)
        return cls(
            value=lambda t: evaluate(poly, t),
            first=lambda t: evaluate(d1, t),
            second=lambda t: evaluate(d2, t),
            zeros=None,
            tag=tag,
            poly=poly,
        )

    def symmetry_defect(self, grid: int = 4096) -> float:
        t = sample_grid(grid)
        return float(np.abs(self.value(t) + self.value(t + np.pi)).max())


def _assign_signs(atoms: list[Atom]) -> tuple[list[Atom], np.ndarray]:
    """Alternate gap signs; gap j + m is the negative of gap j."""
    m = len(atoms) // 2
    kinds = [a.kind for a in atoms[:m]]
    start = next((i for i, kind in enumerate(kinds) if kind != "isolated"), 0)
    if all(kind == "isolated" for kind in kinds) and m % 2 == 0:
        logger.warning(
            "Even number (%d) of isolated directions on a closed chain: "
            "making the zero at %.6f flat", m, atoms[0].lo,
        )
        atoms = list(atoms)
        atoms[0] = Atom(atoms[0].lo, atoms[0].hi, "flat")
        atoms[m] = Atom(atoms[m].lo, atoms[m].hi, "flat")
        start = 0
    sign = np.zeros(2 * m)
    current = 1.0
    for step in range(m):
        j = (start + step) % (2 * m)
        sign[j] = current
        sign[(j + m) % (2 * m)] = -current
        current = -current
    return atoms, sign


def build_g(
    spec: DirectionSetSpec,
    variant: str = "transversal",
    amplitude: float = 0.01,
    weights: str = "harmonic",
    norm_grid: int = 8192,
) -> SymmetricFunction:
    """Build an odd-symmetric g vanishing exactly on the lifted direction set.

    Args:
        spec: The prescribed closed set of directions.
        variant: "transversal" (nonzero slope at isolated zeros) or "flat"
            (all derivatives vanish at every zero).
        amplitude: Sup-norm of the returned g.
        weights: "harmonic" or "exponential" node weights.
        norm_grid: Grid used to normalize the sup-norm.

    Raises:
        EmptyDirectionSet: No directions given.
        EmptyComplement: The set covers the whole circle.
    """
    if spec.is_empty():
        raise EmptyDirectionSet("The direction set is empty; g would have no zeros")
    circle = lift(spec)
    covered = sum(a.hi - a.lo for a in circle.atoms)
    if covered >= TWO_PI - SEPARATION_TOL:
        raise EmptyComplement("The direction set covers every direction")

    atoms = list(circle.atoms)
    if variant == "flat":
        atoms = [Atom(a.lo, a.hi, "flat") if a.kind == "isolated" else a for a in atoms]
    atoms, sign = _assign_signs(atoms)

    count = len(atoms)
    start = np.array([a.hi for a in atoms])
    end = np.array([atoms[(j + 1) % count].lo + (TWO_PI if j == count - 1 else 0.0)
                    for j in range(count)])
    width = end - start

    left = np.zeros(count)
    right = np.zeros(count)
    flat = np.zeros(count)
    for j, atom in enumerate(atoms):
        nxt = atoms[(j + 1) % count]
        if atom.kind == "isolated":
            left[j] = node_weight(width[j - 1], width[j], weights)
        if nxt.kind == "isolated":
            right[j] = node_weight(width[j], width[(j + 1) % count], weights)
        if atom.kind != "isolated" and nxt.kind != "isolated":
            flat[j] = width[j] if weights == "harmonic" else np.exp(-2.0 / width[j])

    gaps = GapTable(start, width, sign, left, right, flat)
    probe = np.concatenate([sample_grid(norm_grid), gaps.knots(16)])
    norm = float(np.abs(gaps.evaluate(probe, 1.0)[0]).max())
    scale = amplitude / norm if norm > 0 else 0.0

    logger.info(
        "Built %s g: %d zeros/components on the circle, amplitude %.3g",
        variant, count, amplitude,
    )
    return SymmetricFunction(
        value=lambda t: _scalar(gaps.evaluate(t, scale)[0]),
        first=lambda t: _scalar(gaps.evaluate(t, scale)[1]),
        second=lambda t: _scalar(gaps.evaluate(t, scale)[2]),
        zeros=CircleSet(tuple(atoms)),
        tag=variant,
        knots=gaps.knots(),
    )


def _scalar(v):
    return float(v) if np.ndim(v) == 0 else v


# ---------------------------------------------------------------------------
# Quadrature
# ---------------------------------------------------------------------------


class Antiderivative:
    """t -> int_0^t func(s) ds for a smooth periodic integrand (period 2pi by default).

    Gauss-Legendre panels between sorted knots; cumulative values are kept at
    the knots and the last partial panel is integrated on demand.
    """

    def __init__(
        self,
        func: Callable,
        knots=None,
        panels: int = 4096,
        order: int = 12,
        period: float = TWO_PI,
    ):
        base = period * np.arange(panels) / panels
        extra = np.zeros(0) if knots is None else np.mod(np.asarray(knots, float), period)
        k = np.unique(np.concatenate([base, extra, [period]]))
        self.span = period
        k = k[np.concatenate([[True], np.diff(k) > 1e-15])]
        self.func = func
        self.knots = k
        self.nodes, self.weights = np.polynomial.legendre.leggauss(order)

        lo, hi = k[:-1], k[1:]
        pieces = self._panel(lo, hi)
        self.cumulative = np.concatenate([[0.0], np.cumsum(pieces)])
        self.period = self.cumulative[-1]

    def _panel(self, lo, hi):
        mid = 0.5 * (lo + hi)
        half = 0.5 * (hi - lo)
        x = mid[:, None] + half[:, None] * self.nodes[None, :]
        return (self.func(x) @ self.weights) * half

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        turns = np.floor(t / self.span)
        tt = t - turns * self.span
        flat = np.atleast_1d(tt)
        i = np.clip(np.searchsorted(self.knots, flat, side="right") - 1, 0, self.knots.size - 2)
        value = self.cumulative[i] + self._panel(self.knots[i], flat)
        value = value.reshape(tt.shape) + turns * self.period
        if value.ndim == 0:
            return value.item()
        return value


# ---------------------------------------------------------------------------
# Perturbation data
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class PerturbationData:
    """Perturbation f, translation c and the fields g, h of a string table.

    p(t) = c + int_0^t f(s) e^{is} ds, g = <p, e^{it}>, h = <p, i e^{it}>.
    """

    g: SymmetricFunction
    h: Callable
    f: TrigPoly
    f_exact: Callable
    c: Point2
    backend: str  # "bump" | "trigpoly"
    fit_residual: float = 0.0
    projection_defect: float = 0.0
    reconstruction_error: float = 0.0
    h_poly: TrigPoly | None = None

    def fields(self, t):
        """(g, g', g'', h) at t."""
        return self.g.value(t), self.g.first(t), self.g.second(t), self.h(t)

    def c2_norm_h(self, grid: int = 8192) -> float:
        t = sample_grid(grid)
        if self.g.knots.size:
            t = np.concatenate([t, self.g.knots])
        g, g1, _, h = self.fields(t)
        return float(np.abs(h).max() + np.abs(g).max() + np.abs(g1).max())

    def p(self, t):
        """p(t) as complex number(s)."""
        g, h = self.g.value(t), self.h(t)
        return (g + 1j * h) * np.exp(1j * np.asarray(t))


def _spectral(g: SymmetricFunction) -> tuple[TrigPoly, TrigPoly]:
    """Coefficient map g -> (h, f): h_k = i g_k / k, f_k = i g_k (k^2 - 1) / k."""
    poly = g.poly
    n = poly.degree
    k = np.arange(-n, n + 1).astype(float)
    safe = np.where(k == 0, 1.0, k)
    h = np.where(k == 0, 0.0, 1j * poly.coeffs / safe)
    f = np.where(k == 0, 0.0, 1j * poly.coeffs * (k**2 - 1) / safe)
    return TrigPoly(h), TrigPoly(f)


def recover_perturbation(
    g: SymmetricFunction,
    route: str = "auto",
    degree: int = DEFAULT_DEGREE,
    grid: int = DEFAULT_FIT_GRID,
    tol: float = RECONSTRUCTION_TOL,
) -> PerturbationData:
    """Recover (f, c, h) from g and check the reconstruction of g.

    Args:
        g: Odd-symmetric function.
        route: "spectral" (coefficient map, needs g.poly), "differential"
            (h = -int g, f = g' - h by quadrature) or "auto".
        degree: Degree of the fitted f on the differential route.
        grid: Fit and verification grid size.
        tol: Reconstruction tolerance.

    Raises:
        ReconstructionMismatch: Rebuilding g from (f, c) misses g by more than tol.
    """
    if route == "auto":
        route = "spectral" if g.poly is not None else "differential"
    t = sample_grid(grid)

    if route == "spectral":
        h_poly, f_poly = _spectral(g)
        h = lambda s: evaluate(h_poly, s)  # noqa: E731
        c = Point2(float(g.value(0.0)), float(evaluate(h_poly, 0.0)))
        p = c.as_complex() + path_integral_complex(f_poly, t)
        rebuilt = (p * np.exp(-1j * t)).real
        data = dict(
            h=h, f=f_poly, f_exact=lambda s: evaluate(f_poly, s), fit_residual=0.0,
            projection_defect=projection_defect(f_poly), h_poly=h_poly,
            backend="trigpoly",
        )
    else:
        integral = Antiderivative(g.value, knots=g.knots, panels=grid)
        shift = 0.5 * integral(np.pi)
        h = lambda s: shift - integral(s)  # noqa: E731
        f_exact = lambda s: g.first(s) - h(s)  # noqa: E731
        c = Point2(float(g.value(0.0)), float(h(0.0)))
        fitted, residual = fit_callable(f_exact, degree=min(degree, (grid - 1) // 2), grid=grid)
        path = Antiderivative(
            lambda s: f_exact(s) * np.exp(1j * s), knots=g.knots, panels=grid
        )
        p = c.as_complex() + path(t)
        rebuilt = (p * np.exp(-1j * t)).real
        data = dict(
            h=h, f=project_V(fitted), f_exact=f_exact, fit_residual=residual,
            projection_defect=projection_defect(fitted), h_poly=None,
            backend="trigpoly" if g.poly is not None else "bump",
        )

    error = float(np.abs(rebuilt - g.value(t)).max())
    if error > tol:
        raise ReconstructionMismatch(
            f"Rebuilt <p(t), e^(it)> misses g by {error:.3e} (tolerance {tol:.1e})"
        )
    logger.info(
        "Recovered perturbation (%s route): c = (%.6g, %.6g), reconstruction error %.2e",
        route, c.x, c.y, error,
    )
    return PerturbationData(g=g, c=c, reconstruction_error=error, **data)


def to_trigpoly(
    g: SymmetricFunction, degree: int = DEFAULT_DEGREE, grid: int = DEFAULT_FIT_GRID
) -> tuple[SymmetricFunction, float]:
    """Fit g by a polynomial with odd harmonics only; returns (g_fit, residual)."""
    fitted, residual = fit_callable(g.value, degree=degree, grid=grid)
    n = fitted.degree
    k = np.arange(-n, n + 1)
    coeffs = np.where(k % 2 == 0, 0.0, fitted.coeffs)
    logger.info("Fitted g with degree %d: residual %.2e", degree, residual)
    return SymmetricFunction.from_trig(TrigPoly(coeffs), tag=g.tag), residual
