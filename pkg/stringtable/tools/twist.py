"""Twist example: a time-periodic Hamiltonian with prescribed hyperbolic maxima.

H(p, x, t) = p^2/2 + V(b x - a t) with a 1-periodic potential V whose maxima
sit at prescribed nodes, all at one common level. In X = b x - a t,
P = b p - a the flow is autonomous with K(P, X) = P^2/2 + b^2 V(X), and the
level through the maxima is an invariant curve with a corner at every
non-degenerate maximum.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import quad
from scipy.special import exp1

from stringtable.errors import NegativeRadicand, NotCritical, SpecOverlap, ZeroFrequency
from stringtable.tools.vanishing import Accumulation, Antiderivative

logger = logging.getLogger(__name__)

INTEGRATOR_STEP = 1e-3
CRITICAL_TOL = 1e-10
SEPARATION = 1e-9

# Yoshida fourth-order composition of leapfrog, drift-kick form
_CBRT2 = 2.0 ** (1.0 / 3.0)
_W1 = 1.0 / (2.0 - _CBRT2)
_W0 = -_CBRT2 / (2.0 - _CBRT2)
KICKS = (_W1, _W0, _W1)
DRIFTS = (_W1 / 2, (_W0 + _W1) / 2, (_W0 + _W1) / 2, _W1 / 2)


def beta(u):
    """exp(-1/(1 - u^2)) on (-1, 1), zero outside, with two derivatives."""
    u = np.asarray(u, dtype=float)
    inside = np.abs(u) < 1.0
    q = np.where(inside, 1.0 - u**2, 1.0)
    value = np.where(inside, np.exp(-1.0 / q), 0.0)
    d1 = value * (-2.0 * u / q**2)
    d2 = value * (4.0 * u**2 / q**4 - (2.0 + 6.0 * u**2) / q**3)
    return value, d1, d2


def _moment(power: int) -> float:
    """int_0^1 u^power beta(u) du."""
    if power == 1:
        return 0.5 * (np.exp(-1.0) - exp1(1.0))
    return quad(lambda u: u**power * np.exp(-1.0 / (1.0 - u**2)), 0.0, 1.0, epsabs=1e-15)[0]


MOMENT_0 = 2.0 * quad(lambda u: np.exp(-1.0 / (1.0 - u**2)), 0.0, 1.0, epsabs=1e-15)[0]
MOMENTS = {1: _moment(1), 3: _moment(3)}


# ---------------------------------------------------------------------------
# Potentials
# ---------------------------------------------------------------------------


@dataclass
class PotentialSpec:
    """Closed set of nodes in [0, 1): plain nodes plus truncated accumulations."""

    nodes: list[float] = field(default_factory=list)
    degenerate: list[float] = field(default_factory=list)
    accumulations: list[Accumulation] = field(default_factory=list)

    @classmethod
    def from_dict(cls, data: dict) -> "PotentialSpec":
        return cls(
            nodes=[float(x) for x in data.get("nodes", [])],
            degenerate=[float(x) for x in data.get("degenerate", [])],
            accumulations=[Accumulation(**acc) for acc in data.get("accumulations", [])],
        )

    def realized(self) -> list[tuple[float, bool]]:
        """Sorted (node, degenerate) pairs after expanding accumulations.

        Raises:
            SpecOverlap: Two nodes coincide.
        """
        nodes = [(float(np.mod(x, 1.0)), False) for x in self.nodes]
        nodes += [(float(np.mod(x, 1.0)), True) for x in self.degenerate]
        for acc in self.accumulations:
            nodes.append((float(np.mod(acc.target, 1.0)), True))
            spread = acc.spread if acc.spread is not None else 0.25
            nodes += [(x, False) for x in acc.points(spread, period=1.0)]
        nodes.sort()
        xs = np.array([x for x, _ in nodes])
        if xs.size > 1:
            gaps = np.diff(np.concatenate([xs, xs[:1] + 1.0]))
            if gaps.min() <= SEPARATION:
                raise SpecOverlap(f"Nodes closer than {SEPARATION}: minimum gap {gaps.min():.3e}")
        return nodes


@dataclass(frozen=True, eq=False)
class PeriodicPotential:
    """1-periodic potential V with V' and V''; ``maxima`` share one level."""

    force: Callable  # V'
    stiffness: Callable  # V''
    value: Callable  # V
    maxima: np.ndarray
    degenerate: np.ndarray

    def __call__(self, x):
        return self.value(x)

    @property
    def level(self) -> float:
        if self.maxima.size == 0:
            return float(self.value(0.0))
        return float(self.value(self.maxima[0]))

    @classmethod
    def from_callables(
        cls, value: Callable, force: Callable, stiffness: Callable, maxima=(), degenerate=None
    ) -> "PeriodicPotential":
        maxima = np.asarray(maxima, dtype=float)
        flags = np.zeros(maxima.size, bool) if degenerate is None else np.asarray(degenerate, bool)
        return cls(force, stiffness, value, maxima, flags)


def _wrap_unit(y):
    return np.mod(np.asarray(y) + 0.5, 1.0) - 0.5


def build_potential(spec: PotentialSpec, amplitude: float = 1.0) -> PeriodicPotential:
    """V = int_0^x f with f a sum of node profiles and gap corrections.

    Each node x_k carries -y beta(y/r) (non-degenerate) or -(y^3/r^2) beta(y/r)
    (degenerate), r a third of the smaller adjacent gap; a bump centred in each
    gap cancels the gap integral so all maxima share one level.
    """
    nodes = spec.realized()
    if not nodes:
        zero = lambda x: np.zeros_like(np.asarray(x, dtype=float))  # noqa: E731
        logger.info("Empty node set: V is identically zero")
        return PeriodicPotential(zero, zero, zero, np.zeros(0), np.zeros(0, bool))

    xs = np.array([x for x, _ in nodes])
    flat = np.array([d for _, d in nodes])
    powers = np.where(flat, 3, 1)
    gaps = np.diff(np.concatenate([xs, xs[:1] + 1.0]))
    radii = np.minimum(gaps, np.roll(gaps, 1)) / 3.0

    left_mass = radii**2 * np.array([MOMENTS[p] for p in powers])
    gap_integral = -left_mass + np.roll(left_mass, -1)
    centres = xs + gaps / 2.0
    halfwidths = gaps / 6.0
    coeffs = -gap_integral / (halfwidths * MOMENT_0)

    def _nodes(x):
        x = np.asarray(x, dtype=float)
        u = _wrap_unit(x[..., None] - xs) / radii
        v = _wrap_unit(x[..., None] - centres) / halfwidths
        return u, beta(u), beta(v)

    def force(x):
        u, (b0, _, _), (c0, _, _) = _nodes(x)
        total = -(radii * u**powers * b0).sum(axis=-1) + (coeffs * c0).sum(axis=-1)
        return amplitude * total

    def stiffness(x):
        u, (b0, b1, _), (_, c1, _) = _nodes(x)
        node = powers * u ** (powers - 1) * b0 + u**powers * b1
        total = -node.sum(axis=-1) + (coeffs * c1 / halfwidths).sum(axis=-1)
        return amplitude * total

    knots = np.concatenate([xs, xs - radii, xs + radii, centres - halfwidths, centres + halfwidths])
    value = Antiderivative(force, knots=knots, panels=2048, period=1.0)
    logger.info("Built potential with %d maxima (%d degenerate)", xs.size, int(flat.sum()))
    return PeriodicPotential(force, stiffness, value, xs, flat)


# ---------------------------------------------------------------------------
# Reduced flow
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TwistSystem:
    """H(p, x, t) = p^2/2 + V(b x - a t)."""

    a: int
    b: int
    potential: PeriodicPotential

    def __post_init__(self):
        if self.a == 0 or self.b == 0:
            raise ZeroFrequency(f"Frequencies must be nonzero integers, got a={self.a}, b={self.b}")

    def energy(self, X, P):
        """K(P, X) = P^2/2 + b^2 V(X)."""
        return 0.5 * np.asarray(P) ** 2 + self.b**2 * np.asarray(self.potential(X))

    @property
    def separatrix_energy(self) -> float:
        return self.b**2 * self.potential.level

    def flow(self, X, P, duration: float, step: float = INTEGRATOR_STEP):
        """Integrate X' = P, P' = -b^2 V'(X) with the order-4 symplectic scheme.

        Three drift-kick-drift leapfrog steps with Yoshida weights; the drifts
        between consecutive leapfrog steps are merged.
        """
        X = np.array(X, dtype=float)
        P = np.array(P, dtype=float)
        steps = int(round(duration / step))
        kick = self.b**2 * step
        for _ in range(steps):
            for c, d in zip(DRIFTS, KICKS):
                X += c * step * P
                P -= d * kick * self.potential.force(X)
            X += DRIFTS[-1] * step * P
        return X, P

    def time_one_map(self, x, p, t: float = 0.0, step: float = INTEGRATOR_STEP):
        """Advance (x, p) of H from time t to t + 1."""
        X, P = reduce(self, x, p, t)
        X, P = self.flow(X, P, 1.0, step)
        return unreduce(self, X, P, t + 1.0)


def reduce(sys: TwistSystem, x, p, t):
    """(X, P) = (b x - a t, b p - a)."""
    return sys.b * np.asarray(x) - sys.a * t, sys.b * np.asarray(p) - sys.a


def unreduce(sys: TwistSystem, X, P, t):
    return (np.asarray(X) + sys.a * t) / sys.b, (np.asarray(P) + sys.a) / sys.b


# ---------------------------------------------------------------------------
# Invariant curves
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class EnergyCurve:
    """Upper branch P(X) = sqrt(2 (E - b^2 V(X))) of a level set of K."""

    potential: PeriodicPotential
    b: int
    energy: float

    def __call__(self, X):
        radicand = 2.0 * (self.energy - self.b**2 * np.asarray(self.potential(X)))
        value = np.sqrt(np.maximum(radicand, 0.0))
        return float(value) if np.ndim(value) == 0 else value

    def rows(self, samples: int = 1024) -> dict[str, np.ndarray]:
        X = np.arange(samples) / samples
        return {"X": X, "P": self(X)}


def curve_from_energy(
    pot: PeriodicPotential, b: int, E: float | None = None, grid: int = 4096
) -> EnergyCurve:
    """Positive-momentum level curve of K; E defaults to the level of the maxima.

    Raises:
        NegativeRadicand: E lies below b^2 max V.
    """
    if E is None:
        E = b**2 * pot.level
    top = float(np.max(pot(np.arange(grid) / grid)))
    if pot.maxima.size:
        top = max(top, float(np.max(pot(pot.maxima))))
    if E < b**2 * top - 1e-12:
        raise NegativeRadicand(f"E = {E:.6g} is below b^2 max V = {b**2 * top:.6g}")
    return EnergyCurve(pot, b, float(E))


def corner_slopes(pot: PeriodicPotential, b: int, X0: float) -> tuple[float, float]:
    """(left, right) slopes of the upper branch at a maximum X0: (-s, s), s = |b| sqrt|V''|.

    Raises:
        NotCritical: V'(X0) is not zero.
    """
    slope = float(pot.force(X0))
    if abs(slope) > CRITICAL_TOL:
        raise NotCritical(f"V'({X0:.6f}) = {slope:.3e} is not zero")
    curvature = float(pot.stiffness(X0))
    if abs(curvature) <= 1e-12:
        return 0.0, 0.0
    s = abs(b) * np.sqrt(abs(curvature))
    return -s, s


def one_sided_slopes_fd(curve: EnergyCurve, X0: float, step: float = 1e-5) -> tuple[float, float]:
    centre = curve(X0)
    return (centre - curve(X0 - step)) / step, (curve(X0 + step) - centre) / step


def curve_deviation(sys: TwistSystem, curve: EnergyCurve, samples: int = 64) -> float:
    """Largest |p' - curve(x')| after the time-1 map of points on the curve at t = 0."""
    X = (np.arange(samples) + 0.5) / samples
    x, p = unreduce(sys, X, curve(X), 0.0)
    x1, p1 = sys.time_one_map(x, p)
    X1, P1 = reduce(sys, x1, p1, 0.0)
    return float(np.max(np.abs(P1 - curve(np.mod(X1, 1.0)))))
