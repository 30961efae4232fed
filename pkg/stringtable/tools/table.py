"""Table builder: constant-width bodies and the string construction around them.

The table boundary is the level set of the string of length ell wrapped around
the unit circle and the perturbed body with curvature radius 1 + tau f. In the
rotating frame e^{it} the boundary reads

    Gamma(t) = (G + i (H - 1 - S)) e^{it},  G = tau g, H = tau h, S = N / D,
    N = (ell^2 - 1 + 2H - H^2 - G^2) / 2,  D = ell + 1 - H,

and the distance s(t) = S(t) from the perturbed body equals ell - |Gamma(t)|.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from stringtable.errors import (
    DegenerateTangent,
    NonpositiveCurvatureRadius,
    StringTooShort,
)
from stringtable.tools.trig_series import (
    Point2,
    TrigPoly,
    check_closed,
    evaluate,
    path_integral_complex,
    sample_grid,
)
from stringtable.tools.vanishing import (
    PerturbationData,
    SymmetricFunction,
    recover_perturbation,
)

logger = logging.getLogger(__name__)

SCAN_GRID = 8192
MIN_STRING_LENGTH = 10.0
FD_STEP = 1e-4


# ---------------------------------------------------------------------------
# Convex bodies
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ConvexBody:
    """Convex body parametrized by the tangent angle t.

    gamma(t) = base + int_0^t rho(s) e^{is} ds, outward normal -i e^{it}.
    """

    rho: TrigPoly
    base: Point2

    def boundary(self, t):
        return self.base.as_complex() + path_integral_complex(self.rho, t)

    @property
    def constant_width(self) -> bool:
        n = self.rho.degree
        k = np.arange(-n, n + 1)
        even = (k % 2 == 0) & (k != 0)
        return bool(np.abs(self.rho.coeffs[even]).max(initial=0.0) <= 1e-12)


def make_body(rho: TrigPoly, base: Point2, grid: int = SCAN_GRID) -> ConvexBody:
    """Build a body from its curvature radius and gamma(0).

    Raises:
        NonClosedCurve: alpha_-1 of rho is not zero.
        NonpositiveCurvatureRadius: rho <= 0 somewhere on the grid.
    """
    check_closed(rho)
    low = float(np.min(evaluate(rho, sample_grid(grid))))
    if low <= 0:
        raise NonpositiveCurvatureRadius(f"Curvature radius reaches {low:.4g} <= 0")
    return ConvexBody(rho, Point2(float(base[0]), float(base[1])))


def width(body: ConvexBody, theta):
    """Distance between the two supporting lines orthogonal to e^{i theta}."""
    theta = np.asarray(theta, dtype=float)
    t = theta + np.pi / 2
    chord = body.boundary(t) - body.boundary(t + np.pi)
    value = (chord * np.exp(-1j * theta)).real
    if value.ndim == 0:
        return float(value)
    return value


def width_spread(body: ConvexBody, directions: int = 256) -> float:
    """max - min of the width over equispaced directions in [0, pi)."""
    w = width(body, np.pi * np.arange(directions) / directions)
    return float(w.max() - w.min())


# ---------------------------------------------------------------------------
# String tables
# ---------------------------------------------------------------------------


class Geometry(NamedTuple):
    """Frame quantities of the table at a batch of parameters."""

    G: np.ndarray
    G1: np.ndarray
    G2: np.ndarray
    H: np.ndarray
    S: np.ndarray
    S1: np.ndarray
    S2: np.ndarray


@dataclass(frozen=True, eq=False)
class StringTable:
    """Billiard table built by the string construction.

    Inner body: the unit circle -i e^{it}. Perturbed body: curvature radius
    1 + tau f with gamma(0) = tau c - i.
    """

    perturbation: PerturbationData
    tau: float
    ell: float

    def fields(self, t):
        """(G, G', G'', H) = tau (g, g', g'', h)."""
        g, g1, g2, h = self.perturbation.fields(t)
        tau = self.tau
        return tau * g, tau * g1, tau * g2, tau * h

    def geometry(self, t) -> Geometry:
        G, G1, G2, H = (np.asarray(v, dtype=float) for v in self.fields(t))
        ell = self.ell
        num = 0.5 * (ell**2 - 1 + 2 * H - H**2 - G**2)
        den = ell + 1 - H
        num1 = -G * (1 - H + G1)
        den1 = G
        num2 = -G1 * (1 - H + G1) - G * (G + G2)
        den2 = G1
        S = num / den
        lead = (num1 * den - num * den1) / den**2
        S2 = (num2 * den - num * den2) / den**2 - 2 * den1 * (num1 * den - num * den1) / den**3
        return Geometry(G, G1, G2, H, S, lead, S2)

    def gamma(self, t):
        """Boundary of the perturbed body."""
        G, _, _, H = self.fields(t)
        return (G + 1j * (H - 1)) * np.exp(1j * np.asarray(t, dtype=float))

    def boundary(self, t):
        geo = self.geometry(t)
        value = (geo.G + 1j * (geo.H - 1 - geo.S)) * np.exp(1j * np.asarray(t, dtype=float))
        return value.item() if value.ndim == 0 else value

    def boundary_derivatives(self, t):
        """(Gamma, Gamma', Gamma'') in the tangent-angle parameter."""
        geo = self.geometry(t)
        u, u1, u2 = geo.G, geo.G1, geo.G2
        v = geo.H - 1 - geo.S
        v1 = -geo.G - geo.S1
        v2 = -geo.G1 - geo.S2
        rot = np.exp(1j * np.asarray(t, dtype=float))
        return (
            (u + 1j * v) * rot,
            (u1 - v + 1j * (v1 + u)) * rot,
            (u2 - 2 * v1 - u + 1j * (v2 + 2 * u1 - v)) * rot,
        )

    def speed(self, t):
        """|Gamma'(t)|, the arc-length rate."""
        return np.abs(self.boundary_derivatives(t)[1])

    def body(self) -> ConvexBody:
        rho = TrigPoly.constant(1.0) + self.tau * self.perturbation.f
        c = self.perturbation.c
        return ConvexBody(rho, Point2(self.tau * c.x, self.tau * c.y - 1.0))

    @property
    def is_circle(self) -> bool:
        return self.tau == 0 or not np.any(self.perturbation.g.value(sample_grid(256)))

    def scan_points(self, grid: int = SCAN_GRID) -> np.ndarray:
        """Uniform grid merged with the knots of the g profile."""
        t = sample_grid(grid)
        knots = self.perturbation.g.knots
        if knots.size:
            t = np.unique(np.concatenate([t, knots]))
        return t


def make_string_table(
    pd: PerturbationData, tau: float, ell: float, grid: int = SCAN_GRID
) -> StringTable:
    """Build the table and verify positivity of 1 + tau f and strict convexity.

    Raises:
        StringTooShort: A positivity or convexity check fails.
    """
    st = StringTable(pd, float(tau), float(ell))
    t = st.scan_points(grid)

    rho = 1.0 + st.tau * np.asarray(pd.f_exact(t))
    if rho.min() <= 0:
        raise StringTooShort(f"1 + tau f reaches {rho.min():.4g} <= 0 (tau = {tau})")
    G, _, _, H = st.fields(t)
    if np.min(ell + 1 - np.asarray(H)) <= 0:
        raise StringTooShort(f"String length {ell} does not wrap the bodies")

    _, d1, d2 = st.boundary_derivatives(t)
    turning = (np.conj(d1) * d2).imag
    heading = np.unwrap(np.angle(d1))
    if turning.min() <= 0 or np.diff(heading).min() <= 0:
        raise StringTooShort(
            f"Boundary is not strictly convex for ell = {ell}, tau = {tau}"
        )
    logger.info("Built table: tau = %.4g, ell = %.4g, min curvature radius %.4g",
                tau, ell, rho.min())
    return st


def circle_table(ell: float) -> StringTable:
    """The unperturbed table: a circle of radius (ell + 1) / 2."""
    zero = SymmetricFunction.from_trig(TrigPoly.constant(0.0))
    return make_string_table(recover_perturbation(zero), 0.0, ell)


# ---------------------------------------------------------------------------
# Scalar fields
# ---------------------------------------------------------------------------


def s_of_t(st: StringTable, t, route: str = "direct"):
    """Distance of the boundary from the perturbed body.

    route "direct": (ell^2 - |gamma|^2) / (2 (ell - <gamma, i e^{it}>)).
    route "h": (ell^2 - 1 + 2h - h^2 - h'^2) / (2 (ell + 1 - h)) with h' = -g.
    """
    ell = st.ell
    if route == "direct":
        gamma = st.gamma(t)
        normal = (gamma * np.exp(-1j * np.asarray(t, dtype=float))).imag
        value = 0.5 * (ell**2 - np.abs(gamma) ** 2) / (ell - normal)
    else:
        G, _, _, H = st.fields(t)
        value = 0.5 * (ell**2 - 1 + 2 * H - H**2 - G**2) / (ell + 1 - H)
    value = np.asarray(value)
    return float(value) if value.ndim == 0 else value


def h_of_t(st: StringTable, t):
    return st.fields(t)[3]


def g_of_t(st: StringTable, t):
    return st.fields(t)[0]


def choose_string_length(pd: PerturbationData, tau: float, grid: int = SCAN_GRID) -> float:
    """Smallest ell from max(10, 4 (1 + |tau h|_C2)) keeping 1 - 2h''/(ell+1-h) > 1/2."""
    norm = abs(tau) * pd.c2_norm_h(grid)
    ell = max(MIN_STRING_LENGTH, 4.0 * (1.0 + norm))
    t = sample_grid(grid)
    _, g1, _, h = pd.fields(t)
    hddot = -tau * np.asarray(g1)
    h = tau * np.asarray(h)
    while np.min(1.0 - 2.0 * hddot / (ell + 1 - h)) <= 0.5:
        ell *= 2.0
    logger.debug("String length %.4g for |tau h|_C2 = %.4g", ell, norm)
    return ell


# ---------------------------------------------------------------------------
# Curvature
# ---------------------------------------------------------------------------


def _richardson(func, t, step: float, order: int):
    def central(hs):
        if order == 1:
            return (func(t + hs) - func(t - hs)) / (2 * hs)
        return (func(t + hs) - 2 * func(t) + func(t - hs)) / hs**2

    return (4 * central(step / 2) - central(step)) / 3


def boundary_derivatives_fd(st: StringTable, t, step: float = FD_STEP):
    """(Gamma', Gamma'') by Richardson-extrapolated central differences."""
    t = np.asarray(t, dtype=float)
    return (
        _richardson(st.boundary, t, step, 1),
        _richardson(st.boundary, t, step, 2),
    )


def curvature_of_boundary(st: StringTable, t, method: str = "analytic"):
    """Signed curvature of Gamma at t.

    Raises:
        DegenerateTangent: Gamma'(t) vanishes.
    """
    if method == "fd":
        d1, d2 = boundary_derivatives_fd(st, t)
    else:
        _, d1, d2 = st.boundary_derivatives(t)
    d1 = np.asarray(d1)
    d2 = np.asarray(d2)
    speed = np.abs(d1)
    if np.min(speed) < 1e-12:
        raise DegenerateTangent(f"Gamma' vanishes near t = {t}")
    kappa = (np.conj(d1) * d2).imag / speed**3
    return float(kappa) if kappa.ndim == 0 else kappa


def derivative_agreement(st: StringTable, samples: int = 64) -> float:
    """Largest relative gap between analytic and finite-difference curvature."""
    t = sample_grid(samples) + 0.0137
    exact = curvature_of_boundary(st, t)
    approx = curvature_of_boundary(st, t, method="fd")
    return float(np.max(np.abs(exact - approx) / np.abs(exact)))


def table_rows(st: StringTable, samples: int) -> dict[str, np.ndarray]:
    """Columns of the table export."""
    t = sample_grid(samples)
    gamma = np.asarray(st.boundary(t))
    return {
        "t": t,
        "x": gamma.real,
        "y": gamma.imag,
        "s": s_of_t(st, t),
        "h": np.asarray(h_of_t(st, t)),
        "g": np.asarray(g_of_t(st, t)),
        "curvature": curvature_of_boundary(st, t),
    }
