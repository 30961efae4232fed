"""Trigonometric series: real trigonometric polynomials stored by complex coefficients.

A TrigPoly p(t) = sum_{k=-N}^{N} alpha_k e^{ikt} is kept with both signs of k.
Real-valuedness (alpha_{-k} = conj(alpha_k)) is checked when a polynomial is
built and never repaired silently.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from stringtable.errors import AsymmetricCoefficients, InsufficientSamples, NonClosedCurve

SYMMETRY_TOL = 1e-12
DEFAULT_FIT_GRID = 4096
DEFAULT_DEGREE = 128


class Point2(NamedTuple):
    """A point (or a batch of points) of the plane."""

    x: float | np.ndarray
    y: float | np.ndarray

    @classmethod
    def from_complex(cls, z) -> "Point2":
        z = np.asarray(z)
        if z.ndim == 0:
            return cls(float(z.real), float(z.imag))
        return cls(z.real.copy(), z.imag.copy())

    def as_complex(self) -> complex | np.ndarray:
        return np.asarray(self.x) + 1j * np.asarray(self.y)


# ---------------------------------------------------------------------------
# Data model
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class TrigPoly:
    """Real trigonometric polynomial of degree N.

    ``coeffs[k + N]`` holds alpha_k for -N <= k <= N.
    """

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex).ravel()
        if c.size % 2 != 1:
            raise AsymmetricCoefficients(
                f"Expected an odd number of coefficients, got {c.size}"
            )
        scale = max(1.0, float(np.abs(c).max(initial=0.0)))
        defect = float(np.abs(c - np.conj(c[::-1])).max(initial=0.0))
        if defect > SYMMETRY_TOL * scale:
            raise AsymmetricCoefficients(
                f"Coefficients violate alpha_-k = conj(alpha_k) by {defect:.3e}"
            )
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    # -- constructors -------------------------------------------------------

    @classmethod
    def from_nonnegative(cls, alphas: Sequence[complex]) -> "TrigPoly":
        """Build from alpha_0..alpha_N; the negative side follows by symmetry.

        Raises:
            AsymmetricCoefficients: alpha_0 is not real.
        """
        a = np.asarray(alphas, dtype=complex)
        if a.size == 0:
            a = np.zeros(1, dtype=complex)
        scale = max(1.0, float(np.abs(a).max()))
        if abs(a[0].imag) > SYMMETRY_TOL * scale:
            raise AsymmetricCoefficients(f"alpha_0 must be real, got {a[0]}")
        a = a.copy()
        a[0] = a[0].real
        return cls(np.concatenate([np.conj(a[:0:-1]), a]))

    @classmethod
    def constant(cls, value: float) -> "TrigPoly":
        return cls.from_nonnegative([value])

    @classmethod
    def cosine(cls, k: int, amplitude: float = 1.0) -> "TrigPoly":
        """amplitude * cos(k t)."""
        a = np.zeros(k + 1, dtype=complex)
        a[k] = amplitude / 2 if k else amplitude
        return cls.from_nonnegative(a)

    @classmethod
    def sine(cls, k: int, amplitude: float = 1.0) -> "TrigPoly":
        """amplitude * sin(k t), k >= 1."""
        a = np.zeros(k + 1, dtype=complex)
        a[k] = amplitude / 2j
        return cls.from_nonnegative(a)

    # -- accessors ----------------------------------------------------------

    @property
    def degree(self) -> int:
        return (self.coeffs.size - 1) // 2

    def coefficient(self, k: int) -> complex:
        n = self.degree
        if abs(k) > n:
            return 0j
        return complex(self.coeffs[k + n])

    def nonnegative(self) -> np.ndarray:
        return self.coeffs[self.degree:].copy()

    def padded(self, degree: int) -> "TrigPoly":
        n = self.degree
        if degree <= n:
            return self
        pad = np.zeros(degree - n, dtype=complex)
        return TrigPoly(np.concatenate([pad, self.coeffs, pad]))

    # -- arithmetic ---------------------------------------------------------

    def __add__(self, other) -> "TrigPoly":
        if not isinstance(other, TrigPoly):
            other = TrigPoly.constant(float(other))
        n = max(self.degree, other.degree)
        return TrigPoly(self.padded(n).coeffs + other.padded(n).coeffs)

    __radd__ = __add__

    def __neg__(self) -> "TrigPoly":
        return TrigPoly(-self.coeffs)

    def __sub__(self, other) -> "TrigPoly":
        return self + (-other if isinstance(other, TrigPoly) else -float(other))

    def __mul__(self, scalar: float) -> "TrigPoly":
        return TrigPoly(self.coeffs * float(scalar))

    __rmul__ = __mul__

    def __call__(self, t):
        return evaluate(self, t)

    # -- serialization ------------------------------------------------------

    def to_json(self) -> list[list[float]]:
        """[[k, re, im], ...] for k >= 0."""
        return [
            [k, float(a.real), float(a.imag)]
            for k, a in enumerate(self.nonnegative())
        ]

    @classmethod
    def from_json(cls, triples) -> "TrigPoly":
        if isinstance(triples, str):
            triples = json.loads(triples)
        n = max((int(k) for k, _, _ in triples), default=0)
        a = np.zeros(n + 1, dtype=complex)
        for k, re, im in triples:
            if int(k) < 0:
                raise AsymmetricCoefficients(f"Negative index {k} in serialized coefficients")
            a[int(k)] = complex(re, im)
        return cls.from_nonnegative(a)


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------


def evaluate(p: TrigPoly, t):
    """Evaluate p at angle(s) t; returns a float for scalar t."""
    t_arr = np.asarray(t, dtype=float)
    a = p.nonnegative()
    value = np.full(t_arr.shape, a[0].real)
    if a.size > 1:
        k = np.arange(1, a.size)
        phase = np.exp(1j * t_arr[..., None] * k)
        value = value + 2.0 * (phase @ a[1:]).real
    if value.ndim == 0:
        return float(value)
    return value


def derivative(p: TrigPoly, order: int = 1) -> TrigPoly:
    n = p.degree
    k = np.arange(-n, n + 1)
    return TrigPoly(p.coeffs * (1j * k) ** order)


def check_closed(p: TrigPoly) -> None:
    a = p.coefficient(-1)
    if abs(a) > SYMMETRY_TOL * max(1.0, float(np.abs(p.coeffs).max())):
        raise NonClosedCurve(f"alpha_-1 = {a:.3e} is not zero; the curve does not close")


def path_integral_complex(p: TrigPoly, t):
    """int_0^t p(s) e^{is} ds as complex number(s), in closed form."""
    check_closed(p)
    t_arr = np.asarray(t, dtype=float)
    n = p.degree
    k = np.arange(-n, n + 1)
    keep = k != -1
    k1 = (k[keep] + 1).astype(float)
    weights = p.coeffs[keep] / (1j * k1)
    value = (np.exp(1j * t_arr[..., None] * k1) - 1.0) @ weights
    if value.ndim == 0:
        return complex(value)
    return value


def path_integral(p: TrigPoly, t) -> Point2:
    """int_0^t p(s) e^{is} ds as a plane point (or batch of points)."""
    return Point2.from_complex(path_integral_complex(p, t))


def fit(samples, degree: int = DEFAULT_DEGREE) -> tuple[TrigPoly, float]:
    """Fit a degree-N trigonometric polynomial to equispaced samples on [0, 2pi).

    Args:
        samples: Sequence of (angle, value) pairs, or a pair of arrays (t, y).
        degree: Degree N of the fitted polynomial.

    Returns:
        Tuple of (polynomial, max absolute deviation on the sample grid).

    Raises:
        InsufficientSamples: Fewer than 2N+1 samples, or a non-equispaced grid.
    """
    if isinstance(samples, tuple) and len(samples) == 2 and np.ndim(samples[0]) == 1:
        t, y = (np.asarray(v, dtype=float) for v in samples)
    else:
        arr = np.asarray(samples, dtype=float)
        t, y = arr[:, 0], arr[:, 1]
    m = t.size
    if m < 2 * degree + 1:
        raise InsufficientSamples(
            f"Need at least {2 * degree + 1} samples for degree {degree}, got {m}"
        )
    step = 2 * np.pi / m
    if np.abs(np.diff(t) - step).max(initial=0.0) > 1e-9:
        raise InsufficientSamples("Samples must be equispaced over one period")

    spectrum = np.fft.fft(y) / m
    k = np.arange(degree + 1)
    alphas = spectrum[k] * np.exp(-1j * k * t[0])
    poly = TrigPoly.from_nonnegative(alphas)
    residual = float(np.abs(evaluate(poly, t) - y).max())
    return poly, residual


def sample_grid(n: int) -> np.ndarray:
    return 2 * np.pi * np.arange(n) / n


def fit_callable(func, degree: int = DEFAULT_DEGREE, grid: int = DEFAULT_FIT_GRID):
    """Fit a vectorized 2pi-periodic callable sampled on ``grid`` points."""
    t = sample_grid(grid)
    return fit((t, np.asarray(func(t), dtype=float)), degree)


def project_V(p: TrigPoly) -> TrigPoly:
    """Zero every even-index coefficient and the k = +-1 pair."""
    n = p.degree
    k = np.arange(-n, n + 1)
    mask = (k % 2 == 0) | (np.abs(k) == 1)
    c = p.coeffs.copy()
    c[mask] = 0
    return TrigPoly(c)


def projection_defect(p: TrigPoly) -> float:
    """Largest coefficient removed by project_V."""
    return float(np.abs(p.coeffs - project_V(p).coeffs).max(initial=0.0))


def in_V(p: TrigPoly, tol: float = 1e-9) -> bool:
    return projection_defect(p) <= tol
