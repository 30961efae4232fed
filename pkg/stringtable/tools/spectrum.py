"""Spectrum: hyperbolicity of the 2-periodic orbits.

At a diameter of length d with boundary curvatures k1, k2 at its feet the
linearized T^2 has trace 2 + 4 d I1 with I1 = k1 k2 d - (k1 + k2), so the
orbit is hyperbolic exactly when I1 > 0. Three routes are compared: the sign
of h'' alone, the curvature indicators, and the finite-difference trace.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from stringtable.errors import ClassificationConflict, FormulaMismatch
from stringtable.tools.billiard import (
    FLAT_TOL,
    DiameterScan,
    PhasePoint,
    find_diameters,
    jacobian_fd,
)
from stringtable.tools.table import StringTable, curvature_of_boundary

logger = logging.getLogger(__name__)

CURVATURE_TOL = 1e-6
CHORD_TOL = 1e-9
INDICATOR_TOL = 1e-12
TRACE_TOL = 1e-6


class KPair(NamedTuple):
    k1: float  # curvature at t0 + pi
    k2: float  # curvature at t0
    d: float


def closed_form_k_pair(ell: float, h: float, hddot: float) -> KPair:
    d = 1.0 + ell
    k1 = 1.0 / (d + h) + 1.0 / (d + h + 2 * hddot)
    k2 = 1.0 / (d - h) + 1.0 / (d - h - 2 * hddot)
    return KPair(k1, k2, d)


def k_pair(st: StringTable, t0: float) -> KPair:
    """Closed-form curvatures and chord at a diameter, checked against geometry.

    Raises:
        FormulaMismatch: Closed form and measured geometry disagree.
    """
    _, G1, _, H = st.fields(t0)
    pair = closed_form_k_pair(st.ell, float(H), -float(G1))

    near = curvature_of_boundary(st, t0)
    far = curvature_of_boundary(st, t0 + np.pi)
    chord = abs(st.boundary(t0)) + abs(st.boundary(t0 + np.pi))
    if abs(pair.k2 - near) > CURVATURE_TOL or abs(pair.k1 - far) > CURVATURE_TOL:
        raise FormulaMismatch(
            f"At t0 = {t0:.9f}: closed-form curvatures ({pair.k1:.9g}, {pair.k2:.9g}) "
            f"vs boundary ({far:.9g}, {near:.9g})"
        )
    if abs(pair.d - chord) > CHORD_TOL:
        raise FormulaMismatch(f"At t0 = {t0:.9f}: chord {chord:.12g} vs 1 + ell = {pair.d:.12g}")
    return pair


def indicators(k1: float, k2: float, d: float) -> tuple[float, float]:
    """(I1, I2): I1 = 0 is the trace +2 condition, I2 = (1 - d k1)(1 - d k2) = 0 the trace -2 one."""
    first = k1 * k2 * d - (k1 + k2)
    second = d**2 * k1 * k2 - d * (k1 + k2) + 1.0
    for k in (k1, k2):
        if abs(d * k - 1.0) < 1e-6:
            logger.warning(
                "Chord d = %.6g equals a curvature radius 1/k = %.6g; "
                "this is far from a near-circular table", d, 1.0 / k,
            )
    return first, second


def indicator_closed_form(d: float, h: float, hddot: float) -> float:
    """I1 = 4 d h''^2 / ((d^2 - h^2)(d^2 - (h + 2h'')^2)), free of cancellation."""
    return 4 * d * hddot**2 / ((d**2 - h**2) * (d**2 - (h + 2 * hddot) ** 2))


def _eigenvalues(excess: float) -> tuple[float, float]:
    """Eigenvalues of a unimodular 2x2 map with trace 2 + excess, excess >= 0."""
    big = 1.0 + 0.5 * excess + np.sqrt(excess + 0.25 * excess**2)
    return big, 1.0 / big


def _trace_class(trace: float) -> str:
    if abs(trace) > 2:
        return "hyperbolic"
    if abs(trace) < 2:
        return "elliptic"
    return "parabolic"


@dataclass
class DiameterSpectrum:
    t0: float
    k1: float
    k2: float
    d: float
    I1: float
    I2: float
    trace: float
    trace_predicted: float
    eigenvalues: tuple[float, float]
    classification: str
    verdicts: dict[str, str] = field(default_factory=dict)

    @property
    def max_eigenvalue(self) -> float:
        return max(abs(e) for e in self.eigenvalues)

    def to_dict(self) -> dict:
        return {
            "t0": self.t0,
            "k1": self.k1,
            "k2": self.k2,
            "d": self.d,
            "I1": self.I1,
            "I2": self.I2,
            "trace": self.trace,
            "trace_predicted": self.trace_predicted,
            "eigenvalues": [
                float(np.real(e)) if np.isreal(e) else [float(e.real), float(e.imag)]
                for e in self.eigenvalues
            ],
            "class": self.classification,
            "verdicts": dict(self.verdicts),
        }


def classify(st: StringTable, t0: float) -> DiameterSpectrum:
    """Classify the diameter at t0 by three routes and require agreement.

    (a) h''(t0) != 0; (b) the curvature indicators; (c) |trace dT^2| vs 2 from
    the finite-difference Jacobian. A route whose signal is below its
    resolution while the exact prediction is nonzero reports "unresolved" and
    takes no part in the vote.

    Raises:
        ClassificationConflict: Two resolved routes disagree.
    """
    _, G1, _, H = st.fields(t0)
    h, hddot = float(H), -float(G1)
    pair = k_pair(st, t0)
    first, second = indicators(*pair)
    closed = indicator_closed_form(pair.d, h, hddot)
    excess = 4 * pair.d * closed
    predicted = 2.0 + excess

    verdicts = {"hddot": "hyperbolic" if abs(hddot) > FLAT_TOL else "parabolic"}

    scale = max(1.0, pair.k1 * pair.k2 * pair.d)
    if abs(first) > INDICATOR_TOL * scale and abs(second) > INDICATOR_TOL * scale:
        verdicts["indicators"] = _trace_class(2.0 + 4 * pair.d * first)
    elif closed == 0.0 or abs(second) <= INDICATOR_TOL * scale:
        verdicts["indicators"] = "parabolic"
    else:
        verdicts["indicators"] = "unresolved"

    jac = jacobian_fd(st, PhasePoint(float(t0), np.pi / 2), order=2)
    trace = float(np.trace(jac))
    if abs(abs(trace) - 2.0) > TRACE_TOL:
        verdicts["trace"] = _trace_class(trace)
        eigenvalues = tuple(complex(e) for e in np.linalg.eigvals(jac))
        eigenvalues = tuple(e.real if abs(e.imag) < 1e-12 else e for e in eigenvalues)
    else:
        verdicts["trace"] = "parabolic" if excess == 0.0 else "unresolved"
        eigenvalues = _eigenvalues(excess)

    resolved = {v for v in verdicts.values() if v != "unresolved"}
    if len(resolved) > 1:
        raise ClassificationConflict(f"At t0 = {t0:.9f}: routes disagree {verdicts}")
    classification = resolved.pop()

    return DiameterSpectrum(
        t0=float(t0), k1=pair.k1, k2=pair.k2, d=pair.d, I1=first, I2=second,
        trace=trace, trace_predicted=predicted, eigenvalues=eigenvalues,
        classification=classification, verdicts=verdicts,
    )


def spectrum(st: StringTable, scan: DiameterScan | None = None) -> list[DiameterSpectrum]:
    """Classify every detected diameter."""
    scan = scan or find_diameters(st)
    if scan.degenerate:
        logger.info("Continuum of diameters: every one is parabolic")
        return []
    results = [classify(st, d.t0) for d in scan.diameters]
    counts = {}
    for r in results:
        counts[r.classification] = counts.get(r.classification, 0) + 1
    logger.info("Spectrum of %d diameters: %s", len(results), counts)
    return results
