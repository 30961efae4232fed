"""Stringtable tools: series, vanishing g, tables, billiard map, curves, spectrum, twist and writers."""

from stringtable.tools.trig_series import TrigPoly
from stringtable.tools.vanishing import DirectionSetSpec, build_g, recover_perturbation
from stringtable.tools.table import StringTable, make_string_table
from stringtable.tools.billiard import PhasePoint, find_diameters, next_bounce
from stringtable.tools.curves import sample_curves, singular_points
from stringtable.tools.spectrum import classify, spectrum
from stringtable.tools.twist import TwistSystem, build_potential

__all__ = [
    "TrigPoly",
    "DirectionSetSpec",
    "build_g",
    "recover_perturbation",
    "StringTable",
    "make_string_table",
    "PhasePoint",
    "find_diameters",
    "next_bounce",
    "sample_curves",
    "singular_points",
    "classify",
    "spectrum",
    "TwistSystem",
    "build_potential",
]
