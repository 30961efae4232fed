"""Stringtable: billiard tables with prescribed 2-periodic orbits and non-smooth invariant curves."""

from stringtable.tools.trig_series import TrigPoly
from stringtable.tools.vanishing import DirectionSetSpec, build_g, recover_perturbation
from stringtable.tools.table import StringTable, make_string_table
from stringtable.tools.billiard import find_diameters
from stringtable.tools.curves import singular_points
from stringtable.tools.spectrum import spectrum
from stringtable.config import RunConfig, load_config
from stringtable.pipeline import run_pipeline, sweep

__all__ = [
    "TrigPoly",
    "DirectionSetSpec",
    "build_g",
    "recover_perturbation",
    "StringTable",
    "make_string_table",
    "find_diameters",
    "singular_points",
    "spectrum",
    "RunConfig",
    "load_config",
    "run_pipeline",
    "sweep",
]
