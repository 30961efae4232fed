"""Shared tables, built once per session."""
from __future__ import annotations

import numpy as np
import pytest

from stringtable.tools.table import circle_table, choose_string_length, make_string_table
from stringtable.tools.trig_series import TrigPoly
from stringtable.tools.vanishing import (
    Accumulation,
    DirectionSetSpec,
    SymmetricFunction,
    build_g,
    recover_perturbation,
)

EPSILON = 0.01
ELL = 10.0


@pytest.fixture(scope="session")
def circle():
    return circle_table(3.0)


@pytest.fixture(scope="session")
def sin3_g():
    return SymmetricFunction.from_trig(TrigPoly.sine(3, EPSILON))


@pytest.fixture(scope="session")
def sin3_data(sin3_g):
    return recover_perturbation(sin3_g)


@pytest.fixture(scope="session")
def sin3(sin3_data):
    """g = 0.01 sin 3t, tau = 1, ell = 10: diameters at k pi / 3."""
    return make_string_table(sin3_data, 1.0, ELL)


def _bump_table(spec: DirectionSetSpec, variant: str = "transversal"):
    g = build_g(spec, variant, amplitude=EPSILON)
    pd = recover_perturbation(g)
    return make_string_table(pd, 1.0, choose_string_length(pd, 1.0))


@pytest.fixture(scope="session")
def three_directions():
    return _bump_table(DirectionSetSpec(isolated=[0.0, np.pi / 3, 2 * np.pi / 3]))


@pytest.fixture(scope="session")
def interval_table():
    return _bump_table(DirectionSetSpec(intervals=[(0.4, 0.9)], isolated=[2.0]))


@pytest.fixture(scope="session")
def accumulation_table():
    return _bump_table(DirectionSetSpec(accumulations=[Accumulation(target=2.0, ratio=0.5, count=12)]))
