import numpy as np
import pytest
from scipy.integrate import quad

from stringtable.errors import NegativeRadicand, NotCritical, SpecOverlap, ZeroFrequency
from stringtable.tools.twist import (
    MOMENTS,
    PeriodicPotential,
    PotentialSpec,
    TwistSystem,
    build_potential,
    corner_slopes,
    curve_deviation,
    curve_from_energy,
    one_sided_slopes_fd,
    reduce,
    unreduce,
)
from stringtable.tools.vanishing import Accumulation

TWO_PI = 2 * np.pi


@pytest.fixture(scope="module")
def pendulum():
    """V = cos 2 pi X: one non-degenerate maximum at 0."""
    return PeriodicPotential.from_callables(
        value=lambda x: np.cos(TWO_PI * np.asarray(x)),
        force=lambda x: -TWO_PI * np.sin(TWO_PI * np.asarray(x)),
        stiffness=lambda x: -TWO_PI**2 * np.cos(TWO_PI * np.asarray(x)),
        maxima=[0.0],
    )


@pytest.fixture(scope="module")
def potential():
    return build_potential(PotentialSpec(nodes=[0.0, 0.3, 0.55], degenerate=[0.8]))


def test_pendulum_corner_slopes(pendulum):
    assert corner_slopes(pendulum, 1, 0.0) == pytest.approx((-TWO_PI, TWO_PI))
    assert corner_slopes(pendulum, 2, 0.0) == pytest.approx((-2 * TWO_PI, 2 * TWO_PI))
    curve = curve_from_energy(pendulum, 1)
    assert curve.energy == pytest.approx(1.0)
    left, right = one_sided_slopes_fd(curve, 0.0)
    assert left == pytest.approx(-TWO_PI, rel=1e-6)
    assert right == pytest.approx(TWO_PI, rel=1e-6)


def test_pendulum_errors(pendulum):
    with pytest.raises(NotCritical):
        corner_slopes(pendulum, 1, 0.25)
    with pytest.raises(NegativeRadicand):
        curve_from_energy(pendulum, 1, E=0.5)


def test_pendulum_conserves_energy(pendulum):
    system = TwistSystem(1, 1, pendulum)
    X = np.array([0.3, 0.1])
    P = np.array([0.5, 1.0])
    X1, P1 = system.flow(X, P, 10.0)
    np.testing.assert_allclose(system.energy(X1, P1), system.energy(X, P), atol=1e-6)


def test_separatrix_stays_on_the_level_curve(pendulum):
    system = TwistSystem(1, 1, pendulum)
    curve = curve_from_energy(pendulum, 1)
    assert curve_deviation(system, curve, samples=8) < 1e-4


def test_moment_matches_quadrature():
    direct = quad(lambda u: u * np.exp(-1.0 / (1.0 - u**2)), 0.0, 1.0, epsabs=1e-14)[0]
    assert MOMENTS[1] == pytest.approx(direct, rel=1e-9)


def test_built_potential_shares_one_level(potential):
    np.testing.assert_allclose(potential.maxima, [0.0, 0.3, 0.55, 0.8])
    np.testing.assert_array_equal(potential.degenerate, [False, False, False, True])
    np.testing.assert_allclose(potential.force(potential.maxima), 0.0, atol=1e-15)
    np.testing.assert_allclose(potential(potential.maxima), potential.level, atol=1e-12)
    x = np.arange(2000) / 2000
    assert np.max(potential(x)) <= potential.level + 1e-12


def test_built_potential_curvature(potential):
    stiffness = potential.stiffness(potential.maxima)
    np.testing.assert_allclose(stiffness[:3], -np.exp(-1.0), rtol=1e-12)
    assert stiffness[3] == 0.0
    assert corner_slopes(potential, 2, 0.3) == pytest.approx((-2 * np.exp(-0.5), 2 * np.exp(-0.5)))
    assert corner_slopes(potential, 2, 0.8) == (0.0, 0.0)


def test_flat_maximum_fd_slopes_vanish_with_the_step(potential):
    # near a quartic-flat maximum the curve is quadratic, so one-sided slopes scale with the step
    curve = curve_from_energy(potential, 2)
    coarse = np.abs(one_sided_slopes_fd(curve, 0.8, step=1e-3))
    fine = np.abs(one_sided_slopes_fd(curve, 0.8, step=1e-4))
    np.testing.assert_allclose(coarse / fine, 10.0, rtol=0.05)
    assert np.all(fine < 2e-3)
    assert np.all(np.abs(one_sided_slopes_fd(curve, 0.8, step=1e-5)) < 1e-6)


def test_amplitude_scales_the_potential():
    spec = PotentialSpec(nodes=[0.2, 0.7])
    base, scaled = build_potential(spec), build_potential(spec, amplitude=3.0)
    x = np.linspace(0.0, 1.0, 17)
    np.testing.assert_allclose(scaled(x), 3.0 * base(x), atol=1e-14)


def test_accumulating_nodes():
    spec = PotentialSpec(accumulations=[Accumulation(target=0.5, ratio=0.5, count=6)])
    nodes = spec.realized()
    assert len(nodes) == 7
    assert [x for x, flat in nodes if flat] == [0.5]
    pot = build_potential(spec)
    np.testing.assert_allclose(pot(pot.maxima), pot.level, atol=1e-12)


def test_overlapping_nodes():
    with pytest.raises(SpecOverlap):
        PotentialSpec(nodes=[0.1, 1.1]).realized()


def test_empty_spec_gives_zero_potential():
    pot = build_potential(PotentialSpec())
    assert pot.maxima.size == 0
    assert pot(0.3) == 0.0
    system = TwistSystem(1, 1, pot)
    x, p = system.time_one_map(0.2, 0.7)
    assert x == pytest.approx(0.9, abs=1e-12)
    assert p == pytest.approx(0.7, abs=1e-12)


def test_twist_system_needs_nonzero_frequencies(pendulum):
    with pytest.raises(ZeroFrequency, match="a=0"):
        TwistSystem(0, 1, pendulum)
    with pytest.raises(ValueError):
        TwistSystem(1, 0, pendulum)


def test_reduce_unreduce_inverse(pendulum):
    system = TwistSystem(1, 2, pendulum)
    X, P = reduce(system, 0.3, 0.4, 0.5)
    assert (X, P) == pytest.approx((0.1, -0.2))
    x, p = unreduce(system, X, P, 0.5)
    assert (x, p) == pytest.approx((0.3, 0.4))
