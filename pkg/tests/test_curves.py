import numpy as np
import pytest

from stringtable.errors import NotACriticalPoint
from stringtable.tools.billiard import find_diameters
from stringtable.tools.curves import (
    branch_crossings,
    branch_slopes,
    branch_slopes_fd,
    invariance_residual,
    lambda_pm,
    minimum_gap,
    one_sided_slopes,
    one_sided_slopes_fd,
    radial_defect,
    sample_curves,
    singular_points,
    transversality,
)


def test_circle_branches_are_flat(circle):
    t = np.linspace(0.0, 6.0, 13)
    plus, minus = lambda_pm(circle, t)
    np.testing.assert_allclose(plus, np.pi / 2, atol=1e-12)
    np.testing.assert_allclose(minus, np.pi / 2, atol=1e-12)


def test_branches_are_reflections(sin3):
    plus, minus = lambda_pm(sin3, np.linspace(0.0, 6.0, 25))
    np.testing.assert_allclose(plus + minus, np.pi, atol=1e-14)


@pytest.mark.parametrize("branch", ["plus", "minus", "spliced", "spliced_min"])
def test_curves_are_invariant(sin3, branch):
    assert invariance_residual(sin3, branch, samples=512, stride=16) < 1e-7


@pytest.mark.slow
@pytest.mark.parametrize("branch", ["plus", "spliced"])
def test_curves_are_invariant_at_full_resolution(sin3, branch):
    # every sample, including near-perpendicular shots whose chord root sits on a scan point
    assert invariance_residual(sin3, branch, samples=4096, stride=1) < 1e-7


def test_branches_cross_at_diameter_feet(sin3):
    sample = sample_curves(sin3, samples=1024)
    assert len(sample.crossings) == 6
    crossings = branch_crossings(sample)
    assert len(crossings) == 6
    for c in crossings:
        distance = np.min(np.abs(np.mod(c - np.array(sample.crossings) + np.pi, 2 * np.pi) - np.pi))
        assert distance < 2 * np.pi / 1024
    np.testing.assert_array_equal(sample.spliced, np.maximum(sample.plus, sample.minus))


def test_corner_slopes_match_differences(sin3):
    for d in find_diameters(sin3).diameters:
        exact = branch_slopes(sin3, d.t0)
        approx = branch_slopes_fd(sin3, d.t0)
        np.testing.assert_allclose(exact, approx, rtol=1e-4)
        left, right = one_sided_slopes(sin3, d.t0)
        assert left < 0 < right
        assert right == pytest.approx(abs(radial_defect(sin3, d.t0)))
        fd_left, fd_right = one_sided_slopes_fd(sin3, d.t0)
        assert fd_left == pytest.approx(left, rel=1e-3)
        assert fd_right == pytest.approx(right, rel=1e-3)


def test_radial_defect_size(sin3):
    # 1/|Gamma| - k for |h''| = 0.03 and ell = 10
    for d in find_diameters(sin3).diameters:
        assert abs(radial_defect(sin3, d.t0)) == pytest.approx(4.9e-4, rel=0.05)


def test_not_a_critical_point(sin3):
    with pytest.raises(NotACriticalPoint):
        branch_slopes(sin3, 0.5)
    with pytest.raises(NotACriticalPoint):
        transversality(sin3, 0.5)


def test_sin3_singular_points(sin3):
    points = singular_points(sin3)
    assert len(points) == 6
    assert all(p.classification == "transversal" for p in points)
    assert minimum_gap(points) == pytest.approx(np.pi / 3, abs=1e-9)
    for p in points:
        assert np.sign(p.sddot) == np.sign(p.sddot_fd)
        assert p.sddot == pytest.approx(p.sddot_fd, rel=1e-3)
        assert set(p.to_dict()) == {"t0", "slopes", "sddot", "sddot_fd", "class"}


def test_circle_has_no_singular_points(circle):
    assert singular_points(circle) == []


def test_radius_differences_match_sddot(sin3):
    # second differences of |Gamma| itself, independent of the analytic S'
    step = 1e-3
    for p in singular_points(sin3):
        r = [abs(complex(np.asarray(sin3.boundary(p.t0 + k * step)))) for k in (-1, 0, 1)]
        second = (r[0] - 2 * r[1] + r[2]) / step**2
        assert -second == pytest.approx(p.sddot, rel=1e-4)
        speed = float(sin3.speed(p.t0))
        assert second / speed**2 == pytest.approx(radial_defect(sin3, p.t0), rel=1e-3)


def test_accumulating_singular_points(accumulation_table):
    scan = find_diameters(accumulation_table)
    points = singular_points(accumulation_table, scan)
    assert len(points) == 24
    chain = sorted(p.t0 for p in points if 2.0 + 1e-6 < p.t0 < 3.6)
    assert len(chain) == 12
    gaps = np.diff(chain)
    ratios = gaps[1:] / gaps[:-1]
    np.testing.assert_allclose(ratios[:-1], 2.0, rtol=0.2)
    # the flat target is a diameter but not a transversal crossing
    assert any(abs(d.t0 - 2.0) < 1e-12 and d.kind == "flat" for d in scan.diameters)
    assert all(abs(p.t0 - 2.0) > 1e-6 for p in points)


def test_circle_points_bound_the_continuum(circle):
    point = transversality(circle, 1.0)
    assert point.classification == "continuum-boundary"
    assert point.slopes == pytest.approx((0.0, 0.0), abs=1e-12)
    assert invariance_residual(circle, "plus", samples=64, stride=8) < 1e-10
