import numpy as np
import pytest

from stringtable.errors import NoConvergence, TangentialShot
from stringtable.tools.billiard import (
    PhasePoint,
    _polish,
    area_preserving_determinant,
    find_diameters,
    iterate,
    jacobian_fd,
    next_bounce,
    orbit,
    orbit_rows,
)


def _mod_pi(t):
    """Angles in [-0.1, pi - 0.1), so a root at -1e-16 sorts next to 0."""
    return np.mod(np.asarray(t) + 0.1, np.pi) - 0.1


def test_circle_advances_by_twice_the_angle(circle):
    image = next_bounce(circle, PhasePoint(0.3, 0.7))
    assert image.t == pytest.approx(1.7, abs=1e-10)
    assert image.theta == pytest.approx(0.7, abs=1e-10)


def test_circle_jacobian_is_a_shear(circle):
    jac = jacobian_fd(circle, PhasePoint(1.0, 1.1))
    np.testing.assert_allclose(jac, [[1.0, 2.0], [0.0, 1.0]], atol=1e-6)


def test_reversed_image_returns(sin3):
    p = PhasePoint(0.4, 1.3)
    image = next_bounce(sin3, p)
    back = next_bounce(sin3, image.reversed())
    assert back.t == pytest.approx(p.t, abs=1e-9)
    assert back.theta == pytest.approx(np.pi - p.theta, abs=1e-9)


def test_tangential_shot(sin3):
    with pytest.raises(TangentialShot):
        next_bounce(sin3, PhasePoint(0.0, 0.0))
    with pytest.raises(TangentialShot):
        next_bounce(sin3, PhasePoint(0.0, np.pi))


def test_sin3_diameters(sin3):
    scan = find_diameters(sin3)
    assert not scan.degenerate
    assert scan.continua == []
    t0 = np.sort(_mod_pi([d.t0 for d in scan.diameters]))
    np.testing.assert_allclose(t0, [0.0, np.pi / 3, 2 * np.pi / 3], atol=1e-10)
    for d in scan.diameters:
        assert d.d == pytest.approx(11.0, rel=1e-9)
        assert abs(d.hddot) == pytest.approx(0.03, rel=1e-9)
        assert d.kind == "isolated"
    assert scan.minimum_gap == pytest.approx(np.pi / 3, abs=1e-9)


def test_diameters_are_period_two(sin3):
    for d in find_diameters(sin3).diameters:
        p = d.phase_point()
        once = next_bounce(sin3, p)
        assert np.mod(once.t - d.t0, 2 * np.pi) == pytest.approx(np.pi, abs=1e-8)
        assert once.theta == pytest.approx(np.pi / 2, abs=1e-8)
        twice = iterate(sin3, p, 2)
        assert _mod_pi(twice.t - d.t0) == pytest.approx(0.0, abs=1e-8)


def test_circle_scan_is_degenerate(circle):
    scan = find_diameters(circle)
    assert scan.degenerate
    assert scan.diameters == []


def test_interval_gives_a_continuum(interval_table):
    scan = find_diameters(interval_table)
    assert not scan.degenerate
    assert len(scan.continua) == 1
    lo, hi = scan.continua[0]
    assert lo == pytest.approx(0.4, abs=1e-12)
    assert hi == pytest.approx(0.9, abs=1e-12)
    assert [round(d.t0, 9) for d in scan.diameters] == [2.0]


def test_billiard_preserves_area(sin3):
    for p in (PhasePoint(0.5, 1.2), PhasePoint(2.0, 0.4)):
        assert area_preserving_determinant(sin3, p) == pytest.approx(1.0, abs=1e-5)
    assert area_preserving_determinant(sin3, PhasePoint(0.5, 1.2), order=2) == pytest.approx(1.0, abs=1e-5)


def test_orbit_rows(sin3):
    points = orbit(sin3, PhasePoint(0.2, 1.0), 5)
    rows = orbit_rows(sin3, points)
    assert [r["iteration"] for r in rows] == list(range(6))
    assert rows[0]["t"] == pytest.approx(0.2)
    for r in rows:
        assert 0 <= r["t"] < 2 * np.pi
        assert 0 < r["theta"] < np.pi


@pytest.mark.parametrize("t", np.linspace(0.0, 2 * np.pi, 9, endpoint=False))
def test_circle_perpendicular_shot_lands_opposite(circle, t):
    # the root t + pi sits on a bracket scan point
    image = next_bounce(circle, PhasePoint(float(t), np.pi / 2))
    assert np.angle(np.exp(1j * (image.t - t - np.pi))) == pytest.approx(0.0, abs=1e-10)
    assert image.theta == pytest.approx(np.pi / 2, abs=1e-10)


def test_sin3_near_perpendicular_shot(sin3):
    image = next_bounce(sin3, PhasePoint(3.627865, 1.5717))
    back = next_bounce(sin3, image.reversed())
    assert back.t == pytest.approx(3.627865, abs=1e-9)


def test_polish_accepts_an_endpoint_root():
    assert _polish(lambda x: x - 1.0, 0.5, 1.0, (0.0, 2.0)) == 1.0
    assert _polish(lambda x: x - 1.0, 1.0, 1.5, (0.0, 2.0)) == 1.0


def test_polish_moves_a_bracket_with_agreeing_signs():
    assert _polish(lambda x: x - 1.0, 1.05, 1.1, (0.0, 2.0)) == pytest.approx(1.0, abs=1e-13)
    assert _polish(lambda x: x - 1.0, 0.9, 0.95, (0.0, 2.0)) == pytest.approx(1.0, abs=1e-13)
    with pytest.raises(NoConvergence):
        _polish(lambda x: x + 5.0, 0.5, 1.0, (0.0, 2.0))
