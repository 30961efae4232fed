import json
import logging

import numpy as np
import pytest

from stringtable.errors import (
    AsymmetricCoefficients,
    EmptyDirectionSet,
    NonpositiveWidth,
    OverlappingComponents,
    ReconstructionMismatch,
)
from stringtable.tools.trig_series import TrigPoly, sample_grid
from stringtable.tools.vanishing import (
    _half_bump,
    Accumulation,
    Antiderivative,
    DirectionSetSpec,
    SymmetricFunction,
    build_g,
    bump,
    half_atoms,
    lift,
    node_weight,
    recover_perturbation,
    smooth_step,
    to_trigpoly,
)

THREE = DirectionSetSpec(isolated=[0.0, np.pi / 3, 2 * np.pi / 3])


def test_smooth_step_limits_and_derivative():
    x = np.array([-2.0, -1.0, 0.0, 1.0])
    psi, d1, d2 = smooth_step(x)
    np.testing.assert_array_equal(psi, [0.0, 0.0, 1.0, 1.0])
    np.testing.assert_array_equal(d1, 0.0)
    grid = np.linspace(-0.95, -0.05, 91)
    values = smooth_step(grid)[0]
    assert np.all(np.diff(values) > 0)
    h = 1e-6
    numeric = (smooth_step(grid + h)[0] - smooth_step(grid - h)[0]) / (2 * h)
    np.testing.assert_allclose(smooth_step(grid)[1], numeric, rtol=1e-6, atol=1e-9)
    numeric2 = (smooth_step(grid + h)[1] - smooth_step(grid - h)[1]) / (2 * h)
    np.testing.assert_allclose(smooth_step(grid)[2], numeric2, rtol=1e-5, atol=1e-7)
    assert np.shape(smooth_step(-0.5)[0]) == ()


def test_bump_support_and_slope():
    t = np.array([-0.6, -0.5, 0.0, 0.3, 0.31])
    values = bump(0.5, 0.3, t)
    assert values[0] == 0.0 and values[1] == 0.0
    assert values[2] == 0.0
    assert values[3] == 0.0 and values[4] == 0.0
    assert bump(0.5, 0.3, 0.01) > 0 > bump(0.5, 0.3, -0.01)
    with pytest.raises(NonpositiveWidth):
        bump(0.0, 1.0, 0.1)


def test_gap_profile_is_a_rescaled_bump():
    # right of a node the bump-sum profile is psi(-x/w) arctan(x), bump without its constant factor
    a, w = 0.5, 0.3
    x = np.linspace(0.0, w, 13, endpoint=False)
    profile = _half_bump(x, w)[0]
    expected = np.exp(-1.0 / a - 1.0 / w) * profile
    np.testing.assert_allclose(bump(a, w, x), expected, rtol=1e-14, atol=1e-300)


def test_node_weights_decrease_along_a_chain():
    for weights in ("harmonic", "exponential"):
        chain = [node_weight(0.5**j, 0.5 ** (j + 1), weights) for j in range(1, 6)]
        assert all(a > b for a, b in zip(chain, chain[1:]))


def test_half_atoms_and_lift():
    spec = DirectionSetSpec(intervals=[(0.4, 0.9)], isolated=[2.0])
    atoms = half_atoms(spec)
    assert [a.kind for a in atoms] == ["interval", "isolated"]
    circle = lift(spec)
    assert len(circle.atoms) == 4
    assert circle.contains(0.6 + np.pi)
    assert circle.contains(2.0 + np.pi)
    assert not circle.contains(1.5)


def test_overlapping_components_rejected():
    with pytest.raises(OverlappingComponents):
        half_atoms(DirectionSetSpec(intervals=[(0.4, 0.9)], isolated=[0.5]))
    with pytest.raises(OverlappingComponents):
        half_atoms(DirectionSetSpec(intervals=[(0.9, 0.4)]))


def test_accumulation_points_and_target():
    spec = DirectionSetSpec(accumulations=[Accumulation(target=2.0, ratio=0.5, count=12)])
    atoms = half_atoms(spec)
    kinds = [a.kind for a in atoms]
    assert kinds.count("flat") == 1
    assert kinds.count("isolated") == 12
    target = next(a for a in atoms if a.kind == "flat")
    assert target.lo == pytest.approx(2.0)


def test_empty_direction_set():
    with pytest.raises(EmptyDirectionSet):
        build_g(DirectionSetSpec())


def test_three_directions_exact_zeros():
    g = build_g(THREE, amplitude=0.01)
    zeros = np.array([0.0, np.pi / 3, 2 * np.pi / 3])
    zeros = np.concatenate([zeros, zeros + np.pi])
    np.testing.assert_array_equal(g.value(zeros), 0.0)
    assert np.all(np.abs(g.first(zeros)) > 1e-6)
    mids = zeros + np.pi / 6
    assert np.all(np.abs(g.value(mids)) > 1e-6)
    t = sample_grid(4096)
    assert np.abs(g.value(t)).max() == pytest.approx(0.01, rel=1e-3)
    assert g.symmetry_defect() < 1e-15


def test_flat_variant_has_flat_zeros():
    g = build_g(THREE, variant="flat", amplitude=0.01)
    zeros = np.array([0.0, np.pi / 3, 2 * np.pi / 3])
    np.testing.assert_array_equal(g.value(zeros), 0.0)
    np.testing.assert_array_equal(g.first(zeros), 0.0)
    np.testing.assert_array_equal(g.second(zeros), 0.0)
    assert np.abs(g.value(np.pi / 6)) > 0


def test_interval_zero_set():
    g = build_g(DirectionSetSpec(intervals=[(0.4, 0.9)], isolated=[2.0]), amplitude=0.01)
    inside = np.linspace(0.4, 0.9, 51)
    np.testing.assert_array_equal(g.value(inside), 0.0)
    np.testing.assert_array_equal(g.value(inside + np.pi), 0.0)
    assert g.value(2.0) == 0.0
    assert abs(g.value(1.5)) > 0


def test_even_closed_chain_gets_a_flat_zero(caplog):
    with caplog.at_level(logging.WARNING, logger="stringtable.tools.vanishing"):
        g = build_g(DirectionSetSpec(isolated=[0.5, 2.0]))
    assert "flat" in caplog.text
    kinds = sorted(a.kind for a in g.zeros.atoms)
    assert kinds == ["flat", "flat", "isolated", "isolated"]


def test_from_trig_rejects_even_harmonics():
    with pytest.raises(AsymmetricCoefficients):
        SymmetricFunction.from_trig(TrigPoly.cosine(2, 0.1))


def test_antiderivative_of_cosine():
    integral = Antiderivative(np.cos, panels=64)
    t = np.array([0.0, 0.5, 3.0, 7.0, -1.0])
    np.testing.assert_allclose(integral(t), np.sin(t), atol=1e-14)
    unit = Antiderivative(lambda x: np.ones_like(x), panels=16, period=1.0)
    assert unit(2.5) == pytest.approx(2.5)


def test_recover_sin3_by_both_routes(sin3_g):
    expected = 8 * 0.01 / 3
    for route in ("spectral", "differential"):
        pd = recover_perturbation(sin3_g, route=route)
        assert pd.f.coefficient(3).real * 2 == pytest.approx(expected, abs=1e-10)
        others = np.abs(pd.f.coeffs).copy()
        others[pd.f.degree + 3] = others[pd.f.degree - 3] = 0.0
        assert others.max() < 1e-10
        assert pd.reconstruction_error < 1e-8
        t = sample_grid(64)
        np.testing.assert_allclose(pd.h(t), 0.01 / 3 * np.cos(3 * t), atol=1e-12)


def test_reconstruction_mismatch(sin3_g):
    with pytest.raises(ReconstructionMismatch):
        recover_perturbation(sin3_g, route="differential", tol=1e-300)


def test_recovered_h_derivative_is_minus_g():
    g = build_g(THREE, amplitude=0.01)
    pd = recover_perturbation(g)
    assert pd.backend == "bump"
    t = np.linspace(0.1, 6.0, 40)
    step = 1e-5
    dh = (pd.h(t + step) - pd.h(t - step)) / (2 * step)
    np.testing.assert_allclose(dh, -g.value(t), atol=1e-9)
    assert pd.f.degree > 0


def test_to_trigpoly_keeps_odd_harmonics():
    g = build_g(THREE, amplitude=0.01)
    fitted, residual = to_trigpoly(g, degree=128)
    assert residual < 1e-5
    assert fitted.poly is not None
    assert fitted.symmetry_defect() < 1e-14


def test_direction_set_json(tmp_path):
    spec = DirectionSetSpec(
        intervals=[(0.1, 0.2)], isolated=[1.0],
        accumulations=[Accumulation(target=2.5, side="left", count=4)],
    )
    path = tmp_path / "set.json"
    path.write_text(json.dumps(spec.to_dict()))
    loaded = DirectionSetSpec.load(path)
    assert loaded.intervals == [(0.1, 0.2)]
    assert loaded.isolated == [1.0]
    assert loaded.accumulations[0].side == "left"
    assert loaded.accumulations[0].count == 4
