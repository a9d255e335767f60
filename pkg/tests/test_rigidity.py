import json
import math

import numpy as np
import pytest

from conftest import grid_complex, oriented
from intcurrents.currents import boundary
from intcurrents.errors import InputError
from intcurrents.experiments import InstanceSpec, generate, split_disks_instance, unit_disk_current
from intcurrents.mesh import MetricMode
from intcurrents.pa_maps import PiecewiseAffineMap
from intcurrents.rigidity import (
    check_hypotheses,
    distortion,
    essential_injectivity_estimate,
    euclidean_rigidity_chain,
    overlap_direction,
    rigidity_check,
    slice_isometry_check,
)


def rotation(t):
    return np.array([[math.cos(t), -math.sin(t)], [math.sin(t), math.cos(t)]])


@pytest.fixture(scope="module")
def disk():
    return unit_disk_current(128)


@pytest.fixture(scope="module")
def split():
    return split_disks_instance(128)


def test_split_disks_violates_only_boundary_injectivity(split):
    X, psi, ball = split
    rep = check_hypotheses(X, psi, ball)
    assert rep.pushforward_is_ball.passed and rep.pushforward_is_ball.defect <= 1e-6
    assert rep.mass_preserved.passed and rep.mass_preserved.defect <= 1e-6
    assert not rep.boundary_injective.passed
    assert rep.boundary_injective.detail["collisions"] > 0
    assert rep.violated == [3] and rep.verdict == "hypotheses_violated"


def test_split_disks_distortion(split):
    X, psi, _ = split
    assert distortion(X, psi, MetricMode.ambient(), 16).max_distortion == pytest.approx(2.0)
    assert math.isinf(distortion(X, psi, MetricMode.length_graph(2), 16).max_distortion)


def test_identity_disk_is_consistent(disk):
    rep = rigidity_check(disk, PiecewiseAffineMap.identity(disk.complex), disk, MetricMode.length_graph(2), 16)
    assert rep.verdict == "consistent_with_isometry" and rep.violated == []
    assert rep.max_distortion < rep.distortion_tolerance
    assert rep.essential_injectivity["fraction_injective"] == 1.0


def test_symmetry_rotation_is_consistent(disk):
    psi = PiecewiseAffineMap.affine(disk.complex, rotation(2 * math.pi / 128 * 5))
    rep = rigidity_check(disk, psi, disk, MetricMode.ambient(), 16)
    assert rep.verdict == "consistent_with_isometry"
    assert rep.max_distortion == pytest.approx(0.0, abs=1e-12)


def test_generic_rotation_moves_the_polygon(disk):
    psi = PiecewiseAffineMap.affine(disk.complex, rotation(0.5))
    rep = check_hypotheses(disk, psi, disk)
    assert rep.violated == [1] and rep.mass_preserved.passed


def test_scaling_violates_everything(disk):
    rep = rigidity_check(disk, PiecewiseAffineMap.affine(disk.complex, 0.9 * np.eye(2)), disk)
    assert rep.violated == [1, 2, 3]


def test_distortion_of_expansion(disk):
    dr = distortion(disk, PiecewiseAffineMap.affine(disk.complex, 2 * np.eye(2)), MetricMode.ambient(), 8)
    assert dr.max_distortion == pytest.approx(2.0)
    assert dr.n_candidates >= 8


def test_distortion_is_seeded(disk):
    psi = PiecewiseAffineMap.affine(disk.complex, np.diag([1.0, 0.7]))
    a = distortion(disk, psi, MetricMode.ambient(), 8, seed=3)
    b = distortion(disk, psi, MetricMode.ambient(), 8, seed=3)
    assert a == b


def test_injectivity_of_fold():
    c = grid_complex(2)
    imgs = c.vertices.copy()
    imgs[:, 0] = np.minimum(imgs[:, 0], 1 - imgs[:, 0])
    est = essential_injectivity_estimate(oriented(c), PiecewiseAffineMap(c, imgs), samples=500)
    assert est.fraction_injective == 0.0 and est.fraction_unit_multiplicity == 0.0


def test_injectivity_split_disks(split):
    X, psi, ball = split
    est = essential_injectivity_estimate(X, psi, ball, samples=500)
    assert est.fraction_injective == 1.0


def test_chain_identity_all_equal(disk):
    ch = euclidean_rigidity_chain(disk, PiecewiseAffineMap.identity(disk.complex), disk)
    assert ch.all_equal and ch.per_simplex_special_orthogonal
    assert ch.chain[0] == pytest.approx(ch.chain[4], abs=1e-12)


def test_chain_scaling_gap_at_determinant(disk):
    ch = euclidean_rigidity_chain(disk, PiecewiseAffineMap.affine(disk.complex, 0.9 * np.eye(2)), disk)
    assert not ch.all_equal
    assert ch.gaps[3] == pytest.approx(0.19 * ch.chain[4])
    assert max(ch.gaps[:3]) < 1e-9


def test_chain_fold_signed_line_cancels():
    c = grid_complex(2)
    imgs = c.vertices.copy()
    imgs[:, 0] = np.minimum(imgs[:, 0], 1 - imgs[:, 0])
    ch = euclidean_rigidity_chain(oriented(c), PiecewiseAffineMap(c, imgs))
    l1, l2, l3, l4, l5 = ch.chain
    assert l1 == l2 == 0.0
    assert l3 == pytest.approx(1.0) and l4 == pytest.approx(1.0) and l5 == pytest.approx(1.0)


def test_chain_rejects_lower_dimension():
    c = grid_complex(1)
    with pytest.raises(InputError):
        euclidean_rigidity_chain(boundary(oriented(c)), PiecewiseAffineMap.identity(c))


def test_slice_isometry_identity(disk):
    psi = PiecewiseAffineMap.identity(disk.complex)
    rep = slice_isometry_check(disk, psi, [0.0, 1.0], np.linspace(-0.9, 0.9, 7) + 1e-3, ball=disk)
    assert rep.fraction_passing == 1.0
    assert all(rep.two_point_boundary)


def test_slice_isometry_split_disks(split):
    X, psi, ball = split
    # fibers along y: each slice is one segment, mapped isometrically
    rep = slice_isometry_check(X, psi, [0.0, 1.0], [-0.5, 0.3], ball=ball)
    assert rep.fraction_passing == 1.0
    # fibers along x cross both pieces: two segments per slice
    rep = slice_isometry_check(X, psi, [1.0, 0.0], [0.2], ball=ball)
    assert rep.fraction_passing == 0.0


def test_overlap_direction_centroids():
    rng = np.random.default_rng(0)
    A1 = rng.uniform(-1, 1, (400, 2))
    A2 = rng.uniform(-1, 1, (400, 2)) + [3.0, 0.0]
    res = overlap_direction(A1, A2)
    assert res.method == "centroids"
    assert abs(res.v[0]) > 0.99
    assert res.overlap_measure_estimate == pytest.approx(2.0, rel=0.05)


def test_overlap_direction_same_centroid():
    A1 = np.array([[0.0, 0.0], [0.01, 0.0], [0.0, 0.01], [2.0, 2.0]])
    A2 = np.array([[2.0, 0.0], [2.01, 0.0], [2.0, 0.01], [0.0, 2.0]])
    A2 = A2 - A2.mean(axis=0) + A1.mean(axis=0)
    res = overlap_direction(A1, A2)
    assert res.method == "densest_points"
    with pytest.raises(InputError):
        overlap_direction(np.zeros((0, 2)), A2)


def test_report_is_json_serializable(split):
    X, psi, ball = split
    rep = rigidity_check(X, psi, ball, MetricMode.length_graph(2), 8)
    d = rep.to_dict()
    text = json.dumps(d)
    assert d["max_distortion"] == "inf"
    assert json.loads(text)["verdict"] == "hypotheses_violated"


def test_slice_isometry_annulus_through_hole():
    inst = generate(InstanceSpec("annulus", 256, eps=0.3))
    psi = PiecewiseAffineMap.identity(inst.X.complex)
    rep = slice_isometry_check(inst.X, psi, [0.0, 1.0], [0.1, 0.6], ball=inst.ball)
    # through the hole the slice is the chord minus the hole
    assert not rep.mass_equals_segment[0] and not rep.two_point_boundary[0]
    want = 2 * (math.sqrt(1 - 0.01) - math.sqrt(0.09 - 0.01))
    assert rep.mass_defect[0] == pytest.approx(2 * math.sqrt(1 - 0.01) - want, rel=0.02)
    assert rep.mass_equals_segment[1]


def test_overlap_disjoint_disks():
    t = np.linspace(0, 2 * math.pi, 400, endpoint=False)
    circle = np.column_stack([np.cos(t), np.sin(t)])
    res = overlap_direction(circle - [2.0, 0.0], circle + [2.0, 0.0])
    assert np.allclose(res.v, [1.0, 0.0]) and res.overlap_measure_estimate > 1.9


def test_overlap_identical_sets_positive():
    pts = np.random.default_rng(2).uniform(0, 1, (300, 2))
    assert overlap_direction(pts, pts).overlap_measure_estimate > 0


def test_overlap_parallel_segments():
    x = np.linspace(0.0, 1.0, 201)
    A1 = np.column_stack([x, np.zeros_like(x)])
    A2 = np.column_stack([x + 0.4, np.full_like(x, 3.0)])
    res = overlap_direction(A1, A2, h=0.005)
    # v runs along the centroid difference (0.4, 3); the projections overlap on a shared stretch
    perp = np.array([-res.v[1], res.v[0]])
    u1, u2 = A1 @ perp, A2 @ perp
    exact = max(0.0, min(u1.max(), u2.max()) - max(u1.min(), u2.min()))
    assert res.overlap_measure_estimate == pytest.approx(exact, abs=0.02)


def test_distortion_of_half_scaling(disk):
    dr = distortion(disk, PiecewiseAffineMap.affine(disk.complex, 0.5 * np.eye(2)), MetricMode.ambient(), 8)
    assert dr.max_distortion == pytest.approx(1.0)
