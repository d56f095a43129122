import logging
import math

import numpy as np
import pytest

from artimesh.asset_io import PartSegment, SegmentedObject, sample_object_clouds
from artimesh.errors import GeometryError
from artimesh.evaluation import axis_angle_error, axis_position_error
from artimesh.fixtures import box_mesh, cylinder_mesh, hinged_box
from artimesh.geometry import ConnectingArea, Line, fit_plane
from artimesh.joints import (choose_revolute_sign, finalize_prismatic_limits, intersect_limits, promote_if_unbounded,
                             solve_prismatic_inout, solve_prismatic_surface, solve_revolute_single_point,
                             solve_revolute_two_point, validate_revolute_limits)
from artimesh.kinematics import ArticulationTree, JointSpec
from artimesh.viewprompt import Candidate, CandidateSet

from helpers import brute_force_lid_sweep, lid_setup, random_rotation


def candidates(points):
    return CandidateSet([Candidate(i + 1, np.asarray(p, float), np.zeros(2), True) for i, p in enumerate(points)])


def area_of(points):
    pts = np.asarray(points, float)
    try:
        plane = fit_plane(pts)
    except GeometryError:
        plane = None
    return ConnectingArea(pts, np.ones(len(pts), bool), plane, 0.01, 0)


# ---------------------------------------------------------------- revolute solvers


def test_two_point_exact_hinge():
    fx = hinged_box()
    j = fx.joints[0]
    ends = [j.origin + [-0.3, 0, 0], j.origin + [0.3, 0, 0]]
    line = solve_revolute_two_point(candidates(ends + [[0, 0, 0]]), [1, 2])
    truth = Line(j.origin, j.direction)
    assert math.radians(axis_angle_error(line, truth)) <= 1e-9
    assert axis_position_error(line, truth) <= 1e-9


def test_two_point_collinear_and_missing():
    pts = [[0, 0, 0], [1, 1, 0], [2, 2, 0]]
    a = solve_revolute_two_point(candidates(pts), [1, 2, 3])
    b = solve_revolute_two_point(candidates(pts), [1, 3])
    assert axis_angle_error(a, b) < 1e-9 and axis_position_error(a, b) < 1e-12
    with pytest.raises(GeometryError, match="not in the candidate set"):
        solve_revolute_two_point(candidates(pts), [1, 7])
    with pytest.raises(GeometryError):
        solve_revolute_two_point(candidates(pts), [2])


def test_single_point_knob():
    rng = np.random.default_rng(0)
    plate = np.c_[rng.uniform(-0.1, 0.1, 50), np.zeros(50), rng.uniform(-0.1, 0.1, 50)]
    center = np.array([0.02, 0.0, -0.01])
    line = solve_revolute_single_point(center, area_of(plate))
    assert np.allclose(np.abs(line.direction), [0, 1, 0])
    assert np.allclose(line.origin, center)


def test_single_point_planar_z_and_degenerate():
    rng = np.random.default_rng(1)
    line = solve_revolute_single_point([0, 0, 0.3], area_of(np.c_[rng.random((20, 2)), np.full(20, 0.3)]))
    assert np.allclose(np.abs(line.direction), [0, 0, 1])
    with pytest.raises(GeometryError, match="degenerate plane"):
        solve_revolute_single_point([0, 0, 0], area_of([[0, 0, 0], [1, 0, 0], [2, 0, 0]]))


# ---------------------------------------------------------------- prismatic solvers


def test_inout_sign_rule():
    rng = np.random.default_rng(2)
    face = np.c_[np.full(40, 0.5), rng.uniform(-0.2, 0.2, (40, 2))]
    assert np.allclose(solve_prismatic_inout(area_of(face), [0, 0, 0]), [1, 0, 0])
    assert np.allclose(solve_prismatic_inout(area_of(face), [1, 0, 0]), [-1, 0, 0])


def test_inout_symmetric_fallback(caplog):
    rng = np.random.default_rng(3)
    face = np.c_[np.zeros(40), rng.uniform(-0.2, 0.2, (40, 2))]
    with caplog.at_level(logging.WARNING):
        d = solve_prismatic_inout(area_of(face), [0, 0.05, 0.05])
    assert np.allclose(d, [1, 0, 0])
    assert "dominant-axis" in caplog.text


def test_inout_degenerate():
    with pytest.raises(GeometryError):
        solve_prismatic_inout(area_of([[0, 0, 0], [1, 0, 0]]), [0, 0, 0])


def test_surface_projection():
    rng = np.random.default_rng(4)
    area = area_of(np.c_[np.zeros(30), rng.random((30, 2))])  # normal along x
    assert np.allclose(solve_prismatic_surface([0, 0, 1], area), [0, 0, 1])
    assert np.allclose(solve_prismatic_surface(np.array([1, 0, 1]) / math.sqrt(2), area), [0, 0, 1])
    with pytest.raises(GeometryError, match="vanishes"):
        solve_prismatic_surface([1, 0, 0], area)


def test_prismatic_limits():
    child = PartSegment("c", box_mesh([0, 0, 0], [0.2, 1, 1]))
    assert finalize_prismatic_limits((0, 1), child, [1, 0, 0]) == pytest.approx((0, 0.2))
    assert finalize_prismatic_limits((0, 0), child, [-1, 0, 0]) == (0.0, 0.0)
    assert child.extent_along([-1, 0, 0]) == pytest.approx(0.2)


def test_solvers_rigid_equivariant():
    rng = np.random.default_rng(5)
    r, t = random_rotation(rng), rng.normal(size=3)
    move = lambda p: np.asarray(p, float) @ r.T + t
    plate = np.c_[rng.uniform(-0.1, 0.1, 30), np.zeros(30), rng.uniform(-0.1, 0.1, 30)]
    pts = [[0, 0, 0], [0.3, 0.1, 0.2], [0.6, 0.2, 0.4]]
    a = solve_revolute_two_point(candidates(pts), [1, 2, 3])
    b = solve_revolute_two_point(candidates(move(pts)), [1, 2, 3])
    assert abs(abs(b.direction @ (r @ a.direction)) - 1) < 1e-9
    assert np.allclose(b.origin, move(a.origin))
    a = solve_revolute_single_point([0, 0, 0], area_of(plate))
    b = solve_revolute_single_point(move([0, 0, 0]), area_of(move(plate)))
    assert abs(abs(b.direction @ (r @ a.direction)) - 1) < 1e-9
    a = solve_prismatic_inout(area_of(plate), [0, -1, 0])
    b = solve_prismatic_inout(area_of(move(plate)), move([0, -1, 0]))
    assert np.allclose(b, r @ a)


# ---------------------------------------------------------------- limit sweep


@pytest.fixture(scope="module")
def lid():
    return lid_setup()


def test_lid_sweep_matches_brute_force(lid):
    fx, obj, tree, joint = lid
    res = validate_revolute_limits(obj, tree, joint)
    lo, hi = brute_force_lid_sweep(fx, obj.part("lid").cloud.points)
    assert res.lower == 0.0 and lo > -2.0
    assert abs(res.upper - hi) <= 2.0
    assert abs(res.upper - fx.collision_angle()) <= 2.0


def test_lid_sweep_sound(lid):
    fx, obj, tree, joint = lid
    res = validate_revolute_limits(obj, tree, joint, step=2.0)
    inside = [f for a, f in res.samples if res.lower <= a <= res.upper]
    assert max(inside) <= 0.02
    beyond = [f for a, f in res.samples if a == res.upper + 2.0]
    assert beyond and beyond[0] > 0.02


def test_lid_sweep_bounded_by_declared(lid):
    fx, obj, tree, joint = lid
    res = validate_revolute_limits(obj, tree, joint, bounds=(0.0, 45.0))
    assert (res.lower, res.upper) == (0.0, 45.0)
    assert max(a for a, _ in res.samples) == 45.0


def test_free_disc_is_unbounded():
    base = PartSegment("base", box_mesh([5, 5, 5], [6, 6, 6]))
    disc = PartSegment("disc", cylinder_mesh([0, 0, 0], [0, 0, 1], 0.5, 0.05))
    obj = sample_object_clouds(SegmentedObject([base, disc]), 2000, 0)
    joint = JointSpec("spin", "revolute", "base", "disc", Line([0, 0, 0], [0, 0, 1]), (-360, 360))
    tree = ArticulationTree("base", {p.name: p for p in obj.parts}, [joint])
    res = validate_revolute_limits(obj, tree, joint, step=10.0)
    assert (res.lower, res.upper) == (-360.0, 360.0)
    assert promote_if_unbounded("revolute", (res.lower, res.upper)) == "continuous"
    assert promote_if_unbounded("revolute", (0.0, 90.0)) == "revolute"


def test_rest_violation(caplog):
    base = PartSegment("base", box_mesh([0, 0, 0], [1, 1, 1]))
    child = PartSegment("child", box_mesh([0.2, 0.2, 0.2], [0.8, 0.8, 1.5]))
    obj = sample_object_clouds(SegmentedObject([base, child]), 2000, 0)
    joint = JointSpec("j", "revolute", "base", "child", Line([0.5, 0.5, 1], [1, 0, 0]), (-90, 90))
    tree = ArticulationTree("base", {p.name: p for p in obj.parts}, [joint])
    with caplog.at_level(logging.WARNING):
        res = validate_revolute_limits(obj, tree, joint)
    assert (res.lower, res.upper) == (0.0, 0.0) and res.rest_violation
    assert "invalid rest state" in caplog.text


def test_intersect_limits():
    assert intersect_limits((-10, 100), (0, 90)) == (0, 90)
    assert intersect_limits((-10, 40), (0, 90)) == (0, 40)
    assert intersect_limits((50, 60), (0, 10)) == (0.0, 0.0)
    assert intersect_limits((-360, 360), None) == (-360, 360)


def test_axis_sign_lifts_lid(lid):
    fx, obj, tree, joint = lid
    flipped = JointSpec(joint.name, "revolute", "body", "lid", Line(fx.hinge_origin, -fx.hinge_direction),
                        joint.limits)
    line, diag = choose_revolute_sign(obj, tree.with_joint(flipped), flipped)
    assert diag["flipped"] and np.allclose(line.direction, fx.hinge_direction)
    line, diag = choose_revolute_sign(obj, tree, joint)
    assert not diag["flipped"] and np.allclose(line.direction, fx.hinge_direction)
