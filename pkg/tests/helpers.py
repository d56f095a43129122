"""Independent reference computations used as oracles by several test files."""
import math

import numpy as np

from artimesh.asset_io import SegmentedObject, sample_object_clouds
from artimesh.fixtures import LidSweepFixture
from artimesh.geometry import Line
from artimesh.kinematics import ArticulationTree, JointSpec


def random_rotation(rng):
    q, r = np.linalg.qr(rng.normal(size=(3, 3)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def rodrigues(points, origin, direction, angle_deg):
    k = np.asarray(direction, float) / np.linalg.norm(direction)
    a = math.radians(angle_deg)
    p = np.asarray(points, float) - origin
    rotated = p * math.cos(a) + np.cross(k, p) * math.sin(a) + np.outer(p @ k, k) * (1 - math.cos(a))
    return rotated + origin


def box_depth(points, lo, hi):
    """Depth below the surface of an axis-aligned box (negative outside)."""
    lo, hi = np.asarray(lo, float), np.asarray(hi, float)
    return np.minimum(points - lo, hi - points).min(axis=1)


def lid_setup(density=20000.0, seed=0, fx=None):
    fx = fx or LidSweepFixture()
    obj = sample_object_clouds(SegmentedObject(fx.parts()), density, seed)
    joint = JointSpec("lid_joint", "revolute", "body", "lid", Line(fx.hinge_origin, fx.hinge_direction),
                      (-360.0, 360.0))
    tree = ArticulationTree("body", {p.name: p for p in obj.parts}, [joint])
    return fx, obj, tree, joint


def lid_boxes(fx):
    w, d, h, g = fx.width, fx.depth, fx.height, fx.gap
    body = ([-w / 2, -d / 2, 0], [w / 2, d / 2, h])
    stop = ([-w / 2, d / 2 + g, 0], [w / 2, d / 2 + g + 0.05, h + 2 * d])
    return body, stop


def brute_force_lid_sweep(fx, lid_points, resolution=0.5, pen_threshold=0.02, eps=0.005, reach=360.0):
    """Pose-by-pose containment sweep with analytic box depths."""
    boxes = lid_boxes(fx)

    def fraction(angle):
        p = rodrigues(lid_points, fx.hinge_origin, fx.hinge_direction, angle)
        inside = np.zeros(len(p), bool)
        for lo, hi in boxes:
            inside |= box_depth(p, lo, hi) > eps
        return inside.mean()

    out = []
    for sign in (1, -1):
        last = 0.0
        for i in range(1, int(reach / resolution) + 1):
            a = sign * i * resolution
            if fraction(a) > pen_threshold:
                break
            last = a
        out.append(last)
    return out[1], out[0]


def chain_object():
    """Base box, a revolute arm on it, a prismatic slider on the arm and a fixed cap on the base."""
    from artimesh.asset_io import PartSegment
    from artimesh.fixtures import box_mesh

    parts = [PartSegment("base", box_mesh([-0.5, -0.5, 0], [0.5, 0.5, 0.2])),
             PartSegment("arm", box_mesh([-0.05, -0.05, 0.2], [0.05, 0.6, 0.3])),
             PartSegment("slider", box_mesh([-0.04, 0.4, 0.3], [0.04, 0.5, 0.35])),
             PartSegment("cap", box_mesh([0.3, 0.3, 0.2], [0.4, 0.4, 0.25]))]
    return SegmentedObject(parts)


def chain_tree(obj):
    joints = [JointSpec("hinge", "revolute", "base", "arm", Line([0, 0, 0.2], [0, 0, 1]), (-90.0, 90.0)),
              JointSpec("slide", "prismatic", "arm", "slider", Line([0, 0.45, 0.3], [0, 1, 0]), (0.0, 1.0)),
              JointSpec("cap_fix", "fixed", "base", "cap")]
    return ArticulationTree("base", {p.name: p for p in obj.parts}, joints)


def cube_refinement_setup():
    """Cube on a revolute joint through its own center, pulled toward an inscribed sphere."""
    from artimesh.asset_io import PartSegment
    from artimesh.fixtures import box_mesh
    from artimesh.kinematics import SDFPullGuidance

    base = PartSegment("base", box_mesh([-1, -1, -1.2], [1, 1, -1.0]))
    cube = PartSegment("cube", box_mesh([-0.25, -0.25, -0.25], [0.25, 0.25, 0.25]))
    obj = SegmentedObject([base, cube])
    joint = JointSpec("spin", "revolute", "base", "cube", Line([0, 0, 0], [0.3, 0.4, 0.5]), (-180.0, 180.0))
    tree = ArticulationTree("base", {p.name: p for p in obj.parts}, [joint])
    return obj, tree, SDFPullGuidance({"cube": ([0.0, 0.0, 0.0], 0.3)}, rate=0.05)
