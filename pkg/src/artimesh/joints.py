"""Joint parameter solvers and the revolute limit sweep."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.spatial import cKDTree

from .asset_io import PartSegment, SegmentedObject
from .errors import GeometryError, KinematicsError
from .geometry import ConnectingArea, Line, fit_line, penetration_fraction
from .kinematics import ArticulationTree, JointSpec, JointState, forward_transform
from .viewprompt import CandidateSet

log = logging.getLogger(__name__)

DEFAULT_STEP = 2.0
DEFAULT_PEN_THRESHOLD = 0.02
DEFAULT_EPS = 0.005
SWEEP_CLIP = 360.0


def _unit(v) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64).reshape(3)
    n = np.linalg.norm(v)
    if not n > 0:
        raise GeometryError("zero-length direction")
    return v / n


def _plane_of(area: ConnectingArea):
    if area.plane is None:
        raise GeometryError("degenerate plane: connecting area has no well-defined plane")
    return area.plane


# ---------------------------------------------------------------- axis solvers


def solve_revolute_two_point(candidates: CandidateSet, selected: Sequence[int]) -> Line:
    """Line fitted through the selected candidates' 3D points."""
    ids = list(dict.fromkeys(int(i) for i in selected))
    if len(ids) < 2:
        raise GeometryError(f"two-point solver needs at least two selected ids, got {ids}")
    try:
        pts = candidates.points(ids)
    except KeyError as exc:
        raise GeometryError(f"selected id {exc.args[0]} is not in the candidate set") from None
    return fit_line(pts)


def solve_revolute_single_point(point3d, area: ConnectingArea) -> Line:
    """Axis through the selected point, perpendicular to the connecting-area plane."""
    return Line(np.asarray(point3d, dtype=np.float64), _plane_of(area).normal)


def solve_prismatic_inout(area: ConnectingArea, parent_centroid) -> np.ndarray:
    """Area normal oriented away from the parent centroid."""
    from .geometry import fit_plane

    if len(area.points) < 3:
        raise GeometryError("degenerate plane: connecting area has fewer than 3 points")
    return fit_plane(area.points, away_from=parent_centroid).normal


def solve_prismatic_surface(arrow_direction3d, area: ConnectingArea) -> np.ndarray:
    """Arrow direction projected onto the connecting-area plane."""
    plane = _plane_of(area)
    proj = plane.project_vector(_unit(arrow_direction3d))
    n = np.linalg.norm(proj)
    if n < 1e-9:
        raise GeometryError("arrow is parallel to the area normal; its projection vanishes")
    return proj / n


def finalize_prismatic_limits(decl_limit, child: PartSegment, axis) -> tuple[float, float]:
    """Declared limits (child-extent units) converted to lengths."""
    ext = child.extent_along(_unit(axis))
    return (float(decl_limit[0]) * ext, float(decl_limit[1]) * ext)


# ---------------------------------------------------------------- limit sweep


@dataclass
class SweepResult:
    lower: float
    upper: float
    rest_fraction: float
    samples: list[tuple[float, float]] = field(default_factory=list)  # (angle deg, fraction)
    rest_violation: bool = False

    def to_dict(self) -> dict:
        return {"lower": self.lower, "upper": self.upper, "rest_fraction": self.rest_fraction,
                "rest_violation": self.rest_violation,
                "samples": [[a, f] for a, f in self.samples]}


def _moving_and_obstacles(obj: SegmentedObject, tree: ArticulationTree, joint: JointSpec, max_points: int):
    moving_links = set(tree.subtree(joint.child))
    pts = []
    for name in sorted(moving_links):
        part = obj.part(name)
        if part.cloud is None:
            raise GeometryError(f"link {name!r} has no sampled cloud")
        pts.append(part.cloud.points)
    pts = np.concatenate(pts)
    if len(pts) > max_points:
        pts = pts[np.linspace(0, len(pts) - 1, max_points).round().astype(int)]
    fixed = [p for p in obj.parts if p.name not in moving_links]
    return pts, fixed


def _posed_points(tree: ArticulationTree, joint: JointSpec, points: np.ndarray, angle_deg: float) -> np.ndarray:
    movable = tree.movable_joints()
    q = np.zeros(len(movable))
    for i, j in enumerate(movable):
        if j.name == joint.name:
            q[i] = math.radians(angle_deg)
    # only this joint moves, so the child frame carries the whole subtree
    m = forward_transform(tree, JointState(q), check=False)[joint.child]
    return points @ m[:3, :3].T + m[:3, 3]


def validate_revolute_limits(obj: SegmentedObject, tree: ArticulationTree, joint: JointSpec,
                             step: float = DEFAULT_STEP, pen_threshold: float = DEFAULT_PEN_THRESHOLD,
                             eps: float = DEFAULT_EPS, max_points: int = 6000,
                             bounds: tuple[float, float] = (-SWEEP_CLIP, SWEEP_CLIP)) -> SweepResult:
    """Sweep the child by +/-step from rest until it penetrates other links.

    Other links stay at rest. Returns the widest contiguous interval around 0
    (degrees, clipped to +/-360) whose poses keep the penetration fraction at
    or below ``pen_threshold``. A rest pose already above the threshold gives
    [0, 0] and a warning. ``bounds`` stops the sweep early on each side; a side
    that reaches its bound without collision reports the bound.
    """
    if joint.joint_type not in ("revolute", "continuous"):
        raise KinematicsError(f"joint {joint.name!r} is {joint.joint_type}, not rotational")
    if not step > 0:
        raise ValueError("step must be positive")
    pts, fixed = _moving_and_obstacles(obj, tree, joint, max_points)
    lo_b, hi_b = max(float(bounds[0]), -SWEEP_CLIP), min(float(bounds[1]), SWEEP_CLIP)
    if lo_b > 0 or hi_b < 0:
        raise ValueError("sweep bounds must contain 0")
    if not fixed:
        return SweepResult(lo_b, hi_b, 0.0)
    rest = penetration_fraction(pts, fixed, eps)
    res = SweepResult(0.0, 0.0, rest, [(0.0, rest)])
    if rest > pen_threshold:
        log.warning("invalid rest state: joint %s penetrates %.1f%% at rest", joint.name, 100 * rest)
        res.rest_violation = True
        return res
    for sign, bound in ((1.0, hi_b), (-1.0, lo_b)):
        last = 0.0
        reach = abs(bound)
        n_steps = int(math.ceil(reach / step - 1e-9))
        for i in range(1, n_steps + 1):
            angle = sign * min(i * step, reach)
            frac = penetration_fraction(_posed_points(tree, joint, pts, angle), fixed, eps)
            res.samples.append((angle, frac))
            if frac > pen_threshold:
                break
            last = angle
        else:
            last = bound
        if sign > 0:
            res.upper = last
        else:
            res.lower = last
    res.samples.sort()
    return res


def intersect_limits(swept: tuple[float, float], declared: tuple[float, float] | None) -> tuple[float, float]:
    """Swept interval intersected with the declared one; [0, 0] when disjoint."""
    lo, hi = swept
    if declared is not None:
        lo, hi = max(lo, declared[0]), min(hi, declared[1])
    if lo > hi:
        return (0.0, 0.0)
    return (float(lo), float(hi))


def promote_if_unbounded(joint_type: str, limits: tuple[float, float]) -> str:
    """Revolute joints whose final interval spans 720 degrees become continuous."""
    if joint_type == "revolute" and limits[1] - limits[0] >= 2 * SWEEP_CLIP - 1e-9:
        return "continuous"
    return joint_type


# ---------------------------------------------------------------- axis sign


def choose_revolute_sign(obj: SegmentedObject, tree: ArticulationTree, joint: JointSpec,
                         step: float = DEFAULT_STEP, eps: float = DEFAULT_EPS, max_points: int = 4000) -> tuple[Line, dict]:
    """Flip the axis so a positive rotation moves the child away from the parent.

    Both orientations are rotated by +step; the one with less penetration
    wins, then the one with more mean clearance to the other links. Exact ties
    keep the input orientation.
    """
    pts, fixed = _moving_and_obstacles(obj, tree, joint, max_points)
    if not fixed:
        return joint.axis, {"rule": "no obstacles", "flipped": False}
    others = np.concatenate([p.cloud.points for p in fixed if p.cloud is not None])
    kd = cKDTree(others)
    scores = []
    for line in (joint.axis, Line(joint.axis.origin, -joint.axis.direction)):
        t = tree.with_joint(JointSpec(joint.name, joint.joint_type, joint.parent, joint.child, line, joint.limits))
        posed = _posed_points(t, joint, pts, step)
        pen = penetration_fraction(posed, fixed, eps)
        clearance = float(kd.query(posed, k=1)[0].mean())
        scores.append((pen, clearance))
    (p0, c0), (p1, c1) = scores
    tol = 1e-9 * max(c0, c1, 1e-12)
    flip = p1 < p0 or (p1 == p0 and c1 > c0 + tol)
    axis = Line(joint.axis.origin, -joint.axis.direction) if flip else joint.axis
    diag = {"rule": "clearance at +step", "flipped": bool(flip), "penetration": [p0, p1], "clearance": [c0, c1]}
    return axis, diag
