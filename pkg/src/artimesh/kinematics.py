"""Articulation trees, forward kinematics, joint-state sampling and the
randomized-pose refinement scheduler."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Protocol, Sequence

import numpy as np

from .asset_io import PartSegment, SegmentedObject, TriMesh
from .errors import KinematicsError
from .geometry import Line

JOINT_TYPES = ("fixed", "prismatic", "revolute", "continuous", "floating")
MOVABLE = ("revolute", "continuous", "prismatic")


@dataclass
class JointSpec:
    """One joint. Limits follow the prompt conventions: degrees for revolute,
    multiples of the child's extent along the axis for prismatic."""

    name: str
    joint_type: str
    parent: str
    child: str
    axis: Line = field(default_factory=lambda: Line(np.zeros(3), np.array([0.0, 0.0, 1.0])))
    limits: tuple[float, float] | None = None
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.joint_type not in JOINT_TYPES:
            raise KinematicsError(f"unknown joint type {self.joint_type!r}")
        if self.joint_type in ("revolute", "prismatic"):
            if self.limits is None:
                raise KinematicsError(f"{self.joint_type} joint {self.name!r} needs limits")
            lo, hi = (float(v) for v in self.limits)
            if not (math.isfinite(lo) and math.isfinite(hi)) or lo > hi:
                raise KinematicsError(f"joint {self.name!r}: invalid limits {self.limits}")
            self.limits = (lo, hi)
        elif self.limits is not None:
            self.limits = tuple(float(v) for v in self.limits)

    def to_dict(self) -> dict:
        return {
            "name": self.name, "type": self.joint_type, "parent": self.parent, "child": self.child,
            "axis": self.axis.to_dict(), "limits": None if self.limits is None else list(self.limits),
            "provenance": self.provenance,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "JointSpec":
        return cls(d["name"], d["type"], d["parent"], d["child"], Line.from_dict(d["axis"]),
                   None if d.get("limits") is None else tuple(d["limits"]), dict(d.get("provenance", {})))


@dataclass
class ArticulationTree:
    root: str
    links: dict[str, PartSegment]
    joints: list[JointSpec]

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.root not in self.links:
            raise KinematicsError(f"root link {self.root!r} missing")
        parents: dict[str, str] = {}
        for j in self.joints:
            for ln in (j.parent, j.child):
                if ln not in self.links:
                    raise KinematicsError(f"joint {j.name!r} references missing link {ln!r}")
            if j.child in parents:
                raise KinematicsError(f"link {j.child!r} has more than one parent joint")
            if j.child == self.root:
                raise KinematicsError("root link cannot be a joint child")
            parents[j.child] = j.parent
        for ln in self.links:
            if ln != self.root and ln not in parents:
                raise KinematicsError(f"link {ln!r} is not attached to the tree")
            seen, cur = set(), ln
            while cur != self.root:
                if cur in seen:
                    raise KinematicsError("articulation tree has a cycle")
                seen.add(cur)
                cur = parents[cur]

    def link_map(self) -> dict[str, PartSegment]:
        return self.links

    def joint(self, name: str) -> JointSpec:
        for j in self.joints:
            if j.name == name:
                return j
        raise KeyError(name)

    def parent_joint(self, link: str) -> JointSpec | None:
        for j in self.joints:
            if j.child == link:
                return j
        return None

    def ordered_joints(self) -> list[JointSpec]:
        """Joints in breadth-first order from the root."""
        out, frontier = [], [self.root]
        while frontier:
            nxt = []
            for ln in frontier:
                for j in self.joints:
                    if j.parent == ln:
                        out.append(j)
                        nxt.append(j.child)
            frontier = nxt
        return out

    def movable_joints(self) -> list[JointSpec]:
        """Joints carrying one scalar of the joint state, in tree joint order."""
        return [j for j in self.joints if j.joint_type in MOVABLE]

    def subtree(self, link: str) -> list[str]:
        out, stack = [], [link]
        while stack:
            ln = stack.pop()
            out.append(ln)
            stack.extend(j.child for j in self.joints if j.parent == ln)
        return out

    def with_joint(self, joint: JointSpec) -> "ArticulationTree":
        return ArticulationTree(self.root, self.links, [joint if j.name == joint.name else j for j in self.joints])

    def to_dict(self) -> dict:
        return {"root": self.root, "links": list(self.links), "joints": [j.to_dict() for j in self.joints]}

    @classmethod
    def from_dict(cls, d: dict, obj: SegmentedObject) -> "ArticulationTree":
        links = {name: obj.part(name) for name in d["links"]}
        return cls(d["root"], links, [JointSpec.from_dict(j) for j in d["joints"]])


def child_extent(tree: ArticulationTree, joint: JointSpec) -> float:
    """Extent of the child link along the joint axis (the prismatic limit unit)."""
    return tree.links[joint.child].extent_along(joint.axis.direction)


def joint_range(tree: ArticulationTree, joint: JointSpec) -> tuple[float, float]:
    """Joint limits in state units: radians (revolute/continuous) or lengths."""
    if joint.joint_type == "continuous":
        return -2 * math.pi, 2 * math.pi
    if joint.joint_type == "revolute":
        return math.radians(joint.limits[0]), math.radians(joint.limits[1])
    if joint.joint_type == "prismatic":
        ext = child_extent(tree, joint)
        return joint.limits[0] * ext, joint.limits[1] * ext
    return 0.0, 0.0


urdf_limits = joint_range


@dataclass
class JointState:
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64).reshape(-1)

    @classmethod
    def zeros(cls, tree: ArticulationTree) -> "JointState":
        return cls(np.zeros(len(tree.movable_joints())))


def validate_state(tree: ArticulationTree, q: JointState, tol: float = 1e-9) -> None:
    movable = tree.movable_joints()
    if len(q.values) != len(movable):
        raise KinematicsError(f"joint state has {len(q.values)} values, tree has {len(movable)} movable joints")
    for j, v in zip(movable, q.values):
        lo, hi = joint_range(tree, j)
        if not (lo - tol <= v <= hi + tol):
            raise KinematicsError(f"joint {j.name!r} value {v} outside [{lo}, {hi}]")


def rotation_about(line: Line, angle: float) -> np.ndarray:
    """4x4 rigid transform rotating by ``angle`` radians about ``line``."""
    k = line.direction
    kx = np.array([[0, -k[2], k[1]], [k[2], 0, -k[0]], [-k[1], k[0], 0]])
    r = np.eye(3) + math.sin(angle) * kx + (1 - math.cos(angle)) * (kx @ kx)
    m = np.eye(4)
    m[:3, :3] = r
    m[:3, 3] = line.origin - r @ line.origin
    return m


def translation_along(direction, distance: float) -> np.ndarray:
    m = np.eye(4)
    m[:3, 3] = np.asarray(direction, dtype=np.float64) * distance
    return m


def joint_motion(joint: JointSpec, value: float) -> np.ndarray:
    if joint.joint_type in ("revolute", "continuous"):
        return rotation_about(joint.axis, value)
    if joint.joint_type == "prismatic":
        return translation_along(joint.axis.direction, value)
    return np.eye(4)


def forward_transform(tree: ArticulationTree, q: JointState,
                      floating: Mapping[str, np.ndarray] | None = None, check: bool = True) -> dict[str, np.ndarray]:
    """Object-frame transform of every link for joint state ``q``.

    The root stays at identity; each child composes its parent's transform with
    its joint motion expressed in rest coordinates. Floating joints use the
    transform given in ``floating`` (keyed by joint name), identity otherwise.
    """
    if check:
        validate_state(tree, q)
    else:
        if len(q.values) != len(tree.movable_joints()):
            raise KinematicsError("joint state length mismatch")
    value = {j.name: v for j, v in zip(tree.movable_joints(), q.values)}
    floating = floating or {}
    out = {tree.root: np.eye(4)}
    for j in tree.ordered_joints():
        if j.joint_type == "floating":
            motion = np.asarray(floating.get(j.name, np.eye(4)), dtype=np.float64)
        else:
            motion = joint_motion(j, value.get(j.name, 0.0))
        out[j.child] = out[j.parent] @ motion
    return out


def pose_object(obj: SegmentedObject, tree: ArticulationTree, q: JointState, **kw) -> SegmentedObject:
    """Copy of ``obj`` with every link's mesh and cloud moved to pose ``q``.

    Parts not in the tree and links whose transform is exactly the identity
    are copied unchanged.
    """
    tf = forward_transform(tree, q, **kw)
    parts = []
    for p in obj.parts:
        m = tf.get(p.name)
        if m is None or np.array_equal(m, np.eye(4)):
            parts.append(PartSegment(p.name, TriMesh(p.mesh.vertices.copy(), p.mesh.faces.copy(),
                                                     None if p.mesh.colors is None else p.mesh.colors.copy()),
                                     None if p.cloud is None else p.cloud.transformed(np.eye(4))))
        else:
            parts.append(PartSegment(p.name, p.mesh.transformed(m), None if p.cloud is None else p.cloud.transformed(m)))
    return SegmentedObject(parts, obj.normalization, obj.source_path)


def sample_joint_state(tree: ArticulationTree, seed: int, iteration: int) -> JointState:
    """Uniform draw of every movable joint within its limits.

    Continuous joints draw from [0, 2*pi). Deterministic in (seed, iteration).
    """
    rng = np.random.default_rng([int(seed), int(iteration)])
    vals = []
    for j in tree.movable_joints():
        if j.joint_type == "continuous":
            vals.append(rng.uniform(0.0, 2 * math.pi))
        else:
            lo, hi = joint_range(tree, j)
            vals.append(lo if hi <= lo else rng.uniform(lo, hi))
    return JointState(np.array(vals))


# ---------------------------------------------------------------- refinement


@dataclass
class GuidanceStep:
    iteration: int
    sampled_state: JointState
    camera: object
    objective_value: float

    def to_dict(self) -> dict:
        cam = self.camera.to_dict() if hasattr(self.camera, "to_dict") else self.camera
        return {"iteration": self.iteration, "state": self.sampled_state.values.tolist(),
                "camera": cam, "objective": self.objective_value}


class Guidance(Protocol):
    def evaluate(self, posed: SegmentedObject, camera) -> tuple[float, dict[str, np.ndarray]]:
        """Return (objective, {part name: per-vertex displacement in the posed frame})."""


class ZeroGuidance:
    """Guidance that never moves anything; objective is always 0."""

    def evaluate(self, posed, camera):
        return 0.0, {}


@dataclass
class SDFPullGuidance:
    """Pulls the vertices of selected parts onto target spheres.

    ``targets`` maps part name to ``(center, radius)`` in the posed frame. The
    objective is the mean absolute signed distance of those vertices. With a
    positive ``penetration_weight``, vertices of a target part found inside
    another part are also pushed away from that part's centroid.
    """

    targets: dict[str, tuple[Sequence[float], float]]
    rate: float = 0.1
    penetration_weight: float = 0.0
    eps: float = 0.0

    def evaluate(self, posed, camera):
        from .geometry import penetration_depth_mask

        disp, errs, pen = {}, [], 0.0
        for name, (center, radius) in self.targets.items():
            v = posed.part(name).mesh.vertices
            rel = v - np.asarray(center, dtype=np.float64)
            dist = np.linalg.norm(rel, axis=1)
            sdf = dist - radius
            grad = rel / np.where(dist > 0, dist, 1.0)[:, None]
            d = -self.rate * sdf[:, None] * grad
            errs.append(np.abs(sdf))
            if self.penetration_weight > 0:
                others = [p for p in posed.parts if p.name != name]
                mask = penetration_depth_mask(v, others, self.eps)
                if mask.any():
                    pen += float(mask.mean())
                    away = v[mask] - np.mean([p.centroid for p in others], axis=0)
                    away /= np.maximum(np.linalg.norm(away, axis=1), 1e-12)[:, None]
                    d[mask] += self.rate * self.penetration_weight * away
            disp[name] = d
        objective = float(np.concatenate(errs).mean()) if errs else 0.0
        return objective + self.penetration_weight * pen, disp


@dataclass
class RefinementResult:
    trace: list[GuidanceStep]
    object: SegmentedObject
    error: Exception | None = None


def apply_posed_displacements(obj: SegmentedObject, transforms: Mapping[str, np.ndarray],
                              displacements: Mapping[str, np.ndarray]) -> SegmentedObject:
    """Map posed-frame vertex displacements back to rest and apply them."""
    parts = []
    for p in obj.parts:
        d = displacements.get(p.name)
        if d is None:
            parts.append(p)
            continue
        rot = transforms.get(p.name, np.eye(4))[:3, :3]
        rest_d = np.asarray(d, dtype=np.float64) @ rot  # R^T d, row-vector form
        mesh = TriMesh(p.mesh.vertices + rest_d, p.mesh.faces, p.mesh.colors)
        parts.append(PartSegment(p.name, mesh, p.cloud))
    return SegmentedObject(parts, obj.normalization, obj.source_path)


def refinement_loop(obj: SegmentedObject, tree: ArticulationTree, guidance: Guidance, iterations: int, seed: int,
                    cameras: Sequence | None = None,
                    on_step: Callable[[GuidanceStep], None] | None = None) -> RefinementResult:
    """Randomized-joint-state optimization loop.

    Each iteration samples a joint state and a camera, poses the current
    geometry, asks ``guidance`` for displacements and folds them back into the
    rest pose. Geometry lives in ``tree.links`` as well as ``obj``; both are
    kept in sync. A guidance exception stops the loop and is returned with the
    partial trace.
    """
    if cameras is None:
        from .viewprompt import icosphere_cameras

        cameras = icosphere_cameras(obj)
    rng = np.random.default_rng([int(seed), 7919])
    trace: list[GuidanceStep] = []
    current = obj
    for it in range(iterations):
        q = sample_joint_state(tree, seed, it)
        camera = cameras[int(rng.integers(len(cameras)))]
        links = {name: current.part(name) for name in tree.links}
        cur_tree = ArticulationTree(tree.root, links, tree.joints)
        tf = forward_transform(cur_tree, q)
        posed = pose_object(current, cur_tree, q)
        try:
            objective, disp = guidance.evaluate(posed, camera)
        except Exception as e:  # noqa: BLE001 - surfaced to the caller with the partial trace
            return RefinementResult(trace, current, e)
        step = GuidanceStep(it, q, camera, float(objective))
        trace.append(step)
        if on_step is not None:
            on_step(step)
        if disp:
            current = apply_posed_displacements(current, tf, disp)
    return RefinementResult(trace, current)


def write_trace(path, trace: Sequence[GuidanceStep]) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for step in trace:
            f.write(json.dumps(step.to_dict()) + "\n")
