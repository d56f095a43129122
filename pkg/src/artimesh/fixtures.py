"""Synthetic articulated objects with exact ground truth.

Each fixture is written as ``mesh.obj`` + ``labels.txt`` in an arbitrary raw
frame (scale/offset drawn from the seed) together with ``truth.json`` whose
axes are expressed in the normalized frame produced by
:func:`artimesh.asset_io.load_segmented_mesh`.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .asset_io import PartSegment, SegmentedObject, TriMesh, normalization_for, write_segmented

FIXTURE_NAMES = ("hinged_box", "drawer_cabinet", "sliding_window", "knob_panel", "wheel_cart")


# ---------------------------------------------------------------- primitives


def box_mesh(lo, hi, color=None) -> TriMesh:
    """Closed axis-aligned box with outward-facing triangles."""
    lo, hi = np.asarray(lo, float), np.asarray(hi, float)
    v = np.array([[lo[0], lo[1], lo[2]], [hi[0], lo[1], lo[2]], [hi[0], hi[1], lo[2]], [lo[0], hi[1], lo[2]],
                  [lo[0], lo[1], hi[2]], [hi[0], lo[1], hi[2]], [hi[0], hi[1], hi[2]], [lo[0], hi[1], hi[2]]])
    f = np.array([[0, 2, 1], [0, 3, 2], [4, 5, 6], [4, 6, 7], [0, 1, 5], [0, 5, 4],
                  [1, 2, 6], [1, 6, 5], [2, 3, 7], [2, 7, 6], [3, 0, 4], [3, 4, 7]])
    return TriMesh(v, f, None if color is None else np.tile(color, (8, 1)))


def sheet_mesh(corner, u, v, color=None) -> TriMesh:
    """Zero-thickness rectangle spanned by ``u`` and ``v`` from ``corner``."""
    c, u, v = (np.asarray(a, float) for a in (corner, u, v))
    verts = np.array([c, c + u, c + u + v, c + v])
    return TriMesh(verts, [[0, 1, 2], [0, 2, 3]], None if color is None else np.tile(color, (4, 1)))


def cylinder_mesh(base_center, axis, radius, height, segments=48, color=None) -> TriMesh:
    """Closed prism approximating a cylinder from ``base_center`` along ``axis``."""
    a = np.asarray(axis, float)
    a = a / np.linalg.norm(a)
    ref = np.array([1.0, 0, 0]) if abs(a[0]) < 0.9 else np.array([0, 1.0, 0])
    e1 = np.cross(a, ref)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(a, e1)
    b = np.asarray(base_center, float)
    ang = 2 * np.pi * np.arange(segments) / segments
    ring = radius * (np.cos(ang)[:, None] * e1 + np.sin(ang)[:, None] * e2)
    verts = np.concatenate([b + ring, b + a * height + ring, [b, b + a * height]])
    c0, c1 = 2 * segments, 2 * segments + 1
    faces = []
    for i in range(segments):
        j = (i + 1) % segments
        faces += [[i, j, segments + j], [i, segments + j, segments + i]]
        faces += [[c0, j, i], [c1, segments + i, segments + j]]
    return TriMesh(verts, faces, None if color is None else np.tile(color, (len(verts), 1)))


def merge_meshes(*meshes: TriMesh) -> TriMesh:
    verts, faces, cols, base = [], [], [], 0
    for m in meshes:
        verts.append(m.vertices)
        faces.append(m.faces + base)
        cols.append(m.colors if m.colors is not None else np.ones_like(m.vertices))
        base += len(m.vertices)
    return TriMesh(np.concatenate(verts), np.concatenate(faces), np.concatenate(cols))


# ---------------------------------------------------------------- fixtures


@dataclass
class FixtureJoint:
    name: str
    joint_type: str
    parent: str
    child: str
    origin: np.ndarray
    direction: np.ndarray
    limits: tuple[float, float] | None
    topology: str | None = None  # BothOnSurface / OneInside for rotating joints
    prismatic_class: str | None = None  # InOut / Surface
    tolerance: float = 0.003

    def to_dict(self) -> dict:
        return {"id": self.name, "name": self.name, "type": self.joint_type, "parent": self.parent,
                "child": self.child, "origin": np.asarray(self.origin).tolist(),
                "direction": np.asarray(self.direction).tolist(),
                "limits": None if self.limits is None else list(self.limits), "topology": self.topology,
                "prismatic_class": self.prismatic_class, "tolerance": self.tolerance}


@dataclass
class Fixture:
    name: str
    object_name: str
    parts: list[PartSegment]
    joints: list[FixtureJoint]
    root: str
    descriptions: dict[str, str] = field(default_factory=dict)

    def object(self) -> SegmentedObject:
        return SegmentedObject(self.parts)


BROWN, GREY, BLUE, RED, DARK, GLASS = (0.6, 0.4, 0.2), (0.7, 0.7, 0.7), (0.3, 0.4, 0.8), (0.8, 0.2, 0.2), \
    (0.15, 0.15, 0.15), (0.55, 0.8, 0.9)


def hinged_box() -> Fixture:
    """Open box with a tall back wall; the lid stands open, coplanar with the back wall."""
    h_back, h_low = 0.25, 0.18
    body = merge_meshes(
        sheet_mesh([-0.3, -0.2, 0], [0.6, 0, 0], [0, 0.4, 0], BROWN),
        sheet_mesh([-0.3, -0.2, 0], [0.6, 0, 0], [0, 0, h_low], BROWN),
        sheet_mesh([-0.3, -0.2, 0], [0, 0.4, 0], [0, 0, h_low], BROWN),
        sheet_mesh([0.3, -0.2, 0], [0, 0.4, 0], [0, 0, h_low], BROWN),
        sheet_mesh([-0.3, 0.2, 0], [0.6, 0, 0], [0, 0, h_back], BROWN),
    )
    lid = sheet_mesh([-0.3, 0.2, h_back], [0.6, 0, 0], [0, 0, 0.35], RED)
    joint = FixtureJoint("lid_joint", "revolute", "body", "lid", np.array([0, 0.2, h_back]), np.array([1.0, 0, 0]),
                         (0.0, 90.0), topology="BothOnSurface")
    return Fixture("hinged_box", "box", [PartSegment("body", body), PartSegment("lid", lid)], [joint], "body",
                   {"body": "the box body, fixed", "lid": "the lid, rotates about the back edge"})


def drawer_cabinet() -> Fixture:
    cab = box_mesh([-0.25, -0.2, 0], [0.25, 0.2, 0.6], BROWN)
    drawer = box_mesh([-0.18, -0.26, 0.35], [0.18, -0.2, 0.5], GREY)
    joint = FixtureJoint("drawer_joint", "prismatic", "cabinet", "drawer", np.array([0, -0.2, 0.425]),
                         np.array([0, -1.0, 0]), (0.0, 0.8), prismatic_class="InOut")
    return Fixture("drawer_cabinet", "cabinet", [PartSegment("cabinet", cab), PartSegment("drawer", drawer)], [joint],
                   "cabinet", {"cabinet": "the cabinet body", "drawer": "the drawer, slides out"})


def sliding_window() -> Fixture:
    wall = box_mesh([-0.4, 0, 0], [0.4, 0.05, 0.5], GREY)
    pane = box_mesh([-0.35, -0.02, 0.05], [0.0, 0.0, 0.45], GLASS)
    joint = FixtureJoint("pane_joint", "prismatic", "frame", "pane", np.array([-0.175, 0, 0.25]),
                         np.array([1.0, 0, 0]), (0.0, 0.9), prismatic_class="Surface")
    return Fixture("sliding_window", "window", [PartSegment("frame", wall), PartSegment("pane", pane)], [joint],
                   "frame", {"frame": "the window frame", "pane": "the sliding pane"})


def knob_panel() -> Fixture:
    panel = box_mesh([-0.3, 0, 0], [0.3, 0.04, 0.4], GREY)
    knob = cylinder_mesh([0.05, 0, 0.2], [0, -1.0, 0], 0.07, 0.06, 48, DARK)
    joint = FixtureJoint("knob_joint", "revolute", "panel", "knob", np.array([0.05, 0, 0.2]), np.array([0, 1.0, 0]),
                         (0.0, 300.0), topology="OneInside")
    return Fixture("knob_panel", "control panel", [PartSegment("panel", panel), PartSegment("knob", knob)], [joint],
                   "panel", {"panel": "the front panel", "knob": "a rotary knob"})


def wheel_cart() -> Fixture:
    body = box_mesh([-0.3, -0.15, 0.1], [0.3, 0.15, 0.3], BLUE)
    wheel = cylinder_mesh([0.3, 0, 0.2], [1.0, 0, 0], 0.09, 0.05, 48, DARK)
    joint = FixtureJoint("wheel_joint", "continuous", "chassis", "wheel", np.array([0.3, 0, 0.2]),
                         np.array([1.0, 0, 0]), None, topology="OneInside")
    return Fixture("wheel_cart", "cart", [PartSegment("chassis", body), PartSegment("wheel", wheel)], [joint],
                   "chassis", {"chassis": "the cart body", "wheel": "a free spinning wheel"})


BUILDERS = {"hinged_box": hinged_box, "drawer_cabinet": drawer_cabinet, "sliding_window": sliding_window,
            "knob_panel": knob_panel, "wheel_cart": wheel_cart}


def truth_record(fx: Fixture, scale: float = 1.0, offset=(0.0, 0.0, 0.0)) -> dict:
    """Ground truth in the normalized frame of the fixture written with (scale, offset)."""
    raw = [scale * p.mesh.vertices + np.asarray(offset) for p in fx.parts]
    norm = normalization_for(np.concatenate(raw))
    joints = []
    for j in fx.joints:
        d = j.to_dict()
        d["origin"] = norm.apply(scale * np.asarray(j.origin) + np.asarray(offset)).tolist()
        d["tolerance"] = j.tolerance
        joints.append(d)
    return {"fixture": fx.name, "object_name": fx.object_name, "root": fx.root,
            "links": [p.name for p in fx.parts], "descriptions": fx.descriptions,
            "raw_scale": 1.0 / norm.scale, "joints": joints}


def write_fixture(fx: Fixture, out_dir, seed: int = 0) -> Path:
    rng = np.random.default_rng([seed, FIXTURE_NAMES.index(fx.name) if fx.name in FIXTURE_NAMES else 99])
    scale = float(rng.uniform(20.0, 50.0))
    offset = rng.uniform(-10.0, 10.0, size=3)
    d = Path(out_dir) / fx.name
    d.mkdir(parents=True, exist_ok=True)
    raw_parts = [PartSegment(p.name, TriMesh(scale * p.mesh.vertices + offset, p.mesh.faces, p.mesh.colors))
                 for p in fx.parts]
    write_segmented(d / "mesh.obj", d / "labels.txt", raw_parts)
    (d / "truth.json").write_text(json.dumps(truth_record(fx, scale, offset), indent=2), encoding="utf-8")
    return d


def generate_fixtures(out_dir, seed: int = 0, names=FIXTURE_NAMES) -> list[Path]:
    """Write the fixture corpus and an ``index.json`` listing it."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    dirs = [write_fixture(BUILDERS[n](), out, seed) for n in names]
    (out / "index.json").write_text(json.dumps({"seed": seed, "fixtures": [p.name for p in dirs]}, indent=2),
                                    encoding="utf-8")
    return dirs


# ---------------------------------------------------------------- limit-sweep fixture


@dataclass
class LidSweepFixture:
    """Closed box with a thick lid hinged at the top-back edge and a backstop.

    Used to check the revolute limit sweep: the lid cannot go below closed and
    hits the backstop after swinging past vertical.
    """

    depth: float = 0.5  # lid length from hinge to free edge
    thickness: float = 0.05
    gap: float = 0.15  # hinge line to backstop face
    width: float = 0.6
    height: float = 0.3

    def parts(self) -> list[PartSegment]:
        w, d, h, t, g = self.width, self.depth, self.height, self.thickness, self.gap
        body = box_mesh([-w / 2, -d / 2, 0], [w / 2, d / 2, h], BROWN)
        stop = box_mesh([-w / 2, d / 2 + g, 0], [w / 2, d / 2 + g + 0.05, h + 2 * d], BROWN)
        lid = box_mesh([-w / 2, -d / 2, h], [w / 2, d / 2, h + t], RED)
        return [PartSegment("body", merge_meshes(body, stop)), PartSegment("lid", lid)]

    @property
    def hinge_origin(self) -> np.ndarray:
        return np.array([0.0, self.depth / 2, self.height])

    @property
    def hinge_direction(self) -> np.ndarray:
        # positive rotation lifts the free edge
        return np.array([-1.0, 0.0, 0.0])

    def collision_angle(self) -> float:
        """Opening angle (degrees) at which the lid's far top edge reaches the backstop."""
        d, t, g = self.depth, self.thickness, self.gap
        if g <= t:
            return math.degrees(math.asin(g / t))
        phi = math.asin(g / math.hypot(d, t)) - math.atan2(t, d)
        return 90.0 + math.degrees(phi)


def truth_tree(truth: dict, obj: SegmentedObject):
    """Ground-truth articulation tree of a written fixture over its loaded object."""
    from .geometry import Line
    from .kinematics import ArticulationTree, JointSpec

    joints = [JointSpec(j["name"], j["type"], j["parent"], j["child"], Line(j["origin"], j["direction"]),
                        None if j["limits"] is None else tuple(j["limits"]), {"solver": "ground truth"})
              for j in truth["joints"]]
    return ArticulationTree(truth["root"], {n: obj.part(n) for n in truth["links"]}, joints)
