"""Mesh + label loading, surface sampling and URDF export."""

from __future__ import annotations

import json
import math
import os
import warnings
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING

import numpy as np
from scipy.stats import qmc

from .errors import AssetError

if TYPE_CHECKING:
    from .kinematics import ArticulationTree


@dataclass
class TriMesh:
    vertices: np.ndarray  # (V, 3)
    faces: np.ndarray  # (F, 3) int
    colors: np.ndarray | None = None  # (V, 3) in [0, 1]

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=np.float64).reshape(-1, 3)
        self.faces = np.asarray(self.faces, dtype=np.int64).reshape(-1, 3)
        if self.colors is not None:
            self.colors = np.asarray(self.colors, dtype=np.float64).reshape(-1, 3)

    @property
    def triangles(self) -> np.ndarray:
        """(F, 3, 3) array of triangle corner positions."""
        return self.vertices[self.faces]

    def face_areas(self) -> np.ndarray:
        tri = self.triangles
        return 0.5 * np.linalg.norm(np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0]), axis=1)

    def transformed(self, matrix: np.ndarray) -> "TriMesh":
        """Copy of the mesh with a 4x4 affine transform applied to vertices."""
        v = self.vertices @ matrix[:3, :3].T + matrix[:3, 3]
        return TriMesh(v, self.faces.copy(), None if self.colors is None else self.colors.copy())


@dataclass
class PartCloud:
    points: np.ndarray
    normals: np.ndarray
    colors: np.ndarray
    seed: int = 0
    faces: np.ndarray | None = None  # source triangle of each sample

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=np.float64).reshape(-1, 3)
        self.normals = np.asarray(self.normals, dtype=np.float64).reshape(-1, 3)
        self.colors = np.asarray(self.colors, dtype=np.float64).reshape(-1, 3)
        if not (len(self.points) == len(self.normals) == len(self.colors)):
            raise AssetError("points, normals and colors must have equal length")
        if self.faces is not None:
            self.faces = np.asarray(self.faces, dtype=np.int64).reshape(-1)
            if len(self.faces) != len(self.points):
                raise AssetError("face indices must match the number of points")

    def __len__(self) -> int:
        return len(self.points)

    def transformed(self, matrix: np.ndarray) -> "PartCloud":
        rot = matrix[:3, :3]
        return PartCloud(self.points @ rot.T + matrix[:3, 3], self.normals @ rot.T, self.colors.copy(), self.seed,
                         None if self.faces is None else self.faces.copy())


@dataclass
class PartSegment:
    name: str
    mesh: TriMesh
    cloud: PartCloud | None = None

    def __post_init__(self):
        if not self.name:
            raise AssetError("part name must be non-empty")
        if len(self.mesh.faces) == 0:
            raise AssetError(f"part {self.name!r} has no triangles")

    @property
    def centroid(self) -> np.ndarray:
        """Area-weighted surface centroid."""
        areas = self.mesh.face_areas()
        centers = self.mesh.triangles.mean(axis=1)
        if areas.sum() <= 0:
            return centers.mean(axis=0)
        return (centers * areas[:, None]).sum(axis=0) / areas.sum()

    def extent_along(self, direction) -> float:
        """Length of the part's vertex projection onto ``direction`` (max - min)."""
        d = np.asarray(direction, dtype=np.float64)
        d = d / np.linalg.norm(d)
        proj = self.mesh.vertices @ d
        return float(proj.max() - proj.min())


@dataclass
class Normalization:
    """Similarity transform ``normalized = scale * raw + offset``."""

    scale: float = 1.0
    offset: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        self.offset = np.asarray(self.offset, dtype=np.float64)

    def apply(self, points: np.ndarray) -> np.ndarray:
        return self.scale * np.asarray(points, dtype=np.float64) + self.offset

    def invert(self, points: np.ndarray) -> np.ndarray:
        return (np.asarray(points, dtype=np.float64) - self.offset) / self.scale

    def compose(self, inner: "Normalization") -> "Normalization":
        """Return the transform equivalent to applying ``inner`` first, then ``self``."""
        return Normalization(self.scale * inner.scale, self.scale * inner.offset + self.offset)

    def to_dict(self) -> dict:
        return {"scale": self.scale, "offset": self.offset.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "Normalization":
        return cls(float(d["scale"]), np.asarray(d["offset"], dtype=np.float64))


@dataclass
class SegmentedObject:
    parts: list[PartSegment]
    normalization: Normalization = field(default_factory=Normalization)
    source_path: str = ""

    def __post_init__(self):
        names = [p.name for p in self.parts]
        if len(set(names)) != len(names):
            raise AssetError(f"duplicate part names: {names}")

    def part(self, name: str) -> PartSegment:
        for p in self.parts:
            if p.name == name:
                return p
        raise KeyError(name)

    @property
    def names(self) -> list[str]:
        return [p.name for p in self.parts]

    def all_vertices(self) -> np.ndarray:
        return np.concatenate([p.mesh.vertices for p in self.parts])

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        v = self.all_vertices()
        return v.min(axis=0), v.max(axis=0)


# ---------------------------------------------------------------- OBJ reading


def read_obj(path: str | os.PathLike) -> tuple[np.ndarray, np.ndarray | None, list[list[int]]]:
    """Parse vertices, optional per-vertex colors and polygon faces of an OBJ file.

    Faces are returned as zero-based vertex index lists in file order; texture
    and normal indices are dropped.
    """
    verts, cols, faces = [], [], []
    try:
        with open(path, encoding="utf-8") as f:
            lines = f.readlines()
    except OSError as e:
        raise AssetError(f"cannot read mesh {path}: {e}") from e
    for lineno, line in enumerate(lines, 1):
        tok = line.split()
        if not tok or tok[0].startswith("#"):
            continue
        try:
            if tok[0] == "v":
                verts.append([float(t) for t in tok[1:4]])
                if len(tok) >= 7:
                    cols.append([float(t) for t in tok[4:7]])
            elif tok[0] == "f":
                idx = []
                for t in tok[1:]:
                    i = int(t.split("/")[0])
                    idx.append(i - 1 if i > 0 else len(verts) + i)
                if len(idx) < 3:
                    raise ValueError("face with fewer than 3 vertices")
                faces.append(idx)
        except ValueError as e:
            raise AssetError(f"{path}:{lineno}: {e}") from e
    if not verts or not faces:
        raise AssetError(f"{path}: mesh has no vertices or faces")
    v = np.asarray(verts, dtype=np.float64)
    if any(max(fc) >= len(v) or min(fc) < 0 for fc in faces):
        raise AssetError(f"{path}: face index out of range")
    colors = None
    if cols:
        if len(cols) != len(verts):
            raise AssetError(f"{path}: vertex colors given for only some vertices")
        colors = np.clip(np.asarray(cols, dtype=np.float64), 0.0, 1.0)
    return v, colors, faces


def read_labels(path: str | os.PathLike) -> list[str]:
    try:
        with open(path, encoding="utf-8") as f:
            labels = [ln.strip() for ln in f.read().splitlines()]
    except OSError as e:
        raise AssetError(f"cannot read labels {path}: {e}") from e
    while labels and not labels[-1]:
        labels.pop()
    if any(not lb for lb in labels):
        raise AssetError(f"{path}: blank part label")
    return labels


def write_obj(path: str | os.PathLike, mesh: TriMesh) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for i, v in enumerate(mesh.vertices):
            if mesh.colors is not None:
                c = mesh.colors[i]
                f.write(f"v {v[0]:.9g} {v[1]:.9g} {v[2]:.9g} {c[0]:.6g} {c[1]:.6g} {c[2]:.6g}\n")
            else:
                f.write(f"v {v[0]:.9g} {v[1]:.9g} {v[2]:.9g}\n")
        for fc in mesh.faces:
            f.write(f"f {fc[0] + 1} {fc[1] + 1} {fc[2] + 1}\n")


def write_segmented(obj_path, labels_path, parts: list[PartSegment]) -> None:
    """Write parts as one OBJ plus the sidecar label file (one label per face)."""
    verts, cols, faces, labels = [], [], [], []
    base = 0
    any_color = any(p.mesh.colors is not None for p in parts)
    for p in parts:
        verts.append(p.mesh.vertices)
        if any_color:
            c = p.mesh.colors if p.mesh.colors is not None else np.ones_like(p.mesh.vertices)
            cols.append(c)
        faces.append(p.mesh.faces + base)
        labels += [p.name] * len(p.mesh.faces)
        base += len(p.mesh.vertices)
    mesh = TriMesh(np.concatenate(verts), np.concatenate(faces), np.concatenate(cols) if any_color else None)
    write_obj(obj_path, mesh)
    Path(labels_path).write_text("\n".join(labels) + "\n", encoding="utf-8")


def _submesh(vertices, colors, tri_faces) -> TriMesh:
    used, inverse = np.unique(tri_faces.ravel(), return_inverse=True)
    return TriMesh(
        vertices[used],
        inverse.reshape(-1, 3),
        None if colors is None else colors[used],
    )


def normalization_for(vertices: np.ndarray) -> Normalization:
    """Transform that centers the bbox at the origin and gives it unit diagonal."""
    lo, hi = vertices.min(axis=0), vertices.max(axis=0)
    diag = float(np.linalg.norm(hi - lo))
    if diag <= 0:
        raise AssetError("mesh bounding box is degenerate")
    scale = 1.0 / diag
    return Normalization(scale, -scale * 0.5 * (lo + hi))


def normalize_object(obj: SegmentedObject) -> SegmentedObject:
    """Rescale/center an object; clouds are dropped and must be resampled."""
    norm = normalization_for(obj.all_vertices())
    parts = [
        PartSegment(p.name, TriMesh(norm.apply(p.mesh.vertices), p.mesh.faces.copy(),
                                    None if p.mesh.colors is None else p.mesh.colors.copy()))
        for p in obj.parts
    ]
    return SegmentedObject(parts, norm.compose(obj.normalization), obj.source_path)


def load_segmented_mesh(mesh_path: str | os.PathLike, labels_path: str | os.PathLike) -> SegmentedObject:
    """Load an OBJ plus label sidecar and return the normalized segmented object.

    Polygon faces are fan-triangulated; each triangle inherits its face label.
    Part order follows first appearance in the label file.
    """
    vertices, colors, faces = read_obj(mesh_path)
    labels = read_labels(labels_path)
    if len(labels) != len(faces):
        raise AssetError(f"label/face count mismatch: {len(labels)} labels for {len(faces)} faces")
    tri_by_part: dict[str, list] = {}
    for fc, lb in zip(faces, labels):
        tris = tri_by_part.setdefault(lb, [])
        for i in range(1, len(fc) - 1):
            tris.append((fc[0], fc[i], fc[i + 1]))
    parts = [PartSegment(name, _submesh(vertices, colors, np.asarray(t))) for name, t in tri_by_part.items()]
    obj = SegmentedObject(parts, Normalization(), str(mesh_path))
    return normalize_object(obj)


# ---------------------------------------------------------------- sampling


def sample_part_cloud(part: PartSegment, n: int, seed: int) -> PartCloud:
    """Area-uniform surface samples with face normals and interpolated colors.

    A scrambled Sobol sequence drives the sampling: the first coordinate picks
    the triangle through the cumulative area table and the other two give the
    barycentric position. The low discrepancy keeps small sub-regions (the
    contact strip between two parts) evenly covered.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    mesh = part.mesh
    areas = mesh.face_areas()
    total = areas.sum()
    if not total > 0:
        raise AssetError(f"part {part.name!r} has zero surface area")
    m = max(int(math.ceil(math.log2(n))), 1)
    engine = qmc.Sobol(d=3, scramble=True, seed=np.random.default_rng(seed))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        u = engine.random_base2(m)[:n]
    cdf = np.cumsum(areas) / total
    tri_idx = np.minimum(np.searchsorted(cdf, u[:, 0], side="right"), len(areas) - 1)
    a, b = u[:, 1].copy(), u[:, 2].copy()
    fold = a + b > 1.0
    a[fold], b[fold] = 1.0 - a[fold], 1.0 - b[fold]
    w = np.stack([1.0 - a - b, a, b], axis=1)

    tri = mesh.triangles[tri_idx]
    points = np.einsum("nk,nkd->nd", w, tri)
    face_n = np.cross(mesh.triangles[:, 1] - mesh.triangles[:, 0], mesh.triangles[:, 2] - mesh.triangles[:, 0])
    lens = np.linalg.norm(face_n, axis=1, keepdims=True)
    face_n = face_n / np.where(lens > 0, lens, 1.0)
    normals = face_n[tri_idx]
    if mesh.colors is not None:
        colors = np.einsum("nk,nkd->nd", w, mesh.colors[mesh.faces[tri_idx]])
    else:
        colors = np.ones_like(points)
    return PartCloud(points, normals, colors, seed, tri_idx)


def sample_object_clouds(obj: SegmentedObject, density: float, seed: int,
                         min_points: int = 64, noise: float = 0.0) -> SegmentedObject:
    """Attach a cloud to every part with ``density`` samples per unit area.

    Sampling seeds are derived per part from ``seed``. ``noise`` adds isotropic
    Gaussian jitter (normalized units) to the positions.
    """
    rng = np.random.default_rng(seed)
    parts = []
    for i, p in enumerate(obj.parts):
        n = max(min_points, int(round(p.mesh.face_areas().sum() * density)))
        cloud = sample_part_cloud(p, n, seed * 1000 + i)
        if noise > 0:
            cloud.points = cloud.points + rng.normal(scale=noise, size=cloud.points.shape)
        parts.append(PartSegment(p.name, p.mesh, cloud))
    return SegmentedObject(parts, obj.normalization, obj.source_path)


# ---------------------------------------------------------------- URDF


def _fmt(x) -> str:
    return " ".join(f"{float(v):.10g}" for v in np.atleast_1d(x))


def export_urdf(tree: "ArticulationTree", out_dir: str | os.PathLike, robot_name: str = "object",
                normalization: Normalization | None = None) -> dict:
    """Write ``<robot_name>.urdf`` and one OBJ per link; return the manifest.

    Link frames sit at their parent joint's axis origin (rest pose, no
    rotation), so meshes are stored in the object frame and offset by a
    visual origin. Revolute limits go from degrees to radians; prismatic
    limits are scaled by the child's extent along the joint axis.
    """
    from .kinematics import urdf_limits

    out = Path(out_dir)
    try:
        (out / "meshes").mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise AssetError(f"cannot create {out}: {e}") from e
    links = tree.link_map()
    for j in tree.joints:
        for ln in (j.parent, j.child):
            if ln not in links:
                raise AssetError(f"joint {j.name!r} references missing link {ln!r}")

    frame = {tree.root: np.zeros(3)}
    for j in tree.ordered_joints():
        frame[j.child] = np.asarray(j.axis.origin, dtype=np.float64)

    robot = ET.Element("robot", name=robot_name)
    files = []
    for name, part in links.items():
        link_el = ET.SubElement(robot, "link", name=name)
        rel = f"meshes/{_safe(name)}.obj"
        write_obj(out / rel, part.mesh)
        files.append(rel)
        for tag in ("visual", "collision"):
            el = ET.SubElement(link_el, tag)
            ET.SubElement(el, "origin", xyz=_fmt(-frame.get(name, np.zeros(3))), rpy="0 0 0")
            geom = ET.SubElement(el, "geometry")
            ET.SubElement(geom, "mesh", filename=rel)
    for j in tree.ordered_joints():
        jel = ET.SubElement(robot, "joint", name=j.name, type=j.joint_type)
        ET.SubElement(jel, "parent", link=j.parent)
        ET.SubElement(jel, "child", link=j.child)
        ET.SubElement(jel, "origin", xyz=_fmt(frame[j.child] - frame[j.parent]), rpy="0 0 0")
        if j.joint_type in ("revolute", "continuous", "prismatic"):
            ET.SubElement(jel, "axis", xyz=_fmt(j.axis.direction))
        if j.joint_type in ("revolute", "prismatic"):
            lo, hi = urdf_limits(tree, j)
            ET.SubElement(jel, "limit", lower=f"{lo:.10g}", upper=f"{hi:.10g}", effort="100", velocity="1")
    ET.indent(robot)
    urdf_name = f"{_safe(robot_name)}.urdf"
    ET.ElementTree(robot).write(out / urdf_name, encoding="utf-8", xml_declaration=True)
    manifest = {
        "urdf": urdf_name,
        "meshes": files,
        "normalization": (normalization or Normalization()).to_dict(),
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2), encoding="utf-8")
    return manifest


def _safe(name: str) -> str:
    return "".join(c if c.isalnum() or c in "-_." else "_" for c in name)


def read_urdf(path: str | os.PathLike) -> dict:
    """Parse joints back out of a URDF written by :func:`export_urdf`.

    Returns ``{"links": [...], "joints": [{name, type, parent, child, origin,
    direction, limit}]}`` with joint origins accumulated into the object frame
    and limits in URDF units.
    """
    try:
        root = ET.parse(path).getroot()
    except (OSError, ET.ParseError) as e:
        raise AssetError(f"cannot parse URDF {path}: {e}") from e
    links = [el.get("name") for el in root.findall("link")]
    raw = []
    for el in root.findall("joint"):
        origin = el.find("origin")
        axis = el.find("axis")
        limit = el.find("limit")
        raw.append({
            "name": el.get("name"),
            "type": el.get("type"),
            "parent": el.find("parent").get("link"),
            "child": el.find("child").get("link"),
            "offset": np.array([float(v) for v in origin.get("xyz").split()]) if origin is not None else np.zeros(3),
            "direction": [float(v) for v in axis.get("xyz").split()] if axis is not None else None,
            "limit": [float(limit.get("lower")), float(limit.get("upper"))] if limit is not None else None,
        })
    by_child = {j["child"]: j for j in raw}

    def frame_of(link, depth=0):
        if link not in by_child or depth > len(raw):
            return np.zeros(3)
        j = by_child[link]
        return frame_of(j["parent"], depth + 1) + j["offset"]

    joints = []
    for j in raw:
        joints.append({
            "name": j["name"], "type": j["type"], "parent": j["parent"], "child": j["child"],
            "origin": frame_of(j["child"]).tolist(), "direction": j["direction"], "limit": j["limit"],
        })
    return {"links": links, "joints": joints}
