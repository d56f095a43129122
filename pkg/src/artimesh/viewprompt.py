"""Software rendering, viewpoint choice and annotated prompt images.

The rasterizer is a plain z-buffer over pixel centers with perspective-correct
depth, flat shading and a headlight. Output is deterministic byte for byte.
"""

from __future__ import annotations

import hashlib
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from numba import njit
from PIL import Image, ImageDraw, ImageFont

from .asset_io import PartSegment, SegmentedObject
from .errors import RenderError
from .geometry import Plane, kmeans

DEFAULT_IMAGE_SIZE = (1024, 1024)
DEFAULT_FOV = 45.0
DEFAULT_N_VIEWS = 42
DISTANCE_FACTOR = 2.5
LABEL_BOX = (24, 16)
DEFAULT_K_VALUES = (4, 6, 8, 12, 16, 24)
ARROW_COLORS = {"up": "red", "down": "yellow", "left": "blue", "right": "green"}
_RGB = {"red": (230, 30, 30), "yellow": (240, 200, 0), "blue": (30, 80, 230), "green": (20, 170, 40)}
BACKGROUND = (200, 200, 200)
NEAR = 1e-3


@dataclass
class Camera:
    position: np.ndarray
    look_at: np.ndarray
    up: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 1.0]))
    vertical_fov: float = DEFAULT_FOV
    image_size: tuple[int, int] = DEFAULT_IMAGE_SIZE
    index: int = -1

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=np.float64)
        self.look_at = np.asarray(self.look_at, dtype=np.float64)
        if np.allclose(self.position, self.look_at):
            raise ValueError("camera position equals look_at")
        if not 10 < self.vertical_fov < 120:
            raise ValueError("vertical_fov must be in (10, 120) degrees")
        f = self.look_at - self.position
        f = f / np.linalg.norm(f)
        hint = np.asarray(self.up, dtype=np.float64)
        if abs(np.dot(hint / np.linalg.norm(hint), f)) > 0.99:
            hint = np.array([0.0, 1.0, 0.0]) if abs(f[1]) < 0.9 else np.array([1.0, 0.0, 0.0])
        r = np.cross(f, hint)
        r /= np.linalg.norm(r)
        self.forward, self.right = f, r
        self.up = np.cross(r, f)
        self.image_size = (int(self.image_size[0]), int(self.image_size[1]))

    @property
    def focal(self) -> float:
        return 0.5 * self.image_size[1] / math.tan(math.radians(self.vertical_fov) / 2)

    def to_camera(self, points) -> np.ndarray:
        rel = np.asarray(points, dtype=np.float64).reshape(-1, 3) - self.position
        return np.stack([rel @ self.right, rel @ self.up, rel @ self.forward], axis=1)

    def project(self, points) -> tuple[np.ndarray, np.ndarray]:
        """Pixel coordinates (x right, y down; pixel centers at +0.5) and depth."""
        c = self.to_camera(points)
        z = c[:, 2]
        w, h = self.image_size
        with np.errstate(divide="ignore", invalid="ignore"):
            px = np.stack([w / 2 + self.focal * c[:, 0] / z, h / 2 - self.focal * c[:, 1] / z], axis=1)
        px[z <= NEAR] = np.nan
        return px, z

    def with_size(self, size) -> "Camera":
        return Camera(self.position, self.look_at, self.up, self.vertical_fov, size, self.index)

    def to_dict(self) -> dict:
        return {"position": self.position.tolist(), "look_at": self.look_at.tolist(), "up": self.up.tolist(),
                "vertical_fov": self.vertical_fov, "image_size": list(self.image_size), "index": self.index}

    @classmethod
    def from_dict(cls, d: dict) -> "Camera":
        return cls(d["position"], d["look_at"], d["up"], d["vertical_fov"], tuple(d["image_size"]), d.get("index", -1))


def icosphere_directions(n_views: int = DEFAULT_N_VIEWS) -> np.ndarray:
    """Unit directions of a subdivided icosahedron; the first ``n_views`` are returned.

    Level 0 gives 12 vertices, each subdivision adds the edge midpoints
    (42, 162, ...). Order is deterministic.
    """
    if n_views < 1:
        raise ValueError("n_views must be >= 1")
    t = (1 + 5 ** 0.5) / 2
    verts = [(-1, t, 0), (1, t, 0), (-1, -t, 0), (1, -t, 0), (0, -1, t), (0, 1, t),
             (0, -1, -t), (0, 1, -t), (t, 0, -1), (t, 0, 1), (-t, 0, -1), (-t, 0, 1)]
    faces = [(0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11), (1, 5, 9), (5, 11, 4), (11, 10, 2),
             (10, 7, 6), (7, 1, 8), (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9), (4, 9, 5),
             (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1)]
    v = [np.array(p, dtype=np.float64) / np.linalg.norm(p) for p in verts]
    while len(v) < n_views:
        mid: dict[tuple[int, int], int] = {}
        new_faces = []
        for a, b, c in faces:
            ids = []
            for e in ((a, b), (b, c), (c, a)):
                key = tuple(sorted(e))
                if key not in mid:
                    m = v[key[0]] + v[key[1]]
                    v.append(m / np.linalg.norm(m))
                    mid[key] = len(v) - 1
                ids.append(mid[key])
            ab, bc, ca = ids
            new_faces += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = new_faces
    return np.array(v[:n_views])


def object_center_radius(obj: SegmentedObject) -> tuple[np.ndarray, float]:
    lo, hi = obj.bounds()
    return 0.5 * (lo + hi), 0.5 * float(np.linalg.norm(hi - lo))


def icosphere_cameras(obj: SegmentedObject, n_views: int = DEFAULT_N_VIEWS, image_size=DEFAULT_IMAGE_SIZE,
                      fov: float = DEFAULT_FOV) -> list[Camera]:
    center, radius = object_center_radius(obj)
    dist = DISTANCE_FACTOR * max(radius, 1e-9)
    return [Camera(center + d * dist, center, np.array([0.0, 0.0, 1.0]), fov, image_size, i)
            for i, d in enumerate(icosphere_directions(n_views))]


# ---------------------------------------------------------------- rasterizer


@dataclass
class RenderedView:
    color: np.ndarray  # (H, W, 3) uint8
    depth: np.ndarray  # (H, W) float64, inf where empty
    part_id: np.ndarray  # (H, W) int16, -1 where empty
    camera: Camera

    def part_pixels(self, index: int) -> int:
        return int((self.part_id == index).sum())

    def depth_range(self) -> float:
        finite = self.depth[np.isfinite(self.depth)]
        return float(finite.max() - finite.min()) if finite.size else 0.0


def render_view(obj: SegmentedObject, camera: Camera, parts: Sequence[PartSegment] | None = None) -> RenderedView:
    """Z-buffered rasterization of all part triangles.

    ``part_id`` holds the index of the part in ``obj.parts``. Triangles with a
    vertex behind the near plane are skipped. Earlier triangles win depth ties.
    """
    w, h = camera.image_size
    depth = np.full((h, w), np.inf)
    pid = np.full((h, w), -1, dtype=np.int16)
    color = np.empty((h, w, 3), dtype=np.uint8)
    color[:] = BACKGROUND
    f = camera.focal
    for index, part in enumerate(parts if parts is not None else obj.parts):
        mesh = part.mesh
        tri = mesh.triangles
        if len(tri) == 0:
            continue
        cam = camera.to_camera(tri.reshape(-1, 3)).reshape(-1, 3, 3)
        fn = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
        fl = np.linalg.norm(fn, axis=1)
        shade = 0.35 + 0.65 * np.abs(fn @ camera.forward) / np.where(fl > 0, fl, 1.0)
        base = mesh.colors[mesh.faces].mean(axis=1) if mesh.colors is not None else np.ones((len(tri), 3))
        rgb = np.clip(np.round(base * shade[:, None] * 255), 0, 255).astype(np.uint8)
        z = cam[:, :, 2]
        keep = np.all(z > NEAR, axis=1)
        z = np.ascontiguousarray(z[keep])
        sx = np.ascontiguousarray(w / 2 + f * cam[keep, :, 0] / z)
        sy = np.ascontiguousarray(h / 2 - f * cam[keep, :, 1] / z)
        _raster_triangles(sx, sy, z, np.ascontiguousarray(rgb[keep]), index, depth, pid, color)
    return RenderedView(color, depth, pid, camera)


@njit(cache=True)
def _raster_triangles(sx, sy, sz, rgb, index, depth, pid, color):  # pragma: no cover - compiled
    h, w = depth.shape
    for t in range(sx.shape[0]):
        x0, x1, x2 = sx[t, 0], sx[t, 1], sx[t, 2]
        y0, y1, y2 = sy[t, 0], sy[t, 1], sy[t, 2]
        area = (x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0)
        if abs(area) < 1e-12:
            continue
        i_lo = max(int(math.ceil(min(x0, x1, x2) - 0.5)), 0)
        i_hi = min(int(math.floor(max(x0, x1, x2) - 0.5)), w - 1)
        j_lo = max(int(math.ceil(min(y0, y1, y2) - 0.5)), 0)
        j_hi = min(int(math.floor(max(y0, y1, y2) - 0.5)), h - 1)
        iz0, iz1, iz2 = 1.0 / sz[t, 0], 1.0 / sz[t, 1], 1.0 / sz[t, 2]
        for j in range(j_lo, j_hi + 1):
            py = j + 0.5
            for i in range(i_lo, i_hi + 1):
                px = i + 0.5
                b0 = ((x1 - px) * (y2 - py) - (x2 - px) * (y1 - py)) / area
                b1 = ((x2 - px) * (y0 - py) - (x0 - px) * (y2 - py)) / area
                b2 = 1.0 - b0 - b1
                if b0 < 0.0 or b1 < 0.0 or b2 < 0.0:
                    continue
                zz = 1.0 / (b0 * iz0 + b1 * iz1 + b2 * iz2)
                if zz < depth[j, i]:
                    depth[j, i] = zz
                    pid[j, i] = index
                    color[j, i, 0] = rgb[t, 0]
                    color[j, i, 1] = rgb[t, 1]
                    color[j, i, 2] = rgb[t, 2]


def select_viewpoint(obj: SegmentedObject, part: PartSegment | str, n_views: int = DEFAULT_N_VIEWS,
                     image_size=DEFAULT_IMAGE_SIZE, fov: float = DEFAULT_FOV) -> Camera:
    """Icosphere camera that shows the most pixels of ``part`` (lowest index on ties)."""
    name = part if isinstance(part, str) else part.name
    index = obj.names.index(name)
    best, best_count = None, 0
    for cam in icosphere_cameras(obj, n_views, image_size, fov):
        count = render_view(obj, cam).part_pixels(index)
        if count > best_count:
            best, best_count = cam, count
    if best is None:
        raise RenderError(f"part fully occluded: {name!r} is invisible from all {n_views} views")
    return best


# ---------------------------------------------------------------- candidates


@dataclass
class Candidate:
    id: int
    point3d: np.ndarray
    pixel: np.ndarray
    visible: bool

    def to_dict(self) -> dict:
        px = [None if not np.isfinite(v) else float(v) for v in self.pixel]
        return {"id": self.id, "point3d": np.asarray(self.point3d).tolist(), "pixel": px, "visible": self.visible}


@dataclass
class CandidateSet:
    candidates: list[Candidate]
    source: str = "ConnectingAreaKMeans"
    k_used: int = 0

    def __len__(self) -> int:
        return len(self.candidates)

    @property
    def visible(self) -> list[Candidate]:
        return [c for c in self.candidates if c.visible]

    def by_id(self, cid: int) -> Candidate:
        for c in self.candidates:
            if c.id == cid:
                return c
        raise KeyError(cid)

    def points(self, ids: Sequence[int]) -> np.ndarray:
        return np.array([self.by_id(i).point3d for i in ids])

    def to_dict(self) -> dict:
        return {"source": self.source, "k_used": self.k_used, "candidates": [c.to_dict() for c in self.candidates]}


def _on_image(px: np.ndarray, size) -> np.ndarray:
    w, h = size
    ok = np.isfinite(px).all(axis=1)
    ok[ok] = (px[ok, 0] >= 0) & (px[ok, 0] < w) & (px[ok, 1] >= 0) & (px[ok, 1] < h)
    return ok


def _sample_depth(depth: np.ndarray, x: float, y: float) -> float:
    """Bilinear depth at a sub-pixel location; nearest pixel near silhouettes."""
    h, w = depth.shape
    gx, gy = x - 0.5, y - 0.5
    i0, j0 = int(math.floor(gx)), int(math.floor(gy))
    if 0 <= i0 < w - 1 and 0 <= j0 < h - 1:
        quad = depth[j0:j0 + 2, i0:i0 + 2]
        if np.isfinite(quad).all():
            fx, fy = gx - i0, gy - j0
            return float(quad[0, 0] * (1 - fx) * (1 - fy) + quad[0, 1] * fx * (1 - fy)
                         + quad[1, 0] * (1 - fx) * fy + quad[1, 1] * fx * fy)
    return float(depth[min(max(int(y), 0), h - 1), min(max(int(x), 0), w - 1)])


def visibility(points, view: RenderedView) -> tuple[np.ndarray, np.ndarray]:
    """Pixels and visibility flags of 3D points against the view's depth buffer."""
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    px, z = view.camera.project(pts)
    delta = 1e-3 * (view.depth_range() or 1.0)
    on = _on_image(px, view.camera.image_size)
    vis = np.zeros(len(pts), dtype=bool)
    for i in np.flatnonzero(on):
        vis[i] = z[i] <= _sample_depth(view.depth, px[i, 0], px[i, 1]) + delta
    return px, vis


def project_candidates(points, view: RenderedView, source: str = "ConnectingAreaKMeans") -> CandidateSet:
    """Project points into the view; visible ones first, ids consecutive from 1."""
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    px, vis = visibility(pts, view)
    order = list(np.flatnonzero(vis)) + list(np.flatnonzero(~vis))
    cands = [Candidate(n + 1, pts[i], px[i], bool(vis[i])) for n, i in enumerate(order)]
    return CandidateSet(cands, source, len(pts))


def label_box(pixel, image_size) -> tuple[float, float, float, float]:
    """Label rectangle centered on ``pixel``, shifted to lie inside the image."""
    bw, bh = LABEL_BOX
    w, h = image_size
    x0 = min(max(pixel[0] - bw / 2, 0.0), w - bw)
    y0 = min(max(pixel[1] - bh / 2, 0.0), h - bh)
    return (x0, y0, x0 + bw, y0 + bh)


def boxes_overlap(a, b) -> bool:
    return min(a[2], b[2]) - max(a[0], b[0]) > 0 and min(a[3], b[3]) - max(a[1], b[1]) > 0


def _layout_ok(cands: Sequence[Candidate], size) -> bool:
    boxes = [label_box(c.pixel, size) for c in cands if c.visible]
    return all(not boxes_overlap(boxes[i], boxes[j]) for i in range(len(boxes)) for j in range(i + 1, len(boxes)))


def choose_candidate_count(area_points, view: RenderedView, k_values: Sequence[int] = DEFAULT_K_VALUES,
                           seed: int = 0) -> CandidateSet:
    """Cluster the area for every k and keep the largest k whose labels do not overlap.

    A k is accepted when at least two cluster centers are visible and their
    label boxes are pairwise disjoint. Each k is judged on its own.
    """
    if not k_values:
        raise ValueError("k_values must be non-empty")
    pts = np.asarray(area_points, dtype=np.float64).reshape(-1, 3)
    best = None
    for k in sorted(set(int(k) for k in k_values)):
        if k > len(pts):
            continue
        centers = kmeans(pts, k, seed).centers
        cs = project_candidates(centers, view)
        if len(cs.visible) >= 2 and _layout_ok(cs.candidates, view.camera.image_size):
            cs.k_used = k
            best = cs
    if best is None:
        raise RenderError("prompt image degenerate: no k gives two visible non-overlapping labels")
    return best


def merge_candidates(view: RenderedView, *groups: tuple[np.ndarray, str], limit: int | None = None) -> CandidateSet:
    """Greedy union of candidate groups in order, skipping labels that would overlap.

    Returns visible candidates only, renumbered from 1; ``source`` lists the
    contributing groups.
    """
    kept: list[Candidate] = []
    sources = []
    size = view.camera.image_size
    for pts, source in groups:
        pts = np.asarray(pts, dtype=np.float64).reshape(-1, 3)
        if len(pts) == 0:
            continue
        px, vis = visibility(pts, view)
        for i in np.flatnonzero(vis):
            if limit is not None and len(kept) >= limit:
                break
            box = label_box(px[i], size)
            if any(boxes_overlap(box, label_box(c.pixel, size)) for c in kept):
                continue
            kept.append(Candidate(len(kept) + 1, pts[i], px[i], True))
            if source not in sources:
                sources.append(source)
    return CandidateSet(kept, "+".join(sources) or "none", len(kept))


# ---------------------------------------------------------------- annotation


@dataclass
class Mark:
    id: int
    pixel: tuple[float, float]
    box: tuple[float, float, float, float]
    point3d: list[float]


@dataclass
class Arrow:
    color: str
    start: tuple[float, float]
    end: tuple[float, float]
    direction3d: np.ndarray
    in_plane: np.ndarray | None = None


@dataclass
class AnnotatedView:
    image: np.ndarray
    camera: Camera
    marks: list[Mark] = field(default_factory=list)
    arrows: list[Arrow] = field(default_factory=list)
    _png: bytes | None = field(default=None, init=False, repr=False, compare=False)

    def png_bytes(self) -> bytes:
        if self._png is None:
            buf = io.BytesIO()
            Image.fromarray(self.image).save(buf, format="PNG", optimize=False)
            self._png = buf.getvalue()
        return self._png

    def digest(self) -> str:
        return hashlib.sha256(self.png_bytes()).hexdigest()

    def manifest(self) -> dict:
        return {
            "camera": self.camera.to_dict(),
            "marks": [{"id": m.id, "pixel": list(m.pixel), "box": list(m.box), "point3d": m.point3d} for m in self.marks],
            "arrows": [{"color": a.color, "start": list(a.start), "end": list(a.end),
                        "direction3d": np.asarray(a.direction3d).tolist(),
                        "in_plane": None if a.in_plane is None else np.asarray(a.in_plane).tolist()}
                       for a in self.arrows],
            "sha256": self.digest(),
        }

    def save(self, png_path) -> Path:
        """Write the PNG and a ``.json`` manifest next to it; returns the manifest path."""
        png_path = Path(png_path)
        png_path.write_bytes(self.png_bytes())
        mpath = png_path.with_suffix(".json")
        mpath.write_text(json.dumps(self.manifest(), indent=2), encoding="utf-8")
        return mpath


def _font():
    return ImageFont.load_default()


def annotate_labels(view: RenderedView, candidates: CandidateSet) -> AnnotatedView:
    """Numbered label boxes at every visible candidate, drawn in id order."""
    img = Image.fromarray(view.color.copy())
    draw = ImageDraw.Draw(img)
    font = _font()
    marks = []
    for c in sorted(candidates.visible, key=lambda c: c.id):
        box = label_box(c.pixel, view.camera.image_size)
        draw.rectangle(box, fill=(255, 255, 255), outline=(0, 0, 0))
        cx, cy = (box[0] + box[2]) / 2, (box[1] + box[3]) / 2
        draw.text((cx, cy), str(c.id), fill=(0, 0, 0), font=font, anchor="mm")
        marks.append(Mark(c.id, (float(c.pixel[0]), float(c.pixel[1])), tuple(float(v) for v in box),
                          np.asarray(c.point3d).tolist()))
    return AnnotatedView(np.asarray(img), view.camera, marks=marks)


def annotate_arrows(view: RenderedView, part: PartSegment, plane: Plane | None = None,
                    part_index: int | None = None, length: float = 90.0) -> AnnotatedView:
    """Four colored arrows from the part's projected centroid.

    up=red, down=yellow, left=blue, right=green. Each arrow records the
    camera-plane 3D direction it depicts (camera up/right axes) and, when a
    plane is given, that direction projected onto it (None if it vanishes).
    """
    if part_index is not None and view.part_pixels(part_index) == 0:
        raise RenderError(f"part {part.name!r} is not visible in this view")
    cam = view.camera
    px, _ = cam.project(part.centroid[None])
    start = px[0]
    if not _on_image(px, cam.image_size)[0]:
        raise RenderError(f"centroid of part {part.name!r} is off-image")
    dirs2d = {"up": (0.0, -1.0), "down": (0.0, 1.0), "left": (-1.0, 0.0), "right": (1.0, 0.0)}
    dirs3d = {"up": cam.up, "down": -cam.up, "left": -cam.right, "right": cam.right}
    img = Image.fromarray(view.color.copy())
    draw = ImageDraw.Draw(img)
    w, h = cam.image_size
    arrows = []
    for key in ("up", "down", "left", "right"):
        dx, dy = dirs2d[key]
        end = (float(np.clip(start[0] + dx * length, 0, w - 1)), float(np.clip(start[1] + dy * length, 0, h - 1)))
        rgb = _RGB[ARROW_COLORS[key]]
        draw.line([tuple(start), end], fill=rgb, width=5)
        head = 14.0
        bx, by = end[0] - dx * head, end[1] - dy * head
        draw.polygon([end, (bx - dy * head * 0.6, by + dx * head * 0.6), (bx + dy * head * 0.6, by - dx * head * 0.6)],
                     fill=rgb)
        in_plane = None
        if plane is not None:
            proj = plane.project_vector(dirs3d[key])
            norm = np.linalg.norm(proj)
            in_plane = proj / norm if norm > 1e-9 else None
        arrows.append(Arrow(ARROW_COLORS[key], (float(start[0]), float(start[1])), end, np.asarray(dirs3d[key]),
                            in_plane))
    return AnnotatedView(np.asarray(img), cam, arrows=arrows)
