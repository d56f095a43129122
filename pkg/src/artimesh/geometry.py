"""Numerical kernels: neighbor queries, connecting areas, PCA fits, k-means,
superpoint partitioning and mesh penetration tests.

Everything here works in normalized object units and is a pure function of
its inputs.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import ndimage, sparse
from scipy.sparse import csgraph
from scipy.spatial import cKDTree

from .asset_io import PartCloud, PartSegment, TriMesh
from .errors import GeometryError

log = logging.getLogger(__name__)

DEFAULT_TAU0 = 0.01
DEFAULT_MAX_DOUBLINGS = 8


@dataclass
class Plane:
    centroid: np.ndarray
    normal: np.ndarray

    def __post_init__(self):
        self.centroid = np.asarray(self.centroid, dtype=np.float64)
        n = np.asarray(self.normal, dtype=np.float64)
        self.normal = n / np.linalg.norm(n)

    def project_vector(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=np.float64)
        return v - np.dot(v, self.normal) * self.normal


@dataclass
class Line:
    origin: np.ndarray
    direction: np.ndarray

    def __post_init__(self):
        self.origin = np.asarray(self.origin, dtype=np.float64)
        d = np.asarray(self.direction, dtype=np.float64)
        norm = np.linalg.norm(d)
        if not norm > 0:
            raise GeometryError("line direction must be non-zero")
        self.direction = d / norm

    def distance_to(self, points) -> np.ndarray:
        rel = np.atleast_2d(points) - self.origin
        return np.linalg.norm(np.cross(rel, self.direction), axis=1)

    def to_dict(self) -> dict:
        return {"origin": self.origin.tolist(), "direction": self.direction.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "Line":
        return cls(d["origin"], d["direction"])


def _points(x) -> np.ndarray:
    if isinstance(x, PartCloud):
        return x.points
    return np.asarray(x, dtype=np.float64).reshape(-1, 3)


def _canonical_sign(v: np.ndarray) -> np.ndarray:
    """Flip ``v`` so its largest-magnitude component is positive."""
    i = int(np.argmax(np.abs(v)))
    return v if v[i] >= 0 else -v


# ---------------------------------------------------------------- neighbors


def nearest_distances(query, target) -> np.ndarray:
    """Exact Euclidean distance from each query point to its nearest target point."""
    q, t = _points(query), _points(target)
    if len(q) == 0 or len(t) == 0:
        raise GeometryError("nearest_distances needs two non-empty clouds")
    _, idx = cKDTree(t).query(q, k=1)
    # recompute from the winning pair so values do not depend on tree internals
    return np.sqrt(((q - t[idx]) ** 2).sum(axis=1))


def _within(query: np.ndarray, tree: cKDTree, tau: float) -> np.ndarray:
    bound = np.nextafter(tau, np.inf)
    d, _ = tree.query(query, k=1, distance_upper_bound=bound)
    return np.asarray(d) <= tau


@dataclass
class ConnectingArea:
    points: np.ndarray
    from_a: np.ndarray
    plane: Plane | None
    final_threshold: float
    doublings: int

    @property
    def points_a(self) -> np.ndarray:
        return self.points[self.from_a]

    @property
    def points_b(self) -> np.ndarray:
        return self.points[~self.from_a]


def connecting_area(pa, pb, tau0: float = DEFAULT_TAU0, max_doublings: int = DEFAULT_MAX_DOUBLINGS,
                    parent_centroid=None) -> ConnectingArea:
    """Points of each cloud lying within a threshold of the other cloud.

    The threshold starts at ``tau0`` and doubles until something is selected
    (at most ``max_doublings`` times). The area plane is fitted when the
    selection is non-degenerate; its normal points away from
    ``parent_centroid`` when given.
    """
    if not tau0 > 0:
        raise ValueError("tau0 must be positive")
    a, b = _points(pa), _points(pb)
    if len(a) == 0 or len(b) == 0:
        raise GeometryError("connecting_area needs two non-empty clouds")
    ta, tb = cKDTree(a), cKDTree(b)
    tau = float(tau0)
    for doublings in range(max_doublings + 1):
        # bounded queries: only "within tau" matters, exact distances are not needed
        sel_a = _within(a, tb, tau)
        sel_b = _within(b, ta, tau)
        if sel_a.any() or sel_b.any():
            pts = np.concatenate([a[sel_a], b[sel_b]])
            flags = np.concatenate([np.ones(sel_a.sum(), bool), np.zeros(sel_b.sum(), bool)])
            try:
                plane = fit_plane(pts, away_from=parent_centroid)
            except GeometryError:
                plane = None
            return ConnectingArea(pts, flags, plane, tau, doublings)
        if doublings < max_doublings:
            tau *= 2.0
    raise GeometryError(f"parts not connectable: nothing within {tau:g} after {max_doublings} doublings")


# ---------------------------------------------------------------- PCA fits


def _covariance(points: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    c = points.mean(axis=0)
    x = points - c
    w, v = np.linalg.eigh(x.T @ x / len(points))
    return c, w, v


def fit_plane(points, away_from=None) -> Plane:
    """Total-least-squares plane through the points.

    The normal is the smallest-eigenvalue eigenvector of the covariance. With
    ``away_from`` the normal points away from that location; otherwise (or
    when the location lies on the plane) the largest normal component is made
    positive.
    """
    p = _points(points)
    if len(p) < 3:
        raise GeometryError("degenerate plane: fewer than 3 points")
    c, w, v = _covariance(p)
    if not w[2] > 0 or w[1] <= 1e-12 * w[2]:
        raise GeometryError("degenerate plane: points are collinear")
    n = v[:, 0]
    if away_from is not None:
        s = float(np.dot(c - np.asarray(away_from, dtype=np.float64), n))
        scale = max(np.sqrt(w[2]), 1e-12)
        if abs(s) > 1e-9 * scale:
            return Plane(c, n if s > 0 else -n)
        log.warning("plane passes through the reference point; using dominant-axis sign")
    return Plane(c, _canonical_sign(n))


def fit_line(points) -> Line:
    """Line through the centroid along the principal covariance direction."""
    p = _points(points)
    if len(p) < 2:
        raise GeometryError("degenerate line: fewer than 2 points")
    c, w, v = _covariance(p)
    scale = max(float(np.abs(p).max()), 1.0)
    if w[2] <= (1e-12 * scale) ** 2:
        raise GeometryError("degenerate line: points coincide")
    return Line(c, _canonical_sign(v[:, 2]))


# ---------------------------------------------------------------- k-means


@dataclass
class KMeansResult:
    assignment: np.ndarray
    centers: np.ndarray
    objective: float
    history: list[float] = field(default_factory=list)


def _kmeans_pp(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = len(x)
    chosen = [int(rng.integers(n))]
    d2 = ((x - x[chosen[0]]) ** 2).sum(axis=1)
    for _ in range(1, k):
        total = d2.sum()
        if total > 0:
            i = int(rng.choice(n, p=d2 / total))
        else:
            free = np.setdiff1d(np.arange(n), chosen)
            i = int(free[rng.integers(len(free))])
        chosen.append(i)
        d2 = np.minimum(d2, ((x - x[i]) ** 2).sum(axis=1))
    return x[chosen].copy()


def _assign(x: np.ndarray, centers: np.ndarray) -> tuple[np.ndarray, float]:
    # expanded squared distances pick the label; the objective is recomputed exactly
    d2 = (centers ** 2).sum(axis=1)[None, :] - 2.0 * (x @ centers.T)
    assign = d2.argmin(axis=1)
    return assign, float(((x - centers[assign]) ** 2).sum())


def _lloyd(x, centers, max_iter, tol):
    k, dim = centers.shape
    assign, obj = _assign(x, centers)
    history = [obj]
    for _ in range(max_iter):
        counts = np.bincount(assign, minlength=k)
        sums = np.stack([np.bincount(assign, weights=x[:, d], minlength=k) for d in range(dim)], axis=1)
        new = centers.copy()
        nz = counts > 0
        new[nz] = sums[nz] / counts[nz, None]
        new_assign, new_obj = _assign(x, new)
        if new_obj > obj:
            break  # rounding at convergence; keep the better state
        moved = float(np.linalg.norm(new - centers, axis=1).max())
        centers, assign, obj = new, new_assign, new_obj
        history.append(obj)
        if moved < tol:
            break
    return assign, centers, obj, history


def kmeans(points, k: int, seed: int, restarts: int = 3, max_iter: int = 100, tol: float = 1e-7) -> KMeansResult:
    """Lloyd's k-means with k-means++ seeding; best of ``restarts`` seeded runs.

    Works on any (n, d) array. ``history`` holds the objective after every
    assignment step of the winning run.
    """
    x = np.asarray(points, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    if not 1 <= k <= len(x):
        raise GeometryError(f"k={k} must be between 1 and the number of points ({len(x)})")
    best = None
    for child in np.random.SeedSequence(seed).spawn(restarts):
        rng = np.random.default_rng(child)
        res = _lloyd(x, _kmeans_pp(x, k, rng), max_iter, tol)
        if best is None or res[2] < best[2]:
            best = res
    assign, centers, obj, history = best
    return KMeansResult(assign, centers, obj, history)


# ---------------------------------------------------------------- superpoints


@dataclass
class Region:
    centroid: np.ndarray
    mean_normal: np.ndarray
    mean_color: np.ndarray
    count: int
    representative: np.ndarray


@dataclass
class SuperpointPartition:
    assignment: np.ndarray
    regions: list[Region]

    @property
    def representatives(self) -> np.ndarray:
        return np.array([r.representative for r in self.regions]).reshape(-1, 3)


def knn_graph(points: np.ndarray, k_nn: int) -> sparse.csr_matrix:
    """Symmetric unweighted k-nearest-neighbor adjacency."""
    n = len(points)
    k = min(k_nn + 1, n)
    _, idx = cKDTree(points).query(points, k=k)
    idx = np.asarray(idx).reshape(n, -1)
    rows = np.repeat(np.arange(n), idx.shape[1])
    cols = idx.ravel()
    keep = rows != cols
    g = sparse.coo_matrix((np.ones(keep.sum()), (rows[keep], cols[keep])), shape=(n, n)).tocsr()
    g = ((g + g.T) > 0).astype(np.int8)
    return g.tocsr()


def _sse(f: np.ndarray) -> float:
    if len(f) == 0:
        return 0.0
    return float(((f - f.mean(axis=0)) ** 2).sum())


def _components(graph: sparse.csr_matrix, members: np.ndarray, side: np.ndarray) -> list[np.ndarray]:
    """Connected components of ``members`` keeping only edges inside one side."""
    sub = graph[members][:, members].tocoo()
    same = side[sub.row] == side[sub.col]
    g = sparse.coo_matrix((np.ones(same.sum()), (sub.row[same], sub.col[same])), shape=(len(members),) * 2)
    ncomp, lab = csgraph.connected_components(g, directed=False)
    return [members[lab == c] for c in range(ncomp)]


def _cut_edges(graph: sparse.csr_matrix, members: np.ndarray, labels: np.ndarray) -> int:
    sub = graph[members][:, members].tocoo()
    return int((labels[sub.row] != labels[sub.col]).sum()) // 2


def superpoints(cloud: PartCloud, lam: float, k_nn: int = 10, seed: int = 0,
                mesh: TriMesh | None = None) -> SuperpointPartition:
    """Partition a cloud into connected regions of homogeneous (normal, color).

    Greedy approximation of the piecewise-constant energy
    ``sum ||f_i - g_region(i)||^2 + lam * (#cut k-NN edges)``: regions are
    split by 2-means on features (then into graph components) whenever that
    lowers the energy, then adjacent regions are merged while merging lowers
    it. The representative of a region is its centroid when that lies on the
    sampled surface (within the region's point spacing), otherwise the member
    nearest the centroid. Given the source ``mesh`` and per-point face indices,
    the centroid is the area-weighted centroid of the triangles the region
    covers and counts as on-surface when it lies on one of them.
    """
    if len(cloud) == 0:
        raise GeometryError("superpoints needs a non-empty cloud")
    if not lam > 0:
        raise ValueError("lam must be positive")
    x = cloud.points
    feats = np.concatenate([cloud.normals, cloud.colors], axis=1)
    graph = knn_graph(x, k_nn)
    n = len(x)

    ncomp, lab = csgraph.connected_components(graph, directed=False)
    regions = [np.flatnonzero(lab == c) for c in range(ncomp)]
    stack = list(range(len(regions)))
    final: list[np.ndarray] = []
    rng_seed = seed
    while stack:
        members = regions[stack.pop()]
        if len(members) < 2:
            final.append(members)
            continue
        f = feats[members]
        before = _sse(f)
        if before <= 1e-12:
            final.append(members)
            continue
        rng_seed += 1
        split = kmeans(f, 2, seed=rng_seed, restarts=1, max_iter=50)
        side = split.assignment
        if side.min() == side.max():
            final.append(members)
            continue
        parts = _components(graph, members, side)
        local = np.empty(n, dtype=np.int64)
        for i, p in enumerate(parts):
            local[p] = i
        cut = _cut_edges(graph, members, local[members])
        delta = sum(_sse(feats[p]) for p in parts) - before + lam * cut
        if delta < 0 and len(parts) > 1:
            for p in parts:
                regions.append(p)
                stack.append(len(regions) - 1)
        else:
            final.append(members)

    final.sort(key=lambda m: int(m.min()))
    assignment = np.empty(n, dtype=np.int64)
    for i, m in enumerate(final):
        assignment[m] = i
    assignment = _merge_regions(graph, feats, assignment, lam)
    return _partition(cloud, assignment, graph, mesh)


def _merge_regions(graph, feats, assignment, lam) -> np.ndarray:
    coo = sparse.triu(graph, k=1).tocoo()
    while True:
        ra, rb = assignment[coo.row], assignment[coo.col]
        diff = ra != rb
        if not diff.any():
            return assignment
        lo, hi = np.minimum(ra[diff], rb[diff]), np.maximum(ra[diff], rb[diff])
        pairs, counts = np.unique(np.stack([lo, hi], axis=1), axis=0, return_counts=True)
        nreg = assignment.max() + 1
        sizes = np.bincount(assignment, minlength=nreg).astype(np.float64)
        means = np.stack([np.bincount(assignment, weights=feats[:, d], minlength=nreg) for d in range(feats.shape[1])],
                         axis=1) / np.maximum(sizes, 1)[:, None]
        na, nb = sizes[pairs[:, 0]], sizes[pairs[:, 1]]
        gain = na * nb / (na + nb) * ((means[pairs[:, 0]] - means[pairs[:, 1]]) ** 2).sum(axis=1)
        delta = gain - lam * counts
        best = int(np.argmin(delta))
        if delta[best] >= 0:
            return assignment
        a, b = pairs[best]
        assignment = assignment.copy()
        assignment[assignment == b] = a
        assignment[assignment > b] -= 1


def _face_owner(cloud: PartCloud, assignment: np.ndarray, n_faces: int) -> np.ndarray:
    """Region holding the majority of each face's samples (-1 for unsampled faces)."""
    nreg = int(assignment.max()) + 1
    counts = np.zeros((n_faces, nreg), dtype=np.int64)
    np.add.at(counts, (cloud.faces, assignment), 1)
    owner = counts.argmax(axis=1)
    owner[counts.sum(axis=1) == 0] = -1
    return owner


def _partition(cloud: PartCloud, assignment: np.ndarray, graph, mesh: TriMesh | None = None) -> SuperpointPartition:
    regions = []
    x = cloud.points
    use_mesh = mesh is not None and cloud.faces is not None
    if use_mesh:
        owner = _face_owner(cloud, assignment, len(mesh.faces))
        areas = mesh.face_areas()
        tri_centers = mesh.triangles.mean(axis=1)
    for r in range(int(assignment.max()) + 1):
        m = np.flatnonzero(assignment == r)
        pts = x[m]
        c = pts.mean(axis=0)
        d = np.linalg.norm(pts - c, axis=1)
        nearest = int(np.argmin(d))
        rep = pts[nearest]
        own = np.flatnonzero(owner == r) if use_mesh else np.zeros(0, dtype=np.int64)
        if len(own) and areas[own].sum() > 0:
            mc = (tri_centers[own] * areas[own, None]).sum(axis=0) / areas[own].sum()
            sub = TriMesh(mesh.vertices, mesh.faces[own])
            scale = float(np.sqrt(areas[own].sum()))
            if point_mesh_distance(mc[None], sub)[0] <= 1e-9 * max(scale, 1.0):
                rep = mc
        elif len(m) >= 3:
            spacing = float(np.median(cKDTree(pts).query(pts, k=2)[0][:, 1]))
            if d[nearest] <= spacing:
                rep = c
        mn = cloud.normals[m].mean(axis=0)
        nn = np.linalg.norm(mn)
        regions.append(Region(c, mn / nn if nn > 0 else mn, cloud.colors[m].mean(axis=0), len(m), rep))
    return SuperpointPartition(assignment, regions)


# ---------------------------------------------------------------- penetration

_RAY_DIR = np.array([0.5773491, 0.5773519, 0.5773493])
_RAY_DIR = _RAY_DIR / np.linalg.norm(_RAY_DIR)


def is_watertight(mesh: TriMesh, tol: float = 1e-9) -> bool:
    """Every edge (after welding coincident vertices) is shared by exactly two faces."""
    key = np.round(mesh.vertices / tol).astype(np.int64)
    _, weld = np.unique(key, axis=0, return_inverse=True)
    f = weld.reshape(-1)[mesh.faces]
    e = np.concatenate([f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]])
    e = e[e[:, 0] != e[:, 1]]
    e.sort(axis=1)
    _, counts = np.unique(e, axis=0, return_counts=True)
    return bool(len(counts)) and bool(np.all(counts == 2))


def ray_parity_inside(points: np.ndarray, mesh: TriMesh, chunk: int = 4096) -> np.ndarray:
    """Inside test by counting ray crossings (mesh must be closed)."""
    tri = mesh.triangles
    v0 = tri[:, 0]
    e1, e2 = tri[:, 1] - v0, tri[:, 2] - v0
    pvec = np.cross(_RAY_DIR, e2)
    det = (e1 * pvec).sum(axis=1)
    ok = np.abs(det) > 1e-15
    v0, e1, e2, pvec, det = v0[ok], e1[ok], e2[ok], pvec[ok], det[ok]
    inv = 1.0 / det
    out = np.zeros(len(points), dtype=bool)
    for s in range(0, len(points), chunk):
        p = points[s:s + chunk]
        tvec = p[:, None, :] - v0[None]
        u = (tvec * pvec[None]).sum(axis=2) * inv
        qvec = np.cross(tvec, e1[None])
        v = (qvec @ _RAY_DIR) * inv
        t = (qvec * e2[None]).sum(axis=2) * inv
        hit = (u >= 0) & (v >= 0) & (u + v <= 1) & (t > 0)
        out[s:s + chunk] = (hit.sum(axis=1) % 2) == 1
    return out


def point_mesh_distance(points: np.ndarray, mesh: TriMesh, chunk: int = 2048) -> np.ndarray:
    """Unsigned distance from each point to the closest triangle of ``mesh``."""
    tri = mesh.triangles
    a, b, c = tri[:, 0], tri[:, 1], tri[:, 2]
    n = np.cross(b - a, c - a)
    nl = np.linalg.norm(n, axis=1)
    good = nl > 1e-15
    n = n / np.where(nl > 0, nl, 1.0)[:, None]
    out = np.empty(len(points))
    for s in range(0, len(points), chunk):
        p = points[s:s + chunk][:, None, :]
        best = np.full((p.shape[0], len(tri)), np.inf)
        for q0, q1 in ((a, b), (b, c), (c, a)):
            d = q1 - q0
            dd = np.maximum((d * d).sum(axis=1), 1e-300)
            t = np.clip(((p - q0) * d).sum(axis=2) / dd, 0.0, 1.0)
            closest = q0 + t[..., None] * d
            best = np.minimum(best, np.linalg.norm(p - closest, axis=2))
        h = ((p - a) * n).sum(axis=2)
        proj = p - h[..., None] * n
        c0 = (np.cross(b - a, proj - a) * n).sum(axis=2)
        c1 = (np.cross(c - b, proj - b) * n).sum(axis=2)
        c2 = (np.cross(a - c, proj - c) * n).sum(axis=2)
        inside = (c0 >= 0) & (c1 >= 0) & (c2 >= 0) & good
        best = np.where(inside, np.minimum(best, np.abs(h)), best)
        out[s:s + chunk] = best.min(axis=1)
    return out


def voxel_inside(points: np.ndarray, mesh: TriMesh, resolution: int = 64) -> np.ndarray:
    """Approximate inside test for open meshes via filled voxel occupancy.

    Points falling in surface voxels count as outside; open shells and sheets
    enclose nothing and therefore report no interior.
    """
    lo, hi = mesh.vertices.min(axis=0), mesh.vertices.max(axis=0)
    size = max(float((hi - lo).max()), 1e-9) / resolution
    lo = lo - 2 * size
    dims = np.ceil((hi - lo) / size).astype(int) + 3
    occ = np.zeros(dims, dtype=bool)
    tri = mesh.triangles
    for t in tri:
        edge = max(np.linalg.norm(t[1] - t[0]), np.linalg.norm(t[2] - t[0]), np.linalg.norm(t[2] - t[1]))
        m = int(np.ceil(edge / (0.5 * size))) + 1
        u, v = np.meshgrid(np.linspace(0, 1, m + 1), np.linspace(0, 1, m + 1))
        keep = u + v <= 1
        u, v = u[keep], v[keep]
        pts = t[0] + u[:, None] * (t[1] - t[0]) + v[:, None] * (t[2] - t[0])
        ijk = np.floor((pts - lo) / size).astype(int)
        occ[ijk[:, 0], ijk[:, 1], ijk[:, 2]] = True
    interior = ndimage.binary_fill_holes(occ) & ~occ
    ijk = np.floor((points - lo) / size).astype(int)
    valid = np.all((ijk >= 0) & (ijk < dims), axis=1)
    out = np.zeros(len(points), dtype=bool)
    out[valid] = interior[ijk[valid, 0], ijk[valid, 1], ijk[valid, 2]]
    return out


def _mesh_of(obstacle) -> TriMesh:
    return obstacle.mesh if isinstance(obstacle, PartSegment) else obstacle


def penetration_depth_mask(moving_points, obstacles: Sequence, eps: float) -> np.ndarray:
    """Boolean mask of points lying deeper than ``eps`` inside any obstacle."""
    pts = _points(moving_points)
    hit = np.zeros(len(pts), dtype=bool)
    for ob in obstacles:
        mesh = _mesh_of(ob)
        lo, hi = mesh.vertices.min(axis=0), mesh.vertices.max(axis=0)
        cand = np.flatnonzero(~hit & np.all((pts >= lo) & (pts <= hi), axis=1))
        if len(cand) == 0:
            continue
        sub = pts[cand]
        inside = ray_parity_inside(sub, mesh) if is_watertight(mesh) else voxel_inside(sub, mesh)
        if not inside.any():
            continue
        idx = cand[inside]
        depth = point_mesh_distance(pts[idx], mesh)
        hit[idx[depth > eps]] = True
    return hit


def penetration_fraction(moving_points, obstacles: Sequence, eps: float) -> float:
    """Share of moving points that sit more than ``eps`` inside an obstacle mesh."""
    if eps < 0:
        raise ValueError("eps must be >= 0")
    pts = _points(moving_points)
    if len(pts) == 0:
        return 0.0
    return float(penetration_depth_mask(pts, obstacles, eps).mean())


# ---------------------------------------------------------------- debug dumps


def write_ply(path, points, colors=None) -> None:
    """ASCII PLY point dump used by the ``--debug-ply`` CLI flag."""
    pts = _points(points)
    with open(Path(path), "w", encoding="ascii") as f:
        f.write("ply\nformat ascii 1.0\n")
        f.write(f"element vertex {len(pts)}\nproperty float x\nproperty float y\nproperty float z\n")
        if colors is not None:
            f.write("property uchar red\nproperty uchar green\nproperty uchar blue\n")
        f.write("end_header\n")
        for i, p in enumerate(pts):
            if colors is not None:
                c = np.clip(np.asarray(colors[i]) * 255, 0, 255).astype(int)
                f.write(f"{p[0]:.6f} {p[1]:.6f} {p[2]:.6f} {c[0]} {c[1]} {c[2]}\n")
            else:
                f.write(f"{p[0]:.6f} {p[1]:.6f} {p[2]:.6f}\n")
