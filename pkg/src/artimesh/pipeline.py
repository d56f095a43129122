"""End-to-end orchestration behind the command-line subcommands."""
from __future__ import annotations

import dataclasses
import hashlib
import json
import logging
import os
import sys
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import fixtures as fx_mod
from .asset_io import SegmentedObject, export_urdf, load_segmented_mesh, sample_object_clouds, write_obj
from .errors import ArtimeshError, ConfigError, GeometryError, ParseError
from .evaluation import evaluate_run, load_pairs, write_report
from .geometry import DEFAULT_MAX_DOUBLINGS, DEFAULT_TAU0, Line, connecting_area, superpoints, write_ply
from .joints import (DEFAULT_EPS, DEFAULT_PEN_THRESHOLD, DEFAULT_STEP, choose_revolute_sign,
                     finalize_prismatic_limits, intersect_limits, promote_if_unbounded, solve_prismatic_inout,
                     solve_prismatic_surface, solve_revolute_single_point, solve_revolute_two_point,
                     validate_revolute_limits)
from .kinematics import (ArticulationTree, JointSpec, SDFPullGuidance, refinement_loop, urdf_limits,
                         write_trace)
from .oracle import (Cardinality, MockOracle, PrismaticClass, Purpose, RemoteOracle, ReplayOracle,
                     TranscriptStore, TreeDecl, build_prompt, parse_articulation_tree, query)
from .oracle.parsing import HingeTopology
from .viewprompt import (DEFAULT_FOV, DEFAULT_K_VALUES, DEFAULT_N_VIEWS, AnnotatedView, Camera, CandidateSet,
                         annotate_arrows, annotate_labels, choose_candidate_count, icosphere_cameras,
                         merge_candidates, render_view, select_viewpoint)

log = logging.getLogger(__name__)

DEFAULT_POINTS_PER_AREA = 100_000.0


# ---------------------------------------------------------------- config


@dataclass
class RunConfig:
    # input
    fixture: Path | None = None  # directory holding mesh.obj, labels.txt, truth.json
    fixtures_dir: Path | None = None  # run every fixture under this directory
    mesh: Path | None = None
    labels: Path | None = None
    object_name: str | None = None
    tree: Path | None = None  # pre-declared tree (.json or a text file with the fenced block)
    recognize_parts: bool = False
    # oracle
    oracle: str = "mock"
    endpoint: str | None = None
    model: str = "gpt-4o"
    api_key_env: str = "ARTIMESH_API_KEY"
    temperature: float = 0.0
    truth: Path | None = None
    replay_dir: Path | None = None
    # geometry
    seed: int = 0
    tau0: float = DEFAULT_TAU0
    max_doublings: int = DEFAULT_MAX_DOUBLINGS
    step: float = DEFAULT_STEP
    pen_threshold: float = DEFAULT_PEN_THRESHOLD
    eps: float = DEFAULT_EPS
    points_per_area: float = DEFAULT_POINTS_PER_AREA
    noise: float = 0.0
    superpoint_lambda: float = 0.05
    # rendering
    n_views: int = DEFAULT_N_VIEWS
    image_size: tuple[int, int] = (1024, 1024)
    fov: float = DEFAULT_FOV
    k_values: tuple[int, ...] = DEFAULT_K_VALUES
    # run
    out: Path = Path("run")
    workers: int = 1
    debug_ply: bool = False
    # refine
    iterations: int = 200
    refine_rate: float = 0.1

    _PATHS = ("fixture", "fixtures_dir", "mesh", "labels", "tree", "truth", "replay_dir", "out")

    @classmethod
    def from_mapping(cls, data: dict, base_dir: Path | None = None) -> "RunConfig":
        """Build from a (possibly sectioned) mapping; section names are ignored."""
        flat: dict[str, Any] = {}
        for k, v in data.items():
            if isinstance(v, dict):
                flat.update(v)
            else:
                flat[k] = v
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(flat) - names)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        cfg = cls()
        for k, v in flat.items():
            cfg = cfg.replace(**{k: v})
        if base_dir is not None:
            for k in cls._PATHS:
                p = getattr(cfg, k)
                if p is not None and not Path(p).is_absolute():
                    setattr(cfg, k, base_dir / p)
        return cfg

    @classmethod
    def from_toml(cls, path: str | os.PathLike) -> "RunConfig":
        path = Path(path)
        try:
            data = tomllib.loads(path.read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}") from None
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"invalid TOML in {path}: {exc}") from exc
        return cls.from_mapping(data, path.parent)

    def replace(self, **kw) -> "RunConfig":
        conv = {}
        for k, v in kw.items():
            if k in self._PATHS and v is not None:
                v = Path(v)
            elif k in ("image_size", "k_values") and v is not None:
                v = tuple(int(x) for x in v)
            conv[k] = v
        try:
            return dataclasses.replace(self, **conv)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    def fixture_files(self) -> tuple[Path, Path, Path | None]:
        if self.fixture is not None:
            d = Path(self.fixture)
            truth = d / "truth.json"
            return d / "mesh.obj", d / "labels.txt", truth if truth.exists() else None
        if self.mesh is None or self.labels is None:
            raise ConfigError("no input: give a fixture directory or both mesh and labels")
        return Path(self.mesh), Path(self.labels), self.truth

    def validate(self) -> None:
        if self.oracle not in ("remote", "mock", "replay"):
            raise ConfigError(f"oracle must be remote, mock or replay, not {self.oracle!r}")
        if self.fixtures_dir is None:
            mesh, labels, truth = self.fixture_files()
            for p in (mesh, labels):
                if not p.exists():
                    raise ConfigError(f"input file not found: {p}")
            if self.oracle == "mock" and (truth is None or not Path(truth).exists()):
                raise ConfigError("mock oracle needs a ground-truth file (fixture truth.json or 'truth')")
        elif not Path(self.fixtures_dir).is_dir():
            raise ConfigError(f"fixtures directory not found: {self.fixtures_dir}")
        if self.oracle == "replay" and (self.replay_dir is None or not Path(self.replay_dir).is_dir()):
            raise ConfigError("replay oracle needs an existing 'replay_dir'")
        if self.oracle == "remote":
            if not self.endpoint:
                raise ConfigError("remote oracle needs an 'endpoint'")
            if not os.environ.get(self.api_key_env):
                raise ConfigError(f"remote oracle credential missing: set ${self.api_key_env}")
        checks = [("tau0", self.tau0 > 0), ("max_doublings", self.max_doublings >= 0), ("step", self.step > 0),
                  ("pen_threshold", 0 <= self.pen_threshold <= 1), ("eps", self.eps >= 0),
                  ("points_per_area", self.points_per_area > 0), ("noise", self.noise >= 0),
                  ("n_views", self.n_views >= 1), ("workers", self.workers >= 1),
                  ("k_values", len(self.k_values) > 0 and min(self.k_values) >= 1),
                  ("iterations", self.iterations >= 0)]
        bad = [name for name, ok in checks if not ok]
        if bad:
            raise ConfigError(f"invalid values for: {', '.join(bad)}")


# ---------------------------------------------------------------- inputs


@dataclass
class LoadedInput:
    obj: SegmentedObject
    object_name: str
    truth: dict | None


def load_input(cfg: RunConfig) -> LoadedInput:
    mesh, labels, truth_path = cfg.fixture_files()
    obj = load_segmented_mesh(mesh, labels)
    obj = sample_object_clouds(obj, cfg.points_per_area, cfg.seed, noise=cfg.noise)
    truth = json.loads(Path(truth_path).read_text(encoding="utf-8")) if truth_path else None
    name = cfg.object_name or (truth or {}).get("object_name") or mesh.parent.name or "object"
    return LoadedInput(obj, name, truth)


def make_backend(cfg: RunConfig, truth: dict | None):
    if cfg.oracle == "mock":
        if truth is None:
            raise ConfigError("mock oracle needs ground truth")
        return MockOracle(truth)
    if cfg.oracle == "replay":
        return ReplayOracle(cfg.replay_dir)
    return RemoteOracle(cfg.endpoint, cfg.model, cfg.api_key_env)


# ---------------------------------------------------------------- view cache


class ViewCache:
    """Best-view cameras keyed by mesh content, optionally persisted as JSON."""

    def __init__(self, path: Path | None = None):
        self.path = path
        self._lock = threading.Lock()
        self._data: dict[str, dict] = {}
        if path is not None and path.exists():
            self._data = json.loads(path.read_text(encoding="utf-8"))

    @staticmethod
    def key(obj: SegmentedObject, part: str, n_views: int, image_size, fov: float) -> str:
        h = hashlib.sha256()
        for p in obj.parts:
            h.update(p.name.encode())
            h.update(np.ascontiguousarray(p.mesh.vertices, dtype=np.float64).tobytes())
            h.update(np.ascontiguousarray(p.mesh.faces, dtype=np.int64).tobytes())
        h.update(json.dumps([part, n_views, list(image_size), fov]).encode())
        return h.hexdigest()

    def camera(self, obj: SegmentedObject, part: str, n_views: int, image_size, fov: float) -> Camera:
        k = self.key(obj, part, n_views, image_size, fov)
        with self._lock:
            hit = self._data.get(k)
        if hit is not None:
            return Camera.from_dict(hit)
        cam = select_viewpoint(obj, part, n_views, image_size, fov)
        with self._lock:
            self._data[k] = cam.to_dict()
            if self.path is not None:
                self.path.parent.mkdir(parents=True, exist_ok=True)
                self.path.write_text(json.dumps(self._data, indent=2, sort_keys=True), encoding="utf-8")
        return cam


# ---------------------------------------------------------------- tree


def _decl_from_file(path: Path) -> TreeDecl:
    text = path.read_text(encoding="utf-8")
    if path.suffix == ".json":
        data = json.loads(text)
        if "joints" in data and data["joints"] and "joint_type" not in data["joints"][0]:
            # tree.json written by a previous run
            return TreeDecl([(n, "") for n in data["links"]], list(data["links"]),
                            [_joint_decl(j) for j in data["joints"]])
        return TreeDecl.from_dict(data)
    return parse_articulation_tree(text)


def _joint_decl(j: dict):
    from .oracle.parsing import JointDecl

    return JointDecl(j["name"], j["type"], j["parent"], j["child"],
                     None if j.get("limits") is None else tuple(j["limits"]))


def truth_decl(truth: dict) -> TreeDecl:
    """Declared tree equivalent to a fixture's ground truth."""
    return TreeDecl([(n, truth.get("descriptions", {}).get(n, "")) for n in truth["links"]], list(truth["links"]),
                    [_joint_decl(j) for j in truth["joints"]])


def declare_tree(cfg: RunConfig, inp: LoadedInput, backend, store: TranscriptStore | None) -> tuple[TreeDecl, list]:
    """Provided tree, or ask the oracle (optionally after part recognition)."""
    if cfg.tree is not None:
        return _decl_from_file(Path(cfg.tree)), []
    transcripts = []
    parts = inp.obj.names
    if cfg.recognize_parts:
        t = query(build_prompt(Purpose.PART_LIST, images=[_plain_overview(inp.obj, cfg)],
                               temperature=cfg.temperature), backend, store)
        transcripts.append(t)
        parts = [name for name, _ in t.parsed]
    t = query(build_prompt(Purpose.ARTICULATION_TREE, inp.object_name, parts=parts, temperature=cfg.temperature),
              backend, store)
    transcripts.append(t)
    return t.parsed, transcripts


def _plain_overview(obj: SegmentedObject, cfg: RunConfig) -> AnnotatedView:
    cam = icosphere_cameras(obj, cfg.n_views, cfg.image_size, cfg.fov)[0]
    view = render_view(obj, cam)
    return AnnotatedView(view.color, cam)


def build_tree(decl: TreeDecl, obj: SegmentedObject, joints: list[JointSpec] | None = None) -> ArticulationTree:
    """Articulation tree over the mesh segments named by the declared links."""
    by_lower = {n.lower(): n for n in obj.names}
    links = {}
    for ln in decl.links:
        seg = by_lower.get(ln.lower())
        if seg is None:
            raise ArtimeshError(f"declared link {ln!r} has no mesh segment (segments: {', '.join(obj.names)})")
        links[ln] = obj.part(seg)
    children = {j.child_link for j in decl.joints}
    roots = [ln for ln in decl.links if ln not in children]
    if len(roots) != 1:
        raise ArtimeshError(f"declared tree must have exactly one root link, found {roots}")
    if joints is None:
        joints = [JointSpec(j.name, j.joint_type, j.parent_link, j.child_link, limits=j.limit) for j in decl.joints]
    return ArticulationTree(roots[0], links, joints)


# ---------------------------------------------------------------- per-joint estimation


@dataclass
class JointOutcome:
    name: str
    spec: JointSpec | None
    report: dict
    error: str | None = None


@dataclass
class _Ctx:
    cfg: RunConfig
    inp: LoadedInput
    decl: TreeDecl
    backend: Any
    store: TranscriptStore | None
    views: ViewCache
    run_dir: Path


def _area(ctx: _Ctx, child: str, parent: str):
    obj = ctx.inp.obj
    c, p = obj.part(child), obj.part(parent)
    return connecting_area(c.cloud.points, p.cloud.points, ctx.cfg.tau0, ctx.cfg.max_doublings,
                           parent_centroid=p.centroid)


def _save(ctx: _Ctx, image: AnnotatedView, stem: str) -> str:
    d = ctx.run_dir / "prompts"
    d.mkdir(parents=True, exist_ok=True)
    image.save(d / f"{stem}.png")
    return f"prompts/{stem}.png"


def _hinge_pool(ctx: _Ctx, view, area, child: str, topology: HingeTopology) -> CandidateSet:
    cfg = ctx.cfg
    if topology is HingeTopology.BOTH_ON_SURFACE:
        return choose_candidate_count(area.points, view, cfg.k_values, cfg.seed)
    # hidden hinge end: superpoint representatives first, then area cluster centers
    part = ctx.inp.obj.part(child)
    reps = superpoints(part.cloud, cfg.superpoint_lambda, seed=cfg.seed, mesh=part.mesh).representatives
    try:
        km = choose_candidate_count(area.points, view, cfg.k_values, cfg.seed)
        area_pts = km.points([c.id for c in km.visible])
    except ArtimeshError:
        area_pts = np.zeros((0, 3))
    pool = merge_candidates(view, (reps, "Superpoint"), (area_pts, "ConnectingAreaKMeans"))
    if not pool.visible:
        raise GeometryError(f"no visible hinge candidates for {child!r}")
    return pool


def _ids_validator(cands: CandidateSet):
    valid = {c.id for c in cands.visible}

    def check(ids):
        bad = [i for i in ids if i not in valid]
        if bad:
            raise ParseError(f"selected ids {bad} are not labels in the image (valid: {sorted(valid)})")
    return check


def estimate_joint(ctx: _Ctx, jd) -> JointOutcome:
    """Topology/class prompt, candidates, selection prompt, solver and limits for one joint."""
    cfg = ctx.cfg
    obj = ctx.inp.obj
    rep: dict[str, Any] = {"name": jd.name, "declared_type": jd.joint_type, "parent": jd.parent_link,
                           "child": jd.child_link, "declared_limit": None if jd.limit is None else list(jd.limit),
                           "transcripts": [], "images": []}
    if jd.joint_type in ("fixed", "floating"):
        spec = JointSpec(jd.name, jd.joint_type, jd.parent_link, jd.child_link, limits=jd.limit,
                         provenance={"solver": "none"})
        rep.update(status="ok", type=jd.joint_type, solver="none")
        return JointOutcome(jd.name, spec, rep)
    child = _segment_name(obj, jd.child_link)
    parent = _segment_name(obj, jd.parent_link)
    cam = ctx.views.camera(obj, child, cfg.n_views, cfg.image_size, cfg.fov)
    view = render_view(obj, cam)
    plain = AnnotatedView(view.color, cam)
    rep["camera_index"] = cam.index
    rep["images"].append(_save(ctx, plain, f"{_stem(jd.name)}_view"))
    area = _area(ctx, child, parent)
    rep["connecting_area"] = {"points": int(len(area.points)), "threshold": area.final_threshold,
                              "doublings": area.doublings,
                              "plane_normal": None if area.plane is None else area.plane.normal.tolist()}
    if cfg.debug_ply:
        (ctx.run_dir / "debug").mkdir(exist_ok=True)
        write_ply(ctx.run_dir / "debug" / f"{_stem(jd.name)}_area.ply", area.points)

    def ask(req, validate=None):
        t = query(req, ctx.backend, ctx.store, validate)
        rep["transcripts"].append(t.key)
        return t.parsed

    obj_name, part_name = ctx.inp.object_name, jd.child_link
    if jd.joint_type in ("revolute", "continuous"):
        topo = ask(build_prompt(Purpose.HINGE_TOPOLOGY, obj_name, part_name, images=[plain],
                                temperature=cfg.temperature))
        pool = _hinge_pool(ctx, view, area, child, topo)
        image = annotate_labels(view, pool)
        rep["images"].append(_save(ctx, image, f"{_stem(jd.name)}_labels"))
        rep["candidates"] = pool.to_dict()
        card = Cardinality.AT_LEAST_TWO if topo is HingeTopology.BOTH_ON_SURFACE else Cardinality.EXACTLY_ONE
        ids = ask(build_prompt(Purpose.HINGE_POINTS, obj_name, part_name, cardinality=card, images=[image],
                               temperature=cfg.temperature), _ids_validator(pool))
        rep["selected_ids"] = ids
        if topo is HingeTopology.BOTH_ON_SURFACE:
            axis = solve_revolute_two_point(pool, ids)
            solver = "revolute_two_point"
        else:
            axis = solve_revolute_single_point(pool.by_id(ids[0]).point3d, area)
            solver = "revolute_single_point"
        rep["topology"] = topo.value
        jtype, limits = jd.joint_type, None
        if jd.joint_type == "revolute":
            trial = build_tree(ctx.decl, obj)
            spec0 = JointSpec(jd.name, "revolute", jd.parent_link, jd.child_link, axis, jd.limit)
            trial = trial.with_joint(spec0)
            axis, sign_diag = choose_revolute_sign(obj, trial, spec0, cfg.step, cfg.eps)
            rep["axis_sign"] = sign_diag
            spec0 = JointSpec(jd.name, "revolute", jd.parent_link, jd.child_link, axis, jd.limit)
            lo_b = max(-360.0, min(jd.limit[0], 0.0))
            hi_b = min(360.0, max(jd.limit[1], 0.0))
            sweep = validate_revolute_limits(obj, trial.with_joint(spec0), spec0, cfg.step, cfg.pen_threshold,
                                             cfg.eps, bounds=(lo_b, hi_b))
            limits = intersect_limits((sweep.lower, sweep.upper), jd.limit)
            if sweep.rest_violation:
                limits = (0.0, 0.0)
            jtype = promote_if_unbounded("revolute", limits)
            if jtype == "continuous":
                limits = None
            rep["sweep"] = {"lower": sweep.lower, "upper": sweep.upper, "rest_fraction": sweep.rest_fraction,
                            "rest_violation": sweep.rest_violation, "poses": len(sweep.samples)}
    else:
        pclass = ask(build_prompt(Purpose.PRISMATIC_CLASS, obj_name, part_name, images=[plain],
                                  temperature=cfg.temperature))
        rep["prismatic_class"] = pclass.value
        if pclass is PrismaticClass.IN_OUT:
            direction = solve_prismatic_inout(area, obj.part(parent).centroid)
            solver = "prismatic_inout"
        else:
            image = annotate_arrows(view, obj.part(child), area.plane, obj.names.index(child))
            rep["images"].append(_save(ctx, image, f"{_stem(jd.name)}_arrows"))
            color = ask(build_prompt(Purpose.SLIDING_ARROW, obj_name, part_name, images=[image],
                                     temperature=cfg.temperature))
            rep["selected_arrow"] = color
            arrow = next(a for a in image.arrows if a.color == color)
            direction = solve_prismatic_surface(arrow.direction3d, area)
            solver = "prismatic_surface"
        axis = Line(obj.part(child).centroid, direction)
        jtype, limits = "prismatic", jd.limit
        rep["limits_length"] = list(finalize_prismatic_limits(jd.limit, obj.part(child), direction))
    provenance = {"solver": solver, "transcripts": list(rep["transcripts"])}
    spec = JointSpec(jd.name, jtype, jd.parent_link, jd.child_link, axis, limits, provenance)
    rep.update(status="ok", type=jtype, solver=solver, axis=axis.to_dict(),
               limits=None if limits is None else list(limits))
    return JointOutcome(jd.name, spec, rep)


def _segment_name(obj: SegmentedObject, link: str) -> str:
    by_lower = {n.lower(): n for n in obj.names}
    if link.lower() not in by_lower:
        raise ArtimeshError(f"link {link!r} has no mesh segment")
    return by_lower[link.lower()]


def _stem(name: str) -> str:
    return "".join(c if c.isalnum() or c in "-_" else "_" for c in name)


# ---------------------------------------------------------------- articulate


@dataclass
class ArticulateResult:
    run_dir: Path
    outcomes: list[JointOutcome]
    tree: ArticulationTree | None
    report: dict = field(default_factory=dict)

    @property
    def failed(self) -> list[str]:
        return [o.name for o in self.outcomes if o.error is not None]


def _safe_estimate(ctx: _Ctx, jd) -> JointOutcome:
    try:
        return estimate_joint(ctx, jd)
    except (ArtimeshError, KeyError, ValueError) as exc:
        log.error("joint %s failed: %s", jd.name, exc)
        rep = {"name": jd.name, "declared_type": jd.joint_type, "parent": jd.parent_link, "child": jd.child_link,
               "status": "failed", "error": f"{type(exc).__name__}: {exc}"}
        return JointOutcome(jd.name, None, rep, str(exc))


def cmd_articulate(cfg: RunConfig, views: ViewCache | None = None) -> ArticulateResult:
    """Run the full pipeline on one object; failures are isolated per joint."""
    cfg.validate()
    if cfg.fixtures_dir is not None:
        raise ConfigError("use run_fixture_suite for a fixtures directory")
    run_dir = Path(cfg.out)
    run_dir.mkdir(parents=True, exist_ok=True)
    inp = load_input(cfg)
    backend = make_backend(cfg, inp.truth)
    store = TranscriptStore(run_dir / "transcripts")
    views = views or ViewCache(run_dir / "view_cache.json")
    decl, tree_transcripts = declare_tree(cfg, inp, backend, store)
    (run_dir / "tree_decl.json").write_text(json.dumps(decl.to_dict(), indent=2), encoding="utf-8")
    build_tree(decl, inp.obj)  # structural validation before any joint work
    ctx = _Ctx(cfg, inp, decl, backend, store, views, run_dir)
    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            outcomes = list(pool.map(lambda jd: _safe_estimate(ctx, jd), decl.joints))
    else:
        outcomes = [_safe_estimate(ctx, jd) for jd in decl.joints]

    specs = []
    for jd, o in zip(decl.joints, outcomes):
        if o.spec is not None:
            specs.append(o.spec)
        else:
            # keep the tree connected; a failed joint is exported as fixed
            specs.append(JointSpec(jd.name, "fixed", jd.parent_link, jd.child_link,
                                   provenance={"solver": "failed", "error": o.error}))
    tree = build_tree(decl, inp.obj, specs)
    (run_dir / "tree.json").write_text(json.dumps(tree.to_dict(), indent=2), encoding="utf-8")
    export_urdf(tree, run_dir / "urdf", _stem(inp.object_name), inp.obj.normalization)
    for o, spec in zip(outcomes, specs):
        if o.spec is not None and spec.joint_type in ("revolute", "prismatic"):
            o.report["limits_urdf"] = list(urdf_limits(tree, spec))
    preds = {"object": inp.object_name,
             "joints": [{"id": o.name, "type": o.spec.joint_type, "origin": o.spec.axis.origin.tolist(),
                         "direction": o.spec.axis.direction.tolist()}
                        for o in outcomes if o.spec is not None and o.spec.joint_type in
                        ("revolute", "continuous", "prismatic")]}
    (run_dir / "predictions.json").write_text(json.dumps(preds, indent=2), encoding="utf-8")
    report = {"object": inp.object_name, "oracle": cfg.oracle, "seed": cfg.seed,
              "tree_transcripts": [t.key for t in tree_transcripts],
              "joints": [o.report for o in outcomes], "failed": [o.name for o in outcomes if o.error]}
    (run_dir / "joint_report.json").write_text(json.dumps(report, indent=2), encoding="utf-8")
    return ArticulateResult(run_dir, outcomes, tree, report)


def run_fixture_suite(cfg: RunConfig, views: ViewCache | None = None) -> tuple[list[ArticulateResult], dict]:
    """Articulate every fixture under ``cfg.fixtures_dir`` and evaluate against truth."""
    base = Path(cfg.fixtures_dir)
    if not base.is_dir():
        raise ConfigError(f"fixtures directory not found: {base}")
    out = Path(cfg.out)
    views = views or ViewCache(out / "view_cache.json")
    results = []
    for d in sorted(p.parent for p in base.glob("*/truth.json")):
        sub = cfg.replace(fixtures_dir=None, fixture=d, out=out / d.name,
                          replay_dir=None if cfg.replay_dir is None else Path(cfg.replay_dir) / d.name)
        results.append(cmd_articulate(sub, views))
    if not results:
        raise ConfigError(f"no fixtures (*/truth.json) under {base}")
    report = cmd_eval(out, base, out)
    return results, report


# ---------------------------------------------------------------- prompts only


def cmd_prompts(cfg: RunConfig, joint: str | None = None, views: ViewCache | None = None) -> list[Path]:
    """Render the prompt images for movable joints without calling the oracle.

    Rotating joints get a labeled-candidate image, prismatic joints the
    four-arrow image. Cameras go to the run's view cache so a later
    ``articulate`` into the same directory reuses them.
    """
    cfg.validate()
    run_dir = Path(cfg.out)
    run_dir.mkdir(parents=True, exist_ok=True)
    inp = load_input(cfg)
    if cfg.tree is not None:
        decl = _decl_from_file(Path(cfg.tree))
    elif inp.truth is not None:
        decl = truth_decl(inp.truth)
    else:
        raise ConfigError("prompts needs a declared tree ('tree') or fixture ground truth")
    views = views or ViewCache(run_dir / "view_cache.json")
    ctx = _Ctx(cfg, inp, decl, None, None, views, run_dir)
    targets = [j for j in decl.joints if j.joint_type in ("revolute", "continuous", "prismatic")]
    if joint is not None:
        targets = [j for j in targets if j.name == joint]
        if not targets:
            raise ConfigError(f"no movable joint named {joint!r}")
    written = []
    for jd in targets:
        child = _segment_name(inp.obj, jd.child_link)
        parent = _segment_name(inp.obj, jd.parent_link)
        cam = views.camera(inp.obj, child, cfg.n_views, cfg.image_size, cfg.fov)
        view = render_view(inp.obj, cam)
        area = _area(ctx, child, parent)
        if jd.joint_type == "prismatic":
            image = annotate_arrows(view, inp.obj.part(child), area.plane, inp.obj.names.index(child))
            stem = f"{_stem(jd.name)}_arrows"
        else:
            try:
                pool = _hinge_pool(ctx, view, area, child, HingeTopology.BOTH_ON_SURFACE)
            except ArtimeshError:
                pool = _hinge_pool(ctx, view, area, child, HingeTopology.ONE_INSIDE)
            image = annotate_labels(view, pool)
            stem = f"{_stem(jd.name)}_labels"
        written.append(run_dir / _save(ctx, image, stem))
    return written


# ---------------------------------------------------------------- eval, fixtures, export, refine


def cmd_eval(pred_path, gt_path, out_dir=None) -> dict:
    from .report import eval_figures

    report = evaluate_run(load_pairs(pred_path, gt_path))
    if out_dir is not None:
        write_report(report, out_dir)
        eval_figures(report, out_dir)
    return report


def cmd_fixtures(out_dir, seed: int = 0) -> list[Path]:
    return fx_mod.generate_fixtures(out_dir, seed)


def _load_tree(cfg: RunConfig, inp: LoadedInput, tree_path: Path | None) -> ArticulationTree:
    if tree_path is not None:
        data = json.loads(Path(tree_path).read_text(encoding="utf-8"))
        try:
            return ArticulationTree.from_dict(data, inp.obj)
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"{tree_path} is not a tree.json written by articulate: {exc}") from exc
    if inp.truth is not None:
        return fx_mod.truth_tree(inp.truth, inp.obj)
    raise ConfigError("a tree.json (--tree) or fixture ground truth is required")


def _load_plain(cfg: RunConfig) -> LoadedInput:
    """Normalized object without point clouds."""
    mesh, labels, truth_path = cfg.fixture_files()
    truth = json.loads(Path(truth_path).read_text(encoding="utf-8")) if truth_path else None
    name = cfg.object_name or (truth or {}).get("object_name") or mesh.parent.name or "object"
    return LoadedInput(load_segmented_mesh(mesh, labels), name, truth)


def cmd_export_urdf(cfg: RunConfig, tree_path: Path | None = None) -> dict:
    if cfg.fixtures_dir is not None:
        raise ConfigError("export-urdf works on a single object")
    inp = _load_plain(cfg)
    tree = _load_tree(cfg, inp, tree_path)
    return export_urdf(tree, cfg.out, _stem(inp.object_name), inp.obj.normalization)


def default_guidance(tree: ArticulationTree, rate: float) -> SDFPullGuidance:
    """Pull every moving link toward a sphere at its centroid (radius 0.8 x mean vertex distance)."""
    targets = {}
    for j in tree.movable_joints():
        part = tree.links[j.child]
        c = part.mesh.vertices.mean(axis=0)
        r = 0.8 * float(np.linalg.norm(part.mesh.vertices - c, axis=1).mean())
        targets[j.child] = (c, r)
    return SDFPullGuidance(targets, rate)


def cmd_refine(cfg: RunConfig, tree_path: Path | None = None) -> dict:
    """Run the refinement scheduler with the analytic guidance and write its trace."""
    from .report import objective_figure

    if cfg.fixtures_dir is not None:
        raise ConfigError("refine works on a single object")
    inp = _load_plain(cfg)
    obj = inp.obj
    tree = _load_tree(cfg, inp, tree_path)
    guidance = default_guidance(tree, cfg.refine_rate)
    cams = icosphere_cameras(obj, cfg.n_views, cfg.image_size, cfg.fov)
    res = refinement_loop(obj, tree, guidance, cfg.iterations, cfg.seed, cams)
    out = Path(cfg.out)
    (out / "refined").mkdir(parents=True, exist_ok=True)
    write_trace(out / "trace.jsonl", res.trace)
    with open(out / "objective.csv", "w", encoding="utf-8") as f:
        f.write("iteration,objective\n")
        for s in res.trace:
            f.write(f"{s.iteration},{s.objective_value!r}\n")
    objective_figure([s.objective_value for s in res.trace], out / "objective.png")
    for p in res.object.parts:
        write_obj(out / "refined" / f"{_stem(p.name)}.obj", p.mesh)
    summary = {"iterations": len(res.trace), "requested": cfg.iterations,
               "first_objective": res.trace[0].objective_value if res.trace else None,
               "last_objective": res.trace[-1].objective_value if res.trace else None,
               "error": None if res.error is None else str(res.error)}
    (out / "refine_summary.json").write_text(json.dumps(summary, indent=2), encoding="utf-8")
    return summary


__all__ = ["RunConfig", "ViewCache", "ArticulateResult", "cmd_articulate", "cmd_prompts", "cmd_eval", "cmd_fixtures",
           "cmd_export_urdf", "cmd_refine", "run_fixture_suite", "build_tree", "truth_decl", "declare_tree",
           "load_input", "estimate_joint", "default_guidance"]
