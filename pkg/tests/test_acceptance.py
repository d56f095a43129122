"""Acceptance criteria, one test each.

Every test records a PASS/FAIL line in ``conftest.ACCEPTANCE`` (printed in
the terminal summary) before asserting. Run directly with
``python3 tests/test_acceptance.py`` for just this suite.
"""
import json
import math
import random
import sys
import time

import numpy as np
import pytest

from artimesh.asset_io import PartSegment, export_urdf, load_segmented_mesh, read_urdf, sample_part_cloud
from artimesh.errors import GeometryError, ParseError
from artimesh.evaluation import axis_angle_error, axis_position_error
from artimesh.fixtures import FIXTURE_NAMES, sheet_mesh, truth_tree
from artimesh.geometry import Line, connecting_area, kmeans, nearest_distances
from artimesh.joints import validate_revolute_limits
from artimesh.kinematics import (JointState, ZeroGuidance, apply_posed_displacements, forward_transform, joint_range,
                                 pose_object, refinement_loop, sample_joint_state)
from artimesh.oracle import (Cardinality, HingeTopology, Purpose, build_prompt, parse_articulation_tree,
                             parse_reply)
from artimesh.oracle.parsing import to_jsonable
from artimesh.pipeline import RunConfig, ViewCache, run_fixture_suite
from artimesh.viewprompt import Camera

from conftest import ACCEPTANCE
from helpers import (brute_force_lid_sweep, chain_object, chain_tree, cube_refinement_setup, lid_setup,
                     random_rotation)
from oracle_cases import VALID, fence_missing_variants, fuzz_variant, golden

# pinned tolerances
E2E_ANGLE_DEG = 0.1
E2E_POSITION = 1e-4
E2E_SECONDS = 60.0
NOISE_SIGMA = 0.005
NOISE_TRIALS = 20
NOISE_ANGLE_DEG = 2.0
NOISE_POSITION = 0.02
LID_TOL_DEG = 2.0
LID_RESOLUTION_DEG = 0.5
FUZZ_VARIANTS = 1000
INVERSE_TOL = 1e-9
BACKMAP_TOL = 1e-6
DECILE_N = 1000
KMEANS_INSTANCES = 50
NEAREST_MAX_N = 2000
REFINE_WINDOW = 100
URDF_TOL = 1e-6
RIGID_TOL = 1e-9

CAMS = [Camera([0, -3, 1], [0, 0, 0]), Camera([3, 0, 1], [0, 0, 0])]


def record(name: str, ok: bool, detail: str) -> None:
    ACCEPTANCE[name] = (bool(ok), detail)
    print(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
    assert ok, detail


# ---------------------------------------------------------------- end to end


@pytest.mark.slow
def test_mock_end_to_end(fixtures_dir, tmp_path):
    t0 = time.perf_counter()
    results, report = run_fixture_suite(RunConfig(fixtures_dir=fixtures_dir, out=tmp_path, oracle="mock"),
                                        ViewCache())
    elapsed = time.perf_counter() - t0
    failed = [n for r in results for n in r.failed]
    ang, pos = report["mean_angle_error"], report["mean_position_error"]
    ok = (len(results) == len(FIXTURE_NAMES) and not failed and ang <= E2E_ANGLE_DEG and pos <= E2E_POSITION
          and elapsed < E2E_SECONDS)
    record("mock end-to-end", ok, f"{len(results)} fixtures, {report['count']} joints, failed={failed}, "
           f"mean angle {ang:.4g} deg (<= {E2E_ANGLE_DEG}), mean position {pos:.3g} (<= {E2E_POSITION}), "
           f"{elapsed:.1f} s (< {E2E_SECONDS})")


@pytest.mark.slow
def test_noise_robustness(fixtures_dir, tmp_path, view_cache):
    angles, positions = [], []
    for seed in range(NOISE_TRIALS):
        cfg = RunConfig(fixtures_dir=fixtures_dir, out=tmp_path / f"s{seed}", oracle="mock", seed=seed,
                        noise=NOISE_SIGMA)
        _, report = run_fixture_suite(cfg, view_cache)
        angles.append(report["mean_angle_error"])
        positions.append(report["mean_position_error"])
    ang, pos = float(np.mean(angles)), float(np.mean(positions))
    record("noise robustness", ang <= NOISE_ANGLE_DEG and pos <= NOISE_POSITION,
           f"sigma={NOISE_SIGMA}, {NOISE_TRIALS} trials: mean angle {ang:.4g} deg (<= {NOISE_ANGLE_DEG}), "
           f"mean position {pos:.3g} (<= {NOISE_POSITION}); worst trial {max(angles):.4g} deg / {max(positions):.3g}")


# ---------------------------------------------------------------- geometry


def _sheet(corner, n, seed):
    return sample_part_cloud(PartSegment("s", sheet_mesh(corner, [1, 0, 0], [0, 1, 0])), n, seed)


def test_connecting_area_doubling():
    a, b = _sheet([0, 0, 0], 2000, 1), _sheet([0, 0, 0.1], 2000, 2)
    area = connecting_area(a, b, tau0=0.03)
    far = _sheet([10 * math.sqrt(2), 0, 0], 200, 3)
    try:
        connecting_area(a, far, tau0=0.01, max_doublings=5)
        unreachable = "no error"
    except GeometryError as exc:
        unreachable = str(exc)
    ok = area.doublings == 2 and len(area.points) > 0 and "not connectable" in unreachable
    record("connecting-area doubling", ok,
           f"gap 0.1 / tau0 0.03 -> {area.doublings} doublings (expect 2); unreachable -> {unreachable!r}")


def test_lid_sweep_brute_force():
    fx, obj, tree, joint = lid_setup()
    res = validate_revolute_limits(obj, tree, joint)
    lo, hi = brute_force_lid_sweep(fx, obj.part("lid").cloud.points, LID_RESOLUTION_DEG)
    ok = abs(res.lower - lo) <= LID_TOL_DEG and abs(res.upper - hi) <= LID_TOL_DEG
    record("lid sweep vs brute force", ok,
           f"sweep [{res.lower}, {res.upper}] vs {LID_RESOLUTION_DEG}-deg brute force [{lo}, {hi}] "
           f"(tol {LID_TOL_DEG} deg)")


def test_brute_force_equivalence():
    rng = np.random.default_rng(7)
    worst = 0.0
    for n in (1, 10, 333, 1000, NEAREST_MAX_N):
        q, t = rng.random((n, 3)), rng.random((n, 3))
        brute = np.sqrt(((q[:, None, :] - t[None, :, :]) ** 2).sum(axis=2)).min(axis=1)
        worst = max(worst, float(np.abs(nearest_distances(q, t) - brute).max()))
    bad = []
    for i in range(KMEANS_INSTANCES):
        r = np.random.default_rng(1000 + i)
        pts = r.normal(size=(int(r.integers(20, 400)), 3))
        res = kmeans(pts, int(r.integers(1, 25)), seed=i)
        if np.any(np.diff(res.history) > 0):
            bad.append(i)
    record("brute-force equivalence", worst == 0.0 and not bad,
           f"nearest distances max |diff| {worst} up to n={NEAREST_MAX_N}; "
           f"k-means increasing objective in {len(bad)}/{KMEANS_INSTANCES} instances")


# ---------------------------------------------------------------- oracle


def test_parser_golden_suite():
    car = parse_articulation_tree(VALID[0][1])
    checks = {
        "car tree": (len(car.parts), len(car.links), len(car.joints)) == (5, 4, 3),
        "hinge_info": parse_reply(Purpose.HINGE_TOPOLOGY, "```hinge_info\nchoice: (1)\n```")
        == HingeTopology.BOTH_ON_SURFACE,
        "selected IDs": parse_reply(Purpose.HINGE_POINTS, "```hinge points\nselected IDs: 1,3\n```",
                                    Cardinality.AT_LEAST_TWO) == [1, 3],
        "arrow colors": all(parse_reply(Purpose.SLIDING_ARROW, f"```sliding direction\nselected arrow: {c}\n```")
                            == c for c in ("red", "yellow", "blue", "green")),
    }
    rng = random.Random(2024)
    fuzz_ok = 0
    for i in range(FUZZ_VARIANTS):
        purpose, reply, card, expected = VALID[i % len(VALID)]
        try:
            fuzz_ok += to_jsonable(parse_reply(purpose, fuzz_variant(reply, rng), card)) == to_jsonable(expected)
        except ParseError:
            pass
    rejected = total = 0
    for purpose, reply, card, _ in VALID:
        for variant in fence_missing_variants(reply):
            total += 1
            try:
                parse_reply(purpose, variant, card)
            except ParseError as exc:
                rejected += "missing fenced block" in str(exc)
    failed = [k for k, v in checks.items() if not v]
    record("parser golden suite", not failed and fuzz_ok == FUZZ_VARIANTS and rejected == total,
           f"examples failed={failed}; fuzzed {fuzz_ok}/{FUZZ_VARIANTS} parsed; fence-missing {rejected}/{total} rejected")


def test_prompt_golden_files():
    names = {"object_name": "laptop", "part_name": "lid"}
    cases = [
        (build_prompt(Purpose.PART_LIST, **names).system_text, golden("part_list_system")),
        (build_prompt(Purpose.HINGE_TOPOLOGY, **names).system_text, golden("hinge_topology_system")),
        (build_prompt(Purpose.PRISMATIC_CLASS, **names).system_text, golden("prismatic_class_system")),
        (build_prompt(Purpose.ARTICULATION_TREE, object_name="car", parts=["Doors", "Wheels"]).system_text,
         golden("articulation_tree_system")),
        (build_prompt(Purpose.ARTICULATION_TREE, object_name="car", parts=["Doors", "Wheels"]).user_text,
         golden("articulation_tree_user").replace("OBJECT_NAME", "car").replace("RECOGNIZED_PARTS", "Doors, Wheels")),
    ]
    for purpose, card, name in ((Purpose.HINGE_POINTS, Cardinality.AT_LEAST_TWO, "hinge_points_both_ends"),
                                (Purpose.HINGE_POINTS, Cardinality.EXACTLY_ONE, "hinge_points_one_end"),
                                (Purpose.SLIDING_ARROW, None, "sliding_arrow")):
        req = build_prompt(purpose, object_name="laptop", part_name="lid", cardinality=card)
        cases.append((req.user_text, golden(name).replace("{object_name}", "laptop").replace("{part_name}", "lid")))
    matched = sum(a.encode("utf-8") == b.encode("utf-8") for a, b in cases)
    record("prompt golden files", matched == len(cases), f"{matched}/{len(cases)} byte-identical")


# ---------------------------------------------------------------- kinematics


def test_kinematics_properties():
    obj = chain_object()
    tree = chain_tree(obj)
    inv = 0.0
    for it in range(20):
        q = sample_joint_state(tree, 3, it)
        tf = forward_transform(tree, q)
        for p in pose_object(obj, tree, q).parts:
            hom = np.c_[p.mesh.vertices, np.ones(len(p.mesh.vertices))]
            back = (np.linalg.inv(tf[p.name]) @ hom.T).T[:, :3]
            inv = max(inv, float(np.abs(back - obj.part(p.name).mesh.vertices).max()))
    a = forward_transform(tree, JointState([0.4, 0.01]))
    b = forward_transform(tree, JointState([0.4, 0.07]))
    isolated = all(np.array_equal(a[n], b[n]) for n in ("base", "arm", "cap"))

    samples = np.array([sample_joint_state(tree, 0, i).values for i in range(DECILE_N)])
    min_decile = DECILE_N
    for k, j in enumerate(tree.movable_joints()):
        lo, hi = joint_range(tree, j)
        min_decile = min(min_decile, int(np.histogram(samples[:, k], bins=10, range=(lo, hi))[0].min()))

    rng = np.random.default_rng(0)
    q = JointState([0.7, 0.05])
    tf = forward_transform(tree, q)
    posed = pose_object(obj, tree, q)
    disp = {n: rng.normal(scale=0.01, size=posed.part(n).mesh.vertices.shape) for n in ("arm", "slider")}
    updated = apply_posed_displacements(obj, tf, disp)
    reposed = pose_object(updated, tree.__class__(tree.root, {p.name: p for p in updated.parts}, tree.joints), q)
    backmap = max(float(np.abs(reposed.part(n).mesh.vertices - (posed.part(n).mesh.vertices + d)).max())
                  for n, d in disp.items())
    ok = inv <= INVERSE_TOL and isolated and min_decile >= DECILE_N / 20 and backmap <= BACKMAP_TOL
    record("kinematics", ok, f"inverse composition {inv:.2g} (<= {INVERSE_TOL}); subtree isolation exact={isolated}; "
           f"smallest decile {min_decile}/{DECILE_N} (>= {DECILE_N // 20}); back-mapping {backmap:.2g} "
           f"(<= {BACKMAP_TOL})")


def test_refinement():
    obj, tree, guidance = cube_refinement_setup()
    res = refinement_loop(obj, tree, guidance, REFINE_WINDOW + 20, seed=1, cameras=CAMS)
    values = np.array([s.objective_value for s in res.trace])
    monotone = bool(np.all(np.diff(values[-REFINE_WINDOW:]) < 0))
    zero = refinement_loop(obj, tree, ZeroGuidance(), 25, seed=0, cameras=CAMS)
    noop = all(p.mesh.vertices.tobytes() == q.mesh.vertices.tobytes() for p, q in zip(obj.parts, zero.object.parts))
    record("refinement", monotone and noop and res.error is None,
           f"SDF pull strictly decreasing over last {REFINE_WINDOW} iterations={monotone} "
           f"({values[0]:.3g} -> {values[-1]:.3g}); zero guidance bit-exact no-op={noop}")


# ---------------------------------------------------------------- export and metrics


def test_urdf_round_trip(fixtures_dir, tmp_path):
    worst_axis = worst_limit = 0.0
    hinge_upper = None
    for name in FIXTURE_NAMES:
        d = fixtures_dir / name
        truth = json.loads((d / "truth.json").read_text())
        obj = load_segmented_mesh(d / "mesh.obj", d / "labels.txt")
        tree = truth_tree(truth, obj)
        export_urdf(tree, tmp_path / name, name)
        back = {j["name"]: j for j in read_urdf(tmp_path / name / f"{name}.urdf")["joints"]}
        for j in truth["joints"]:
            r = back[j["name"]]
            if j["type"] == "fixed":
                continue
            worst_axis = max(worst_axis, float(np.abs(np.subtract(r["direction"], j["direction"])).max()),
                             float(np.abs(np.subtract(r["origin"], j["origin"])).max()))
            if j["type"] == "revolute":
                expect = [math.radians(v) for v in j["limits"]]
            elif j["type"] == "prismatic":
                proj = obj.part(j["child"]).mesh.vertices @ np.asarray(j["direction"], float)
                expect = [v * float(proj.max() - proj.min()) for v in j["limits"]]
            else:
                expect = None
            if expect is None:
                worst_limit = max(worst_limit, 0.0 if r["limit"] is None else math.inf)
            else:
                worst_limit = max(worst_limit, float(np.abs(np.subtract(r["limit"], expect)).max()))
            if name == "hinged_box":
                hinge_upper = r["limit"][1]
    ok = worst_axis <= URDF_TOL and worst_limit <= URDF_TOL and hinge_upper is not None \
        and abs(hinge_upper - 1.5707963) <= URDF_TOL
    record("URDF round-trip", ok, f"{len(FIXTURE_NAMES)} fixtures: axis/origin max diff {worst_axis:.2g}, "
           f"limit max diff {worst_limit:.2g} (<= {URDF_TOL}); hinged box 90 deg -> {hinge_upper} rad")


def test_metric_analytics():
    rng = np.random.default_rng(0)
    sign_ok = True
    for _ in range(200):
        o, d = rng.normal(size=3), rng.normal(size=3)
        g = Line(rng.normal(size=3), rng.normal(size=3))
        sign_ok &= axis_angle_error(Line(o, d), g) == axis_angle_error(Line(o, -d), g)
        sign_ok &= axis_position_error(Line(o, d), g) == axis_position_error(Line(o, -d), g)
    skew = axis_position_error(Line([0, 0, 0], [1, 0, 0]), Line([0, 0, 0.3], [0, 1, 0]))
    rigid = 0.0
    for _ in range(100):
        a, b = Line(rng.normal(size=3), rng.normal(size=3)), Line(rng.normal(size=3), rng.normal(size=3))
        r, t = random_rotation(rng), rng.normal(size=3) * 5
        ma, mb = Line(r @ a.origin + t, r @ a.direction), Line(r @ b.origin + t, r @ b.direction)
        rigid = max(rigid, abs(axis_angle_error(ma, mb) - axis_angle_error(a, b)),
                    abs(axis_position_error(ma, mb) - axis_position_error(a, b)))
    record("metric analytics", sign_ok and skew == 0.3 and rigid <= RIGID_TOL,
           f"sign invariance identical={sign_ok}; skew lines -> {skew!r} (expect 0.3); "
           f"rigid invariance {rigid:.2g} (<= {RIGID_TOL})")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-s", "-p", "no:cacheprovider"]))
