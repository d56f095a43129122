import math
from collections import Counter

import numpy as np
import pytest
from scipy import stats

from artimesh.asset_io import (PartSegment, TriMesh, export_urdf, load_segmented_mesh, normalize_object,
                               read_obj, read_urdf, sample_part_cloud, write_segmented, SegmentedObject)
from artimesh.errors import AssetError
from artimesh.fixtures import box_mesh, sheet_mesh
from artimesh.geometry import Line
from artimesh.kinematics import ArticulationTree, JointSpec


def _write(tmp_path, parts):
    mesh, labels = tmp_path / "m.obj", tmp_path / "labels.txt"
    write_segmented(mesh, labels, parts)
    return mesh, labels


def test_single_cube_normalizes_to_unit_diagonal(tmp_path):
    mesh, labels = _write(tmp_path, [PartSegment("body", box_mesh([2, 2, 2], [5, 5, 5]))])
    obj = load_segmented_mesh(mesh, labels)
    assert [p.name for p in obj.parts] == ["body"]
    lo, hi = obj.bounds()
    assert np.linalg.norm(hi - lo) == pytest.approx(1.0, abs=1e-12)
    assert np.allclose((lo + hi) / 2, 0.0, atol=1e-12)
    # the recorded normalization maps back to the raw frame
    raw = obj.normalization.invert(obj.all_vertices())
    assert raw.min() == pytest.approx(2.0) and raw.max() == pytest.approx(5.0)


def test_face_partition_preserved(tmp_path):
    parts = [PartSegment("base", box_mesh([0, 0, 0], [1, 1, 1])),
             PartSegment("lid", box_mesh([0, 0, 1], [1, 1, 1.1]))]
    mesh, labels = _write(tmp_path, parts)
    # independent scan of the label file
    counts = Counter(line.strip() for line in labels.read_text().splitlines() if line.strip())
    obj = load_segmented_mesh(mesh, labels)
    assert {p.name: len(p.mesh.faces) for p in obj.parts} == dict(counts)


def test_label_count_mismatch(tmp_path):
    mesh, labels = _write(tmp_path, [PartSegment("body", box_mesh([0, 0, 0], [1, 1, 1]))])
    lines = labels.read_text().splitlines()
    labels.write_text("\n".join(lines[:-1]) + "\n")
    with pytest.raises(AssetError, match="label/face count mismatch"):
        load_segmented_mesh(mesh, labels)


def test_unreadable_mesh(tmp_path):
    with pytest.raises(AssetError):
        load_segmented_mesh(tmp_path / "missing.obj", tmp_path / "missing.txt")


def test_obj_polygons_and_negative_indices(tmp_path):
    p = tmp_path / "quad.obj"
    p.write_text("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nvt 0 0\nf 1/1 2/1 3/1 -1/1\n")
    vertices, colors, faces = read_obj(p)
    assert vertices.shape == (4, 3) and colors is None
    assert faces == [[0, 1, 2, 3]]


def test_normalization_idempotent(tmp_path):
    mesh, labels = _write(tmp_path, [PartSegment("a", box_mesh([-3, 1, 0], [4, 2, 9])),
                                     PartSegment("b", box_mesh([0, 0, 9], [1, 1, 10]))])
    obj = load_segmented_mesh(mesh, labels)
    again = normalize_object(obj)
    for p, q in zip(obj.parts, again.parts):
        assert np.allclose(p.mesh.vertices, q.mesh.vertices, atol=1e-9, rtol=0)


def test_sampling_density_matches_area():
    # unit square split into two triangles of unequal area
    mesh = TriMesh([[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0], [0.3, 0, 0]],
                   [[0, 4, 3], [4, 1, 2], [4, 2, 3]])
    part = PartSegment("sq", mesh)
    areas = mesh.face_areas()
    for seed in (0, 7):
        cloud = sample_part_cloud(part, 10000, seed)
        observed = np.bincount(cloud.faces, minlength=3)
        expected = 10000 * areas / areas.sum()
        assert np.all(np.abs(observed - expected) <= 0.05 * expected)
        assert stats.chisquare(observed, expected).pvalue > 0.01


def test_sampling_deterministic_and_on_surface():
    part = PartSegment("sq", sheet_mesh([0, 0, 0], [1, 0, 0], [0, 1, 0]))
    a = sample_part_cloud(part, 1000, 3)
    b = sample_part_cloud(part, 1000, 3)
    for f in ("points", "normals", "colors", "faces"):
        assert np.array_equal(getattr(a, f), getattr(b, f))
    assert not np.array_equal(a.points, sample_part_cloud(part, 1000, 4).points)
    assert np.all(a.points[:, 2] == 0.0)
    assert np.allclose(np.abs(a.normals), [0, 0, 1])
    assert np.allclose(np.linalg.norm(a.normals, axis=1), 1.0, atol=1e-6)
    assert np.all(a.colors == 1.0)


def test_sampling_rejects_degenerate():
    flat = PartSegment("line", TriMesh([[0, 0, 0], [1, 0, 0], [2, 0, 0]], [[0, 1, 2]]))
    with pytest.raises(AssetError, match="zero surface area"):
        sample_part_cloud(flat, 10, 0)
    with pytest.raises(ValueError):
        sample_part_cloud(PartSegment("s", sheet_mesh([0, 0, 0], [1, 0, 0], [0, 1, 0])), 0, 0)


def _two_link_tree(joint_type, limits, direction=(0, 0, 1)):
    base = PartSegment("base", box_mesh([0, 0, 0], [1, 1, 1]))
    child = PartSegment("child", box_mesh([0, 0, 1], [0.3, 1, 1.2]))
    j = JointSpec("j", joint_type, "base", "child", Line([0, 0, 1], direction), limits)
    return ArticulationTree("base", {"base": base, "child": child}, [j])


def test_urdf_revolute_degrees_to_radians(tmp_path):
    export_urdf(_two_link_tree("revolute", (0, 90), (0, 1, 0)), tmp_path, "box")
    doc = read_urdf(tmp_path / "box.urdf")
    (j,) = doc["joints"]
    assert j["type"] == "revolute"
    assert j["limit"] == pytest.approx([0.0, 1.5707963], abs=1e-7)
    assert j["origin"] == pytest.approx([0, 0, 1])
    assert (tmp_path / "meshes" / "base.obj").exists() and (tmp_path / "meshes" / "child.obj").exists()


def test_urdf_prismatic_extent_units(tmp_path):
    # child spans 0.3 along x
    export_urdf(_two_link_tree("prismatic", (0, 1), (1, 0, 0)), tmp_path, "box")
    (j,) = read_urdf(tmp_path / "box.urdf")["joints"]
    assert j["limit"] == pytest.approx([0.0, 0.3], abs=1e-9)


def test_urdf_continuous_has_no_limit(tmp_path):
    export_urdf(_two_link_tree("continuous", None), tmp_path, "box")
    (j,) = read_urdf(tmp_path / "box.urdf")["joints"]
    assert j["type"] == "continuous" and j["limit"] is None


def test_urdf_missing_link(tmp_path):
    tree = _two_link_tree("revolute", (0, 90))
    tree.joints[0].child = "ghost"
    with pytest.raises(AssetError, match="missing link"):
        export_urdf(tree, tmp_path)
