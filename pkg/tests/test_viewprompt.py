import numpy as np
import pytest

from artimesh.asset_io import PartSegment, SegmentedObject, TriMesh
from artimesh.errors import RenderError
from artimesh.fixtures import box_mesh, hinged_box, sheet_mesh, sliding_window
from artimesh.geometry import fit_plane
from artimesh.viewprompt import (ARROW_COLORS, Camera, annotate_arrows, annotate_labels, boxes_overlap,
                                 choose_candidate_count, icosphere_cameras, icosphere_directions, label_box,
                                 project_candidates, render_view, select_viewpoint, visibility)

SIZE = (160, 160)


def cube_object(half=0.5):
    return SegmentedObject([PartSegment("cube", box_mesh([-half] * 3, [half] * 3))])


def top_camera(dist=3.0, size=SIZE):
    return Camera([0, 0, dist], [0, 0, 0], [0, 1, 0], 45.0, size)


def test_icosphere_directions():
    d = icosphere_directions(42)
    assert d.shape == (42, 3)
    assert np.allclose(np.linalg.norm(d, axis=1), 1.0)
    assert len({tuple(np.round(v, 9)) for v in d}) == 42
    assert np.array_equal(icosphere_directions(12), d[:12])


def test_camera_validation():
    with pytest.raises(ValueError):
        Camera([0, 0, 0], [0, 0, 0])
    with pytest.raises(ValueError):
        Camera([0, 0, 1], [0, 0, 0], vertical_fov=150)


def test_empty_scene():
    view = render_view(SegmentedObject([PartSegment("c", box_mesh([0, 0, 0], [1, 1, 1]))]),
                       top_camera(), parts=[])
    assert np.all(np.isinf(view.depth)) and np.all(view.part_id == -1)


def test_cube_center_depth():
    view = render_view(cube_object(), top_camera(3.0))
    h, w = view.depth.shape
    assert view.part_id[h // 2, w // 2] == 0
    # the ray through the image center hits the top face at z = 0.5
    assert view.depth[h // 2, w // 2] == pytest.approx(3.0 - 0.5, abs=1e-9)
    assert np.all(np.isfinite(view.depth) == (view.part_id >= 0))


def test_render_deterministic():
    obj = hinged_box().object()
    cam = icosphere_cameras(obj, 42, SIZE)[5]
    a, b = render_view(obj, cam), render_view(obj, cam)
    assert a.color.tobytes() == b.color.tobytes()
    assert a.depth.tobytes() == b.depth.tobytes() and a.part_id.tobytes() == b.part_id.tobytes()


def test_nearer_square_wins():
    low = PartSegment("low", sheet_mesh([-0.5, -0.5, 0], [1, 0, 0], [0, 1, 0]))
    high = PartSegment("high", sheet_mesh([-0.25, -0.25, 0.2], [1, 0, 0], [0, 1, 0]))
    view = render_view(SegmentedObject([low, high]), top_camera())
    px, _ = view.camera.project(np.array([[0.1, 0.1, 0.2]]))
    x, y = px[0].astype(int)
    assert view.part_id[y, x] == 1


def test_projection_examples():
    cam = top_camera()
    px, z = cam.project(np.array([[0.0, 0.0, 0.0], [0.0, 0.0, 5.0]]))
    assert np.allclose(px[0], [SIZE[0] / 2, SIZE[1] / 2])
    assert np.isnan(px[1]).all() and z[1] < 0
    view = render_view(cube_object(), cam)
    _, vis = visibility(np.array([[0, 0, 5.0]]), view)
    assert not vis[0]


def test_projection_consistency_with_raster():
    cam = Camera([2.0, -1.0, 1.5], [0, 0, 0], [0, 0, 1], 45.0, (200, 200))
    v = np.array([0.13, 0.07, -0.02])
    # camera-facing triangle with 1.5 px legs
    px_size = np.linalg.norm(v - cam.position) / cam.focal
    tiny = TriMesh([v, v + 1.5 * px_size * cam.right, v - 1.5 * px_size * cam.up], [[0, 1, 2]])
    view = render_view(SegmentedObject([PartSegment("t", tiny)]), cam)
    ys, xs = np.nonzero(view.part_id == 0)
    assert 1 <= len(xs) <= 4
    px, _ = cam.project(v[None])
    assert np.min(np.hypot(xs + 0.5 - px[0, 0], ys + 0.5 - px[0, 1])) <= 1.0


def test_visibility_front_vs_occluded():
    view = render_view(cube_object(), top_camera())
    # the back-face point lies on the same camera ray as the front one
    front = np.array([0.1, -0.2, 0.5])
    back = np.array([0, 0, 3.0]) + 3.5 / 2.5 * (front - [0, 0, 3.0])
    px, vis = visibility(np.array([front, back]), view)
    assert np.allclose(px[0], px[1], atol=1e-9)
    x, y = px[0].astype(int)
    # by hand: buffer depth 2.5 at that pixel; point depths 2.5 and 3.5
    assert view.depth[y, x] == pytest.approx(2.5)
    assert vis.tolist() == [True, False]


def test_visibility_convex_hemispheres():
    obj = cube_object()
    eye = np.array([2.0, 1.5, 1.2])
    view = render_view(obj, Camera(eye, [0, 0, 0], [0, 0, 1], 45.0, (256, 256)))
    rng = np.random.default_rng(0)
    for axis in range(3):
        for sign in (1, -1):
            pts = rng.uniform(-0.4, 0.4, size=(10, 3))
            pts[:, axis] = 0.5 * sign
            facing = eye[axis] * sign > 0.5
            assert np.all(visibility(pts, view)[1] == facing)


def test_select_viewpoint_prefers_above_for_lid():
    obj = SegmentedObject([PartSegment("box", box_mesh([-0.5, -0.5, 0], [0.5, 0.5, 0.6])),
                           PartSegment("lid", box_mesh([-0.5, -0.5, 0.6], [0.5, 0.5, 0.65]))])
    cam = select_viewpoint(obj, "lid", 42, SIZE)
    center = 0.5 * np.add(*obj.bounds())
    assert cam.position[2] > center[2]


def test_select_viewpoint_lowest_index_tie_break():
    obj = cube_object()
    counts = [render_view(obj, c).part_pixels(0) for c in icosphere_cameras(obj, 12, SIZE)]
    cam = select_viewpoint(obj, "cube", 12, SIZE)
    assert cam.index == int(np.argmax(counts))
    assert select_viewpoint(obj, "cube", 12, SIZE).index == cam.index


def test_select_viewpoint_occluded():
    shell = PartSegment("shell", box_mesh([-1, -1, -1], [1, 1, 1]))
    inner = PartSegment("inner", box_mesh([-0.2] * 3, [0.2] * 3))
    with pytest.raises(RenderError, match="part fully occluded"):
        select_viewpoint(SegmentedObject([shell, inner]), "inner", 12, SIZE)


def test_candidate_ids_and_visibility():
    view = render_view(cube_object(), top_camera())
    cs = project_candidates(np.array([[0, 0, -0.5], [0.2, 0, 0.5], [0, 0.2, 0.5]]), view)
    assert [c.id for c in cs.candidates] == [1, 2, 3]
    assert [c.visible for c in cs.candidates] == [True, True, False]
    assert np.allclose(cs.by_id(3).point3d, [0, 0, -0.5])


def test_label_box_inside_image():
    for px in ([0, 0], [SIZE[0], SIZE[1]], [-50, 80], [80, 80]):
        x0, y0, x1, y1 = label_box(px, SIZE)
        assert 0 <= x0 < x1 <= SIZE[0] and 0 <= y0 < y1 <= SIZE[1]
    assert boxes_overlap((0, 0, 10, 10), (5, 5, 15, 15))
    assert not boxes_overlap((0, 0, 10, 10), (10, 0, 20, 10))  # touching edges have zero area


def _blobs(centers, n=40, r=1e-4, seed=0):
    rng = np.random.default_rng(seed)
    return np.concatenate([np.asarray(c) + rng.uniform(-r, r, size=(n, 3)) * [1, 1, 0] for c in centers])


def test_choose_candidate_count_wide():
    view = render_view(cube_object(), top_camera(3.0, (512, 512)))
    g = np.linspace(-0.42, 0.42, 4)
    centers = [(x, y, 0.5) for x in g for y in g]
    cs = choose_candidate_count(_blobs(centers), view, [4, 8, 16])
    assert cs.k_used == 16
    boxes = [label_box(c.pixel, view.camera.image_size) for c in cs.visible]
    assert not any(boxes_overlap(a, b) for i, a in enumerate(boxes) for b in boxes[i + 1:])


def test_choose_candidate_count_tight():
    view = render_view(cube_object(), top_camera(3.0, (512, 512)))
    centers = [(-0.3, -0.3, 0.5), (0.3, -0.3, 0.5), (-0.3, 0.3, 0.5), (0.3, 0.3, 0.5)]
    cs = choose_candidate_count(_blobs(centers, r=0.01), view, [4, 8, 16])
    assert cs.k_used == 4


def test_choose_candidate_count_degenerate():
    view = render_view(cube_object(), top_camera())
    with pytest.raises(RenderError, match="prompt image degenerate"):
        choose_candidate_count(np.tile([[0.0, 0.0, 0.5]], (30, 1)), view, [4, 8])


def test_annotate_labels():
    view = render_view(cube_object(), top_camera())
    cs = project_candidates(np.array([[-0.3, 0, 0.5], [0, 0, 0.5], [0.3, 0, 0.5]]), view)
    ann = annotate_labels(view, cs)
    assert [m["id"] for m in ann.manifest()["marks"]] == [1, 2, 3]
    assert ann.png_bytes() == annotate_labels(view, cs).png_bytes()
    none = annotate_labels(view, project_candidates(np.array([[0, 0, -0.5]]), view))
    assert none.manifest()["marks"] == []
    assert np.array_equal(none.image, view.color)


def test_annotate_arrows_sliding_window():
    fx = sliding_window()
    obj = fx.object()
    cam = select_viewpoint(obj, "pane", 42, (256, 256))
    view = render_view(obj, cam)
    pane = obj.part("pane")
    plane = fit_plane(pane.mesh.vertices)
    ann = annotate_arrows(view, pane, plane, part_index=obj.names.index("pane"))
    assert [a.color for a in ann.arrows] == ["red", "yellow", "blue", "green"]
    assert set(ARROW_COLORS.values()) == {"red", "yellow", "blue", "green"}
    red = ann.arrows[0]
    assert np.dot(red.direction3d, [0, 0, 1]) > 0
    for a in ann.arrows:
        assert a.in_plane is None or abs(np.dot(a.in_plane, plane.normal)) < 1e-9


def test_arrows_share_centered_origin():
    obj = cube_object()
    cam = Camera([2, 1, 1.5], obj.parts[0].centroid, [0, 0, 1], 45.0, SIZE)
    ann = annotate_arrows(render_view(obj, cam), obj.parts[0])
    starts = {a.start for a in ann.arrows}
    assert len(starts) == 1
    assert np.allclose(next(iter(starts)), [SIZE[0] / 2, SIZE[1] / 2])


def test_arrows_hidden_part():
    shell = PartSegment("shell", box_mesh([-1, -1, -1], [1, 1, 1]))
    inner = PartSegment("inner", box_mesh([-0.2] * 3, [0.2] * 3))
    obj = SegmentedObject([shell, inner])
    view = render_view(obj, top_camera(4.0))
    with pytest.raises(RenderError, match="not visible"):
        annotate_arrows(view, inner, part_index=1)
