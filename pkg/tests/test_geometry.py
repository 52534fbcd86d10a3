import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bladecas.geometry import (
    OBJECT,
    WORLD,
    BehindCameraError,
    Camera,
    CameraIntrinsics,
    FrameMismatchError,
    GeometryError,
    Pixel,
    Point3,
    RigidTransform,
    ar_project,
    camera_frame,
    compose,
    invert,
    load_camera_config,
    project,
    project_points,
    rot_x,
    rot_y,
    rot_z,
    save_camera_config,
    transform_point,
)

K = CameraIntrinsics(fx=1000.0, fy=1000.0, cx=640.0, cy=360.0, width=1280, height=720)


def random_transform(rng, from_frame=OBJECT, to_frame=WORLD, trans_scale=1.0):
    angles = rng.uniform(-np.pi, np.pi, size=3)
    rot = rot_z(angles[0]) @ rot_y(angles[1]) @ rot_x(angles[2])
    trans = rng.uniform(-trans_scale, trans_scale, size=3)
    return RigidTransform(rot, trans, from_frame=from_frame, to_frame=to_frame)


class TestRigidTransformValidation:
    def test_rejects_reflection(self):
        refl = np.diag([1.0, 1.0, -1.0])
        with pytest.raises(GeometryError):
            RigidTransform(refl, np.zeros(3), WORLD, WORLD)

    def test_rejects_garbage_matrix(self):
        with pytest.raises(GeometryError):
            RigidTransform(np.full((3, 3), 0.5), np.zeros(3), WORLD, WORLD)

    def test_repairs_small_drift(self):
        rot = rot_z(0.3)
        rot_drifted = rot + 1e-6 * np.ones((3, 3))
        t = RigidTransform(rot_drifted, np.zeros(3), WORLD, WORLD)
        assert np.abs(t.rotation.T @ t.rotation - np.eye(3)).max() < 1e-9
        assert abs(np.linalg.det(t.rotation) - 1.0) < 1e-9

    def test_rejects_empty_frame(self):
        with pytest.raises(GeometryError):
            RigidTransform(np.eye(3), np.zeros(3), "", WORLD)

    def test_immutable_arrays(self):
        t = RigidTransform.identity()
        with pytest.raises(ValueError):
            t.rotation[0, 0] = 2.0


class TestCompose:
    def test_identity_left(self):
        rng = np.random.default_rng(1)
        t = random_transform(rng)
        ident = RigidTransform.identity(WORLD)
        out = compose(ident, t)
        np.testing.assert_allclose(out.rotation, t.rotation)
        np.testing.assert_allclose(out.translation, t.translation)
        assert out.from_frame == OBJECT and out.to_frame == WORLD

    def test_pure_translations_add(self):
        a = RigidTransform.from_translation(1, 0, 0)
        b = RigidTransform.from_translation(0, 2, 0)
        out = compose(a, b)
        np.testing.assert_allclose(out.translation, [1, 2, 0])
        np.testing.assert_allclose(out.rotation, np.eye(3))

    def test_rotations_add_angles(self):
        # Oracle: direct matrix product of two quarter turns.
        a = RigidTransform(rot_z(math.pi / 2), np.zeros(3), WORLD, WORLD)
        b = RigidTransform(rot_z(math.pi / 2), np.zeros(3), WORLD, WORLD)
        out = compose(a, b)
        np.testing.assert_allclose(out.rotation, rot_z(math.pi), atol=1e-12)

    def test_frame_mismatch(self):
        a = RigidTransform.identity(WORLD)
        b = RigidTransform(np.eye(3), np.zeros(3), OBJECT, "TABLE")
        with pytest.raises(FrameMismatchError):
            compose(a, b)

    def test_associative(self):
        rng = np.random.default_rng(7)
        a = random_transform(rng, "C", "D")
        b = random_transform(rng, "B", "C")
        c = random_transform(rng, "A", "B")
        left = compose(compose(a, b), c)
        right = compose(a, compose(b, c))
        np.testing.assert_allclose(left.rotation, right.rotation, atol=1e-9)
        np.testing.assert_allclose(left.translation, right.translation, atol=1e-9)


class TestInvert:
    def test_identity(self):
        ident = RigidTransform.identity()
        out = invert(ident)
        np.testing.assert_allclose(out.rotation, np.eye(3))
        np.testing.assert_allclose(out.translation, np.zeros(3))

    def test_pure_translation(self):
        t = RigidTransform.from_translation(1, 2, 3)
        out = invert(t)
        np.testing.assert_allclose(out.translation, [-1, -2, -3])

    def test_two_sided_inverse(self):
        t = compose(
            RigidTransform(rot_z(math.radians(30)), np.zeros(3), WORLD, WORLD),
            RigidTransform.from_translation(0.1, 0, 0),
        )
        for prod in (compose(t, invert(t)), compose(invert(t), t)):
            np.testing.assert_allclose(prod.rotation, np.eye(3), atol=1e-9)
            np.testing.assert_allclose(prod.translation, np.zeros(3), atol=1e-9)

    def test_swaps_frames(self):
        t = RigidTransform(np.eye(3), np.zeros(3), OBJECT, WORLD)
        out = invert(t)
        assert out.from_frame == WORLD and out.to_frame == OBJECT


class TestProject:
    def test_optical_axis_maps_to_principal_point(self):
        px = project(K, Point3(0, 0, 1, frame=camera_frame("c1")))
        assert px == Pixel(640.0, 360.0)

    def test_analytic_offsets(self):
        # u = 1000 * 0.1 / 1 + 640 = 740
        px = project(K, Point3(0.1, 0, 1, frame=camera_frame("c1")))
        assert px.u == pytest.approx(740.0) and px.v == pytest.approx(360.0)
        # u = 1000 * 0.1 / 2 + 640 = 690, v = 1000 * 0.2 / 2 + 360 = 460
        px = project(K, Point3(0.1, 0.2, 2, frame=camera_frame("c1")))
        assert px.u == pytest.approx(690.0) and px.v == pytest.approx(460.0)

    def test_skew_contributes(self):
        k = CameraIntrinsics(fx=1000, fy=1000, cx=640, cy=360, width=1280, height=720, skew=10.0)
        px = project(k, Point3(0.0, 0.2, 1.0, frame=camera_frame("c1")))
        assert px.u == pytest.approx(640.0 + 10.0 * 0.2)

    def test_behind_camera(self):
        with pytest.raises(BehindCameraError):
            project(K, Point3(0, 0, -1, frame=camera_frame("c1")))

    def test_degenerate_depth(self):
        with pytest.raises((BehindCameraError, GeometryError)):
            project(K, Point3(0, 0, 1e-13, frame=camera_frame("c1")))

    def test_scale_covariance(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            x, y = rng.uniform(-0.5, 0.5, size=2)
            z = rng.uniform(0.2, 3.0)
            lam = rng.uniform(0.1, 10.0)
            a = project(K, Point3(x, y, z, frame=camera_frame("c1")))
            b = project(K, Point3(lam * x, lam * y, lam * z, frame=camera_frame("c1")))
            assert a.u == pytest.approx(b.u, abs=1e-9)
            assert a.v == pytest.approx(b.v, abs=1e-9)

    def test_rejects_world_frame_point(self):
        with pytest.raises(FrameMismatchError):
            project(K, Point3(0, 0, 1, frame=WORLD))


class TestTransformPoint:
    def test_identity(self):
        p = Point3(1.5, -0.2, 3.0, frame=WORLD)
        out = transform_point(RigidTransform.identity(WORLD), p)
        assert out == p

    def test_quarter_turn(self):
        t = RigidTransform(rot_z(math.pi / 2), np.zeros(3), WORLD, WORLD)
        out = transform_point(t, Point3(1, 0, 0, frame=WORLD))
        assert out.x == pytest.approx(0.0, abs=1e-12)
        assert out.y == pytest.approx(1.0, abs=1e-12)

    def test_frame_mismatch(self):
        t = RigidTransform(np.eye(3), np.zeros(3), OBJECT, WORLD)
        with pytest.raises(FrameMismatchError):
            transform_point(t, Point3(0, 0, 0, frame=WORLD))

    def test_preserves_pairwise_distances(self):
        rng = np.random.default_rng(11)
        t = random_transform(rng, WORLD, WORLD)
        pts = rng.uniform(-1, 1, size=(100, 3))
        moved = t.apply(pts)
        for _ in range(100):
            i, j = rng.integers(0, 100, size=2)
            d0 = np.linalg.norm(pts[i] - pts[j])
            d1 = np.linalg.norm(moved[i] - moved[j])
            assert d1 == pytest.approx(d0, abs=1e-12)

    def test_preserves_triangle_areas(self):
        rng = np.random.default_rng(13)
        t = random_transform(rng, WORLD, WORLD)
        for _ in range(50):
            tri = rng.uniform(-1, 1, size=(3, 3))
            moved = t.apply(tri)
            a0 = 0.5 * np.linalg.norm(np.cross(tri[1] - tri[0], tri[2] - tri[0]))
            a1 = 0.5 * np.linalg.norm(np.cross(moved[1] - moved[0], moved[2] - moved[0]))
            assert a1 == pytest.approx(a0, rel=1e-9)


class TestArProject:
    def test_identity_chain(self):
        ident_wc = RigidTransform(np.eye(3), np.zeros(3), WORLD, camera_frame("c1"))
        ident_ow = RigidTransform(np.eye(3), np.zeros(3), OBJECT, WORLD)
        px = ar_project(K, ident_wc, ident_ow, Point3(0, 0, 1, frame=OBJECT))
        assert px == Pixel(640.0, 360.0)

    def test_object_offset_reduces_to_axis_case(self):
        ident_wc = RigidTransform(np.eye(3), np.zeros(3), WORLD, camera_frame("c1"))
        t_ow = RigidTransform.from_translation(0, 0, 1, OBJECT, WORLD)
        px = ar_project(K, ident_wc, t_ow, Point3(0, 0, 0, frame=OBJECT))
        assert px == Pixel(640.0, 360.0)

    def test_equals_chained_two_step(self):
        rng = np.random.default_rng(17)
        count = 0
        while count < 1000:
            t_ow = random_transform(rng, OBJECT, WORLD, trans_scale=0.3)
            t_wc = random_transform(rng, WORLD, camera_frame("c1"), trans_scale=0.5)
            p = Point3(*rng.uniform(-0.2, 0.2, size=3), frame=OBJECT)
            chained = compose(t_wc, t_ow)
            cam_pt = transform_point(chained, p)
            if cam_pt.z <= 1e-6:
                continue
            direct = ar_project(K, t_wc, t_ow, p)
            two_step = project(K, cam_pt)
            assert direct.u == pytest.approx(two_step.u, abs=1e-9)
            assert direct.v == pytest.approx(two_step.v, abs=1e-9)
            count += 1

    def test_behind_camera_propagates(self):
        t_wc = RigidTransform(np.eye(3), np.zeros(3), WORLD, camera_frame("c1"))
        t_ow = RigidTransform.from_translation(0, 0, -2, OBJECT, WORLD)
        with pytest.raises(BehindCameraError):
            ar_project(K, t_wc, t_ow, Point3(0, 0, 0, frame=OBJECT))


class TestProjectPoints:
    def test_matches_scalar_project(self):
        rng = np.random.default_rng(23)
        pts = rng.uniform(-0.5, 0.5, size=(200, 3))
        pts[:, 2] = rng.uniform(0.2, 3.0, size=200)
        uv, mask = project_points(K, pts)
        assert mask.all()
        for i in range(0, 200, 17):
            px = project(K, Point3(*pts[i], frame=camera_frame("c1")))
            assert uv[i, 0] == pytest.approx(px.u, abs=1e-12)
            assert uv[i, 1] == pytest.approx(px.v, abs=1e-12)

    def test_behind_camera_masked(self):
        pts = np.array([[0.0, 0.0, 1.0], [0.0, 0.0, -1.0]])
        uv, mask = project_points(K, pts)
        assert mask.tolist() == [True, False]
        assert np.isnan(uv[1]).all()


@st.composite
def rotations(draw):
    angles = [draw(st.floats(-math.pi, math.pi, allow_nan=False)) for _ in range(3)]
    return rot_z(angles[0]) @ rot_y(angles[1]) @ rot_x(angles[2])


@given(rotations(), st.lists(st.floats(-10, 10), min_size=3, max_size=3))
@settings(max_examples=50, deadline=None)
def test_invert_roundtrip_property(rot, trans):
    t = RigidTransform(rot, np.array(trans), OBJECT, WORLD)
    prod = compose(t, invert(t))
    assert np.abs(prod.rotation - np.eye(3)).max() < 1e-9
    assert np.abs(prod.translation).max() < 1e-7


class TestCameraConfig:
    def test_roundtrip(self, tmp_path):
        rng = np.random.default_rng(29)
        cams = {}
        for cam_id in ("cam1", "cam2"):
            ext = random_transform(rng, WORLD, camera_frame(cam_id), trans_scale=2.0)
            intr = CameraIntrinsics(fx=600.0, fy=610.0, cx=640.0, cy=360.0,
                                    width=1280, height=720, skew=0.5)
            cams[cam_id] = Camera(cam_id, intr, ext)
        path = tmp_path / "cameras.txt"
        save_camera_config(path, cams)
        loaded = load_camera_config(path)
        assert set(loaded) == {"cam1", "cam2"}
        for cam_id, cam in cams.items():
            got = loaded[cam_id]
            assert got.intrinsics == cam.intrinsics
            np.testing.assert_allclose(got.t_world_cam.rotation, cam.t_world_cam.rotation)
            np.testing.assert_allclose(got.t_world_cam.translation, cam.t_world_cam.translation)

    def test_rejects_malformed_line(self, tmp_path):
        path = tmp_path / "cameras.txt"
        path.write_text("cam1 600 600 640 360 0 1280\n")
        with pytest.raises(GeometryError):
            load_camera_config(path)

    def test_comments_and_blank_lines(self, tmp_path):
        path = tmp_path / "cameras.txt"
        ident = " ".join(["1 0 0", "0 1 0", "0 0 1", "0 0 0"])
        path.write_text(f"# header\n\ncam1 600 600 640 360 0 1280 720 {ident}  # trailing\n")
        cams = load_camera_config(path)
        assert list(cams) == ["cam1"]

    def test_camera_origin_world(self):
        ext = RigidTransform(rot_x(math.pi), np.array([0.0, 0.0, 2.0]), WORLD,
                             camera_frame("c1"))
        intr = CameraIntrinsics(fx=600, fy=600, cx=320, cy=240, width=640, height=480)
        cam = Camera("c1", intr, ext)
        np.testing.assert_allclose(cam.origin_world, [0.0, 0.0, 2.0], atol=1e-12)
