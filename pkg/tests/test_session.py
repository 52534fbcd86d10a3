import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bladecas.fixtures import (
    BLADE_MODEL_ID,
    STUDY_SERIALS,
    make_blade_mesh,
    make_study_assets,
    make_workstation_cameras,
)
from bladecas.geometry import OBJECT, WORLD, Point3, RigidTransform, ar_project, rot_x, rot_z
from bladecas.mesh import sample_surface
from bladecas.overlay import (
    AssetSnapshot,
    OverlayLayer,
    clip_polyline,
    compute_overlays,
)
from bladecas.pipeline import NoObjectError
from bladecas.ppf import PoseHypothesis, build_descriptor
from bladecas.session import (
    IllegalTransitionError,
    RejectedBusyError,
    SessionError,
    SessionState,
    WorkstationSession,
)
from bladecas.twin import NotFoundError, TwinStore, ValidationError


@pytest.fixture(scope="module")
def mesh():
    return make_blade_mesh()


@pytest.fixture(scope="module")
def descriptor(mesh):
    return build_descriptor(sample_surface(mesh, 6000, seed=42))


@pytest.fixture()
def store(tmp_path, mesh):
    s = TwinStore(tmp_path / "store")
    for asset in make_study_assets(mesh):
        s.load_asset_document(asset)
    return s


LYING_POSE = RigidTransform(rot_z(0.3) @ rot_x(np.pi / 2),
                            np.array([0.0, 0.0, 0.05]), OBJECT, WORLD)


def fixed_pose_estimator(pose=LYING_POSE):
    calls = {"count": 0}

    def estimator(clouds, detections, desc, cameras):
        calls["count"] += 1
        if not detections:
            raise NoObjectError("nothing detected")
        return PoseHypothesis(pose=pose, votes=100, icp_residual=0.0004)

    estimator.calls = calls
    return estimator


@pytest.fixture()
def session(store, descriptor):
    return WorkstationSession(
        store=store,
        cameras=make_workstation_cameras(),
        descriptors={BLADE_MODEL_ID: descriptor},
        ar_camera_id="cam1",
        pose_estimator=fixed_pose_estimator(),
        clock=lambda: 0.0,
    )


def make_record(defect_id, start=10.0, end=40.0, outcome="repaired"):
    return {
        "defect_id": defect_id,
        "worker_id": "W-1",
        "started_at_s": start,
        "finished_at_s": end,
        "duration_s": end - start,
        "notes": "",
        "outcome": outcome,
    }


class TestScan:
    def test_scan_identifies_object(self, session):
        state = session.on_scan("BLD-0001", at=0.0)
        assert state is SessionState.OBJECT_IDENTIFIED
        assert len(session.open_defects) == 1

    def test_unknown_serial_keeps_idle(self, session):
        with pytest.raises(NotFoundError):
            session.on_scan("NOPE", at=0.0)
        assert session.state is SessionState.IDLE

    def test_scan_while_busy_rejected(self, session):
        session.on_scan("BLD-0001", at=0.0)
        session.select_defect("D1", at=1.0)
        with pytest.raises(RejectedBusyError):
            session.on_scan("BLD-0002", at=2.0)
        assert session.serial == "BLD-0001"


class TestSelectDefect:
    def test_select_open_defect(self, session):
        session.on_scan("BLD-0001", at=0.0)
        detail = session.select_defect("D1", at=1.0)
        assert session.state is SessionState.DEFECT_SELECTED
        assert detail.zone["id"] == detail.defect["zone_id"]
        assert set(session.layers) == set(OverlayLayer)

    def test_select_requires_object_identified(self, session):
        with pytest.raises(IllegalTransitionError):
            session.select_defect("D1", at=0.0)

    def test_repaired_defect_rejected(self, session):
        session.on_scan("BLD-0001", at=0.0)
        session.select_defect("D1", at=1.0)
        session.begin_documentation(at=5.0)
        session.document_repair(make_record("D1"), at=6.0)
        # session back to IDLE (single defect); rescan and try selecting again
        session.on_scan("BLD-0001", at=7.0)
        with pytest.raises((NotFoundError, IllegalTransitionError)):
            session.select_defect("D1", at=8.0)

    def test_detail_includes_nearby_measurements_only(self, session, store):
        session.on_scan("BLD-0001", at=0.0)
        detail = session.select_defect("D1", at=1.0)
        from bladecas.overlay import defect_centroid
        center = defect_centroid(detail.defect)
        for spot in detail.nearby_measurements:
            dist = np.linalg.norm(np.asarray(spot["location_m"]) - center)
            assert dist <= 0.030 + 1e-12


class TestHandsCleared:
    def test_updates_pose_and_overlay(self, session):
        session.on_scan("BLD-0001", at=0.0)
        session.select_defect("D1", at=1.0)
        frame = session.on_hands_cleared({"cam1": None}, {"cam1": object()}, at=2.0)
        assert frame is not None
        assert not frame.stale
        assert session.pose is not None

    def test_failure_sets_stale_keeps_overlays(self, session):
        session.on_scan("BLD-0001", at=0.0)
        session.select_defect("D1", at=1.0)
        good = session.on_hands_cleared({"cam1": None}, {"cam1": object()}, at=2.0)
        bad = session.on_hands_cleared({}, {}, at=3.0)
        assert bad is not None and bad.stale
        assert bad.polylines == good.polylines
        assert session.last_error is not None

    def test_ignored_while_idle(self, session):
        assert session.on_hands_cleared({}, {}, at=0.0) is None
        assert session.state is SessionState.IDLE

    def test_unexpected_estimator_failure_never_crashes(self, store, descriptor):
        from bladecas.icp import UnderConstrainedError

        def broken(clouds, detections, desc, cameras):
            raise UnderConstrainedError("only 3 correspondences within gate")

        session = WorkstationSession(
            store=store, cameras=make_workstation_cameras(),
            descriptors={BLADE_MODEL_ID: descriptor}, ar_camera_id="cam1",
            pose_estimator=broken, clock=lambda: 0.0)
        session.on_scan("BLD-0001", at=0.0)
        session.on_hands_cleared({"cam1": None}, {"cam1": object()}, at=1.0)
        assert session.state is SessionState.OBJECT_IDENTIFIED
        assert session.stale
        assert "correspondences" in session.last_error


class TestToggleLayer:
    def test_toggle_roundtrip_identical_frame(self, session):
        session.on_scan("BLD-0001", at=0.0)
        session.select_defect("D1", at=1.0)
        base = session.on_hands_cleared({"cam1": None}, {"cam1": object()}, at=2.0)
        session.toggle_layer(OverlayLayer.ZONES, False)
        restored = session.toggle_layer(OverlayLayer.ZONES, True)
        assert restored.polylines == base.polylines
        assert restored.points == base.points

    def test_toggle_does_not_touch_other_layers(self, session):
        session.on_scan("BLD-0001", at=0.0)
        session.select_defect("D1", at=1.0)
        base = session.on_hands_cleared({"cam1": None}, {"cam1": object()}, at=2.0)
        off = session.toggle_layer(OverlayLayer.WALL_THICKNESS, False)
        assert off.layer_polylines(OverlayLayer.DEFECTS) \
            == base.layer_polylines(OverlayLayer.DEFECTS)
        assert off.layer_points(OverlayLayer.WALL_THICKNESS) == []

    def test_toggle_uses_cached_pose(self, session):
        estimator = session._estimate
        session.on_scan("BLD-0001", at=0.0)
        session.select_defect("D1", at=1.0)
        session.on_hands_cleared({"cam1": None}, {"cam1": object()}, at=2.0)
        before = estimator.calls["count"]
        session.toggle_layer(OverlayLayer.DEFECTS, False)
        session.toggle_layer(OverlayLayer.DEFECTS, True)
        assert estimator.calls["count"] == before

    def test_requires_active_session(self, session):
        with pytest.raises(IllegalTransitionError):
            session.toggle_layer(OverlayLayer.DEFECTS, True)


class TestDocumentRepair:
    def test_last_defect_returns_idle(self, session):
        session.on_scan("BLD-0001", at=0.0)
        session.select_defect("D1", at=1.0)
        session.begin_documentation(at=5.0)
        state = session.document_repair(make_record("D1"), at=6.0)
        assert state is SessionState.IDLE

    def test_remaining_defects_return_object_identified(self, session, store):
        import json
        doc = json.loads(store.get_submodel("BLD-0001", "defects"))
        doc["defects"].append(dict(doc["defects"][0], id="D2"))
        store.put_submodel("BLD-0001", "defects", doc)
        session.on_scan("BLD-0001", at=0.0)
        session.select_defect("D1", at=1.0)
        session.begin_documentation(at=5.0)
        state = session.document_repair(make_record("D1"), at=6.0)
        assert state is SessionState.OBJECT_IDENTIFIED
        assert [d["id"] for d in session.open_defects] == ["D2"]

    def test_twin_rejection_keeps_state(self, session):
        session.on_scan("BLD-0001", at=0.0)
        session.select_defect("D1", at=1.0)
        session.begin_documentation(at=5.0)
        bad = make_record("D1")
        bad["duration_s"] = 1e9
        with pytest.raises(ValidationError):
            session.document_repair(bad, at=6.0)
        assert session.state is SessionState.DOCUMENTING

    def test_wrong_defect_rejected(self, session):
        session.on_scan("BLD-0001", at=0.0)
        session.select_defect("D1", at=1.0)
        session.begin_documentation(at=5.0)
        with pytest.raises(SessionError):
            session.document_repair(make_record("D9"), at=6.0)


class TestActionLog:
    def test_complete_blade_has_required_actions(self, session):
        session.on_scan("BLD-0001", at=0.0)
        session.select_defect("D1", at=2.0)
        session.record_view("defect_info", 2.0, 4.0)
        session.record_view("zone", 4.0, 6.0)
        session.record_view("wall_thickness", 6.0, 7.5)
        session.begin_documentation(at=20.0)
        session.document_repair(make_record("D1"), at=25.0)
        log = session.session_log()
        blade = log["blades"][0]
        ids = [a["id"] for a in blade["actions"]]
        assert set(ids) >= {1, 2, 5, 6}
        assert ids == sorted(ids, key=lambda i: ids.index(i))  # insertion order
        starts = [a["start"] for a in blade["actions"]]
        assert starts == sorted(starts)
        for prev, nxt in zip(blade["actions"], blade["actions"][1:]):
            assert nxt["start"] >= prev["end"]

    def test_short_views_are_skipped(self, session):
        session.on_scan("BLD-0001", at=0.0)
        session.select_defect("D1", at=2.0)
        session.record_view("zone", 4.0, 4.5)          # under a second
        session.record_view("wall_thickness", 5.0, 7.0)
        session.begin_documentation(at=20.0)
        session.document_repair(make_record("D1"), at=25.0)
        ids = [a["id"] for a in session.session_log()["blades"][0]["actions"]]
        assert 3 not in ids and 4 in ids

    def test_empty_session_empty_log(self, session):
        assert session.session_log() == {"blades": []}

    def test_tct_equals_scan_to_submit(self, session):
        session.on_scan("BLD-0001", at=100.0)
        session.select_defect("D1", at=102.0)
        session.begin_documentation(at=130.0)
        session.document_repair(make_record("D1"), at=140.0)
        blade = session.session_log()["blades"][0]
        tct = blade["actions"][-1]["end"] - blade["actions"][0]["start"]
        assert tct == pytest.approx(40.0)


class TestOverlaySoundness:
    def test_defect_polyline_matches_ar_project(self, session, store):
        session.on_scan("BLD-0001", at=0.0)
        detail = session.select_defect("D1", at=1.0)
        frame = session.on_hands_cleared({"cam1": None}, {"cam1": object()}, at=2.0)
        cam = session.cameras["cam1"]
        # straight re-projection of the stored polyline through the same chain
        expected = [
            ar_project(cam.intrinsics, cam.t_world_cam, LYING_POSE,
                       Point3(*p, frame=OBJECT))
            for p in detail.defect["polyline_m"]
        ]
        drawn = [p for p in frame.layer_polylines(OverlayLayer.DEFECTS)
                 if p.highlighted]
        assert drawn
        got = drawn[0].points
        assert len(got) == len(expected)
        for (u, v), px in zip(got, expected):
            assert u == pytest.approx(px.u, abs=1e-9)
            assert v == pytest.approx(px.v, abs=1e-9)

    def test_all_layers_disabled_empty(self, session):
        session.on_scan("BLD-0001", at=0.0)
        session.select_defect("D1", at=1.0)
        session.on_hands_cleared({"cam1": None}, {"cam1": object()}, at=2.0)
        for layer in OverlayLayer:
            frame = session.toggle_layer(layer, False)
        assert frame.polylines == () and frame.points == ()

    def test_zero_nearby_radius_empties_thickness(self, store, descriptor):
        session = WorkstationSession(
            store=store, cameras=make_workstation_cameras(),
            descriptors={BLADE_MODEL_ID: descriptor}, ar_camera_id="cam1",
            nearby_radius_mm=0.0, pose_estimator=fixed_pose_estimator(),
            clock=lambda: 0.0)
        session.on_scan("BLD-0001", at=0.0)
        session.select_defect("D1", at=1.0)
        frame = session.on_hands_cleared({"cam1": None}, {"cam1": object()}, at=2.0)
        assert frame.layer_points(OverlayLayer.WALL_THICKNESS) == []


class TestOverlayClipping:
    def test_offscreen_geometry_is_clipped_to_image_bounds(self):
        # a polyline far wider than the image must come back clipped
        cam = make_workstation_cameras()["cam1"]
        width = cam.intrinsics.width
        height = cam.intrinsics.height
        snapshot = AssetSnapshot(
            serial="S",
            open_defects=(
                {
                    "id": "D1", "kind": "crack", "length_mm": 5.0, "status": "open",
                    "zone_id": "Z1", "comment": "",
                    # 3 m wide at 1 m depth: projects far beyond the sensor
                    "polyline_m": [[-1.5, 0.0, 0.05], [1.5, 0.0, 0.05]],
                },
            ),
            zones={}, measurements=())
        pose = RigidTransform(np.eye(3), np.zeros(3), OBJECT, WORLD)
        frame = compute_overlays(pose, cam, snapshot, {OverlayLayer.DEFECTS}, "D1")
        assert frame.polylines
        for poly in frame.polylines:
            for u, v in poly.points:
                assert -1e-9 <= u <= width + 1e-9
                assert -1e-9 <= v <= height + 1e-9

    def test_behind_camera_vertices_dropped_per_primitive(self):
        cam = make_workstation_cameras()["cam1"]
        snapshot = AssetSnapshot(
            serial="S",
            open_defects=(
                {
                    "id": "D1", "kind": "crack", "length_mm": 5.0, "status": "open",
                    "zone_id": "Z1", "comment": "",
                    # second vertex sits above the camera (behind it)
                    "polyline_m": [[0.0, 0.0, 0.0], [0.01, 0.0, 0.0],
                                   [0.0, 0.0, 5.0]],
                },
            ),
            zones={}, measurements=())
        pose = RigidTransform(np.eye(3), np.zeros(3), OBJECT, WORLD)
        frame = compute_overlays(pose, cam, snapshot, {OverlayLayer.DEFECTS}, "D1")
        assert len(frame.polylines) == 1
        assert len(frame.polylines[0].points) == 2


class TestClipPolyline:
    def test_inside_unchanged(self):
        pts = [(10.0, 10.0), (50.0, 40.0), (90.0, 20.0)]
        runs = clip_polyline(pts, 100.0, 100.0)
        assert runs == [pts]

    def test_crossing_split(self):
        pts = [(-50.0, 50.0), (50.0, 50.0), (150.0, 50.0)]
        runs = clip_polyline(pts, 100.0, 100.0)
        assert len(runs) == 1
        run = runs[0]
        assert run[0] == (0.0, 50.0)
        assert run[-1] == (100.0, 50.0)

    def test_fully_outside_empty(self):
        assert clip_polyline([(-10.0, -10.0), (-20.0, -5.0)], 100.0, 100.0) == []

    def test_all_coordinates_within_bounds(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            pts = [tuple(p) for p in rng.uniform(-200, 300, size=(6, 2))]
            for run in clip_polyline(pts, 100.0, 100.0):
                for u, v in run:
                    assert -1e-9 <= u <= 100.0 + 1e-9
                    assert -1e-9 <= v <= 100.0 + 1e-9


OPS = ("scan", "select", "begin", "document", "abort", "hands", "toggle")


@given(st.lists(st.sampled_from(OPS), min_size=1, max_size=30))
@settings(max_examples=60, deadline=None)
def test_state_machine_never_reaches_illegal_state(tmp_path_factory, mesh, ops):
    store = TwinStore(tmp_path_factory.mktemp("sm") / "store")
    for asset in make_study_assets(mesh):
        store.load_asset_document(asset)
    session = WorkstationSession(
        store=store, cameras=make_workstation_cameras(), descriptors={},
        ar_camera_id="cam1",
        pose_estimator=fixed_pose_estimator(), clock=lambda: 0.0)
    session.descriptors[BLADE_MODEL_ID] = object()  # estimator never touches it
    t = 0.0
    for op in ops:
        t += 1.0
        prev = session.state
        try:
            if op == "scan":
                session.on_scan("BLD-0001", at=t)
            elif op == "select":
                session.select_defect("D1", at=t)
            elif op == "begin":
                session.begin_documentation(at=t)
            elif op == "document":
                session.document_repair(make_record("D1", start=t, end=t + 1), at=t)
            elif op == "abort":
                session.abort(at=t)
            elif op == "hands":
                session.on_hands_cleared({"cam1": None}, {"cam1": object()}, at=t)
            elif op == "toggle":
                session.toggle_layer(OverlayLayer.DEFECTS, True)
        except SessionError:
            assert session.state is prev  # rejected ops leave state untouched
        except NotFoundError:
            assert session.state is prev
        # structural invariants hold in every state
        assert (session.serial is not None) == (session.state is not SessionState.IDLE)
        assert (session.defect_id is not None) == (
            session.state in (SessionState.DEFECT_SELECTED, SessionState.DOCUMENTING))
