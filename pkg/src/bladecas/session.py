"""Repair-session workflow: the state machine tying scans, twin data, pose
estimation, and AR overlays together.

Legal transitions:
    IDLE -> OBJECT_IDENTIFIED            scan
    OBJECT_IDENTIFIED -> DEFECT_SELECTED select defect
    DEFECT_SELECTED -> DOCUMENTING       finish repair
    DOCUMENTING -> OBJECT_IDENTIFIED     submit (open defects remain)
    DOCUMENTING -> IDLE                  submit (all repaired)
    any -> IDLE                          abort

Six observed task actions are logged per blade: 1 scan/identify, 2 read
defect info, 3 check zone, 4 check wall thickness, 5 repair, 6 document.
Zone/thickness views count only when they lasted at least a second; the
repair interval runs from the last information view to documentation start.
"""

from __future__ import annotations

import enum
import threading
import time
from dataclasses import dataclass, field, replace
from typing import Callable

from bladecas.geometry import Camera, RigidTransform
from bladecas.overlay import (
    ALL_LAYERS,
    AROverlayFrame,
    AssetSnapshot,
    OverlayLayer,
    compute_overlays,
    defect_centroid,
)
from bladecas.pipeline import estimate_pose
from bladecas.ppf import ModelDescriptor
from bladecas.twin import NotFoundError, TwinStore

import numpy as np

ACTION_LABELS = {
    1: "scan/identify",
    2: "read defect info",
    3: "check zone",
    4: "check wall thickness",
    5: "repair",
    6: "document",
}
_VIEW_ACTIONS = {"defect_info": 2, "zone": 3, "wall_thickness": 4}
_MIN_VIEW_SECONDS = 1.0


class SessionState(str, enum.Enum):
    IDLE = "Idle"
    OBJECT_IDENTIFIED = "ObjectIdentified"
    DEFECT_SELECTED = "DefectSelected"
    DOCUMENTING = "Documenting"


class SessionError(Exception):
    pass


class RejectedBusyError(SessionError):
    """A scan arrived while a repair session is active."""


class IllegalTransitionError(SessionError):
    pass


@dataclass(frozen=True)
class ActionInterval:
    action_id: int
    label: str
    start: float
    end: float


@dataclass
class ActionLog:
    """Per-blade action intervals, non-overlapping and start-ordered."""

    blades: dict[str, list[ActionInterval]] = field(default_factory=dict)

    def add(self, serial: str, action_id: int, start: float, end: float) -> None:
        intervals = self.blades.setdefault(serial, [])
        if intervals:
            floor = intervals[-1].end
            start = max(start, floor)
        end = max(end, start)
        intervals.append(ActionInterval(action_id, ACTION_LABELS[action_id], start, end))

    def export(self) -> dict:
        return {
            "blades": [
                {
                    "serial": serial,
                    "actions": [
                        {"id": iv.action_id, "label": iv.label,
                         "start": iv.start, "end": iv.end}
                        for iv in intervals
                    ],
                }
                for serial, intervals in self.blades.items()
            ]
        }


@dataclass(frozen=True)
class DefectDetail:
    defect: dict
    zone: dict
    nearby_measurements: tuple[dict, ...]


class WorkstationSession:
    """Owns all mutable session state; one lock serializes every operation."""

    def __init__(self, store: TwinStore, cameras: dict[str, Camera],
                 descriptors: dict[str, ModelDescriptor], ar_camera_id: str,
                 nearby_radius_mm: float = 30.0,
                 pose_estimator: Callable = estimate_pose,
                 clock: Callable[[], float] = time.time):
        if ar_camera_id not in cameras:
            raise SessionError(f"unknown AR camera {ar_camera_id!r}")
        self.store = store
        self.cameras = cameras
        self.descriptors = descriptors
        self.ar_camera_id = ar_camera_id
        self.nearby_radius_mm = nearby_radius_mm
        self._estimate = pose_estimator
        self._clock = clock
        self._lock = threading.RLock()

        self.state = SessionState.IDLE
        self.serial: str | None = None
        self.defect_id: str | None = None
        self.pose: RigidTransform | None = None
        self.pose_time: float = 0.0
        self.stale: bool = False
        self.layers: set[OverlayLayer] = set(ALL_LAYERS)
        self.overlay: AROverlayFrame | None = None
        self.open_defects: list[dict] = []
        self.detail: DefectDetail | None = None
        self.last_error: str | None = None
        self.log = ActionLog()
        self._select_time: float | None = None
        self._views: dict[int, tuple[float, float]] = {}
        self._doc_begin_time: float | None = None
        self._listeners: list[Callable[[str, dict], None]] = []

    # -- plumbing -------------------------------------------------------------

    def subscribe(self, listener: Callable[[str, dict], None]) -> None:
        """Register a (event_type, payload) callback for UI push updates."""
        with self._lock:
            self._listeners.append(listener)

    def unsubscribe(self, listener: Callable[[str, dict], None]) -> None:
        with self._lock:
            if listener in self._listeners:
                self._listeners.remove(listener)

    def _emit(self, event_type: str, payload: dict) -> None:
        for listener in list(self._listeners):
            listener(event_type, payload)

    def _now(self, at: float | None) -> float:
        return self._clock() if at is None else float(at)

    def _snapshot(self) -> AssetSnapshot:
        zones = {}
        for defect in self.open_defects:
            zid = defect["zone_id"]
            if zid not in zones:
                zones[zid] = self.store.get_zone(self.serial, zid)
        return AssetSnapshot(
            serial=self.serial,
            open_defects=tuple(self.open_defects),
            zones=zones,
            measurements=tuple(self.store.measurements(self.serial)),
        )

    def _recompute_overlay(self) -> None:
        if self.pose is None or self.serial is None:
            self.overlay = None
            return
        self.overlay = compute_overlays(
            self.pose, self.cameras[self.ar_camera_id], self._snapshot(),
            frozenset(self.layers), self.defect_id,
            nearby_radius_mm=self.nearby_radius_mm, pose_time=self.pose_time,
            stale=self.stale)
        self._emit("overlay", {"pose_time": self.pose_time, "stale": self.stale})

    def _emit_state(self) -> None:
        self._emit("state", self.status())

    def status(self) -> dict:
        with self._lock:
            return {
                "state": self.state.value,
                "serial": self.serial,
                "defect_id": self.defect_id,
                "stale": self.stale,
                "layers": sorted(layer.value for layer in self.layers),
                "open_defects": [dict(d) for d in self.open_defects],
                "has_pose": self.pose is not None,
                "last_error": self.last_error,
            }

    # -- operations -----------------------------------------------------------

    def on_scan(self, serial: str, at: float | None = None) -> SessionState:
        with self._lock:
            t = self._now(at)
            if self.state is not SessionState.IDLE:
                raise RejectedBusyError(
                    f"scan of {serial!r} rejected: session busy in {self.state.value}")
            defects = self.store.list_open_defects(serial)  # NotFound propagates
            self.serial = serial
            self.open_defects = defects
            self.state = SessionState.OBJECT_IDENTIFIED
            self.defect_id = None
            self.detail = None
            self.layers = set(ALL_LAYERS)
            self.log.add(serial, 1, t, t)
            self.last_error = None
            self._recompute_overlay()
            self._emit_state()
            return self.state

    def select_defect(self, defect_id: str, at: float | None = None) -> DefectDetail:
        with self._lock:
            t = self._now(at)
            if self.state is not SessionState.OBJECT_IDENTIFIED:
                raise IllegalTransitionError(
                    f"cannot select a defect in state {self.state.value}")
            defect = next((d for d in self.open_defects if d["id"] == defect_id), None)
            if defect is None:
                raise NotFoundError(f"defect {defect_id!r} is not open for "
                                    f"{self.serial!r}")
            zone = self.store.get_zone(self.serial, defect["zone_id"])
            center = defect_centroid(defect)
            radius_m = self.nearby_radius_mm / 1000.0
            nearby = tuple(
                spot for spot in self.store.measurements(self.serial)
                if np.linalg.norm(np.asarray(spot["location_m"]) - center) <= radius_m)
            self.defect_id = defect_id
            self.detail = DefectDetail(defect=defect, zone=zone,
                                       nearby_measurements=nearby)
            self.state = SessionState.DEFECT_SELECTED
            self.layers = set(ALL_LAYERS)  # required information on by default
            self._select_time = t
            self._views = {}
            self._recompute_overlay()
            self._emit_state()
            return self.detail

    def record_view(self, kind: str, start: float, end: float) -> None:
        """UI visibility report used to infer actions 2, 3, and 4."""
        with self._lock:
            if kind not in _VIEW_ACTIONS:
                raise SessionError(f"unknown view kind {kind!r}")
            if self.state is not SessionState.DEFECT_SELECTED:
                raise IllegalTransitionError("views are recorded while a defect "
                                             "is selected")
            if end < start:
                raise SessionError("view interval ends before it starts")
            self._views[_VIEW_ACTIONS[kind]] = (float(start), float(end))

    def on_hands_cleared(self, clouds, detections,
                         at: float | None = None) -> AROverlayFrame | None:
        """Run pose estimation for one hands-cleared frame.

        Estimation failures never crash the session: the previous pose stays
        in place and the overlay is flagged stale.
        """
        with self._lock:
            t = self._now(at)
            if self.state is SessionState.IDLE:
                return None
            model_id = self.store.model_id(self.serial)
            desc = self.descriptors.get(model_id)
            if desc is None:
                raise SessionError(f"no descriptor registered for model {model_id!r}")
            try:
                hypothesis = self._estimate(clouds, detections, desc, self.cameras)
            except Exception as exc:  # estimation failures never kill the session
                self.last_error = str(exc) or type(exc).__name__
                self.stale = True
                if self.overlay is not None:
                    self.overlay = replace(self.overlay, stale=True)
                self._emit("error", {"error": self.last_error})
                return self.overlay
            self.pose = hypothesis.pose
            self.pose_time = t
            self.stale = False
            self.last_error = None
            self._recompute_overlay()
            return self.overlay

    def toggle_layer(self, layer: OverlayLayer | str,
                     enabled: bool) -> AROverlayFrame | None:
        """Flip one overlay layer and recompute from the cached pose."""
        with self._lock:
            if self.state is SessionState.IDLE:
                raise IllegalTransitionError("no active session")
            layer = OverlayLayer(layer)
            if enabled:
                self.layers.add(layer)
            else:
                self.layers.discard(layer)
            self._recompute_overlay()
            return self.overlay

    def begin_documentation(self, at: float | None = None) -> SessionState:
        """The worker finished grinding and opened the documentation form."""
        with self._lock:
            t = self._now(at)
            if self.state is not SessionState.DEFECT_SELECTED:
                raise IllegalTransitionError(
                    f"cannot start documenting in state {self.state.value}")
            select_t = self._select_time if self._select_time is not None else t
            info_view = self._views.get(2, (select_t, select_t))
            self.log.add(self.serial, 2, *info_view)
            for action_id in (3, 4):
                view = self._views.get(action_id)
                if view and view[1] - view[0] >= _MIN_VIEW_SECONDS:
                    self.log.add(self.serial, action_id, *view)
            repair_start = max([info_view[1]]
                               + [v[1] for a, v in self._views.items() if a in (3, 4)])
            self.log.add(self.serial, 5, repair_start, t)
            self._doc_begin_time = t
            self.state = SessionState.DOCUMENTING
            self._emit_state()
            return self.state

    def document_repair(self, record: dict, at: float | None = None) -> SessionState:
        with self._lock:
            t = self._now(at)
            if self.state is not SessionState.DOCUMENTING:
                raise IllegalTransitionError(
                    f"cannot submit documentation in state {self.state.value}")
            if record.get("defect_id") != self.defect_id:
                raise SessionError(
                    f"record documents {record.get('defect_id')!r} but "
                    f"{self.defect_id!r} is being repaired")
            self.store.append_documentation(self.serial, record)  # may raise
            start = self._doc_begin_time if self._doc_begin_time is not None else t
            self.log.add(self.serial, 6, start, t)
            self.open_defects = self.store.list_open_defects(self.serial)
            self.defect_id = None
            self.detail = None
            self._doc_begin_time = None
            if self.open_defects:
                self.state = SessionState.OBJECT_IDENTIFIED
            else:
                self.state = SessionState.IDLE
                self.serial = None
                self.pose = None
                self.overlay = None
                self.stale = False
            self._recompute_overlay()
            self._emit_state()
            return self.state

    def abort(self, at: float | None = None) -> SessionState:
        with self._lock:
            self.state = SessionState.IDLE
            self.serial = None
            self.defect_id = None
            self.detail = None
            self.pose = None
            self.overlay = None
            self.stale = False
            self.open_defects = []
            self._doc_begin_time = None
            self._emit_state()
            return self.state

    def session_log(self) -> dict:
        with self._lock:
            return self.log.export()
