"""Headless study driver: plays a scenario through a live session.

Walks the simulator's event stream and performs the operator's part of the
task at scripted offsets, in the observed order: scan, read the list and
select the defect, place the blade and withdraw hands (pose + overlay),
grind, then document. Used by the acceptance run and the demos; no UI.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from bladecas.session import SessionState, WorkstationSession
from bladecas.simulate import (
    FrameReady,
    HandPresenceEvent,
    ScanEvent,
    SceneSimulator,
    ScenarioScript,
)

# operator timing offsets (seconds)
_SELECT_AFTER_SCAN = 0.5
_INFO_VIEW = (0.5, 2.0)
_ZONE_VIEW = (2.0, 3.5)
_THICKNESS_VIEW = (3.5, 5.0)
_GRIND_SECONDS = 3.0     # between the pose frame and opening the form
_DOCUMENT_SECONDS = 2.0  # filling in the form


@dataclass
class StudyRun:
    scans: int = 0
    frames: int = 0
    overlays_ok: int = 0
    documented: list[str] = field(default_factory=list)
    blade_spans: dict[str, tuple[float, float]] = field(default_factory=dict)

    @property
    def active_time_s(self) -> float:
        return sum(end - start for start, end in self.blade_spans.values())


def run_study(session: WorkstationSession, simulator: SceneSimulator,
              script: ScenarioScript, worker_id: str = "W-1") -> StudyRun:
    """Run the scripted repair task to completion and return timing facts."""
    run = StudyRun()
    scan_time: dict[str, float] = {}

    def select_and_read(at: float) -> None:
        defect = session.open_defects[0]
        session.select_defect(defect["id"], at=at + _SELECT_AFTER_SCAN)
        session.record_view("defect_info", at + _INFO_VIEW[0], at + _INFO_VIEW[1])
        session.record_view("zone", at + _ZONE_VIEW[0], at + _ZONE_VIEW[1])
        session.record_view("wall_thickness", at + _THICKNESS_VIEW[0],
                            at + _THICKNESS_VIEW[1])

    def grind_and_document(defect_id: str, at: float) -> float:
        """Finish the selected defect; returns the submission time."""
        begin = at + _GRIND_SECONDS
        submit = begin + _DOCUMENT_SECONDS
        session.begin_documentation(at=begin)
        session.document_repair({
            "defect_id": defect_id,
            "worker_id": worker_id,
            "started_at_s": at,
            "finished_at_s": begin,
            "duration_s": _GRIND_SECONDS,
            "notes": "simulated grinding pass",
            "outcome": "repaired",
        }, at=submit)
        return submit

    for event in simulator.run_scenario(script):
        if isinstance(event, ScanEvent):
            session.on_scan(event.serial, at=event.time)
            scan_time[event.serial] = event.time
            run.scans += 1
            if session.open_defects:
                select_and_read(event.time)
        elif isinstance(event, HandPresenceEvent):
            continue
        elif isinstance(event, FrameReady):
            session.on_hands_cleared(event.clouds, event.detections, at=event.time)
            run.frames += 1
            if session.overlay is not None and not session.stale:
                run.overlays_ok += 1
            t = event.time
            while session.state is SessionState.DEFECT_SELECTED:
                serial = session.serial
                defect_id = session.defect_id
                submit = grind_and_document(defect_id, t)
                run.documented.append(f"{serial}/{defect_id}")
                run.blade_spans[serial] = (scan_time.get(serial, t), submit)
                if session.state is SessionState.OBJECT_IDENTIFIED \
                        and session.open_defects:
                    select_and_read(submit)
                    t = submit
    return run
