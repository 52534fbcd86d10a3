"""Serial-number-keyed digital-twin store for object-specific repair data.

Each asset owns four submodels: defects, zones, wall_thickness, and
documentation. Documents are canonical JSON (sorted keys, 2-space indent) and
persist as one text file per serial under the store directory; every write
lands via an atomic rename before being acknowledged. Keys carry unit
suffixes (``length_mm``, ``duration_s``, ``*_m``).
"""

from __future__ import annotations

import json
import math
import os
import threading
from dataclasses import dataclass, field
from pathlib import Path

SUBMODEL_NAMES = ("defects", "zones", "wall_thickness", "documentation")
DEFECT_KINDS = ("crack", "dent", "erosion", "coating_loss", "other")
OUTCOMES = ("repaired", "deferred")


class TwinError(Exception):
    pass


class NotFoundError(TwinError):
    pass


class ValidationError(TwinError):
    """Carries field-level reasons for a rejected document."""

    def __init__(self, reasons: list[str]):
        super().__init__("; ".join(reasons))
        self.reasons = reasons


def canonical_document(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def _is_finite_point(value) -> bool:
    return (isinstance(value, (list, tuple)) and len(value) == 3
            and all(isinstance(c, (int, float)) and math.isfinite(c) for c in value))


def _check_polyline(points, minimum, closed, where, reasons):
    if not isinstance(points, list) or len(points) < minimum:
        reasons.append(f"{where}: need at least {minimum} points")
        return
    for i, p in enumerate(points):
        if not _is_finite_point(p):
            reasons.append(f"{where}[{i}]: not a finite 3D point")
            return
    if closed and points[0] != points[-1]:
        reasons.append(f"{where}: boundary must be closed (first point == last point)")


def validate_defects(doc: dict, zone_ids: set[str]) -> list[str]:
    reasons: list[str] = []
    defects = doc.get("defects")
    if not isinstance(defects, list):
        return ["defects: must be a list"]
    seen = set()
    for i, d in enumerate(defects):
        where = f"defects[{i}]"
        if not isinstance(d, dict):
            reasons.append(f"{where}: must be an object")
            continue
        did = d.get("id")
        if not did or not isinstance(did, str):
            reasons.append(f"{where}.id: required non-empty string")
        elif did in seen:
            reasons.append(f"{where}.id: duplicate id {did!r}")
        else:
            seen.add(did)
        if d.get("kind") not in DEFECT_KINDS:
            reasons.append(f"{where}.kind: must be one of {DEFECT_KINDS}")
        length = d.get("length_mm")
        if not isinstance(length, (int, float)) or not length > 0:
            reasons.append(f"{where}.length_mm: must be > 0")
        if d.get("status") not in ("open", "repaired"):
            reasons.append(f"{where}.status: must be 'open' or 'repaired'")
        zid = d.get("zone_id")
        if not isinstance(zid, str) or zid not in zone_ids:
            reasons.append(f"{where}.zone_id: unresolvable zone {zid!r}")
        if not isinstance(d.get("comment", ""), str):
            reasons.append(f"{where}.comment: must be a string")
        _check_polyline(d.get("polyline_m"), 2, False, f"{where}.polyline_m", reasons)
    return reasons


def validate_zones(doc: dict) -> list[str]:
    reasons: list[str] = []
    zones = doc.get("zones")
    if not isinstance(zones, list):
        return ["zones: must be a list"]
    seen = set()
    for i, z in enumerate(zones):
        where = f"zones[{i}]"
        if not isinstance(z, dict):
            reasons.append(f"{where}: must be an object")
            continue
        zid = z.get("id")
        if not zid or not isinstance(zid, str):
            reasons.append(f"{where}.id: required non-empty string")
        elif zid in seen:
            reasons.append(f"{where}.id: duplicate id {zid!r}")
        else:
            seen.add(zid)
        if not isinstance(z.get("name"), str):
            reasons.append(f"{where}.name: required string")
        limit = z.get("max_removal_mm")
        if not isinstance(limit, (int, float)) or not limit > 0:
            reasons.append(f"{where}.max_removal_mm: must be > 0")
        _check_polyline(z.get("boundary_m"), 4, True, f"{where}.boundary_m", reasons)
    return reasons


def validate_wall_thickness(doc: dict) -> list[str]:
    reasons: list[str] = []
    spots = doc.get("measurements")
    if not isinstance(spots, list):
        return ["measurements: must be a list"]
    for i, s in enumerate(spots):
        where = f"measurements[{i}]"
        if not isinstance(s, dict):
            reasons.append(f"{where}: must be an object")
            continue
        if not s.get("spot_id") or not isinstance(s.get("spot_id"), str):
            reasons.append(f"{where}.spot_id: required non-empty string")
        if not _is_finite_point(s.get("location_m")):
            reasons.append(f"{where}.location_m: not a finite 3D point")
        th = s.get("thickness_mm")
        if not isinstance(th, (int, float)) or not th > 0:
            reasons.append(f"{where}.thickness_mm: must be > 0")
    return reasons


def validate_record(record: dict, defect_ids: set[str]) -> list[str]:
    reasons: list[str] = []
    if not isinstance(record, dict):
        return ["record: must be an object"]
    did = record.get("defect_id")
    if not isinstance(did, str) or not did:
        reasons.append("record.defect_id: required non-empty string")
    elif did not in defect_ids:
        reasons.append(f"record.defect_id: unknown defect {did!r}")
    if not record.get("worker_id") or not isinstance(record.get("worker_id"), str):
        reasons.append("record.worker_id: required non-empty string")
    started = record.get("started_at_s")
    finished = record.get("finished_at_s")
    for name, val in (("started_at_s", started), ("finished_at_s", finished)):
        if not isinstance(val, (int, float)) or not math.isfinite(val):
            reasons.append(f"record.{name}: must be a finite timestamp")
    if isinstance(started, (int, float)) and isinstance(finished, (int, float)):
        if finished < started:
            reasons.append("record.finished_at_s: must be >= started_at_s")
        duration = record.get("duration_s")
        if not isinstance(duration, (int, float)) \
                or abs(duration - (finished - started)) > 1.0:
            reasons.append("record.duration_s: must equal finished_at_s - started_at_s "
                           "within 1 s")
    if not isinstance(record.get("notes", ""), str):
        reasons.append("record.notes: must be a string")
    if record.get("outcome") not in OUTCOMES:
        reasons.append(f"record.outcome: must be one of {OUTCOMES}")
    return reasons


def validate_documentation(doc: dict, defect_ids: set[str]) -> list[str]:
    records = doc.get("records")
    if not isinstance(records, list):
        return ["records: must be a list"]
    reasons: list[str] = []
    for i, r in enumerate(records):
        for reason in validate_record(r, defect_ids):
            reasons.append(f"records[{i}].{reason[len('record.'):]}"
                           if reason.startswith("record.") else f"records[{i}]: {reason}")
    return reasons


@dataclass
class TwinStore:
    """File-backed store; one ``<serial>.twin`` JSON document per asset."""

    root: Path
    _lock: threading.RLock = field(default_factory=threading.RLock, repr=False)
    _assets: dict = field(default_factory=dict, repr=False)
    _revisions: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.root = Path(self.root)
        self.root.mkdir(parents=True, exist_ok=True)
        for path in sorted(self.root.glob("*.twin")):
            with open(path, "r", encoding="utf-8") as fh:
                data = json.load(fh)
            serial = data["serial"]
            self._assets[serial] = data
            self._revisions[serial] = data.get("revisions",
                                               {name: 0 for name in SUBMODEL_NAMES})

    # -- helpers ------------------------------------------------------------

    def _asset(self, serial: str) -> dict:
        asset = self._assets.get(serial)
        if asset is None:
            raise NotFoundError(f"unknown serial {serial!r}")
        return asset

    def _persist(self, serial: str) -> None:
        asset = dict(self._assets[serial])
        asset["revisions"] = self._revisions[serial]
        path = self.root / f"{serial}.twin"
        tmp = self.root / f".{serial}.twin.tmp"
        payload = canonical_document(asset)
        with open(tmp, "w", encoding="utf-8") as fh:
            fh.write(payload)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)

    def _validate(self, serial: str, name: str, document: dict) -> None:
        asset = self._asset(serial)
        if name == "defects":
            zone_ids = {z["id"] for z in asset["submodels"]["zones"]["zones"]}
            reasons = validate_defects(document, zone_ids)
        elif name == "zones":
            reasons = validate_zones(document)
            if not reasons:
                # a zone update must not orphan defects that point into it
                new_ids = {z["id"] for z in document["zones"]}
                dangling = [d["id"] for d in asset["submodels"]["defects"]["defects"]
                            if d["zone_id"] not in new_ids]
                if dangling:
                    reasons = [f"zones: removal would orphan defects {dangling}"]
        elif name == "wall_thickness":
            reasons = validate_wall_thickness(document)
        elif name == "documentation":
            defect_ids = {d["id"] for d in asset["submodels"]["defects"]["defects"]}
            reasons = validate_documentation(document, defect_ids)
            if not reasons:
                old = asset["submodels"]["documentation"]["records"]
                if document["records"][:len(old)] != old:
                    reasons = ["records: documentation is append-only; existing "
                               "records may not be edited or removed"]
        else:
            raise NotFoundError(f"unknown submodel {name!r}")
        if reasons:
            raise ValidationError(reasons)

    # -- public API ----------------------------------------------------------

    def serials(self) -> list[str]:
        with self._lock:
            return sorted(self._assets)

    def model_id(self, serial: str) -> str:
        with self._lock:
            return self._asset(serial)["model_id"]

    def create_asset(self, serial: str, model_id: str) -> None:
        with self._lock:
            if serial in self._assets:
                raise TwinError(f"serial {serial!r} already exists")
            if not serial:
                raise ValidationError(["serial: must be non-empty"])
            self._assets[serial] = {
                "serial": serial,
                "model_id": model_id,
                "submodels": {
                    "defects": {"defects": []},
                    "zones": {"zones": []},
                    "wall_thickness": {"measurements": []},
                    "documentation": {"records": []},
                },
            }
            self._revisions[serial] = {name: 0 for name in SUBMODEL_NAMES}
            self._persist(serial)

    def load_asset_document(self, asset_doc: dict) -> None:
        """Install a complete asset (fixture ingestion); validates everything."""
        serial = asset_doc.get("serial")
        with self._lock:
            self.create_asset(serial, asset_doc.get("model_id", ""))
            for name in ("zones", "wall_thickness", "defects", "documentation"):
                self.put_submodel(serial, name, asset_doc["submodels"][name])

    def get_submodel(self, serial: str, name: str) -> str:
        """Canonical text of the current submodel content."""
        with self._lock:
            asset = self._asset(serial)
            if name not in SUBMODEL_NAMES:
                raise NotFoundError(f"unknown submodel {name!r}")
            return canonical_document(asset["submodels"][name])

    def put_submodel(self, serial: str, name: str, document: dict) -> int:
        """Replace a submodel; returns the new revision number."""
        with self._lock:
            self._validate(serial, name, document)
            asset = self._asset(serial)
            asset["submodels"][name] = json.loads(canonical_document(document))
            self._revisions[serial][name] += 1
            self._persist(serial)
            return self._revisions[serial][name]

    def list_open_defects(self, serial: str) -> list[dict]:
        with self._lock:
            asset = self._asset(serial)
            defects = asset["submodels"]["defects"]["defects"]
            return sorted((dict(d) for d in defects if d["status"] == "open"),
                          key=lambda d: d["id"])

    def get_defect(self, serial: str, defect_id: str) -> dict:
        with self._lock:
            for d in self._asset(serial)["submodels"]["defects"]["defects"]:
                if d["id"] == defect_id:
                    return dict(d)
            raise NotFoundError(f"unknown defect {defect_id!r} for serial {serial!r}")

    def get_zone(self, serial: str, zone_id: str) -> dict:
        with self._lock:
            for z in self._asset(serial)["submodels"]["zones"]["zones"]:
                if z["id"] == zone_id:
                    return dict(z)
            raise NotFoundError(f"unknown zone {zone_id!r} for serial {serial!r}")

    def measurements(self, serial: str) -> list[dict]:
        with self._lock:
            return [dict(m) for m in
                    self._asset(serial)["submodels"]["wall_thickness"]["measurements"]]

    def append_documentation(self, serial: str, record: dict) -> int:
        """Append one record; a ``repaired`` outcome also closes the defect,
        atomically with the append."""
        with self._lock:
            asset = self._asset(serial)
            defect_ids = {d["id"] for d in asset["submodels"]["defects"]["defects"]}
            reasons = validate_record(record, defect_ids)
            if reasons:
                if any("unknown defect" in r for r in reasons):
                    raise NotFoundError("; ".join(reasons))
                raise ValidationError(reasons)
            asset["submodels"]["documentation"]["records"].append(
                json.loads(canonical_document(record)))
            if record["outcome"] == "repaired":
                for d in asset["submodels"]["defects"]["defects"]:
                    if d["id"] == record["defect_id"]:
                        d["status"] = "repaired"
            self._revisions[serial]["documentation"] += 1
            self._revisions[serial]["defects"] += 1
            self._persist(serial)
            return self._revisions[serial]["documentation"]
