import json

import pytest

from bladecas.fixtures import STUDY_SERIALS, make_study_assets
from bladecas.twin import (
    NotFoundError,
    TwinStore,
    ValidationError,
    canonical_document,
)


@pytest.fixture()
def store(tmp_path):
    s = TwinStore(tmp_path / "store")
    for asset in make_study_assets():
        s.load_asset_document(asset)
    return s


def make_record(defect_id="D1", outcome="repaired", start=100.0, end=160.0,
                worker="W-7", notes="ground to spec"):
    return {
        "defect_id": defect_id,
        "worker_id": worker,
        "started_at_s": start,
        "finished_at_s": end,
        "duration_s": end - start,
        "notes": notes,
        "outcome": outcome,
    }


class TestGetPut:
    def test_get_after_put_byte_equivalent(self, store):
        doc = json.loads(store.get_submodel("BLD-0001", "wall_thickness"))
        doc["measurements"][0]["thickness_mm"] = 3.25
        store.put_submodel("BLD-0001", "wall_thickness", doc)
        assert store.get_submodel("BLD-0001", "wall_thickness") == canonical_document(doc)

    def test_unknown_serial(self, store):
        with pytest.raises(NotFoundError):
            store.get_submodel("XXX", "defects")

    def test_unknown_submodel(self, store):
        with pytest.raises(NotFoundError):
            store.get_submodel("BLD-0001", "paint")

    def test_fixture_has_one_defect_per_serial(self, store):
        for serial in STUDY_SERIALS:
            doc = json.loads(store.get_submodel(serial, "defects"))
            assert len(doc["defects"]) == 1

    def test_put_rejects_dangling_zone(self, store):
        doc = json.loads(store.get_submodel("BLD-0001", "defects"))
        doc["defects"][0]["zone_id"] = "Z-MISSING"
        with pytest.raises(ValidationError) as err:
            store.put_submodel("BLD-0001", "defects", doc)
        assert any("zone_id" in r for r in err.value.reasons)

    def test_put_idempotent(self, store):
        doc = json.loads(store.get_submodel("BLD-0001", "defects"))
        rev1 = store.put_submodel("BLD-0001", "defects", doc)
        rev2 = store.put_submodel("BLD-0001", "defects", doc)
        assert rev2 == rev1 + 1  # acknowledged again, monotone revision
        assert store.get_submodel("BLD-0001", "defects") == canonical_document(doc)

    def test_put_survives_reload(self, tmp_path):
        store = TwinStore(tmp_path / "store")
        for asset in make_study_assets():
            store.load_asset_document(asset)
        doc = json.loads(store.get_submodel("BLD-0002", "zones"))
        doc["zones"][0]["max_removal_mm"] = 9.9
        store.put_submodel("BLD-0002", "zones", doc)
        reloaded = TwinStore(tmp_path / "store")
        assert reloaded.get_submodel("BLD-0002", "zones") == canonical_document(doc)

    def test_zone_removal_cannot_orphan_defects(self, store):
        doc = json.loads(store.get_submodel("BLD-0001", "zones"))
        doc["zones"] = [z for z in doc["zones"] if z["id"] != "Z2"]
        with pytest.raises(ValidationError):
            store.put_submodel("BLD-0001", "zones", doc)

    def test_validation_reports_field_paths(self, store):
        doc = {"defects": [{"id": "", "kind": "weld", "length_mm": -1,
                            "status": "open", "zone_id": "Z1",
                            "polyline_m": [[0, 0, 0]]}]}
        with pytest.raises(ValidationError) as err:
            store.put_submodel("BLD-0001", "defects", doc)
        joined = " ".join(err.value.reasons)
        for needle in ("id", "kind", "length_mm", "polyline_m"):
            assert needle in joined


class TestOpenDefects:
    def test_ordered_by_id(self, store):
        doc = json.loads(store.get_submodel("BLD-0001", "defects"))
        base = doc["defects"][0]
        second = dict(base, id="D0")
        doc["defects"] = [base, second]
        store.put_submodel("BLD-0001", "defects", doc)
        ids = [d["id"] for d in store.list_open_defects("BLD-0001")]
        assert ids == ["D0", "D1"]

    def test_repaired_excluded(self, store):
        store.append_documentation("BLD-0001", make_record())
        assert store.list_open_defects("BLD-0001") == []

    def test_unknown_serial(self, store):
        with pytest.raises(NotFoundError):
            store.list_open_defects("XXX")


class TestAppendDocumentation:
    def test_repaired_flips_status(self, store):
        store.append_documentation("BLD-0001", make_record(outcome="repaired"))
        defect = store.get_defect("BLD-0001", "D1")
        assert defect["status"] == "repaired"

    def test_deferred_keeps_status(self, store):
        store.append_documentation("BLD-0001", make_record(outcome="deferred"))
        assert store.get_defect("BLD-0001", "D1")["status"] == "open"

    def test_append_order_preserved(self, store):
        store.append_documentation("BLD-0001", make_record(outcome="deferred", notes="a"))
        store.append_documentation("BLD-0001", make_record(notes="b", start=200, end=300))
        doc = json.loads(store.get_submodel("BLD-0001", "documentation"))
        assert [r["notes"] for r in doc["records"]] == ["a", "b"]

    def test_unknown_defect(self, store):
        with pytest.raises(NotFoundError):
            store.append_documentation("BLD-0001", make_record(defect_id="D9"))

    def test_bad_duration_rejected(self, store):
        rec = make_record()
        rec["duration_s"] = 999.0
        with pytest.raises(ValidationError):
            store.append_documentation("BLD-0001", rec)

    def test_finished_before_started_rejected(self, store):
        with pytest.raises(ValidationError):
            store.append_documentation("BLD-0001", make_record(start=100, end=50))

    def test_documentation_append_only_via_put(self, store):
        store.append_documentation("BLD-0001", make_record(outcome="deferred"))
        doc = json.loads(store.get_submodel("BLD-0001", "documentation"))
        doc["records"] = []
        with pytest.raises(ValidationError):
            store.put_submodel("BLD-0001", "documentation", doc)

    def test_status_consistency_invariant(self, store):
        # repaired iff a repaired-outcome record references it
        store.append_documentation("BLD-0002", make_record(outcome="deferred"))
        assert store.get_defect("BLD-0002", "D1")["status"] == "open"
        store.append_documentation("BLD-0002", make_record(outcome="repaired"))
        assert store.get_defect("BLD-0002", "D1")["status"] == "repaired"
        doc = json.loads(store.get_submodel("BLD-0002", "documentation"))
        repaired_refs = {r["defect_id"] for r in doc["records"]
                         if r["outcome"] == "repaired"}
        defects = json.loads(store.get_submodel("BLD-0002", "defects"))["defects"]
        for d in defects:
            assert (d["status"] == "repaired") == (d["id"] in repaired_refs)


class TestDurability:
    def test_randomized_ops_with_restart(self, tmp_path):
        import numpy as np
        rng = np.random.default_rng(77)
        store = TwinStore(tmp_path / "store")
        for asset in make_study_assets():
            store.load_asset_document(asset)
        serials = list(STUDY_SERIALS)
        appended = {s: 0 for s in serials}

        def random_op(store):
            serial = serials[rng.integers(0, len(serials))]
            op = rng.integers(0, 3)
            if op == 0:
                name = ("defects", "zones", "wall_thickness")[rng.integers(0, 3)]
                store.get_submodel(serial, name)
            elif op == 1:
                doc = json.loads(store.get_submodel(serial, "wall_thickness"))
                if doc["measurements"]:
                    doc["measurements"][0]["thickness_mm"] = float(
                        rng.uniform(0.5, 9.9))
                store.put_submodel(serial, "wall_thickness", doc)
            else:
                store.append_documentation(serial, make_record(
                    outcome="deferred", start=float(appended[serial]),
                    end=float(appended[serial] + 10)))
                appended[serial] += 1

        for _ in range(100):
            random_op(store)
        # forced restart: reload from disk and continue
        store = TwinStore(tmp_path / "store")
        for _ in range(100):
            random_op(store)

        final = TwinStore(tmp_path / "store")
        for serial in serials:
            doc = json.loads(final.get_submodel(serial, "documentation"))
            assert len(doc["records"]) == appended[serial]
            zone_ids = {z["id"] for z in
                        json.loads(final.get_submodel(serial, "zones"))["zones"]}
            for d in json.loads(final.get_submodel(serial, "defects"))["defects"]:
                assert d["zone_id"] in zone_ids
