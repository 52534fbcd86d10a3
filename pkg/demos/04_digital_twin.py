"""Serial-keyed twin store: the object-specific data behind the instructions.

Every blade's defects, zones, wall-thickness spots, and repair documentation
live in one canonical text document per serial; writes are atomic.
"""

import json
import tempfile
from pathlib import Path

from bladecas import TwinStore
from bladecas.fixtures import make_study_assets
from bladecas.twin import ValidationError

root = Path(tempfile.mkdtemp()) / "store"
store = TwinStore(root)
for asset in make_study_assets():
    store.load_asset_document(asset)

print(f"store at {root}")
print(f"serials: {store.serials()}\n")

serial = "BLD-0001"
print(f"--- defects submodel of {serial} (canonical text) ---")
print(store.get_submodel(serial, "defects"))

print("--- open defects ---")
for d in store.list_open_defects(serial):
    print(f"{d['id']}: {d['kind']}, {d['length_mm']} mm, zone {d['zone_id']}")

print("\n--- validation has field-level reasons ---")
doc = json.loads(store.get_submodel(serial, "defects"))
doc["defects"][0]["zone_id"] = "Z-GONE"
try:
    store.put_submodel(serial, "defects", doc)
except ValidationError as exc:
    for reason in exc.reasons:
        print(f"rejected: {reason}")

print("\n--- documenting the repair closes the defect atomically ---")
store.append_documentation(serial, {
    "defect_id": "D1",
    "worker_id": "W-7",
    "started_at_s": 120.0,
    "finished_at_s": 300.0,
    "duration_s": 180.0,
    "notes": "blended out, within zone limits",
    "outcome": "repaired",
})
print(f"open defects now: {store.list_open_defects(serial)}")
print(f"status: {store.get_defect(serial, 'D1')['status']}")

print("\n--- reload from disk: nothing lost ---")
again = TwinStore(root)
records = json.loads(again.get_submodel(serial, "documentation"))["records"]
print(f"{len(records)} documentation record(s) survive a restart")
print(f"file on disk: {sorted(p.name for p in root.glob('*.twin'))}")
