"""Serve the full workstation: twin API, session API, event stream, and UI.

Starts an HTTP server with the three-blade fixture store and the synthetic
cameras. Two demo-only routes stand in for the physical work area:

    POST /sim/place {"serial": "BLD-0001"}   put a blade on the table
    POST /sim/hands-cleared                  hands left -> pose estimation

If the operator frontend has been built (frontend/dist), it is served at /ui.
Try:  python demos/07_workstation_server.py  then open http://127.0.0.1:8000/ui
"""

import tempfile
import time
from pathlib import Path

import numpy as np
import uvicorn

from bladecas import TwinStore, WorkstationSession, build_descriptor, sample_surface
from bladecas.fixtures import (
    BLADE_MODEL_ID,
    STUDY_SERIALS,
    make_blade_mesh,
    make_study_assets,
    make_workstation_cameras,
)
from bladecas.geometry import OBJECT, WORLD, RigidTransform, rot_x, rot_z
from bladecas.service import build_app
from bladecas.simulate import SceneSimulator


def main() -> None:
    blade = make_blade_mesh()
    cameras = make_workstation_cameras()
    store = TwinStore(Path(tempfile.mkdtemp()) / "store")
    for asset in make_study_assets(blade):
        store.load_asset_document(asset)
    descriptor = build_descriptor(sample_surface(blade, 6000, seed=42))
    session = WorkstationSession(store=store, cameras=cameras,
                                 descriptors={BLADE_MODEL_ID: descriptor},
                                 ar_camera_id="cam1")
    simulator = SceneSimulator(cameras=cameras, meshes={BLADE_MODEL_ID: blade},
                               serial_models={s: BLADE_MODEL_ID
                                              for s in STUDY_SERIALS},
                               pixel_stride=4)

    static_dir = Path(__file__).resolve().parent.parent / "frontend" / "dist"
    app = build_app(session, store, {BLADE_MODEL_ID: blade},
                    static_dir=static_dir if static_dir.is_dir() else None)

    table = {"serial": None, "pose": None}

    def random_table_pose(rng: np.random.Generator) -> RigidTransform:
        yaw = rng.uniform(-np.pi, np.pi)
        return RigidTransform(rot_z(yaw) @ rot_x(np.pi / 2),
                              np.array([rng.uniform(-0.05, 0.05),
                                        rng.uniform(-0.05, 0.05), 0.04]),
                              OBJECT, WORLD)

    rng = np.random.default_rng()

    @app.post("/sim/place")
    async def sim_place(body: dict):
        serial = body["serial"]
        if serial not in STUDY_SERIALS:
            return {"error": f"unknown serial {serial!r}"}
        table["serial"] = serial
        table["pose"] = random_table_pose(rng)
        return {"placed": serial}

    @app.post("/sim/hands-cleared")
    def sim_hands_cleared():
        if table["serial"] is None:
            return {"error": "no blade on the table; POST /sim/place first"}
        frame = simulator.render_frame(table["serial"], table["pose"],
                                       sorted(cameras), noise_sigma=0.0005,
                                       time=time.time())
        session.on_hands_cleared(frame.clouds, frame.detections, at=frame.time)
        return {"stale": session.stale, "has_pose": session.pose is not None}

    print("workstation server on http://127.0.0.1:8000  "
          "(docs at /docs, UI at /ui if built)")
    uvicorn.run(app, host="127.0.0.1", port=8000, log_level="warning")


if __name__ == "__main__":
    main()
