"""HTTP facade: digital-twin access plus the repair-session API.

Twin endpoints follow the serial-keyed GET/PUT submodel pattern; session
endpoints drive the workflow and hand out overlay frames. ``/session/events``
is a server-push stream (one ``event:``/``data:`` message per notification,
types ``state``, ``overlay``, ``error``) that opens with a state snapshot.
"""

from __future__ import annotations

import asyncio
import json
from pathlib import Path

from fastapi import FastAPI, Request, Response
from fastapi.responses import JSONResponse, StreamingResponse
from fastapi.staticfiles import StaticFiles

from bladecas.mesh import TriangleMesh, mesh_to_ply_text
from bladecas.overlay import AROverlayFrame
from bladecas.session import (
    IllegalTransitionError,
    RejectedBusyError,
    SessionError,
    WorkstationSession,
)
from bladecas.twin import NotFoundError, TwinError, TwinStore, ValidationError


def overlay_to_dict(frame: AROverlayFrame | None) -> dict | None:
    if frame is None:
        return None
    return {
        "camera_id": frame.camera_id,
        "pose_time": frame.pose_time,
        "stale": frame.stale,
        "polylines": [
            {
                "layer": p.layer.value,
                "label": p.label,
                "highlighted": p.highlighted,
                "points": [[u, v] for u, v in p.points],
            }
            for p in frame.polylines
        ],
        "points": [
            {"layer": p.layer.value, "u": p.u, "v": p.v, "label": p.label}
            for p in frame.points
        ],
    }


def _session_payload(session: WorkstationSession) -> dict:
    payload = session.status()
    detail = session.detail
    if detail is not None:
        payload["detail"] = {
            "defect": detail.defect,
            "zone": detail.zone,
            "nearby_measurements": list(detail.nearby_measurements),
        }
    else:
        payload["detail"] = None
    return payload


def build_app(session: WorkstationSession, store: TwinStore,
              meshes: dict[str, TriangleMesh],
              static_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="blade repair workstation", version="0.1.0")

    @app.exception_handler(NotFoundError)
    async def _not_found(_req, exc):
        return JSONResponse(status_code=404, content={"error": str(exc)})

    @app.exception_handler(ValidationError)
    async def _rejected(_req, exc: ValidationError):
        return JSONResponse(status_code=422,
                            content={"error": str(exc), "reasons": exc.reasons})

    @app.exception_handler(RejectedBusyError)
    async def _busy(_req, exc):
        return JSONResponse(status_code=409, content={"error": str(exc)})

    @app.exception_handler(IllegalTransitionError)
    async def _illegal(_req, exc):
        return JSONResponse(status_code=409, content={"error": str(exc)})

    @app.exception_handler(SessionError)
    async def _session_err(_req, exc):
        return JSONResponse(status_code=400, content={"error": str(exc)})

    @app.exception_handler(TwinError)
    async def _twin_err(_req, exc):
        return JSONResponse(status_code=400, content={"error": str(exc)})

    @app.exception_handler(json.JSONDecodeError)
    async def _bad_json(_req, exc):
        return JSONResponse(status_code=400,
                            content={"error": f"malformed JSON body: {exc}"})

    @app.exception_handler(KeyError)
    async def _missing_field(_req, exc):
        return JSONResponse(status_code=400,
                            content={"error": f"missing field {exc}"})

    # -- digital twin ---------------------------------------------------------

    @app.get("/assets")
    def list_assets():
        return {"serials": store.serials()}

    @app.get("/assets/{serial}/submodels/{name}")
    def get_submodel(serial: str, name: str):
        text = store.get_submodel(serial, name)
        return Response(content=text, media_type="application/json")

    @app.put("/assets/{serial}/submodels/{name}")
    async def put_submodel(serial: str, name: str, request: Request):
        document = json.loads(await request.body())
        revision = store.put_submodel(serial, name, document)
        return {"revision": revision}

    @app.get("/assets/{serial}/mesh")
    def get_mesh(serial: str):
        model_id = store.model_id(serial)
        mesh = meshes.get(model_id)
        if mesh is None:
            raise NotFoundError(f"no mesh registered for model {model_id!r}")
        return Response(content=mesh_to_ply_text(mesh), media_type="text/plain")

    # -- session --------------------------------------------------------------

    @app.get("/session")
    def get_session():
        return _session_payload(session)

    @app.post("/session/scan")
    async def post_scan(request: Request):
        body = json.loads(await request.body())
        session.on_scan(body["serial"], at=body.get("at"))
        return _session_payload(session)

    @app.post("/session/defect/{defect_id}/select")
    async def post_select(defect_id: str, request: Request):
        raw = await request.body()
        body = json.loads(raw) if raw else {}
        session.select_defect(defect_id, at=body.get("at"))
        return _session_payload(session)

    @app.post("/session/layers")
    async def post_layers(request: Request):
        body = json.loads(await request.body())
        frame = session.toggle_layer(body["layer"], bool(body["enabled"]))
        return {"overlay": overlay_to_dict(frame),
                "layers": session.status()["layers"]}

    @app.post("/session/view")
    async def post_view(request: Request):
        body = json.loads(await request.body())
        session.record_view(body["kind"], float(body["start"]), float(body["end"]))
        return {"ok": True}

    @app.post("/session/documentation/begin")
    async def post_begin(request: Request):
        raw = await request.body()
        body = json.loads(raw) if raw else {}
        session.begin_documentation(at=body.get("at"))
        return _session_payload(session)

    @app.post("/session/document")
    async def post_document(request: Request):
        body = json.loads(await request.body())
        record = body["record"] if "record" in body else body
        at = body.get("at")
        # the touch interface submits straight from the form: entering the
        # documenting state on submit is the finish-repair transition
        from bladecas.session import SessionState
        if session.state is SessionState.DEFECT_SELECTED:
            session.begin_documentation(at=at)
        session.document_repair(record, at=at)
        return _session_payload(session)

    @app.post("/session/abort")
    def post_abort():
        session.abort()
        return _session_payload(session)

    @app.get("/session/overlay")
    def get_overlay():
        return {"overlay": overlay_to_dict(session.overlay)}

    @app.get("/session/log")
    def get_log():
        return session.session_log()

    @app.get("/session/events")
    async def get_events(request: Request, max_events: int | None = None):
        """Server-push stream; ``max_events`` bounds it (used by test clients
        whose transports cannot abandon an infinite response)."""
        loop = asyncio.get_running_loop()
        queue: asyncio.Queue = asyncio.Queue()

        def listener(event_type: str, payload: dict) -> None:
            loop.call_soon_threadsafe(queue.put_nowait, (event_type, payload))

        session.subscribe(listener)

        async def stream():
            sent = 0
            idle_polls = 0
            try:
                snapshot = json.dumps(_session_payload(session))
                yield f"event: state\ndata: {snapshot}\n\n"
                sent += 1
                while max_events is None or sent < max_events:
                    if await request.is_disconnected():
                        return
                    try:
                        event_type, payload = await asyncio.wait_for(
                            queue.get(), timeout=0.5)
                    except asyncio.TimeoutError:
                        idle_polls += 1
                        if idle_polls >= 30:  # ~15 s of silence
                            idle_polls = 0
                            yield ": keepalive\n\n"
                        continue
                    idle_polls = 0
                    yield f"event: {event_type}\ndata: {json.dumps(payload)}\n\n"
                    sent += 1
            finally:
                session.unsubscribe(listener)

        return StreamingResponse(stream(), media_type="text/event-stream")

    if static_dir is not None and Path(static_dir).is_dir():
        app.mount("/ui", StaticFiles(directory=str(static_dir), html=True), name="ui")

    return app
