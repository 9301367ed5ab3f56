"""HTTP service running the blinded rating protocol.

Rater-facing endpoints never expose item origin; origin is revealed only
in the export endpoints. Ratings are durably appended to the session log
before the ack is returned.
"""

from __future__ import annotations

import csv
import io
import time
from pathlib import Path

from fastapi import FastAPI, HTTPException, Query
from fastapi.responses import FileResponse, PlainTextResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from . import metrics
from .study import Rating, SessionStore, StudyManifest


class CreateSessionRequest(BaseModel):
    rater_id: str
    seed: int = 0


class CreateSessionResponse(BaseModel):
    session_id: str
    num_items: int


class Progress(BaseModel):
    done: int
    total: int


class NextItemResponse(BaseModel):
    item_id: str | None
    image_url: str | None
    progress: Progress
    dataset: str | None = None
    done: bool = False


class RatingRequest(BaseModel):
    item_id: str
    quality: int = Field(ge=1, le=5)
    structure: int = Field(ge=1, le=5)
    nuclear: int = Field(ge=1, le=5)
    hallucination: bool
    judged_real: bool


class RatingAck(BaseModel):
    item_id: str
    progress: Progress


def create_app(
    manifest_path: str | Path,
    store_dir: str | Path,
    require_balanced: bool = False,
    show_dataset: bool = False,
    static_dir: str | Path | None = None,
) -> FastAPI:
    manifest = StudyManifest.load(manifest_path)
    if require_balanced:
        manifest.validate_balanced()
    store = SessionStore(store_dir, manifest)

    app = FastAPI(title="histoforge rating service")
    app.state.store = store
    app.state.manifest = manifest

    def get_session(session_id: str):
        try:
            return store.get(session_id)
        except KeyError:
            raise HTTPException(status_code=404, detail=f"unknown session {session_id}")

    @app.post("/sessions", response_model=CreateSessionResponse)
    def create_session(req: CreateSessionRequest):
        session = store.create(req.rater_id, req.seed)
        return CreateSessionResponse(
            session_id=session.session_id, num_items=len(session.order)
        )

    @app.get("/sessions/{session_id}/next", response_model=NextItemResponse)
    def next_item(session_id: str):
        session = get_session(session_id)
        progress = Progress(done=session.cursor, total=len(session.order))
        if session.complete:
            return NextItemResponse(
                item_id=None, image_url=None, progress=progress, done=True
            )
        item_id = session.current_item_id()
        item = manifest.by_id(item_id)
        return NextItemResponse(
            item_id=item_id,
            image_url=f"/images/{item_id}",
            progress=progress,
            dataset=item.dataset if show_dataset else None,
        )

    @app.post("/sessions/{session_id}/ratings", response_model=RatingAck)
    def post_rating(session_id: str, req: RatingRequest):
        session = get_session(session_id)
        if session.complete:
            raise HTTPException(status_code=409, detail="session already complete")
        current = session.current_item_id()
        if req.item_id != current:
            rated = {r.item_id for r in session.ratings}
            if req.item_id in rated:
                raise HTTPException(
                    status_code=409, detail=f"duplicate rating for {req.item_id}"
                )
            raise HTTPException(
                status_code=409,
                detail=f"out-of-order rating: expected {current}, got {req.item_id}",
            )
        item = manifest.by_id(req.item_id)
        rating = Rating(
            item_id=req.item_id,
            dataset=item.dataset,
            origin=item.origin,
            quality=req.quality,
            structure=req.structure,
            nuclear=req.nuclear,
            hallucination=req.hallucination,
            judged_real=req.judged_real,
            timestamp=time.time(),
        )
        store.append_rating(session_id, rating)
        return RatingAck(
            item_id=req.item_id,
            progress=Progress(done=session.cursor, total=len(session.order)),
        )

    def _export_rows(sessions):
        rows = []
        for session in sessions:
            for r in session.ratings:
                rows.append(
                    {
                        "session_id": session.session_id,
                        "rater_id": session.rater_id,
                        "item_id": r.item_id,
                        "dataset": r.dataset,
                        "origin": r.origin,
                        "quality": r.quality,
                        "structure": r.structure,
                        "nuclear": r.nuclear,
                        "hallucination": r.hallucination,
                        "judged_real": r.judged_real,
                        "timestamp": r.timestamp,
                    }
                )
        return rows

    @app.get("/sessions/{session_id}/export")
    def export_session(session_id: str, format: str = Query("json")):
        session = get_session(session_id)
        rows = _export_rows([session])
        if format == "csv":
            buf = io.StringIO()
            writer = csv.DictWriter(
                buf, fieldnames=list(rows[0]) if rows else ["session_id"]
            )
            writer.writeheader()
            writer.writerows(rows)
            return PlainTextResponse(buf.getvalue(), media_type="text/csv")
        return {
            "ratings": rows,
            "aggregates": {
                "likert": metrics.likert_aggregate([session]),
                "discrimination": metrics.discrimination_accuracy([session]),
            },
        }

    @app.get("/aggregate")
    def aggregate(dataset: str | None = None):
        sessions = store.sessions()
        likert = metrics.likert_aggregate(sessions)
        disc = metrics.discrimination_accuracy(sessions)
        if dataset is not None:
            likert = {dataset: likert.get(dataset, {})}
            disc = {dataset: disc[dataset]} if dataset in disc else {}
        return {"likert": likert, "discrimination": disc}

    @app.get("/images/{item_id}")
    def serve_image(item_id: str):
        try:
            item = manifest.by_id(item_id)
        except KeyError:
            raise HTTPException(status_code=404, detail=f"unknown item {item_id}")
        path = Path(item.image_path)
        if not path.exists():
            raise HTTPException(status_code=404, detail="image file missing")
        return FileResponse(path, media_type="image/png")

    if static_dir is not None and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")

    return app
