"""The exploration HTTP API.

Bottom-up browsing (categories -> objects -> painting), anonymous
sessions with favorites, append-only event logging with descriptive
usage reports, and asynchronous canvas outpainting jobs. All error
responses carry a stable machine-readable code under ``error.code``.
"""

from __future__ import annotations

import logging
import threading
import uuid
from concurrent.futures import ThreadPoolExecutor
from contextlib import asynccontextmanager
from pathlib import Path

from fastapi import FastAPI, Query, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import FileResponse, JSONResponse
from fastapi.staticfiles import StaticFiles
from PIL import Image
from pydantic import BaseModel, Field

from artexplore import canvas as canvas_mod
from artexplore import usage as usage_mod
from artexplore.catalog import Catalog, InvalidCursorError
from artexplore.config import RunConfig
from artexplore.curation import ObjectCrop
from artexplore.ingestion import Detection
from artexplore.taxonomy import Taxonomy

logger = logging.getLogger(__name__)

GENERATION_STATES = ("queued", "running", "done", "failed")


class ApiError(Exception):
    """Error with an HTTP status and a stable machine-readable code."""

    def __init__(self, status_code: int, code: str, message: str):
        super().__init__(message)
        self.status_code = status_code
        self.code = code
        self.message = message


# --- wire models -----------------------------------------------------------


class BoxOut(BaseModel):
    x_min: float
    y_min: float
    x_max: float
    y_max: float


class ObjectOut(BaseModel):
    detection_id: str
    label: str
    category: str
    confidence: float
    artwork_id: str
    box: BoxOut
    crop_url: str | None = None
    # true stored-crop pixel size (boxes are fractional, crops round outward)
    crop_width: int | None = None
    crop_height: int | None = None


class CategoryOut(BaseModel):
    category: str
    object_count: int
    representative: ObjectOut | None = None


class CategoriesOut(BaseModel):
    categories: list[CategoryOut]


class HomeOut(BaseModel):
    examples: list[ObjectOut]


class ObjectsPageOut(BaseModel):
    items: list[ObjectOut]
    next_cursor: str | None = None
    total: int


class ArtworkOut(BaseModel):
    id: str
    title: str
    artist: str
    technique: str
    production_year: tuple[int, int] | None = None
    palette: list[str] | None = None
    image_url: str | None = None
    image_width: int | None = None
    image_height: int | None = None


class PaintingDetailOut(BaseModel):
    artwork: ArtworkOut
    objects: list[ObjectOut]


class SessionOut(BaseModel):
    session_id: str
    created_at: float


class FavoritesOut(BaseModel):
    favorites: list[ObjectOut]


class EventIn(BaseModel):
    session_id: str
    ts: float
    kind: str
    payload: dict = Field(default_factory=dict)


class EventOut(BaseModel):
    seq: int


class SavesSummaryOut(BaseModel):
    sessions: int
    total: int
    mean: float
    median: float
    min: int
    max: int


class UsageReportOut(BaseModel):
    per_screen_avg_duration: dict[str, float]
    category_visits: dict[str, int]
    saves_per_session: SavesSummaryOut
    warnings: int


class PlacementIn(BaseModel):
    detection_id: str
    x: int
    y: int
    scale: float


class CanvasIn(BaseModel):
    placements: list[PlacementIn]
    prompt: str
    side: int | None = None


class JobOut(BaseModel):
    job_id: str
    status: str


class UsedObjectOut(BaseModel):
    detection_id: str
    label: str
    artwork_id: str
    crop_url: str


class GenerationOut(BaseModel):
    job_id: str
    status: str
    image_url: str | None = None
    used_objects: list[UsedObjectOut] | None = None
    error: str | None = None


# --- app factory ------------------------------------------------------------


def create_app(
    catalog: Catalog,
    taxonomy: Taxonomy,
    config: RunConfig | None = None,
    provider: canvas_mod.OutpaintingProvider | None = None,
) -> FastAPI:
    """Build the exploration service around one catalog."""
    config = config or RunConfig()
    if provider is None:
        if config.outpaint_provider == "http":
            provider = canvas_mod.HttpOutpaintingProvider(
                config.outpaint_endpoint,
                api_key=config.outpaint_api_key,
                max_side=config.outpaint_max_side,
            )
        else:
            provider = canvas_mod.MockOutpaintingProvider()

    executor = ThreadPoolExecutor(
        max_workers=config.generation_workers, thread_name_prefix="outpaint"
    )
    submit_lock = threading.Lock()

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        yield
        executor.shutdown(wait=False)

    app = FastAPI(
        title="artexplore",
        version="0.1.0",
        description="Object-driven exploration of a digitized art collection.",
        lifespan=lifespan,
    )
    app.state.catalog = catalog
    app.state.taxonomy = taxonomy
    app.state.config = config
    app.state.provider = provider

    # jobs interrupted by a previous shutdown can never finish
    for state in ("queued", "running"):
        for job in catalog.generations_in_state(state):
            catalog.set_generation_status(job, "failed", error="service restarted")

    @app.exception_handler(ApiError)
    async def _api_error(request: Request, exc: ApiError):
        return JSONResponse(
            status_code=exc.status_code,
            content={"error": {"code": exc.code, "message": exc.message}},
        )

    @app.exception_handler(RequestValidationError)
    async def _validation_error(request: Request, exc: RequestValidationError):
        return JSONResponse(
            status_code=400,
            content={"error": {"code": "validation_error", "message": str(exc.errors())}},
        )

    def object_out(det: Detection, crop: ObjectCrop | None) -> ObjectOut:
        return ObjectOut(
            detection_id=det.id,
            label=det.label_name,
            category=det.category,
            confidence=det.confidence,
            artwork_id=det.artwork_id,
            box=BoxOut(**{k: getattr(det.box, k) for k in ("x_min", "y_min", "x_max", "y_max")}),
            crop_url=f"/crops/{det.id}" if crop is not None else None,
            crop_width=crop.width if crop is not None else None,
            crop_height=crop.height if crop is not None else None,
        )

    def require_session(session_id: str) -> dict:
        session = catalog.get_session(session_id)
        if session is None:
            raise ApiError(404, "unknown_session", f"unknown session: {session_id}")
        return session

    def crop_source(detection_id: str) -> Image.Image:
        crop = catalog.get_crop(detection_id)
        if crop is None:
            raise KeyError(detection_id)
        with Image.open(catalog.crops_dir / crop.storage_path) as im:
            im.load()
            return im.copy()

    # -- browsing ------------------------------------------------------------

    @app.get("/home", response_model=HomeOut)
    def home() -> HomeOut:
        examples: list[ObjectOut] = []
        for det_id in config.home_examples[:3]:
            det = catalog.get_detection(det_id)
            crop = catalog.get_crop(det_id)
            if det and crop:
                examples.append(object_out(det, crop))
        if not examples:
            page = catalog.query_objects(taxonomy, page_size=3)
            examples = [object_out(d, c) for d, c in page.items]
        return HomeOut(examples=examples)

    @app.get("/categories", response_model=CategoriesOut)
    def categories() -> CategoriesOut:
        out = []
        for entry in catalog.categories_summary(taxonomy):
            representative = None
            if entry["representative"]:
                det = catalog.get_detection(entry["representative"]["detection_id"])
                crop = catalog.get_crop(det.id)
                representative = object_out(det, crop)
            out.append(
                CategoryOut(
                    category=entry["category"],
                    object_count=entry["object_count"],
                    representative=representative,
                )
            )
        return CategoriesOut(categories=out)

    @app.get("/objects", response_model=ObjectsPageOut)
    def objects(
        category: str | None = None,
        label: str | None = None,
        cursor: str | None = None,
        page_size: int = Query(default=50, ge=1, le=200),
    ) -> ObjectsPageOut:
        if category is None and label is None:
            raise ApiError(400, "category_required", "category (or label) filter is required")
        if category is not None and category not in taxonomy.categories:
            raise ApiError(400, "unknown_category", f"unknown category: {category}")
        if label is not None and label not in taxonomy:
            raise ApiError(400, "unknown_label", f"unknown label: {label}")
        if category is not None and label is not None and label not in taxonomy.labels_in(category):
            raise ApiError(
                400,
                "label_category_mismatch",
                f"label {label} does not belong to category {category}",
            )
        try:
            page = catalog.query_objects(
                taxonomy, category=category, label=label, cursor=cursor, page_size=page_size
            )
        except InvalidCursorError as exc:
            raise ApiError(400, "invalid_cursor", str(exc)) from exc
        return ObjectsPageOut(
            items=[object_out(d, c) for d, c in page.items],
            next_cursor=page.next_cursor,
            total=page.total,
        )

    @app.get("/paintings/{artwork_id}", response_model=PaintingDetailOut)
    def painting_detail(artwork_id: str) -> PaintingDetailOut:
        artwork = catalog.get_artwork(artwork_id)
        if artwork is None:
            raise ApiError(404, "unknown_painting", f"unknown painting: {artwork_id}")
        _, detections = catalog.get_painting_detail(artwork_id)
        return PaintingDetailOut(
            artwork=ArtworkOut(
                id=artwork.id,
                title=artwork.title,
                artist=artwork.artist,
                technique=artwork.technique,
                production_year=artwork.production_year,
                palette=list(artwork.palette) if artwork.palette else None,
                image_url=f"/paintings/{artwork.id}/image" if artwork.image_ref else None,
                image_width=artwork.image_width,
                image_height=artwork.image_height,
            ),
            objects=[object_out(d, c) for d, c in detections],
        )

    @app.get("/paintings/{artwork_id}/image")
    def painting_image(artwork_id: str):
        artwork = catalog.get_artwork(artwork_id)
        if artwork is None:
            raise ApiError(404, "unknown_painting", f"unknown painting: {artwork_id}")
        path = Path(artwork.image_ref)
        if not artwork.image_ref or not path.exists():
            raise ApiError(404, "image_unavailable", f"no local image for {artwork_id}")
        return FileResponse(path)

    @app.get("/crops/{detection_id}")
    def crop_image(detection_id: str):
        crop = catalog.get_crop(detection_id)
        if crop is None:
            raise ApiError(404, "unknown_object", f"no crop for detection: {detection_id}")
        return FileResponse(catalog.crops_dir / crop.storage_path, media_type="image/png")

    # -- sessions and favorites ------------------------------------------------

    @app.post("/sessions", response_model=SessionOut, status_code=201)
    def create_session() -> SessionOut:
        ttl = config.favorites_ttl_days * 86400.0
        session = catalog.create_session(ttl_seconds=ttl if ttl > 0 else None)
        return SessionOut(**session)

    def favorites_out(session_id: str) -> FavoritesOut:
        out = []
        for det_id in catalog.favorites(session_id):
            det = catalog.get_detection(det_id)
            if det is not None:
                out.append(object_out(det, catalog.get_crop(det_id)))
        return FavoritesOut(favorites=out)

    @app.get("/sessions/{session_id}/favorites", response_model=FavoritesOut)
    def list_favorites(session_id: str) -> FavoritesOut:
        require_session(session_id)
        return favorites_out(session_id)

    @app.post("/sessions/{session_id}/favorites/{detection_id}", response_model=FavoritesOut)
    def save_favorite(session_id: str, detection_id: str) -> FavoritesOut:
        require_session(session_id)
        if catalog.get_detection(detection_id) is None:
            raise ApiError(404, "unknown_object", f"unknown detection: {detection_id}")
        catalog.add_favorite(session_id, detection_id)
        return favorites_out(session_id)

    @app.delete("/sessions/{session_id}/favorites/{detection_id}", response_model=FavoritesOut)
    def unsave_favorite(session_id: str, detection_id: str) -> FavoritesOut:
        require_session(session_id)
        if catalog.get_detection(detection_id) is None:
            raise ApiError(404, "unknown_object", f"unknown detection: {detection_id}")
        catalog.remove_favorite(session_id, detection_id)
        return favorites_out(session_id)

    # -- events and reports ------------------------------------------------------

    @app.post("/events", response_model=EventOut, status_code=202)
    def post_event(event: EventIn) -> EventOut:
        try:
            normalized = usage_mod.validate_event(event.model_dump())
        except usage_mod.EventError as exc:
            raise ApiError(400, "malformed_event", str(exc)) from exc
        require_session(normalized["session_id"])
        seq = catalog.append_event(
            normalized["session_id"],
            normalized["ts"],
            normalized["kind"],
            normalized["payload"],
        )
        return EventOut(seq=seq)

    @app.get("/reports/usage", response_model=UsageReportOut)
    def usage_report() -> UsageReportOut:
        report = usage_mod.compute_usage_report(catalog.all_events())
        return UsageReportOut(**report.to_dict())

    # -- canvas generation ---------------------------------------------------------

    def run_generation(job_id: str) -> None:
        catalog.set_generation_status(job_id, "running")
        try:
            job = catalog.get_generation(job_id)
            comp = canvas_mod.CanvasComposition.from_dict(job["composition"])
            result = canvas_mod.generate(provider, comp, crop_source)
            filename = f"{job_id}.png"
            (catalog.generated_dir / filename).write_bytes(result.image_bytes)
            catalog.set_generation_status(
                job_id, "done", provider_id=result.provider_id, image_path=filename
            )
        except Exception as exc:
            logger.warning("generation %s failed: %s", job_id, exc)
            catalog.set_generation_status(job_id, "failed", error=str(exc))

    @app.post("/sessions/{session_id}/canvas", response_model=JobOut, status_code=202)
    def submit_canvas(session_id: str, body: CanvasIn) -> JobOut:
        require_session(session_id)
        favorites = set(catalog.favorites(session_id))
        if not body.placements:
            raise ApiError(400, "nothing_placed", "composition has no placements")
        if not body.prompt.strip():
            raise ApiError(400, "prompt_required", "composition prompt is empty")
        comp = canvas_mod.CanvasComposition(side=body.side or config.canvas_side)
        for placement in body.placements:
            if placement.detection_id not in favorites:
                raise ApiError(
                    400,
                    "not_favorited",
                    f"object {placement.detection_id} is not in this session's favorites",
                )
            try:
                comp = canvas_mod.place(
                    comp,
                    placement.detection_id,
                    placement.x,
                    placement.y,
                    placement.scale,
                    crop_source,
                )
            except canvas_mod.CanvasError as exc:
                code = "unknown_crop" if "unknown crop" in str(exc) else "placement_out_of_bounds"
                raise ApiError(400, code, str(exc)) from exc
        comp = canvas_mod.CanvasComposition(
            side=comp.side, placements=comp.placements, prompt=body.prompt
        )
        with submit_lock:
            if catalog.active_generation(session_id) is not None:
                raise ApiError(
                    409, "generation_active", "a generation is already running for this session"
                )
            job_id = uuid.uuid4().hex
            catalog.create_generation(job_id, session_id, comp.to_dict())
        executor.submit(run_generation, job_id)
        return JobOut(job_id=job_id, status="queued")

    @app.get("/generations/{job_id}", response_model=GenerationOut)
    def generation_status(job_id: str) -> GenerationOut:
        job = catalog.get_generation(job_id)
        if job is None:
            raise ApiError(404, "unknown_generation", f"unknown generation job: {job_id}")
        used = None
        if job["status"] == "done":
            used = []
            seen: set[str] = set()
            for p in job["composition"]["placements"]:
                det_id = p["detection_id"]
                if det_id in seen:
                    continue
                seen.add(det_id)
                det = catalog.get_detection(det_id)
                if det is not None:
                    used.append(
                        UsedObjectOut(
                            detection_id=det.id,
                            label=det.label_name,
                            artwork_id=det.artwork_id,
                            crop_url=f"/crops/{det.id}",
                        )
                    )
        return GenerationOut(
            job_id=job_id,
            status=job["status"],
            image_url=f"/generations/{job_id}/image" if job["status"] == "done" else None,
            used_objects=used,
            error=job["error"],
        )

    @app.get("/generations/{job_id}/image")
    def generation_image(job_id: str):
        job = catalog.get_generation(job_id)
        if job is None or job["status"] != "done" or not job["image_path"]:
            raise ApiError(404, "unknown_generation", f"no image for job: {job_id}")
        return FileResponse(catalog.generated_dir / job["image_path"], media_type="image/png")

    if config.frontend_dir and Path(config.frontend_dir).is_dir():
        app.mount("/app", StaticFiles(directory=config.frontend_dir, html=True), name="app")

    return app
