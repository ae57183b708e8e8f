"""Durable, indexed storage for artworks, detections, crops, and sessions.

An embedded SQLite database plus on-disk crop/image/generated files under
one root directory. Writes go through a single lock; reads use per-thread
connections (WAL mode), so readers never observe a record without its
indexes. Snapshots export the pipeline artifacts (artworks, detections,
crops) as sorted canonical JSONL plus the crop files; rebuilding a
catalog from identical inputs exports byte-identical snapshots.
"""

from __future__ import annotations

import base64
import binascii
import json
import shutil
import sqlite3
import threading
import time
import uuid
from dataclasses import dataclass
from pathlib import Path

from artexplore.curation import ObjectCrop
from artexplore.ingestion import Artwork, Detection
from artexplore.metrics.boxes import BoundingBox
from artexplore.taxonomy import Taxonomy

_SCHEMA = """
CREATE TABLE IF NOT EXISTS artworks (
    id TEXT PRIMARY KEY,
    record TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS detections (
    id TEXT PRIMARY KEY,
    artwork_id TEXT NOT NULL,
    label TEXT NOT NULL,
    category TEXT NOT NULL,
    confidence REAL NOT NULL,
    record TEXT NOT NULL
);
CREATE INDEX IF NOT EXISTS idx_det_category ON detections(category, confidence DESC, id ASC);
CREATE INDEX IF NOT EXISTS idx_det_label ON detections(label, confidence DESC, id ASC);
CREATE INDEX IF NOT EXISTS idx_det_artwork ON detections(artwork_id);
CREATE TABLE IF NOT EXISTS crops (
    detection_id TEXT PRIMARY KEY,
    record TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS sessions (
    session_id TEXT PRIMARY KEY,
    created_at REAL NOT NULL,
    expires_at REAL
);
CREATE TABLE IF NOT EXISTS favorites (
    session_id TEXT NOT NULL,
    detection_id TEXT NOT NULL,
    position INTEGER NOT NULL,
    PRIMARY KEY (session_id, detection_id)
);
CREATE TABLE IF NOT EXISTS events (
    seq INTEGER PRIMARY KEY AUTOINCREMENT,
    session_id TEXT NOT NULL,
    ts REAL NOT NULL,
    kind TEXT NOT NULL,
    payload TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS generations (
    job_id TEXT PRIMARY KEY,
    session_id TEXT NOT NULL,
    status TEXT NOT NULL,
    composition TEXT NOT NULL,
    provider_id TEXT,
    image_path TEXT,
    error TEXT,
    created_at REAL NOT NULL
);
"""


class CatalogError(Exception):
    """Storage-level failure."""


class ConflictError(CatalogError):
    """Write of an existing id with different content."""


class DanglingReferenceError(CatalogError):
    """Write referencing a record that does not exist."""


class InvalidCursorError(CatalogError):
    """Pagination cursor that does not decode."""


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=True)


def artwork_to_dict(a: Artwork) -> dict:
    return {
        "id": a.id,
        "title": a.title,
        "artist": a.artist,
        "technique": a.technique,
        "production_year": list(a.production_year) if a.production_year else None,
        "image_ref": a.image_ref,
        "image_width": a.image_width,
        "image_height": a.image_height,
        "palette": list(a.palette) if a.palette else None,
    }


def artwork_from_dict(d: dict) -> Artwork:
    year = d.get("production_year")
    palette = d.get("palette")
    return Artwork(
        id=d["id"],
        title=d.get("title", ""),
        artist=d.get("artist", ""),
        technique=d.get("technique", ""),
        production_year=tuple(year) if year else None,
        image_ref=d.get("image_ref", ""),
        image_width=d.get("image_width"),
        image_height=d.get("image_height"),
        palette=tuple(palette) if palette else None,
    )


def detection_to_dict(d: Detection) -> dict:
    return {
        "id": d.id,
        "artwork_id": d.artwork_id,
        "label": d.label_name,
        "category": d.category,
        "x_min": d.box.x_min,
        "y_min": d.box.y_min,
        "x_max": d.box.x_max,
        "y_max": d.box.y_max,
        "confidence": d.confidence,
    }


def detection_from_dict(d: dict) -> Detection:
    return Detection(
        id=d["id"],
        artwork_id=d["artwork_id"],
        label_name=d["label"],
        category=d["category"],
        box=BoundingBox(d["x_min"], d["y_min"], d["x_max"], d["y_max"]),
        confidence=d["confidence"],
    )


def crop_to_dict(c: ObjectCrop) -> dict:
    return {
        "detection_id": c.detection_id,
        "x_min": c.crop_box.x_min,
        "y_min": c.crop_box.y_min,
        "x_max": c.crop_box.x_max,
        "y_max": c.crop_box.y_max,
        "width": c.width,
        "height": c.height,
        "pixel_digest": c.pixel_digest,
        "storage_path": c.storage_path,
    }


def crop_from_dict(d: dict) -> ObjectCrop:
    return ObjectCrop(
        detection_id=d["detection_id"],
        crop_box=BoundingBox(d["x_min"], d["y_min"], d["x_max"], d["y_max"]),
        width=d["width"],
        height=d["height"],
        pixel_digest=d["pixel_digest"],
        storage_path=d["storage_path"],
    )


@dataclass
class Page:
    """One page of an ordered result set; cursors are opaque tokens."""

    items: list
    next_cursor: str | None
    total: int


def _encode_cursor(confidence: float, detection_id: str) -> str:
    raw = canonical_json({"c": confidence, "i": detection_id}).encode("utf-8")
    return base64.urlsafe_b64encode(raw).decode("ascii")


def _decode_cursor(token: str) -> tuple[float, str]:
    try:
        obj = json.loads(base64.urlsafe_b64decode(token.encode("ascii")))
        return float(obj["c"]), str(obj["i"])
    except (binascii.Error, ValueError, KeyError, TypeError) as exc:
        raise InvalidCursorError(f"invalid cursor: {token!r}") from exc


class Catalog:
    """One catalog root directory: SQLite records plus file storage."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.db_path = self.root / "catalog.sqlite"
        self._write_lock = threading.RLock()
        self._local = threading.local()
        with self._write() as con:
            con.executescript(_SCHEMA)

    # -- connections --------------------------------------------------------

    def _connection(self) -> sqlite3.Connection:
        con = getattr(self._local, "con", None)
        if con is None:
            con = sqlite3.connect(self.db_path, timeout=30.0)
            con.row_factory = sqlite3.Row
            con.execute("PRAGMA journal_mode=WAL")
            con.execute("PRAGMA foreign_keys=ON")
            self._local.con = con
        return con

    def _write(self):
        return _WriteTxn(self)

    def close(self) -> None:
        con = getattr(self._local, "con", None)
        if con is not None:
            con.close()
            self._local.con = None

    # -- file areas ----------------------------------------------------------

    @property
    def crops_dir(self) -> Path:
        path = self.root / "crops"
        path.mkdir(exist_ok=True)
        return path

    @property
    def images_dir(self) -> Path:
        path = self.root / "images"
        path.mkdir(exist_ok=True)
        return path

    @property
    def generated_dir(self) -> Path:
        path = self.root / "generated"
        path.mkdir(exist_ok=True)
        return path

    # -- primary records -----------------------------------------------------

    def _put(self, con, table: str, key_col: str, key: str, record: str, overwrite: bool):
        row = con.execute(
            f"SELECT record FROM {table} WHERE {key_col} = ?", (key,)
        ).fetchone()
        if row is not None:
            if row["record"] == record:
                return False
            if not overwrite:
                raise ConflictError(f"conflicting write: {table} id {key!r}")
        return True

    def put_artwork(self, artwork: Artwork, overwrite: bool = False) -> str:
        record = canonical_json(artwork_to_dict(artwork))
        with self._write() as con:
            if self._put(con, "artworks", "id", artwork.id, record, overwrite):
                con.execute(
                    "INSERT OR REPLACE INTO artworks (id, record) VALUES (?, ?)",
                    (artwork.id, record),
                )
        return artwork.id

    def put_detection(self, detection: Detection) -> str:
        record = canonical_json(detection_to_dict(detection))
        with self._write() as con:
            if con.execute(
                "SELECT 1 FROM artworks WHERE id = ?", (detection.artwork_id,)
            ).fetchone() is None:
                raise DanglingReferenceError(
                    f"dangling reference: detection {detection.id} -> artwork {detection.artwork_id}"
                )
            if self._put(con, "detections", "id", detection.id, record, overwrite=False):
                con.execute(
                    "INSERT INTO detections (id, artwork_id, label, category, confidence, record)"
                    " VALUES (?, ?, ?, ?, ?, ?)",
                    (
                        detection.id,
                        detection.artwork_id,
                        detection.label_name,
                        detection.category,
                        detection.confidence,
                        record,
                    ),
                )
        return detection.id

    def put_crop(self, crop: ObjectCrop) -> str:
        record = canonical_json(crop_to_dict(crop))
        with self._write() as con:
            if con.execute(
                "SELECT 1 FROM detections WHERE id = ?", (crop.detection_id,)
            ).fetchone() is None:
                raise DanglingReferenceError(
                    f"dangling reference: crop -> detection {crop.detection_id}"
                )
            if self._put(con, "crops", "detection_id", crop.detection_id, record, False):
                con.execute(
                    "INSERT INTO crops (detection_id, record) VALUES (?, ?)",
                    (crop.detection_id, record),
                )
        return crop.detection_id

    def get_artwork(self, artwork_id: str) -> Artwork | None:
        row = self._connection().execute(
            "SELECT record FROM artworks WHERE id = ?", (artwork_id,)
        ).fetchone()
        return artwork_from_dict(json.loads(row["record"])) if row else None

    def get_detection(self, det_id: str) -> Detection | None:
        row = self._connection().execute(
            "SELECT record FROM detections WHERE id = ?", (det_id,)
        ).fetchone()
        return detection_from_dict(json.loads(row["record"])) if row else None

    def get_crop(self, detection_id: str) -> ObjectCrop | None:
        row = self._connection().execute(
            "SELECT record FROM crops WHERE detection_id = ?", (detection_id,)
        ).fetchone()
        return crop_from_dict(json.loads(row["record"])) if row else None

    def all_artworks(self) -> list[Artwork]:
        rows = self._connection().execute("SELECT record FROM artworks ORDER BY id").fetchall()
        return [artwork_from_dict(json.loads(r["record"])) for r in rows]

    def all_detections(self) -> list[Detection]:
        rows = self._connection().execute("SELECT record FROM detections ORDER BY id").fetchall()
        return [detection_from_dict(json.loads(r["record"])) for r in rows]

    def count(self, table: str) -> int:
        if table not in {"artworks", "detections", "crops", "sessions", "events", "generations"}:
            raise CatalogError(f"unknown table: {table}")
        return self._connection().execute(f"SELECT COUNT(*) AS n FROM {table}").fetchone()["n"]

    # -- browse queries -------------------------------------------------------

    def query_objects(
        self,
        taxonomy: Taxonomy,
        category: str | None = None,
        label: str | None = None,
        cursor: str | None = None,
        page_size: int = 50,
    ) -> Page:
        """Browsable objects (detections that have crops), newest-confidence first.

        Ordered by descending confidence then ascending id; the cursor
        encodes the order key of the last item, so pages partition the
        result set even under concurrent inserts.
        """
        if page_size < 1:
            raise CatalogError(f"page_size must be >= 1: {page_size}")
        if category is not None and category not in taxonomy.categories:
            raise CatalogError(f"unknown category: {category!r}")
        if label is not None and label not in taxonomy:
            raise CatalogError(f"unknown label: {label!r}")
        if category is not None and label is not None:
            if label not in taxonomy.labels_in(category):
                raise CatalogError(f"label {label!r} does not belong to category {category!r}")

        where = ["1=1"]
        params: list = []
        if category is not None:
            where.append("d.category = ?")
            params.append(category)
        if label is not None:
            where.append("d.label = ?")
            params.append(label)
        base = (
            "FROM detections d JOIN crops c ON c.detection_id = d.id WHERE " + " AND ".join(where)
        )
        con = self._connection()
        total = con.execute(f"SELECT COUNT(*) AS n {base}", params).fetchone()["n"]

        cursor_clause = ""
        cursor_params: list = []
        if cursor is not None:
            conf, det_id = _decode_cursor(cursor)
            cursor_clause = " AND (d.confidence < ? OR (d.confidence = ? AND d.id > ?))"
            cursor_params = [conf, conf, det_id]
        rows = con.execute(
            f"SELECT d.record AS det, c.record AS crop {base}{cursor_clause}"
            " ORDER BY d.confidence DESC, d.id ASC LIMIT ?",
            params + cursor_params + [page_size],
        ).fetchall()
        items = [
            (detection_from_dict(json.loads(r["det"])), crop_from_dict(json.loads(r["crop"])))
            for r in rows
        ]
        next_cursor = None
        if len(items) == page_size and items:
            last = items[-1][0]
            remaining = con.execute(
                f"SELECT 1 {base} AND (d.confidence < ? OR (d.confidence = ? AND d.id > ?)) LIMIT 1",
                params + [last.confidence, last.confidence, last.id],
            ).fetchone()
            if remaining:
                next_cursor = _encode_cursor(last.confidence, last.id)
        return Page(items=items, next_cursor=next_cursor, total=total)

    def get_painting_detail(
        self, artwork_id: str
    ) -> tuple[Artwork, list[tuple[Detection, ObjectCrop | None]]]:
        """Artwork metadata plus all its detections (with crops where present)."""
        artwork = self.get_artwork(artwork_id)
        if artwork is None:
            raise CatalogError(f"unknown artwork: {artwork_id!r}")
        rows = self._connection().execute(
            "SELECT d.record AS det, c.record AS crop"
            " FROM detections d LEFT JOIN crops c ON c.detection_id = d.id"
            " WHERE d.artwork_id = ? ORDER BY d.confidence DESC, d.id ASC",
            (artwork_id,),
        ).fetchall()
        detections = [
            (
                detection_from_dict(json.loads(r["det"])),
                crop_from_dict(json.loads(r["crop"])) if r["crop"] else None,
            )
            for r in rows
        ]
        return artwork, detections

    def categories_summary(self, taxonomy: Taxonomy) -> list[dict]:
        """Per-category crop counts and the top-confidence representative,
        in taxonomy order."""
        con = self._connection()
        counts = {
            r["category"]: r["n"]
            for r in con.execute(
                "SELECT d.category AS category, COUNT(*) AS n"
                " FROM detections d JOIN crops c ON c.detection_id = d.id"
                " GROUP BY d.category"
            )
        }
        out = []
        for category in taxonomy.categories:
            rep_row = con.execute(
                "SELECT d.record AS det, c.record AS crop"
                " FROM detections d JOIN crops c ON c.detection_id = d.id"
                " WHERE d.category = ? ORDER BY d.confidence DESC, d.id ASC LIMIT 1",
                (category,),
            ).fetchone()
            representative = None
            if rep_row:
                det = detection_from_dict(json.loads(rep_row["det"]))
                crop = crop_from_dict(json.loads(rep_row["crop"]))
                representative = {"detection_id": det.id, "storage_path": crop.storage_path}
            out.append(
                {
                    "category": category,
                    "object_count": counts.get(category, 0),
                    "representative": representative,
                }
            )
        return out

    # -- sessions, favorites, events, generations ------------------------------

    def create_session(self, ttl_seconds: float | None, now: float | None = None) -> dict:
        now = time.time() if now is None else now
        session_id = uuid.uuid4().hex
        expires = now + ttl_seconds if ttl_seconds else None
        with self._write() as con:
            con.execute(
                "INSERT INTO sessions (session_id, created_at, expires_at) VALUES (?, ?, ?)",
                (session_id, now, expires),
            )
        return {"session_id": session_id, "created_at": now}

    def get_session(self, session_id: str, now: float | None = None) -> dict | None:
        now = time.time() if now is None else now
        row = self._connection().execute(
            "SELECT session_id, created_at, expires_at FROM sessions WHERE session_id = ?",
            (session_id,),
        ).fetchone()
        if row is None:
            return None
        if row["expires_at"] is not None and row["expires_at"] < now:
            return None
        return dict(row)

    def add_favorite(self, session_id: str, detection_id: str) -> None:
        with self._write() as con:
            con.execute(
                "INSERT OR IGNORE INTO favorites (session_id, detection_id, position)"
                " VALUES (?, ?, COALESCE((SELECT MAX(position) + 1 FROM favorites"
                " WHERE session_id = ?), 0))",
                (session_id, detection_id, session_id),
            )

    def remove_favorite(self, session_id: str, detection_id: str) -> None:
        with self._write() as con:
            con.execute(
                "DELETE FROM favorites WHERE session_id = ? AND detection_id = ?",
                (session_id, detection_id),
            )

    def favorites(self, session_id: str) -> list[str]:
        rows = self._connection().execute(
            "SELECT detection_id FROM favorites WHERE session_id = ? ORDER BY position",
            (session_id,),
        ).fetchall()
        return [r["detection_id"] for r in rows]

    def append_event(self, session_id: str, ts: float, kind: str, payload: dict) -> int:
        with self._write() as con:
            cur = con.execute(
                "INSERT INTO events (session_id, ts, kind, payload) VALUES (?, ?, ?, ?)",
                (session_id, ts, kind, canonical_json(payload)),
            )
            return cur.lastrowid

    def all_events(self) -> list[dict]:
        rows = self._connection().execute(
            "SELECT seq, session_id, ts, kind, payload FROM events ORDER BY seq"
        ).fetchall()
        return [
            {
                "seq": r["seq"],
                "session_id": r["session_id"],
                "ts": r["ts"],
                "kind": r["kind"],
                "payload": json.loads(r["payload"]),
            }
            for r in rows
        ]

    def create_generation(
        self, job_id: str, session_id: str, composition: dict, now: float | None = None
    ) -> None:
        with self._write() as con:
            con.execute(
                "INSERT INTO generations (job_id, session_id, status, composition, created_at)"
                " VALUES (?, ?, 'queued', ?, ?)",
                (job_id, session_id, canonical_json(composition), now or time.time()),
            )

    def set_generation_status(
        self,
        job_id: str,
        status: str,
        provider_id: str | None = None,
        image_path: str | None = None,
        error: str | None = None,
    ) -> None:
        with self._write() as con:
            con.execute(
                "UPDATE generations SET status = ?,"
                " provider_id = COALESCE(?, provider_id),"
                " image_path = COALESCE(?, image_path),"
                " error = COALESCE(?, error) WHERE job_id = ?",
                (status, provider_id, image_path, error, job_id),
            )

    def get_generation(self, job_id: str) -> dict | None:
        row = self._connection().execute(
            "SELECT * FROM generations WHERE job_id = ?", (job_id,)
        ).fetchone()
        if row is None:
            return None
        out = dict(row)
        out["composition"] = json.loads(out["composition"])
        return out

    def active_generation(self, session_id: str) -> dict | None:
        row = self._connection().execute(
            "SELECT * FROM generations WHERE session_id = ? AND status IN ('queued', 'running')"
            " ORDER BY created_at LIMIT 1",
            (session_id,),
        ).fetchone()
        return dict(row) if row else None

    def generations_in_state(self, status: str) -> list[str]:
        rows = self._connection().execute(
            "SELECT job_id FROM generations WHERE status = ?", (status,)
        ).fetchall()
        return [r["job_id"] for r in rows]

    # -- integrity and snapshots -----------------------------------------------

    def audit(self, deep: bool = False) -> list[str]:
        """Referential-integrity scan; returns human-readable violations.

        ``deep`` re-hashes stored crop pixels against their recorded
        digests (slower; catches file corruption).
        """
        con = self._connection()
        violations: list[str] = []
        for r in con.execute(
            "SELECT d.id FROM detections d LEFT JOIN artworks a ON a.id = d.artwork_id"
            " WHERE a.id IS NULL"
        ):
            violations.append(f"detection {r['id']} references missing artwork")
        for r in con.execute(
            "SELECT c.detection_id FROM crops c LEFT JOIN detections d ON d.id = c.detection_id"
            " WHERE d.id IS NULL"
        ):
            violations.append(f"crop {r['detection_id']} references missing detection")
        for r in con.execute(
            "SELECT f.session_id, f.detection_id FROM favorites f"
            " LEFT JOIN detections d ON d.id = f.detection_id WHERE d.id IS NULL"
        ):
            violations.append(
                f"favorite in session {r['session_id']} references missing detection"
                f" {r['detection_id']}"
            )
        for r in con.execute(
            "SELECT g.job_id FROM generations g LEFT JOIN sessions s"
            " ON s.session_id = g.session_id WHERE s.session_id IS NULL"
        ):
            violations.append(f"generation {r['job_id']} references missing session")
        for r in con.execute("SELECT record FROM crops"):
            crop = crop_from_dict(json.loads(r["record"]))
            path = self.crops_dir / crop.storage_path
            if not path.exists():
                violations.append(f"crop file missing: {crop.storage_path}")
            elif deep:
                from PIL import Image

                from artexplore.curation import pixel_digest

                with Image.open(path) as im:
                    im.load()
                    if pixel_digest(im) != crop.pixel_digest:
                        violations.append(f"crop pixel digest mismatch: {crop.storage_path}")
        return violations

    def export_snapshot(self, dest: str | Path) -> Path:
        """Write the pipeline artifacts to ``dest`` (docs/formats.md layout)."""
        dest = Path(dest)
        dest.mkdir(parents=True, exist_ok=True)
        con = self._connection()
        for table, filename in (
            ("artworks", "artworks.jsonl"),
            ("detections", "detections.jsonl"),
            ("crops", "crops.jsonl"),
        ):
            key = "detection_id" if table == "crops" else "id"
            rows = con.execute(f"SELECT record FROM {table} ORDER BY {key}").fetchall()
            (dest / filename).write_text(
                "".join(r["record"] + "\n" for r in rows), encoding="utf-8"
            )
        crops_dest = dest / "crops"
        if crops_dest.exists():
            shutil.rmtree(crops_dest)
        for r in con.execute("SELECT record FROM crops ORDER BY detection_id"):
            crop = crop_from_dict(json.loads(r["record"]))
            src = self.crops_dir / crop.storage_path
            target = crops_dest / crop.storage_path
            target.parent.mkdir(parents=True, exist_ok=True)
            shutil.copyfile(src, target)
            digest_src = src.with_suffix(".digest")
            if digest_src.exists():
                shutil.copyfile(digest_src, target.with_suffix(".digest"))
        return dest

    def import_snapshot(self, src: str | Path) -> None:
        """Load a snapshot directory into this (empty or compatible) catalog."""
        src = Path(src)
        for line in (src / "artworks.jsonl").read_text(encoding="utf-8").splitlines():
            if line.strip():
                self.put_artwork(artwork_from_dict(json.loads(line)))
        for line in (src / "detections.jsonl").read_text(encoding="utf-8").splitlines():
            if line.strip():
                self.put_detection(detection_from_dict(json.loads(line)))
        for line in (src / "crops.jsonl").read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            crop = crop_from_dict(json.loads(line))
            file_src = src / "crops" / crop.storage_path
            target = self.crops_dir / crop.storage_path
            target.parent.mkdir(parents=True, exist_ok=True)
            shutil.copyfile(file_src, target)
            digest_src = file_src.with_suffix(".digest")
            if digest_src.exists():
                shutil.copyfile(digest_src, target.with_suffix(".digest"))
            self.put_crop(crop)


class _WriteTxn:
    """Single-writer transaction: process-wide lock plus sqlite commit."""

    def __init__(self, catalog: Catalog):
        self._catalog = catalog

    def __enter__(self) -> sqlite3.Connection:
        self._catalog._write_lock.acquire()
        self._con = self._catalog._connection()
        return self._con

    def __exit__(self, exc_type, exc, tb):
        try:
            if exc_type is None:
                self._con.commit()
            else:
                self._con.rollback()
        finally:
            self._catalog._write_lock.release()
        return False
