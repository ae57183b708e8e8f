import io
import json
import time
from pathlib import Path

import pytest
from fastapi.testclient import TestClient
from PIL import Image

from artexplore.catalog import Catalog
from artexplore.config import RunConfig
from artexplore.curation import SubsetSpec, run_pipeline
from artexplore.ingestion import Artwork, make_detection
from artexplore.metrics.boxes import BoundingBox
from artexplore.service import create_app
from conftest import make_test_image

GOLDEN_DIR = Path(__file__).parent / "golden"


@pytest.fixture
def client(painting_catalog, taxonomy):
    app = create_app(painting_catalog, taxonomy, RunConfig())
    with TestClient(app) as c:
        yield c


def new_session(client):
    resp = client.post("/sessions")
    assert resp.status_code == 201
    return resp.json()["session_id"]


def wait_for_job(client, job_id, timeout=10.0):
    deadline = time.time() + timeout
    while time.time() < deadline:
        body = client.get(f"/generations/{job_id}").json()
        if body["status"] in ("done", "failed"):
            return body
        time.sleep(0.02)
    raise AssertionError(f"generation {job_id} did not settle")


def error_code(resp):
    return resp.json()["error"]["code"]


# --- browsing -----------------------------------------------------------------


def test_categories_thirteen_entries(client, taxonomy):
    body = client.get("/categories").json()
    assert [c["category"] for c in body["categories"]] == list(taxonomy.categories)
    assert len(body["categories"]) == 13


def test_categories_counts_match_objects_totals(client):
    for entry in client.get("/categories").json()["categories"]:
        total = client.get(
            "/objects", params={"category": entry["category"], "page_size": 1}
        ).json()["total"]
        assert entry["object_count"] == total


def test_categories_empty_category_has_placeholder(client):
    by_cat = {c["category"]: c for c in client.get("/categories").json()["categories"]}
    assert by_cat["Vehicle"]["object_count"] == 0
    assert by_cat["Vehicle"]["representative"] is None
    assert by_cat["Occultism"]["representative"] is not None


def test_objects_filtered_by_label(client):
    body = client.get("/objects", params={"category": "Occultism", "label": "Skull"}).json()
    assert body["total"] == 3
    assert all(item["label"] == "Skull" for item in body["items"])
    assert all(item["crop_url"].startswith("/crops/") for item in body["items"])


def test_objects_requires_filter(client):
    resp = client.get("/objects")
    assert resp.status_code == 400
    assert error_code(resp) == "category_required"


def test_objects_unknown_names(client):
    assert error_code(client.get("/objects", params={"category": "Dinosaurs"})) == "unknown_category"
    assert error_code(client.get("/objects", params={"label": "Unicorn"})) == "unknown_label"
    resp = client.get("/objects", params={"category": "Animal", "label": "Skull"})
    assert error_code(resp) == "label_category_mismatch"


def test_objects_invalid_cursor(client):
    resp = client.get("/objects", params={"category": "Occultism", "cursor": "@@bogus@@"})
    assert resp.status_code == 400
    assert error_code(resp) == "invalid_cursor"


def test_objects_label_only_filter(client):
    by_label = client.get("/objects", params={"label": "Skull"}).json()
    with_cat = client.get("/objects", params={"category": "Occultism", "label": "Skull"}).json()
    assert [i["detection_id"] for i in by_label["items"]] == [
        i["detection_id"] for i in with_cat["items"]
    ]


def test_pagination_partition_over_25_items(tmp_path, taxonomy):
    catalog = Catalog(tmp_path / "cat")
    img = make_test_image(tmp_path / "p.png", 300, 300, seed=55)
    catalog.put_artwork(Artwork(id="p1", image_ref=str(img)))
    for i in range(25):
        catalog.put_detection(
            make_detection(
                taxonomy, "p1", "Skull", BoundingBox(i, 0, i + 60, 60), round(0.99 - i * 0.01, 2)
            )
        )
    run_pipeline(catalog, taxonomy, spec=SubsetSpec(k_per_label=100), min_side=8)
    app = create_app(catalog, taxonomy, RunConfig())
    with TestClient(app) as client:
        full = client.get(
            "/objects", params={"category": "Occultism", "page_size": 200}
        ).json()
        expected = [i["detection_id"] for i in full["items"]]
        assert len(expected) == 25
        for page_size in range(1, 8):
            seen, cursor, sizes = [], None, []
            while True:
                params = {"category": "Occultism", "page_size": page_size}
                if cursor:
                    params["cursor"] = cursor
                body = client.get("/objects", params=params).json()
                assert body["total"] == 25
                sizes.append(len(body["items"]))
                seen.extend(i["detection_id"] for i in body["items"])
                cursor = body["next_cursor"]
                if cursor is None:
                    break
            assert seen == expected  # no duplication, no omission, stable order
            assert all(s <= page_size for s in sizes)


def test_painting_detail_five_objects(client):
    body = client.get("/paintings/art-001").json()
    assert body["artwork"]["title"] == "The King and Queen"
    assert body["artwork"]["production_year"] == [1982, 1982]
    assert len(body["objects"]) == 5
    labels = {o["label"] for o in body["objects"]}
    assert labels == {"Skeleton", "Skull", "Lightning", "Star", "Paper"}
    for obj in body["objects"]:
        box = obj["box"]
        assert box["x_max"] > box["x_min"] and box["y_max"] > box["y_min"]


def test_painting_palette_has_six_colors(client):
    body = client.get("/paintings/art-001").json()
    palette = body["artwork"]["palette"]
    assert len(palette) == 6
    assert all(c.startswith("#") and len(c) == 7 for c in palette)


def test_painting_unknown_id(client):
    resp = client.get("/paintings/nope")
    assert resp.status_code == 404
    assert error_code(resp) == "unknown_painting"


def test_painting_image_served(client):
    body = client.get("/paintings/art-001").json()
    resp = client.get(body["artwork"]["image_url"])
    assert resp.status_code == 200
    image = Image.open(io.BytesIO(resp.content))
    assert image.size == (400, 300)


def test_crop_image_served_and_unknown(client):
    item = client.get("/objects", params={"category": "Occultism"}).json()["items"][0]
    resp = client.get(item["crop_url"])
    assert resp.status_code == 200
    assert Image.open(io.BytesIO(resp.content)).size[0] > 0
    assert client.get("/crops/missing").status_code == 404


def test_home_examples_fallback_top_confidence(client):
    body = client.get("/home").json()
    assert len(body["examples"]) == 3
    confs = [e["confidence"] for e in body["examples"]]
    assert confs == sorted(confs, reverse=True)


def test_home_examples_from_config(painting_catalog, taxonomy):
    page = painting_catalog.query_objects(taxonomy, category="Occultism", page_size=3)
    ids = [d.id for d, _ in page.items]
    app = create_app(painting_catalog, taxonomy, RunConfig(home_examples=tuple(ids)))
    with TestClient(app) as client:
        body = client.get("/home").json()
        assert [e["detection_id"] for e in body["examples"]] == ids


# --- sessions and favorites ---------------------------------------------------


def test_favorites_idempotent(client):
    sid = new_session(client)
    det = client.get("/objects", params={"category": "Occultism"}).json()["items"][0]
    for _ in range(2):
        resp = client.post(f"/sessions/{sid}/favorites/{det['detection_id']}")
        assert resp.status_code == 200
    favorites = client.get(f"/sessions/{sid}/favorites").json()["favorites"]
    assert len(favorites) == 1


def test_favorites_save_then_delete(client):
    sid = new_session(client)
    det = client.get("/objects", params={"category": "Occultism"}).json()["items"][0]
    client.post(f"/sessions/{sid}/favorites/{det['detection_id']}")
    client.delete(f"/sessions/{sid}/favorites/{det['detection_id']}")
    assert client.get(f"/sessions/{sid}/favorites").json()["favorites"] == []


def test_favorites_keep_save_order(client):
    sid = new_session(client)
    items = client.get("/objects", params={"category": "Occultism", "page_size": 6}).json()[
        "items"
    ]
    assert len(items) == 6
    for item in items:
        client.post(f"/sessions/{sid}/favorites/{item['detection_id']}")
    favorites = client.get(f"/sessions/{sid}/favorites").json()["favorites"]
    assert [f["detection_id"] for f in favorites] == [i["detection_id"] for i in items]


def test_favorites_session_isolation(client):
    sid_a, sid_b = new_session(client), new_session(client)
    det = client.get("/objects", params={"category": "Occultism"}).json()["items"][0]
    client.post(f"/sessions/{sid_a}/favorites/{det['detection_id']}")
    assert client.get(f"/sessions/{sid_b}/favorites").json()["favorites"] == []
    assert len(client.get(f"/sessions/{sid_a}/favorites").json()["favorites"]) == 1


def test_favorites_unknown_session_and_object(client):
    resp = client.post("/sessions/ghost/favorites/whatever")
    assert resp.status_code == 404 and error_code(resp) == "unknown_session"
    sid = new_session(client)
    resp = client.post(f"/sessions/{sid}/favorites/nonexistent")
    assert resp.status_code == 404 and error_code(resp) == "unknown_object"


def test_expired_session_rejected(painting_catalog, taxonomy):
    # ~9 microseconds of TTL: expired by the time the next request lands
    app = create_app(painting_catalog, taxonomy, RunConfig(favorites_ttl_days=1e-10))
    with TestClient(app) as client:
        sid = new_session(client)
        time.sleep(0.05)
        resp = client.get(f"/sessions/{sid}/favorites")
        assert resp.status_code == 404 and error_code(resp) == "unknown_session"


# --- events and reports ----------------------------------------------------------


def test_events_and_usage_report(client):
    sid = new_session(client)

    def send(ts, kind, **payload):
        resp = client.post(
            "/events", json={"session_id": sid, "ts": ts, "kind": kind, "payload": payload}
        )
        assert resp.status_code == 202

    send(0, "screen_enter", screen="Home")
    send(14, "screen_leave", screen="Home")
    send(14, "screen_enter", screen="Object", category="Occultism")
    send(216, "screen_leave", screen="Object")
    send(216, "screen_enter", screen="Object", category="Occultism")
    send(220, "screen_leave", screen="Object")
    report = client.get("/reports/usage").json()
    assert report["per_screen_avg_duration"]["Home"] == 14.0
    assert report["per_screen_avg_duration"]["Object"] == 103.0
    assert report["category_visits"] == {"Occultism": 2}
    assert report["warnings"] == 0


def test_event_malformed_rejected(client):
    sid = new_session(client)
    resp = client.post(
        "/events",
        json={"session_id": sid, "ts": 1, "kind": "screen_enter", "payload": {"screen": "Bar"}},
    )
    assert resp.status_code == 400 and error_code(resp) == "malformed_event"
    resp = client.post("/events", json={"session_id": sid, "kind": "generate_image"})
    assert resp.status_code == 400 and error_code(resp) == "validation_error"


def test_report_reproducible_after_restart(painting_catalog, taxonomy):
    app = create_app(painting_catalog, taxonomy, RunConfig())
    with TestClient(app) as client:
        sid = new_session(client)
        client.post(
            "/events",
            json={
                "session_id": sid,
                "ts": 0,
                "kind": "screen_enter",
                "payload": {"screen": "Home"},
            },
        )
        client.post(
            "/events",
            json={
                "session_id": sid,
                "ts": 30,
                "kind": "screen_leave",
                "payload": {"screen": "Home"},
            },
        )
        before = client.get("/reports/usage").json()
    app2 = create_app(painting_catalog, taxonomy, RunConfig())
    with TestClient(app2) as client:
        assert client.get("/reports/usage").json() == before


# --- canvas generation -------------------------------------------------------------


def favorite_two_objects(client, sid):
    items = client.get("/objects", params={"category": "Occultism", "page_size": 2}).json()[
        "items"
    ]
    for item in items:
        client.post(f"/sessions/{sid}/favorites/{item['detection_id']}")
    return items


def test_canvas_happy_path(client):
    sid = new_session(client)
    items = favorite_two_objects(client, sid)
    resp = client.post(
        f"/sessions/{sid}/canvas",
        json={
            "prompt": "a silent gallery at dusk",
            "placements": [
                {"detection_id": items[0]["detection_id"], "x": 10, "y": 10, "scale": 1.0},
                {"detection_id": items[1]["detection_id"], "x": 400, "y": 400, "scale": 2.0},
            ],
        },
    )
    assert resp.status_code == 202
    job_id = resp.json()["job_id"]
    body = wait_for_job(client, job_id)
    assert body["status"] == "done"
    assert [u["detection_id"] for u in body["used_objects"]] == [
        items[0]["detection_id"],
        items[1]["detection_id"],
    ]
    image = Image.open(io.BytesIO(client.get(body["image_url"]).content))
    assert image.size == (1024, 1024)


def test_canvas_rejects_non_favorited(client):
    sid = new_session(client)
    item = client.get("/objects", params={"category": "Occultism"}).json()["items"][0]
    resp = client.post(
        f"/sessions/{sid}/canvas",
        json={
            "prompt": "x",
            "placements": [{"detection_id": item["detection_id"], "x": 0, "y": 0, "scale": 1.0}],
        },
    )
    assert resp.status_code == 400 and error_code(resp) == "not_favorited"


def test_canvas_rejects_bad_geometry(client):
    sid = new_session(client)
    items = favorite_two_objects(client, sid)
    resp = client.post(
        f"/sessions/{sid}/canvas",
        json={
            "prompt": "x",
            "placements": [
                {"detection_id": items[0]["detection_id"], "x": 1000, "y": 1000, "scale": 3.0}
            ],
        },
    )
    assert resp.status_code == 400 and error_code(resp) == "placement_out_of_bounds"


def test_canvas_rejects_empty_prompt_and_placements(client):
    sid = new_session(client)
    items = favorite_two_objects(client, sid)
    resp = client.post(
        f"/sessions/{sid}/canvas",
        json={
            "prompt": "  ",
            "placements": [{"detection_id": items[0]["detection_id"], "x": 0, "y": 0, "scale": 1.0}],
        },
    )
    assert error_code(resp) == "prompt_required"
    resp = client.post(f"/sessions/{sid}/canvas", json={"prompt": "x", "placements": []})
    assert error_code(resp) == "nothing_placed"


def test_canvas_provider_failure_marks_job_failed(painting_catalog, taxonomy):
    class FailingProvider:
        provider_id = "broken"
        max_side = None

        def outpaint(self, base, mask, prompt):
            raise RuntimeError("provider exploded")

    app = create_app(painting_catalog, taxonomy, RunConfig(), provider=FailingProvider())
    with TestClient(app) as client:
        sid = new_session(client)
        items = favorite_two_objects(client, sid)
        resp = client.post(
            f"/sessions/{sid}/canvas",
            json={
                "prompt": "x",
                "placements": [
                    {"detection_id": items[0]["detection_id"], "x": 0, "y": 0, "scale": 1.0}
                ],
            },
        )
        body = wait_for_job(client, resp.json()["job_id"])
        assert body["status"] == "failed"
        assert "provider exploded" in body["error"]
        assert body["image_url"] is None


def test_canvas_placement_flush_with_edge_uses_true_crop_size(tmp_path, taxonomy):
    # fractional boxes round outward at crop time, so the crop is wider
    # than the box span; a flush-to-the-edge placement computed from the
    # API's crop_width/crop_height must be accepted
    catalog = Catalog(tmp_path / "cat")
    img = make_test_image(tmp_path / "p.png", 300, 300, seed=77)
    catalog.put_artwork(Artwork(id="p1", image_ref=str(img)))
    det = make_detection(taxonomy, "p1", "Skull", BoundingBox(10.2, 10.7, 80.1, 60.5), 0.9)
    catalog.put_detection(det)
    run_pipeline(catalog, taxonomy, spec=SubsetSpec(k_per_label=10), min_side=8)
    app = create_app(catalog, taxonomy, RunConfig())
    with TestClient(app) as client:
        item = client.get("/objects", params={"category": "Occultism"}).json()["items"][0]
        assert item["crop_width"] == 71  # ceil(80.1) - floor(10.2)
        assert item["crop_height"] == 51  # ceil(60.5) - floor(10.7)
        sid = new_session(client)
        client.post(f"/sessions/{sid}/favorites/{item['detection_id']}")
        resp = client.post(
            f"/sessions/{sid}/canvas",
            json={
                "prompt": "edge case",
                "placements": [
                    {
                        "detection_id": item["detection_id"],
                        "x": 1024 - item["crop_width"],
                        "y": 1024 - item["crop_height"],
                        "scale": 1.0,
                    }
                ],
            },
        )
        assert resp.status_code == 202, resp.json()
        assert wait_for_job(client, resp.json()["job_id"])["status"] == "done"


def test_canvas_unknown_generation(client):
    resp = client.get("/generations/ghost")
    assert resp.status_code == 404 and error_code(resp) == "unknown_generation"


def test_canvas_mock_is_deterministic(client):
    sid = new_session(client)
    items = favorite_two_objects(client, sid)
    placements = [
        {"detection_id": items[0]["detection_id"], "x": 64, "y": 64, "scale": 1.0}
    ]
    images = []
    for _ in range(2):
        resp = client.post(
            f"/sessions/{sid}/canvas", json={"prompt": "same prompt", "placements": placements}
        )
        body = wait_for_job(client, resp.json()["job_id"])
        images.append(client.get(body["image_url"]).content)
    assert images[0] == images[1]


# --- golden documents ---------------------------------------------------------------


def normalize(document):
    """Strip host-volatile fields (absolute temp paths never appear; ids are
    content digests, so documents are stable across runs)."""
    return json.loads(json.dumps(document, sort_keys=True))


@pytest.mark.parametrize(
    "name, path, params",
    [
        ("categories", "/categories", None),
        ("objects_occultism_skull", "/objects", {"category": "Occultism", "label": "Skull"}),
        ("painting_art-001", "/paintings/art-001", None),
        ("home", "/home", None),
    ],
)
def test_golden_documents(client, name, path, params):
    got = normalize(client.get(path, params=params).json())
    golden_path = GOLDEN_DIR / f"{name}.json"
    want = json.loads(golden_path.read_text(encoding="utf-8"))
    assert got == want, f"response drifted from golden document {golden_path.name}"


def test_openapi_description_matches_repo_copy(client):
    shipped = json.loads(
        (Path(__file__).parent.parent / "docs" / "api" / "openapi.json").read_text("utf-8")
    )
    live = normalize(client.get("/openapi.json").json())
    assert live == shipped
