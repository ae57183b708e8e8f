"""Regenerate the golden API documents and the shipped OpenAPI description.

Usage: python tools/regen_goldens.py
The golden fixture catalog is fully deterministic (content-digest ids,
seeded images), so the output files only change when the API changes.
"""

import json
import sys
import tempfile
from pathlib import Path

from fastapi.testclient import TestClient

REPO = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(REPO / "tests"))

from conftest import build_painting_catalog  # noqa: E402

from artexplore.config import RunConfig  # noqa: E402
from artexplore.service import create_app  # noqa: E402
from artexplore.taxonomy import default_taxonomy  # noqa: E402

GOLDEN = REPO / "tests" / "golden"
DOCS_API = REPO / "docs" / "api"

ENDPOINTS = [
    ("categories", "/categories", None),
    ("objects_occultism_skull", "/objects", {"category": "Occultism", "label": "Skull"}),
    ("painting_art-001", "/paintings/art-001", None),
    ("home", "/home", None),
]


def main() -> None:
    GOLDEN.mkdir(parents=True, exist_ok=True)
    DOCS_API.mkdir(parents=True, exist_ok=True)
    taxonomy = default_taxonomy()
    with tempfile.TemporaryDirectory() as tmp:
        catalog = build_painting_catalog(Path(tmp), taxonomy)
        app = create_app(catalog, taxonomy, RunConfig())
        with TestClient(app) as client:
            for name, path, params in ENDPOINTS:
                body = client.get(path, params=params).json()
                out = GOLDEN / f"{name}.json"
                out.write_text(json.dumps(body, indent=2, sort_keys=True) + "\n", "utf-8")
                print(f"wrote {out.relative_to(REPO)}")
            openapi = client.get("/openapi.json").json()
    out = DOCS_API / "openapi.json"
    out.write_text(json.dumps(openapi, indent=2, sort_keys=True) + "\n", "utf-8")
    print(f"wrote {out.relative_to(REPO)}")


if __name__ == "__main__":
    main()
