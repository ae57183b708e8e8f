import numpy as np
import pytest
from PIL import Image

from artexplore.catalog import Catalog
from artexplore.curation import SubsetSpec, run_pipeline
from artexplore.ingestion import Artwork, make_detection
from artexplore.metrics.boxes import BoundingBox
from artexplore.taxonomy import default_taxonomy


@pytest.fixture(scope="session")
def taxonomy():
    return default_taxonomy()


@pytest.fixture
def catalog(tmp_path):
    return Catalog(tmp_path / "catalog")


def make_test_image(path, width=200, height=160, seed=7):
    """Deterministic noisy RGB image so crops have distinctive pixels."""
    rng = np.random.default_rng(seed)
    arr = rng.integers(0, 256, size=(height, width, 3), dtype=np.uint8)
    Image.fromarray(arr, "RGB").save(path, format="PNG")
    return path


@pytest.fixture
def painting_catalog(tmp_path, taxonomy):
    return build_painting_catalog(tmp_path, taxonomy)


def build_painting_catalog(tmp_path, taxonomy):
    """A small browsable catalog: one painting carrying five objects
    (skeleton, skull, lightning, star, paper) plus a second painting with
    assorted occultism/nature objects, pipelined into crops."""
    root = tmp_path / "catalog"
    catalog = Catalog(root)
    images = tmp_path / "images"
    images.mkdir()

    img1 = make_test_image(images / "p1.png", 400, 300, seed=1)
    img2 = make_test_image(images / "p2.png", 320, 240, seed=2)
    catalog.put_artwork(
        Artwork(
            id="art-001",
            title="The King and Queen",
            artist="Test Painter",
            technique="Oil on canvas",
            production_year=(1982, 1982),
            image_ref=str(img1),
        )
    )
    catalog.put_artwork(
        Artwork(
            id="art-002",
            title="Night Study",
            artist="Another Painter",
            technique="Tempera",
            production_year=(1901, 1903),
            image_ref=str(img2),
        )
    )

    five = [
        ("Skeleton", (10, 10, 90, 160), 0.95),
        ("Skull", (100, 20, 170, 90), 0.90),
        ("Lightning", (200, 5, 260, 120), 0.85),
        ("Star", (280, 30, 330, 80), 0.80),
        ("Paper", (120, 150, 220, 230), 0.75),
    ]
    for label, (x0, y0, x1, y1), conf in five:
        det = make_detection(
            taxonomy, "art-001", label, BoundingBox(x0, y0, x1, y1), conf
        )
        catalog.put_detection(det)

    extra = [
        ("Skull", (10, 10, 80, 80), 0.70),
        ("Skull", (90, 10, 160, 80), 0.60),
        ("Ghost", (170, 10, 240, 90), 0.55),
        ("Moon", (10, 100, 100, 200), 0.65),
        ("Tree", (120, 100, 230, 220), 0.45),
    ]
    for label, (x0, y0, x1, y1), conf in extra:
        det = make_detection(
            taxonomy, "art-002", label, BoundingBox(x0, y0, x1, y1), conf
        )
        catalog.put_detection(det)

    run_pipeline(catalog, taxonomy, spec=SubsetSpec(k_per_label=100), min_side=16)
    return catalog
