"""Build a demo catalog for the frontend e2e tests.

Uses only the backend's public surface: the documented JSONL fixture and
detection-record formats plus the `artexplore` CLI (ingest,
import-detections, curate, serve). Usage:

    python3 build_fixture.py <workdir>

Creates <workdir>/catalog ready for `artexplore serve`.
"""

import json
import subprocess
import sys
from pathlib import Path

from PIL import Image, ImageDraw


def make_painting(path: Path, seed: int) -> None:
    image = Image.new("RGB", (400, 300), ((seed * 37) % 200 + 30, 90, 120))
    draw = ImageDraw.Draw(image)
    for i in range(12):
        x0 = (i * 31 + seed * 17) % 340
        y0 = (i * 53 + seed * 29) % 240
        color = ((i * 70 + seed * 11) % 255, (i * 110) % 255, (i * 50 + 80) % 255)
        draw.rectangle([x0, y0, x0 + 50, y0 + 40], fill=color)
    image.save(path, format="PNG")


def main() -> None:
    work = Path(sys.argv[1])
    fixtures = work / "fixtures"
    fixtures.mkdir(parents=True, exist_ok=True)

    artworks = []
    for i in range(3):
        image_path = work / f"painting{i}.png"
        make_painting(image_path, seed=i + 1)
        artworks.append(
            {
                "id": f"demo-{i}",
                "title": f"Demo Painting {i}",
                "artist": "Fixture Painter",
                "technique": "Oil on canvas",
                "object_type": "painting",
                "year_start": 1800 + i * 40,
                "year_end": 1805 + i * 40,
                "image": str(image_path),
            }
        )
    (fixtures / "artworks.jsonl").write_text(
        "".join(json.dumps(a) + "\n" for a in artworks), encoding="utf-8"
    )

    rows = [
        ("demo-0", "Skull", (20, 20, 140, 140), 0.95),
        ("demo-0", "Skeleton", (160, 40, 300, 260), 0.90),
        ("demo-0", "Star", (300, 10, 390, 100), 0.85),
        ("demo-1", "Skull", (10, 10, 120, 120), 0.80),
        ("demo-1", "Tree", (140, 20, 280, 200), 0.75),
        ("demo-1", "Moon", (280, 120, 390, 230), 0.70),
        ("demo-2", "Ship", (30, 60, 220, 220), 0.65),
        ("demo-2", "Sea", (10, 180, 390, 290), 0.60),
        ("demo-2", "Cloud", (200, 10, 360, 110), 0.55),
    ]
    detections = work / "detections.jsonl"
    detections.write_text(
        "".join(
            json.dumps(
                {
                    "artwork_id": artwork_id,
                    "label": label,
                    "x_min": box[0],
                    "y_min": box[1],
                    "x_max": box[2],
                    "y_max": box[3],
                    "confidence": confidence,
                }
            )
            + "\n"
            for artwork_id, label, box, confidence in rows
        ),
        encoding="utf-8",
    )

    catalog = work / "catalog"
    base = [sys.executable, "-m", "artexplore.cli", "--catalog", str(catalog)]
    subprocess.run(base + ["ingest", "--fixtures", str(fixtures)], check=True)
    subprocess.run(base + ["import-detections", str(detections)], check=True)
    subprocess.run(base + ["curate", "--min-side", "16"], check=True)
    print(f"fixture catalog ready at {catalog}")


if __name__ == "__main__":
    main()
