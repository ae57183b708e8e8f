"""Regenerate the golden wire-protocol examples under protocol/.

The embedded images are tiny deterministic PNGs so the files stay small
and stable. Both the primary client/stub tests and the detector sidecar
validate against these exact documents.
"""

import base64
import io
import json
from pathlib import Path

import numpy as np
from PIL import Image

from artexplore.canvas import MockOutpaintingProvider

REPO = Path(__file__).resolve().parent.parent
PROTOCOL = REPO / "protocol"


def png_b64(array) -> str:
    image = Image.fromarray(array.astype(np.uint8), "RGB" if array.ndim == 3 else "L")
    buf = io.BytesIO()
    image.save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode("ascii")


def write(path: Path, payload: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", "utf-8")
    print(f"wrote {path.relative_to(REPO)}")


def main() -> None:
    rng = np.random.default_rng(2024)
    painting = rng.integers(0, 255, (48, 64, 3))

    detector_request = {
        "image_b64": png_b64(painting),
        "prompt": "Bird. Cat. Skull",
        "cutoff": 0.25,
    }
    detector_response = {
        "detections": [
            {
                "label": "Skull",
                "box": {"x_min": 12.5, "y_min": 8.0, "x_max": 52.0, "y_max": 44.5},
                "confidence": 0.87,
            },
            {
                "label": "Bird",
                "box": {"x_min": 2.0, "y_min": 30.0, "x_max": 20.0, "y_max": 46.0},
                "confidence": 0.42,
            },
        ]
    }
    write(PROTOCOL / "detector" / "request.json", detector_request)
    write(PROTOCOL / "detector" / "response.json", detector_response)

    base = np.full((64, 64, 3), 255)
    base[8:40, 8:40] = rng.integers(0, 255, (32, 32, 3))
    mask = np.full((64, 64), 255)
    mask[8:40, 8:40] = 0
    outpaint_request = {
        "image_b64": png_b64(base),
        "mask_b64": png_b64(mask),
        "prompt": "a stormy coast in oil paint",
        "size": 64,
    }
    provider = MockOutpaintingProvider()
    base_img = Image.open(io.BytesIO(base64.b64decode(outpaint_request["image_b64"])))
    mask_img = Image.open(io.BytesIO(base64.b64decode(outpaint_request["mask_b64"])))
    result = provider.outpaint(base_img, mask_img, outpaint_request["prompt"])
    buf = io.BytesIO()
    result.save(buf, format="PNG")
    outpaint_response = {"image_b64": base64.b64encode(buf.getvalue()).decode("ascii")}
    write(PROTOCOL / "outpaint" / "request.json", outpaint_request)
    write(PROTOCOL / "outpaint" / "response.json", outpaint_response)


if __name__ == "__main__":
    main()
