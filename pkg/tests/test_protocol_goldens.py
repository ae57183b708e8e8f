"""The committed wire-protocol examples must stay valid against the
client-side validators and the stub servers (the same files anchor the
detector sidecar's contract tests)."""

import base64
import io
import json
from pathlib import Path

import httpx
from PIL import Image

from artexplore.ingestion import DetectorRequest, validate_detector_response
from artexplore.testing import MockOutpaintServer, StubDetectorServer

PROTOCOL = Path(__file__).parent.parent / "protocol"


def load(name):
    return json.loads((PROTOCOL / name).read_text("utf-8"))


def test_detector_request_golden_parses():
    request = DetectorRequest.from_wire(load("detector/request.json"))
    assert request.cutoff == 0.25
    assert request.prompt == "Bird. Cat. Skull"
    image = Image.open(io.BytesIO(base64.b64decode(request.image_b64)))
    assert image.size == (64, 48)


def test_detector_response_golden_validates_against_request_prompt():
    request = load("detector/request.json")
    response = load("detector/response.json")
    parsed = validate_detector_response(response, request["prompt"])
    assert [label for label, _, _ in parsed] == ["Skull", "Bird"]
    assert all(0.0 <= conf <= 1.0 for _, _, conf in parsed)


def test_stub_detector_accepts_golden_request():
    response = load("detector/response.json")
    with StubDetectorServer(detections=response["detections"]) as stub:
        reply = httpx.post(stub.base_url + "/detect", json=load("detector/request.json"))
    assert reply.status_code == 200
    assert reply.json() == response


def test_outpaint_goldens_round_trip_through_stub():
    request = load("outpaint/request.json")
    with MockOutpaintServer() as server:
        reply = httpx.post(server.base_url + "/outpaint", json=request)
    assert reply.status_code == 200
    # the mock provider is deterministic, so the reply equals the golden
    assert reply.json() == load("outpaint/response.json")
    image = Image.open(io.BytesIO(base64.b64decode(reply.json()["image_b64"])))
    assert image.size == (request["size"], request["size"])
