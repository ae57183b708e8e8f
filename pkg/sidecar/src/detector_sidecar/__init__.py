"""Detector sidecar: grounded object detection behind a fixed wire protocol."""

__version__ = "0.1.0"
