"""Sidecar configuration from environment variables.

SIDECAR_BACKEND        fixture | transformers   (default fixture)
SIDECAR_FIXTURES       path to a fixture JSON file (fixture backend)
SIDECAR_MODEL_REF      model checkpoint reference (transformers backend)
SIDECAR_DEVICE         cpu | cuda | cuda:N       (default cpu)
SIDECAR_MAX_LABELS     prompt capacity           (default 120)
SIDECAR_DEFAULT_CUTOFF confidence cutoff when a request omits it (default 0.25)
"""

from __future__ import annotations

import os
from dataclasses import dataclass


@dataclass(frozen=True)
class SidecarConfig:
    backend: str = "fixture"
    fixtures_path: str = ""
    model_ref: str = "google/owlvit-base-patch32"
    device: str = "cpu"
    max_labels: int = 120
    default_cutoff: float = 0.25

    @classmethod
    def from_env(cls, env: dict | None = None) -> "SidecarConfig":
        env = os.environ if env is None else env
        return cls(
            backend=env.get("SIDECAR_BACKEND", "fixture"),
            fixtures_path=env.get("SIDECAR_FIXTURES", ""),
            model_ref=env.get("SIDECAR_MODEL_REF", "google/owlvit-base-patch32"),
            device=env.get("SIDECAR_DEVICE", "cpu"),
            max_labels=int(env.get("SIDECAR_MAX_LABELS", "120")),
            default_cutoff=float(env.get("SIDECAR_DEFAULT_CUTOFF", "0.25")),
        )
