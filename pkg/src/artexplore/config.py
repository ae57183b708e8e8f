"""Run configuration: YAML file, environment variables, CLI flag overrides.

Precedence is flags > environment > file > defaults. Defaults follow the
deployed values where they are fixed: confidence cutoff 0.25, up to 100
instances per label, crop min side 32, 1024-pixel canvas.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import yaml

from artexplore.ingestion import CollectionConfig


class ConfigError(ValueError):
    """Invalid or inconsistent configuration."""


@dataclass
class RunConfig:
    catalog_path: str = "catalog"
    taxonomy_path: str = ""
    cutoff: float = 0.25
    k_per_label: int = 100
    min_side: int = 32
    canvas_side: int = 1024
    port: int = 8000
    detector_endpoint: str = ""
    favorites_ttl_days: float = 7.0
    generation_workers: int = 2
    home_examples: tuple[str, ...] = ()
    outpaint_provider: str = "mock"
    outpaint_endpoint: str = ""
    outpaint_api_key: str = ""
    outpaint_max_side: int = 1024
    frontend_dir: str = ""
    collection: CollectionConfig = field(default_factory=CollectionConfig)

    def validate(self) -> "RunConfig":
        if not 0.0 <= self.cutoff <= 1.0:
            raise ConfigError(f"cutoff outside [0, 1]: {self.cutoff}")
        if self.k_per_label < 1:
            raise ConfigError(f"k_per_label must be >= 1: {self.k_per_label}")
        if self.min_side < 1:
            raise ConfigError(f"min_side must be >= 1: {self.min_side}")
        if self.canvas_side < 1:
            raise ConfigError(f"canvas_side must be >= 1: {self.canvas_side}")
        if self.outpaint_provider not in ("mock", "http"):
            raise ConfigError(f"unknown outpaint provider: {self.outpaint_provider!r}")
        if self.outpaint_provider == "http" and not self.outpaint_endpoint:
            raise ConfigError("outpaint provider 'http' requires an endpoint")
        return self


_ENV_KEYS = {
    "ARTEXPLORE_CATALOG": ("catalog_path", str),
    "ARTEXPLORE_TAXONOMY": ("taxonomy_path", str),
    "ARTEXPLORE_CUTOFF": ("cutoff", float),
    "ARTEXPLORE_K_PER_LABEL": ("k_per_label", int),
    "ARTEXPLORE_MIN_SIDE": ("min_side", int),
    "ARTEXPLORE_CANVAS_SIDE": ("canvas_side", int),
    "ARTEXPLORE_PORT": ("port", int),
    "ARTEXPLORE_DETECTOR_ENDPOINT": ("detector_endpoint", str),
    "ARTEXPLORE_FAVORITES_TTL_DAYS": ("favorites_ttl_days", float),
    "ARTEXPLORE_GENERATION_WORKERS": ("generation_workers", int),
    "ARTEXPLORE_OUTPAINT_PROVIDER": ("outpaint_provider", str),
    "ARTEXPLORE_OUTPAINT_ENDPOINT": ("outpaint_endpoint", str),
    "ARTEXPLORE_OUTPAINT_API_KEY": ("outpaint_api_key", str),
    "ARTEXPLORE_FRONTEND_DIR": ("frontend_dir", str),
    "ARTEXPLORE_COLLECTION_URL": ("collection.base_url", str),
    "ARTEXPLORE_COLLECTION_FIXTURES": ("collection.fixture_dir", str),
    "ARTEXPLORE_COLLECTION_API_KEY": ("collection.api_key", str),
    "ARTEXPLORE_COLLECTION_OBJECT_TYPE": ("collection.object_type", str),
}


def _apply(config: RunConfig, dotted: str, value) -> RunConfig:
    if dotted.startswith("collection."):
        collection = replace(config.collection, **{dotted.split(".", 1)[1]: value})
        return replace(config, collection=collection)
    return replace(config, **{dotted: value})


def _from_file(path: Path) -> dict:
    doc = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
    if not isinstance(doc, dict):
        raise ConfigError(f"config file must be a mapping: {path}")
    return doc


def load_config(
    path: str | Path | None = None,
    env: dict | None = None,
    overrides: dict | None = None,
) -> RunConfig:
    """Build a validated RunConfig from file, environment, and overrides.

    ``overrides`` holds already-typed values keyed by field name (dotted
    for collection fields); None values are ignored so unset CLI flags
    fall through.
    """
    env = os.environ if env is None else env
    config = RunConfig()

    if path is not None:
        doc = _from_file(Path(path))
        flat_fields = {f.name for f in fields(RunConfig)} - {"collection", "home_examples"}
        for key, value in doc.items():
            if key == "collection" and isinstance(value, dict):
                known = {f.name for f in fields(CollectionConfig)}
                unknown = set(value) - known
                if unknown:
                    raise ConfigError(f"unknown collection keys: {sorted(unknown)}")
                config = replace(config, collection=replace(config.collection, **value))
            elif key == "home_examples":
                config = replace(config, home_examples=tuple(str(v) for v in value or ()))
            elif key in flat_fields:
                field_type = RunConfig.__dataclass_fields__[key].type
                config = _apply(config, key, _coerce(value, field_type, key))
            else:
                raise ConfigError(f"unknown config key: {key!r}")

    for var, (dotted, cast) in _ENV_KEYS.items():
        if var in env and env[var] != "":
            try:
                config = _apply(config, dotted, cast(env[var]))
            except ValueError as exc:
                raise ConfigError(f"bad value for {var}: {env[var]!r}") from exc

    for dotted, value in (overrides or {}).items():
        if value is not None:
            config = _apply(config, dotted, value)

    return config.validate()


def _coerce(value, field_type: str, key: str):
    casts = {"str": str, "int": int, "float": float}
    cast = casts.get(field_type)
    if cast is None:
        return value
    try:
        return cast(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value for {key}: {value!r}") from exc
