"""Operator command line: ingest, detect, curate, evaluate, audit, serve, report.

Every command exits 0 on success and nonzero otherwise (1 runtime
failure or integrity violations, 2 bad usage/config). ``--output
machine`` switches human-readable text to one JSON document on stdout.
Writer commands take a lock file in the catalog directory so two writers
never share a catalog.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
from filelock import FileLock, Timeout

from artexplore import curation, usage
from artexplore.catalog import Catalog
from artexplore.config import ConfigError, RunConfig, load_config
from artexplore.ingestion import (
    IngestError,
    fetch_artworks,
    import_detections,
    read_predictions,
    request_detections,
)
from artexplore.metrics.evaluation import coco_ap, read_ground_truth
from artexplore.taxonomy import Taxonomy, default_taxonomy, load_taxonomy

EXIT_FAILURE = 1


class Runtime:
    """Lazily-built shared state for one CLI invocation."""

    def __init__(self, config: RunConfig, output: str):
        self.config = config
        self.output = output
        self._catalog: Catalog | None = None
        self._taxonomy: Taxonomy | None = None

    @property
    def catalog(self) -> Catalog:
        if self._catalog is None:
            self._catalog = Catalog(self.config.catalog_path)
        return self._catalog

    @property
    def taxonomy(self) -> Taxonomy:
        if self._taxonomy is None:
            if self.config.taxonomy_path:
                self._taxonomy = load_taxonomy(Path(self.config.taxonomy_path))
            else:
                self._taxonomy = default_taxonomy()
        return self._taxonomy

    def emit(self, payload: dict, text: str) -> None:
        if self.output == "machine":
            click.echo(json.dumps(payload, sort_keys=True))
        else:
            click.echo(text)

    def writer_lock(self) -> FileLock:
        root = Path(self.config.catalog_path)
        root.mkdir(parents=True, exist_ok=True)
        return FileLock(root / ".writer.lock")


def _locked(runtime: Runtime):
    lock = runtime.writer_lock()
    try:
        lock.acquire(timeout=1.0)
    except Timeout:
        raise click.ClickException("catalog is locked by another writer")
    return lock


@click.group()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--catalog", "catalog_path", default=None, help="Catalog directory.")
@click.option("--taxonomy", "taxonomy_path", default=None, help="Taxonomy document path.")
@click.option(
    "--output",
    type=click.Choice(["human", "machine"]),
    default="human",
    help="machine prints one JSON document per command.",
)
@click.pass_context
def main(ctx, config_path, catalog_path, taxonomy_path, output):
    """Object-driven exploration engine for digitized art collections."""
    try:
        config = load_config(
            config_path,
            overrides={"catalog_path": catalog_path, "taxonomy_path": taxonomy_path},
        )
    except ConfigError as exc:
        raise click.UsageError(str(exc))
    ctx.obj = Runtime(config, output)


@main.command()
@click.option("--fixtures", default=None, help="Directory of JSONL artwork fixtures.")
@click.option("--api-url", default=None, help="Collection API base URL.")
@click.option("--object-type", default=None, help="Collection object-type filter.")
@click.pass_obj
def ingest(runtime: Runtime, fixtures, api_url, object_type):
    """Fetch artwork metadata into the catalog."""
    collection = runtime.config.collection
    if fixtures:
        collection.fixture_dir = fixtures
    if api_url:
        collection.base_url = api_url
    skipped: list[str] = []
    stored = 0
    with _locked(runtime):
        try:
            for artwork in fetch_artworks(
                collection, object_type=object_type, on_skip=skipped.append
            ):
                runtime.catalog.put_artwork(artwork, overwrite=True)
                stored += 1
        except IngestError as exc:
            raise click.ClickException(str(exc))
    runtime.emit(
        {"artworks_ingested": stored, "skipped": len(skipped)},
        f"ingested {stored} artwork(s), skipped {len(skipped)} malformed record(s)",
    )


@main.command()
@click.option("--endpoint", default=None, help="Detector service base URL.")
@click.option("--cutoff", type=float, default=None, help="Confidence cutoff.")
@click.option("--limit", type=int, default=None, help="Max artworks to process.")
@click.pass_obj
def detect(runtime: Runtime, endpoint, cutoff, limit):
    """Request detections from the detector service for cataloged artworks."""
    endpoint = endpoint or runtime.config.detector_endpoint
    if not endpoint:
        raise click.UsageError("no detector endpoint configured")
    cutoff = runtime.config.cutoff if cutoff is None else cutoff
    processed = added = 0
    with _locked(runtime):
        artworks = runtime.catalog.all_artworks()
        if limit is not None:
            artworks = artworks[:limit]
        for artwork in artworks:
            try:
                detections = request_detections(
                    endpoint,
                    artwork,
                    runtime.taxonomy,
                    cutoff,
                    cache_dir=runtime.catalog.images_dir,
                )
            except IngestError as exc:
                raise click.ClickException(f"artwork {artwork.id}: {exc}")
            runtime.catalog.put_artwork(artwork, overwrite=True)  # dims may be learned
            for det in detections:
                runtime.catalog.put_detection(det)
                added += 1
            processed += 1
    runtime.emit(
        {"artworks_processed": processed, "detections_added": added},
        f"processed {processed} artwork(s), added {added} detection(s)",
    )


@main.command("import-detections")
@click.argument("file", type=click.Path(exists=True, dir_okay=False))
@click.pass_obj
def import_detections_cmd(runtime: Runtime, file):
    """Import precomputed detections from a line-delimited record file."""
    rejected: list[tuple[int, str]] = []
    with _locked(runtime):
        detections = import_detections(
            file, runtime.taxonomy, on_reject=lambda line, reason: rejected.append((line, reason))
        )
        stored = 0
        for det in detections:
            runtime.catalog.put_detection(det)
            stored += 1
    runtime.emit(
        {"imported": stored, "rejected": len(rejected)},
        f"imported {stored} detection(s), rejected {len(rejected)} record(s)",
    )


@main.command()
@click.option("--k", "k_per_label", type=int, default=None, help="Instances kept per label.")
@click.option("--min-side", type=int, default=None, help="Minimum crop side in pixels.")
@click.pass_obj
def curate(runtime: Runtime, k_per_label, min_side):
    """Run the stats -> subset -> crops pipeline over the catalog."""
    spec = curation.SubsetSpec(
        k_per_label=k_per_label if k_per_label is not None else runtime.config.k_per_label
    )
    min_side = min_side if min_side is not None else runtime.config.min_side
    with _locked(runtime):
        report = curation.run_pipeline(
            runtime.catalog, runtime.taxonomy, spec=spec, min_side=min_side
        )
    runtime.emit(report.to_dict(), report.format_text())


@main.command("eval-ap")
@click.option("--preds", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--gt", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--label", default=None, help="Label class to evaluate (required if several).")
@click.pass_obj
def eval_ap(runtime: Runtime, preds, gt, label):
    """Evaluate predictions against ground truth (AP at IoU 0.50:0.95)."""
    predictions = read_predictions(preds)
    ground_truth = read_ground_truth(gt)
    labels = sorted({g.label for g in ground_truth})
    if label is None:
        if len(labels) > 1:
            raise click.UsageError(f"ground truth has several labels {labels}; pass --label")
        label = labels[0] if labels else None
    preds_l = [p for p in predictions if label is None or p.label == label]
    gts_l = [g for g in ground_truth if label is None or g.label == label]
    report = coco_ap(preds_l, gts_l)
    runtime.emit(report.to_dict(), report.format_text())


@main.command()
@click.pass_obj
def stats(runtime: Runtime):
    """Distribution statistics over the catalog's detections."""
    result = curation.compute_stats(runtime.catalog.all_detections(), runtime.taxonomy)
    text = [
        f"total detections:   {result.total_detections}",
        f"paintings detected: {result.paintings_with_detections}",
        f"skewed (top-4 categories > 70%): {'yes' if result.skewed else 'no'}",
    ]
    for category, (n, share) in sorted(result.per_category.items(), key=lambda kv: -kv[1][0]):
        text.append(f"  {category:<14} {n:>7}  {share * 100:5.1f}%")
    runtime.emit(result.to_dict(), "\n".join(text))


@main.command()
@click.option("--deep", is_flag=True, help="Also re-hash stored crop pixels.")
@click.pass_obj
def audit(runtime: Runtime, deep):
    """Referential-integrity audit; exits nonzero on violations."""
    violations = runtime.catalog.audit(deep=deep)
    runtime.emit(
        {"violations": violations},
        "\n".join(violations) if violations else "catalog is consistent",
    )
    if violations:
        sys.exit(EXIT_FAILURE)


@main.command()
@click.option("--port", type=int, default=None)
@click.option("--host", default="127.0.0.1")
@click.pass_obj
def serve(runtime: Runtime, port, host):
    """Run the exploration HTTP service."""
    import uvicorn

    from artexplore.service import create_app

    app = create_app(runtime.catalog, runtime.taxonomy, runtime.config)
    uvicorn.run(app, host=host, port=port if port is not None else runtime.config.port)


@main.command()
@click.pass_obj
def report(runtime: Runtime):
    """Usage report aggregated from the session event log."""
    result = usage.compute_usage_report(runtime.catalog.all_events())
    runtime.emit(result.to_dict(), result.format_text())


@main.group()
def snapshot():
    """Export or import catalog snapshots."""


@snapshot.command("export")
@click.argument("dest", type=click.Path(file_okay=False))
@click.pass_obj
def snapshot_export(runtime: Runtime, dest):
    runtime.catalog.export_snapshot(dest)
    runtime.emit({"exported_to": dest}, f"snapshot written to {dest}")


@snapshot.command("import")
@click.argument("src", type=click.Path(exists=True, file_okay=False))
@click.pass_obj
def snapshot_import(runtime: Runtime, src):
    with _locked(runtime):
        runtime.catalog.import_snapshot(src)
    runtime.emit({"imported_from": src}, f"snapshot imported from {src}")


@main.command()
@click.pass_obj
def openapi(runtime: Runtime):
    """Print the machine-readable API description (OpenAPI JSON)."""
    from artexplore.service import create_app

    app = create_app(runtime.catalog, runtime.taxonomy, runtime.config)
    click.echo(json.dumps(app.openapi(), sort_keys=True))


if __name__ == "__main__":  # pragma: no cover
    main()
