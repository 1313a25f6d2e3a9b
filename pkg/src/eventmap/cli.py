"""Command line entry point driving the full pipeline."""

from __future__ import annotations

import json
import sys
from datetime import date
from pathlib import Path

import click

from . import geoexport, relevance, thematic
from .config import AppConfig
from .ingest import bundled_gazetteer, georeference_all, load_gazetteer, parse_records, serialize_records
from .server import create_app
from .store import EventFilter, EventStore, FitSpec
from .synth import SynthProfile, synth_events


@click.group()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None,
              help="JSON config (store/polygons/stopwords paths and defaults).")
@click.pass_context
def main(ctx: click.Context, config_path: str | None):
    """Spatiotemporal event mining: ingest reports, fit topic models, map them."""
    if config_path:
        ctx.obj = AppConfig.load(config_path)
    elif Path("eventmap.json").exists():
        ctx.obj = AppConfig.load("eventmap.json")
    else:
        ctx.obj = AppConfig()


@main.command()
@click.option("--input", "input_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--format", "fmt", type=click.Choice(["csv", "jsonl"]), default="csv")
@click.option("--gazetteer", "gazetteer_path", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Gazetteer CSV; defaults to the bundled Kansas county file.")
@click.pass_obj
def ingest(cfg: AppConfig, input_path: str, fmt: str, gazetteer_path: str | None):
    """Parse, georeference, and append events to the store."""
    gaz = load_gazetteer(Path(gazetteer_path).read_bytes()) if gazetteer_path else bundled_gazetteer()
    result = parse_records(Path(input_path).read_bytes(), fmt)
    for err in result.errors:
        click.echo(f"row {err.line}: {err.message}", err=True)
    geo, unresolved = georeference_all(result.events, gaz)
    for err in unresolved:
        click.echo(f"event #{err.line}: {err.message}", err=True)
    report = EventStore(cfg.store_path).ingest(geo)
    click.echo(f"appended {report.appended} events"
               + (f", rejected {len(report.duplicates)} duplicate id(s)" if report.duplicates else ""))


@main.command()
@click.option("--profile", "profile_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--seed", type=int, default=0)
@click.option("--out", "out_path", type=click.Path(dir_okay=False), default=None,
              help="Also write the generated events as CSV.")
@click.pass_obj
def synth(cfg: AppConfig, profile_path: str, seed: int, out_path: str | None):
    """Generate a synthetic event collection and ingest it into the store."""
    profile = SynthProfile.from_json(Path(profile_path).read_text(encoding="utf-8"))
    events = synth_events(profile, seed)
    if out_path:
        Path(out_path).write_bytes(serialize_records(events, "csv"))
    report = EventStore(cfg.store_path).ingest(events)
    click.echo(f"generated {len(events)} events, appended {report.appended}")


@main.command()
@click.option("--model", "model_kind", type=click.Choice(["lda", "cdtm"]), default="lda")
@click.option("--k", type=int, required=True)
@click.option("--seed", type=int, default=0)
@click.option("--iterations", type=int, default=None)
@click.option("--burn-in", type=int, default=None)
@click.option("--alpha", type=float, default=None)
@click.option("--eta", type=float, default=None)
@click.option("--sigma2-rate", type=float, default=None)
@click.option("--v0", type=float, default=None)
@click.option("--max-iters", type=int, default=None)
@click.option("--tol", type=float, default=None)
@click.option("--min-count", type=int, default=1)
@click.pass_obj
def fit(cfg: AppConfig, model_kind: str, k: int, seed: int, min_count: int, **options):
    """Fit a topic model on the stored events (synchronous)."""
    lda_keys = {"iterations", "burn_in", "alpha", "eta"}
    cdtm_keys = {"alpha", "sigma2_rate", "v0", "max_iters", "tol"}
    keys = lda_keys if model_kind == "lda" else cdtm_keys
    params = {name: value for name, value in options.items() if value is not None and name in keys}
    spec = FitSpec(model=model_kind, k=k, seed=seed, params=params,
                   min_count=min_count, stopwords_path=cfg.stopwords_path)
    model_id = EventStore(cfg.store_path).run_fit(spec)
    click.echo(model_id)


@main.command()
@click.option("--topic", required=True)
@click.option("--threshold", type=float, default=0.02)
@click.option("--year", type=int, required=True)
@click.option("--model", "model_id", default=None)
@click.option("--table", "table_path", type=click.Path(exists=True, dir_okay=False), default=None,
              help="ProportionTable CSV to mark against instead of a fitted model.")
@click.pass_obj
def mark(cfg: AppConfig, topic: str, threshold: float, year: int, model_id: str | None, table_path: str | None):
    """List counties whose topic proportion exceeds the threshold."""
    if table_path:
        table = relevance.load_table(Path(table_path).read_bytes())
    else:
        store = EventStore(cfg.store_path)
        loaded = store.load_model(model_id or store.latest_model_id())
        table = relevance.build_table(loaded.theta, store.events[: loaded.theta.shape[0]])
    marked = relevance.mark_events(table, topic, threshold, year)
    for fips in sorted(f for f, _ in marked):
        click.echo(fips)


@main.command()
@click.option("--year", type=int, default=None)
@click.option("--metric", type=click.Choice(["count", "topic_prop"]), default="count")
@click.option("--topic", default=None)
@click.option("--model", "model_id", default=None)
@click.option("--classes", type=int, default=5)
@click.option("--scheme", type=click.Choice(["quantile", "equal_interval"]), default="quantile")
@click.option("--ramp", type=click.Choice(sorted(thematic.RAMPS)), default="sequential_red")
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@click.pass_obj
def choropleth(cfg: AppConfig, year, metric, topic, model_id, classes, scheme, ramp, out_path):
    """Write a classified county layer as JSON."""
    store = EventStore(cfg.store_path)
    if metric == "count":
        values = thematic.aggregate_counts(store.events, year)
    else:
        if topic is None:
            raise click.UsageError("--metric topic_prop needs --topic")
        loaded = store.load_model(model_id or store.latest_model_id())
        table = relevance.build_table(loaded.theta, store.events[: loaded.theta.shape[0]])
        values = thematic.aggregate_topic_prop(table, topic, year)
    layer = thematic.build_layer(values, metric=metric, scheme=scheme, n_classes=classes,
                                 ramp=ramp, scope=str(year) if year is not None else "all")
    Path(out_path).write_bytes(layer.to_json())
    click.echo(f"wrote {out_path} ({len(values)} regions)")


@main.command()
@click.option("--format", "fmt", type=click.Choice(["kml", "geojson"]), required=True)
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@click.option("--from", "date_from", default=None)
@click.option("--to", "date_to", default=None)
@click.option("--fips", default=None)
@click.option("--event-type", default=None)
@click.pass_obj
def export(cfg: AppConfig, fmt, out_path, date_from, date_to, fips, event_type):
    """Export filtered events as KML or GeoJSON."""
    store = EventStore(cfg.store_path)
    flt = EventFilter(
        date_from=date.fromisoformat(date_from) if date_from else None,
        date_to=date.fromisoformat(date_to) if date_to else None,
        fips=fips,
        event_type=event_type,
    )
    events = store.query(flt)
    data = geoexport.write_kml(events) if fmt == "kml" else geoexport.write_geojson(events)
    Path(out_path).write_bytes(data)
    click.echo(f"wrote {out_path} ({len(events)} events)")


@main.command()
@click.option("--port", type=int, default=8000)
@click.option("--host", default="127.0.0.1")
@click.option("--polygons", "polygons_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--webui", "webui_dir", type=click.Path(exists=True, file_okay=False), default=None,
              help="Serve a built web client from this directory at /.")
@click.pass_obj
def serve(cfg: AppConfig, port: int, host: str, polygons_path: str | None, webui_dir: str | None):
    """Run the HTTP query service."""
    import uvicorn

    if polygons_path:
        cfg.polygons_path = polygons_path
    app = create_app(cfg, webui_dir=webui_dir)
    uvicorn.run(app, host=host, port=port, log_level="info")


@main.command("demo-polygons")
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@click.option("--size", type=float, default=0.3, help="Square side length in degrees.")
def demo_polygons(out_path: str, size: float):
    """Emit square demo polygons around each bundled county centroid."""
    gaz = bundled_gazetteer()
    h = size / 2.0
    features = []
    for fips in sorted(gaz.by_fips):
        e = gaz.by_fips[fips]
        ring = [
            [e.lon - h, e.lat - h], [e.lon + h, e.lat - h],
            [e.lon + h, e.lat + h], [e.lon - h, e.lat + h], [e.lon - h, e.lat - h],
        ]
        features.append({
            "type": "Feature",
            "geometry": {"type": "Polygon", "coordinates": [ring]},
            "properties": {"fips": fips, "name": e.county_name, "state": e.state},
        })
    payload = {"type": "FeatureCollection", "features": features}
    Path(out_path).write_text(json.dumps(payload, separators=(",", ":")), encoding="utf-8")
    click.echo(f"wrote {out_path} ({len(features)} polygons)")


if __name__ == "__main__":
    main(sys.argv[1:])
