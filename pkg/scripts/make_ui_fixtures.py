"""Freeze live API payloads for the web client's test suite.

Builds the table1 demo store (one report per reference county-year cell),
fits a tiny model for theta bars, and records each endpoint response the UI
consumes into frontend/test/fixtures/.
"""

import json
import sys
from datetime import date
from pathlib import Path
from tempfile import TemporaryDirectory

from fastapi.testclient import TestClient

from eventmap.config import AppConfig
from eventmap.ingest import GeoEvent, bundled_gazetteer
from eventmap.server import create_app
from eventmap.store import EventStore, FitSpec

REPO = Path(__file__).resolve().parents[1]
OUT = REPO / "frontend" / "test" / "fixtures"
TOPIC = "Abandoned dump site"

TEXTS = [
    "abandoned dump site residue barrels solvent stains",
    "meth lab seizure tanks acetone equipment",
    "anhydrous ammonia theft farm supply report",
    "dump site cleanup contaminated debris",
]


def build_store(path: Path) -> EventStore:
    gaz = bundled_gazetteer()
    store = EventStore(path)
    events = []
    n = 0
    for fips in ("20035", "20037", "20021", "20155"):
        entry = gaz.by_fips[fips]
        for year in (2000, 2002, 2004, 2006, 2008, 2010):
            events.append(
                GeoEvent(
                    id=f"{fips}-{year}", date=date(year, 5, 15), state=entry.state,
                    county_name=entry.county_name, address=None,
                    event_type="dump-site" if n % 2 == 0 else "lab-seizure",
                    report_text=TEXTS[n % len(TEXTS)],
                    fips=fips, lat=entry.lat, lon=entry.lon,
                )
            )
            n += 1
    store.ingest(events)
    return store


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    with TemporaryDirectory() as tmp:
        tmp_path = Path(tmp)
        store = build_store(tmp_path / "store")
        model_id = store.run_fit(FitSpec(model="lda", k=2, seed=1, params={"iterations": 80, "burn_in": 40}))

        poly_path = tmp_path / "polygons.geojson"
        gaz = bundled_gazetteer()
        features = []
        for fips in ("20035", "20037", "20021", "20155"):
            e = gaz.by_fips[fips]
            h = 0.25
            ring = [[e.lon - h, e.lat - h], [e.lon + h, e.lat - h], [e.lon + h, e.lat + h],
                    [e.lon - h, e.lat + h], [e.lon - h, e.lat - h]]
            features.append({"type": "Feature", "geometry": {"type": "Polygon", "coordinates": [ring]},
                             "properties": {"fips": fips, "name": e.county_name}})
        poly_path.write_text(json.dumps({"type": "FeatureCollection", "features": features}))

        app = create_app(AppConfig(
            store_path=str(tmp_path / "store"),
            polygons_path=str(poly_path),
            tables={"table1": str(REPO / "fixtures" / "table1.csv")},
        ))
        client = TestClient(app)

        def save(name: str, path: str, params: dict | None = None) -> None:
            r = client.get(path, params=params)
            assert r.status_code == 200, (path, r.status_code, r.text)
            (OUT / name).write_bytes(r.content)
            print(f"wrote {name} ({len(r.content)} bytes)")

        save("meta.json", "/api/meta")
        save("polygons.json", "/api/polygons")
        save("choropleth_2000.json", "/api/choropleth",
             {"metric": "count", "year": 2000, "classes": 5, "scheme": "quantile"})
        save("choropleth_all.json", "/api/choropleth", {"metric": "count", "classes": 5, "scheme": "quantile"})
        for thr, tag in ((0.0, "000"), (0.02, "002"), (0.0348, "0348"), (1.0, "100")):
            save(f"marks_2000_t{tag}.json", "/api/marks",
                 {"table": "table1", "topic": TOPIC, "threshold": thr, "year": 2000})
        save("timeline_monthly.json", "/api/timeline", {"scale": "monthly"})
        save("timeline_yearly.json", "/api/timeline", {"scale": "yearly"})
        save("events_2000.json", "/api/events",
             {"from": "2000-01-01", "to": "2000-12-31", "model": model_id})
        save("topics.json", "/api/topics", {"model": model_id})
        (OUT / "model_id.json").write_text(json.dumps({"model": model_id}))
        print("model:", model_id)


if __name__ == "__main__":
    sys.exit(main())
