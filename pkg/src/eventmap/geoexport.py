"""Byte-deterministic serializers: KML 2.2, GeoJSON (RFC 7946), timeline JSON."""

from __future__ import annotations

import json
from xml.etree import ElementTree as ET

from .errors import MissingRegionError
from .ingest import GeoEvent, geoevent_from_json, geoevent_to_json
from .thematic import ChoroplethLayer, TimeSeries

KML_NS = "http://www.opengis.net/kml/2.2"


def write_kml(events: list[GeoEvent]) -> bytes:
    """One Placemark per event, input order preserved; coordinates are
    lon,lat,0 per the KML axis order."""
    root = ET.Element("kml", {"xmlns": KML_NS})
    doc = ET.SubElement(root, "Document")
    folder = ET.SubElement(doc, "Folder")
    ET.SubElement(folder, "name").text = "events"
    for ev in events:
        pm = ET.SubElement(folder, "Placemark")
        ET.SubElement(pm, "name").text = ev.id
        ET.SubElement(pm, "description").text = (
            f"{ev.event_type} | {ev.county_name}, {ev.state} | {ev.date.isoformat()}: {ev.report_text[:200]}"
        )
        ts = ET.SubElement(pm, "TimeStamp")
        ET.SubElement(ts, "when").text = ev.date.isoformat()
        point = ET.SubElement(pm, "Point")
        ET.SubElement(point, "coordinates").text = f"{ev.lon!r},{ev.lat!r},0"
    return ET.tostring(root, encoding="UTF-8", xml_declaration=True)


def write_geojson(events: list[GeoEvent]) -> bytes:
    """Point FeatureCollection carrying every event field in properties."""
    features = []
    for ev in events:
        props = geoevent_to_json(ev)
        lon, lat = props.pop("lon"), props.pop("lat")
        features.append(
            {
                "type": "Feature",
                "geometry": {"type": "Point", "coordinates": [lon, lat]},
                "properties": props,
            }
        )
    payload = {"type": "FeatureCollection", "features": features}
    return json.dumps(payload, separators=(",", ":"), ensure_ascii=False).encode("utf-8")


def parse_geojson_events(data: bytes) -> list[GeoEvent]:
    obj = json.loads(data.decode("utf-8"))
    if obj.get("type") != "FeatureCollection":
        raise ValueError("expected a FeatureCollection")
    events = []
    for feat in obj.get("features", []):
        props = dict(feat["properties"])
        lon, lat = feat["geometry"]["coordinates"]
        props["lon"], props["lat"] = lon, lat
        events.append(geoevent_from_json(props))
    return events


def write_layer_geojson(layer: ChoroplethLayer, polygons: bytes | dict) -> bytes:
    """Join layer values against county polygons keyed by properties.fips;
    every layer region must have a polygon."""
    obj = json.loads(polygons.decode("utf-8")) if isinstance(polygons, (bytes, bytearray)) else polygons
    by_fips = {}
    for feat in obj.get("features", []):
        fips = str(feat.get("properties", {}).get("fips", feat.get("id", "")))
        if fips:
            by_fips[fips] = feat
    missing = [f for f in layer.values if f not in by_fips]
    if missing:
        raise MissingRegionError(missing)
    features = []
    for fips in sorted(layer.values):
        value = layer.values[fips]
        src = by_fips[fips]
        features.append(
            {
                "type": "Feature",
                "geometry": src["geometry"],
                "properties": {
                    "fips": fips,
                    "value": value,
                    "class": layer.class_of(value),
                    "color": layer.color_of(value),
                },
            }
        )
    payload = {"type": "FeatureCollection", "features": features}
    return json.dumps(payload, separators=(",", ":"), ensure_ascii=False).encode("utf-8")


def write_timeline_json(series: TimeSeries) -> bytes:
    """Fixed key order: {"scale": ..., "series": [[label, count], ...]}."""
    items = ",".join('["%s",%d]' % (label, count) for label, count in series.series)
    return ('{"scale":"%s","series":[%s]}' % (series.scale, items)).encode("utf-8")
