// Choropleth view model: class assignment, legend, mark outlines, and SVG
// path building under a simple linear (plate carrée) projection. Colors and
// breaks come from the layer payload verbatim.

import type { LayerJson, MarksJson, PolygonFeature, PolygonsJson } from "./types";

/** Class index with upper-inclusive bounds: the count of breaks strictly
 * below the value (mirrors the server's classification rule). */
export function classOf(value: number, breaks: number[]): number {
  let c = 0;
  for (const b of breaks) if (b < value) c += 1;
  return c;
}

export function colorOf(value: number, layer: LayerJson): string {
  return layer.colors[classOf(value, layer.breaks)];
}

export interface LegendEntry {
  color: string;
  label: string;
}

export function legendEntries(layer: LayerJson): LegendEntry[] {
  const entries: LegendEntry[] = [];
  for (let i = 0; i < layer.colors.length; i++) {
    const lo = i === 0 ? "min" : String(layer.breaks[i - 1]);
    const hi = i === layer.breaks.length ? "max" : String(layer.breaks[i]);
    entries.push({ color: layer.colors[i], label: i === 0 ? `≤ ${hi}` : `${lo} – ${hi}` });
  }
  return entries;
}

export function outlinedCounties(marks: MarksJson): Set<string> {
  return new Set(marks.marked);
}

export interface CountyPaint {
  fips: string;
  path: string;
  fill: string | null; // null = no data (rendered hatched)
  outlined: boolean;
  value: number | null;
}

export type Project = (lon: number, lat: number) => [number, number];

export function makeProjection(polygons: PolygonsJson, width: number, height: number, pad = 10): Project {
  let minLon = Infinity, maxLon = -Infinity, minLat = Infinity, maxLat = -Infinity;
  for (const f of polygons.features) {
    for (const ring of f.geometry.coordinates) {
      for (const [lon, lat] of ring) {
        minLon = Math.min(minLon, lon); maxLon = Math.max(maxLon, lon);
        minLat = Math.min(minLat, lat); maxLat = Math.max(maxLat, lat);
      }
    }
  }
  const sx = (width - 2 * pad) / Math.max(1e-9, maxLon - minLon);
  const sy = (height - 2 * pad) / Math.max(1e-9, maxLat - minLat);
  const s = Math.min(sx, sy);
  return (lon, lat) => [pad + (lon - minLon) * s, height - pad - (lat - minLat) * s];
}

export function featurePath(feature: PolygonFeature, project: Project): string {
  const parts: string[] = [];
  for (const ring of feature.geometry.coordinates) {
    ring.forEach(([lon, lat], i) => {
      const [x, y] = project(lon, lat);
      parts.push(`${i === 0 ? "M" : "L"}${x.toFixed(2)},${y.toFixed(2)}`);
    });
    parts.push("Z");
  }
  return parts.join("");
}

/** Join polygons, layer values, and marks into paint instructions; counties
 * without a value stay unfilled so the renderer can hatch them. */
export function paintCounties(
  polygons: PolygonsJson,
  layer: LayerJson,
  marks: MarksJson,
  project: Project,
): CountyPaint[] {
  const outlined = outlinedCounties(marks);
  return polygons.features.map((f) => {
    const fips = f.properties.fips;
    const value = fips in layer.values ? layer.values[fips] : null;
    return {
      fips,
      path: featurePath(f, project),
      fill: value === null ? null : colorOf(value, layer),
      outlined: outlined.has(fips),
      value,
    };
  });
}
