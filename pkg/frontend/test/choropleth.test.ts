import { describe, expect, it } from "vitest";

import { classOf, colorOf, featurePath, legendEntries, makeProjection, outlinedCounties, paintCounties } from "../src/choropleth";
import type { LayerJson, MarksJson, PolygonsJson } from "../src/types";
import { fixture } from "./helpers";

const layer: LayerJson = fixture("choropleth_2000.json");
const polygons: PolygonsJson = fixture("polygons.json");

describe("classification", () => {
  it("mirrors the server's upper-inclusive rule", () => {
    const breaks = [2, 4, 6, 8];
    expect(classOf(1, breaks)).toBe(0);
    expect(classOf(2, breaks)).toBe(0);
    expect(classOf(2.5, breaks)).toBe(1);
    expect(classOf(8, breaks)).toBe(3);
    expect(classOf(9, breaks)).toBe(4);
  });

  it("colors come verbatim from the layer payload", () => {
    for (const value of Object.values(layer.values)) {
      expect(layer.colors).toContain(colorOf(value, layer));
    }
  });

  it("legend has breaks + 1 entries with the layer's colors", () => {
    const entries = legendEntries(layer);
    expect(entries.length).toBe(layer.breaks.length + 1);
    expect(entries.map((e) => e.color)).toEqual(layer.colors);
  });
});

describe("map painting", () => {
  const project = makeProjection(polygons, 640, 420);

  it("projects into the viewport", () => {
    for (const f of polygons.features) {
      for (const [lon, lat] of f.geometry.coordinates[0]) {
        const [x, y] = project(lon, lat);
        expect(x).toBeGreaterThanOrEqual(0);
        expect(x).toBeLessThanOrEqual(640);
        expect(y).toBeGreaterThanOrEqual(0);
        expect(y).toBeLessThanOrEqual(420);
      }
    }
  });

  it("builds closed svg paths", () => {
    const path = featurePath(polygons.features[0], project);
    expect(path.startsWith("M")).toBe(true);
    expect(path.endsWith("Z")).toBe(true);
  });

  it("marks outline and missing values hatch", () => {
    const marks: MarksJson = fixture("marks_2000_t002.json");
    const paints = paintCounties(polygons, layer, marks, project);
    const outlined = paints.filter((p) => p.outlined).map((p) => p.fips).sort();
    expect(outlined).toEqual(["20035", "20155"]);
    const sparse: LayerJson = { ...layer, values: { "20035": 1 } };
    const hatched = paintCounties(polygons, sparse, marks, project).filter((p) => p.fill === null);
    expect(hatched.map((p) => p.fips).sort()).toEqual(["20021", "20037", "20155"]);
  });

  it("outline set equals the marks payload", () => {
    const marks: MarksJson = fixture("marks_2000_t000.json");
    expect([...outlinedCounties(marks)].sort()).toEqual([...marks.marked].sort());
  });
});
