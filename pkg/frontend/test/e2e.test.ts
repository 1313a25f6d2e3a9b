// End-to-end view check against payloads recorded from the Table-1 demo
// store: the slider at 0.02 must outline exactly Cowley (20035) and Reno
// (20155) for year 2000, a maxed slider outlines nothing, and every number
// the UI would display is equal to a field of an intercepted response.

import { describe, expect, it } from "vitest";

import { ApiClient } from "../src/api";
import { legendEntries, makeProjection, paintCounties } from "../src/choropleth";
import { popupModel } from "../src/popup";
import { DEFAULT_STATE, ViewState } from "../src/state";
import { barModel, seriesTotal } from "../src/timeline";
import type { EventsJson, LayerJson, MetaJson, PolygonsJson, TimeSeriesJson, TopicJson } from "../src/types";
import { fixture, stubFetch } from "./helpers";

const MODEL = fixture<{ model: string }>("model_id.json").model;
const TOPIC = "Abandoned dump site";
const TOPIC_Q = "Abandoned+dump+site";

const ROUTES: Record<string, string> = {
  "/api/meta": "meta.json",
  "/api/polygons": "polygons.json",
  [`/api/topics?model=${MODEL}`]: "topics.json",
  "/api/choropleth?metric=count&scheme=quantile&year=2000": "choropleth_2000.json",
  [`/api/marks?table=table1&threshold=0&topic=${TOPIC_Q}&year=2000`]: "marks_2000_t000.json",
  [`/api/marks?table=table1&threshold=0.02&topic=${TOPIC_Q}&year=2000`]: "marks_2000_t002.json",
  [`/api/marks?table=table1&threshold=0.0348&topic=${TOPIC_Q}&year=2000`]: "marks_2000_t0348.json",
  [`/api/marks?table=table1&threshold=1&topic=${TOPIC_Q}&year=2000`]: "marks_2000_t100.json",
  "/api/timeline?scale=monthly": "timeline_monthly.json",
  "/api/timeline?scale=yearly": "timeline_yearly.json",
  [`/api/events?from=2000-01-01&model=${MODEL}&to=2000-12-31`]: "events_2000.json",
};

function demoState(threshold: number): ViewState {
  return {
    ...DEFAULT_STATE,
    from: "2000-01-01",
    to: "2000-12-31",
    topic: TOPIC,
    table: "table1",
    model: MODEL,
    threshold,
  };
}

describe("table-1 demo end to end", () => {
  it("threshold 0.02 outlines exactly Cowley and Reno for year 2000", async () => {
    const stub = stubFetch(ROUTES);
    const client = new ApiClient("", stub.fetchFn);
    const polygons = await client.polygons();
    const layer = await client.choropleth(demoState(0.02));
    const marks = await client.marks(demoState(0.02));
    const paints = paintCounties(polygons, layer, marks, makeProjection(polygons, 640, 420));
    const outlined = paints.filter((p) => p.outlined).map((p) => p.fips).sort();
    expect(outlined).toEqual(["20035", "20155"]);
  });

  it("a maxed slider outlines no counties", async () => {
    const stub = stubFetch(ROUTES);
    const client = new ApiClient("", stub.fetchFn);
    const marks = await client.marks(demoState(1.0));
    expect(marks.marked).toEqual([]);
  });

  it("raising the slider never adds outlined counties", async () => {
    const stub = stubFetch(ROUTES);
    const client = new ApiClient("", stub.fetchFn);
    let previous: string[] | null = null;
    for (const threshold of [0.0, 0.02, 0.0348, 1.0]) {
      const marks = await client.marks(demoState(threshold));
      if (previous !== null) {
        for (const fips of marks.marked) expect(previous).toContain(fips);
        expect(marks.marked.length).toBeLessThanOrEqual(previous.length);
      }
      previous = marks.marked;
    }
    expect(previous).toEqual([]);
  });

  it("every displayed number equals a field of an intercepted payload", async () => {
    const stub = stubFetch(ROUTES);
    const client = new ApiClient("", stub.fetchFn);

    const meta = await client.meta();
    const rawMeta = fixture<MetaJson>("meta.json");
    expect(meta.events).toBe(rawMeta.events);

    const monthly = await client.timeline("monthly");
    const yearly = await client.timeline("yearly");
    const rawMonthly = fixture<TimeSeriesJson>("timeline_monthly.json");
    const rawYearly = fixture<TimeSeriesJson>("timeline_yearly.json");
    // the totals the strips display are exactly the payload sums, and agree
    expect(seriesTotal(monthly)).toBe(rawMonthly.series.reduce((a, [, c]) => a + c, 0));
    expect(seriesTotal(yearly)).toBe(rawYearly.series.reduce((a, [, c]) => a + c, 0));
    expect(seriesTotal(monthly)).toBe(seriesTotal(yearly));
    for (const bar of barModel(monthly, 560, 70)) {
      expect(bar.count).toBe(rawMonthly.series.find(([l]) => l === bar.label)?.[1]);
    }

    const layer = await client.choropleth(demoState(0.02));
    const rawLayer = fixture<LayerJson>("choropleth_2000.json");
    expect(legendEntries(layer).map((e) => e.color)).toEqual(rawLayer.colors);
    expect(legendEntries(layer).length).toBe(rawLayer.breaks.length + 1);
    const polygons = fixture<PolygonsJson>("polygons.json");
    const paints = paintCounties(polygons, layer, await client.marks(demoState(0.02)),
                                 makeProjection(polygons, 640, 420));
    for (const paint of paints) {
      expect(paint.value).toBe(paint.fips in rawLayer.values ? rawLayer.values[paint.fips] : null);
    }

    const events = await client.events(demoState(0.02));
    const rawEvents = fixture<EventsJson>("events_2000.json");
    expect(events.count).toBe(rawEvents.count);

    // popup fields come verbatim from the event payload
    const topics = await client.topics(MODEL);
    const rawTopics = fixture<TopicJson[]>("topics.json");
    const ev = events.events[0];
    const raw = rawEvents.events[0];
    const popup = popupModel(ev, topics);
    const fields = Object.fromEntries(popup.fields);
    expect(fields["county"]).toBe(raw.county);
    expect(fields["date"]).toBe(raw.date);
    expect(fields["event type"]).toBe(raw.event_type);
    expect(popup.bars.map((b) => b.value)).toEqual(raw.theta);
    expect(popup.bars.map((b) => b.label)).toEqual(rawTopics.map((t) => `${t.topic_id}: ${t.label}`));

    // nothing was fetched outside the recorded routes
    for (const url of stub.requested) expect(ROUTES[url]).toBeDefined();
  });
});
