// DOM wiring. All analytics arrive from the server; this file only renders
// payloads and routes interactions back into view-state changes.

import { ApiClient, LatestWins } from "./api";
import { legendEntries, makeProjection, paintCounties, Project } from "./choropleth";
import { barModel, rangeForBucket, seriesTotal } from "./timeline";
import { popupModel } from "./popup";
import { DEFAULT_STATE, ViewState, decodeViewState, encodeViewState } from "./state";
import type { EventsJson, PolygonsJson, TopicJson } from "./types";

const SVG_NS = "http://www.w3.org/2000/svg";

const api = new ApiClient("");
const refresh = new LatestWins();

let state: ViewState = decodeViewState(location.search.slice(1));
let polygons: PolygonsJson | null = null;
let topics: TopicJson[] | null = null;
let project: Project | null = null;
let lastEvents: EventsJson | null = null;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

function setState(patch: Partial<ViewState>) {
  state = { ...state, ...patch };
  const qs = encodeViewState(state);
  history.replaceState(null, "", qs ? `?${qs}` : location.pathname);
  void render();
}

function showError(message: string | null) {
  const banner = el<HTMLDivElement>("error-banner");
  banner.textContent = message ?? "";
  banner.style.display = message ? "block" : "none";
}

function renderMap(paints: ReturnType<typeof paintCounties>, events: EventsJson) {
  const svg = el<HTMLElement>("map");
  svg.innerHTML =
    '<defs><pattern id="nodata" width="6" height="6" patternUnits="userSpaceOnUse">' +
    '<path d="M0,6 L6,0" stroke="#bbb" stroke-width="1"/></pattern></defs>';
  for (const paint of paints) {
    const path = document.createElementNS(SVG_NS, "path");
    path.setAttribute("d", paint.path);
    path.setAttribute("fill", paint.fill ?? "url(#nodata)");
    path.setAttribute("stroke", paint.outlined ? "#d62728" : "#666");
    path.setAttribute("stroke-width", paint.outlined ? "3" : "0.7");
    path.setAttribute("data-fips", paint.fips);
    path.addEventListener("click", () => setState({ fips: paint.fips, eventId: null }));
    const tip = document.createElementNS(SVG_NS, "title");
    tip.textContent = paint.value === null ? `${paint.fips}: no data` : `${paint.fips}: ${paint.value}`;
    path.appendChild(tip);
    svg.appendChild(path);
  }
  if (!project) return;
  // one point per in-view event (clustered at the county centroid); clicking
  // a point opens its drill-down popup
  const byPlace = new Map<string, number>();
  for (const ev of events.events.slice(0, 500)) {
    const [cx, cy] = project(ev.lon, ev.lat);
    const stack = byPlace.get(`${cx},${cy}`) ?? 0;
    byPlace.set(`${cx},${cy}`, stack + 1);
    const dot = document.createElementNS(SVG_NS, "circle");
    dot.setAttribute("cx", String(cx + (stack % 5) * 3));
    dot.setAttribute("cy", String(cy - Math.floor(stack / 5) * 3));
    dot.setAttribute("r", ev.id === state.eventId ? "5" : "3");
    dot.setAttribute("class", ev.id === state.eventId ? "event-dot selected" : "event-dot");
    dot.addEventListener("click", (e) => {
      e.stopPropagation();
      setState({ eventId: ev.id });
    });
    const tip = document.createElementNS(SVG_NS, "title");
    tip.textContent = `${ev.id}: ${ev.date} ${ev.county} (${ev.event_type})`;
    dot.appendChild(tip);
    svg.appendChild(dot);
  }
}

function renderLegend(entries: { color: string; label: string }[]) {
  const box = el<HTMLDivElement>("legend");
  box.innerHTML = "";
  for (const entry of entries) {
    const row = document.createElement("div");
    row.className = "legend-row";
    const swatch = document.createElement("span");
    swatch.className = "swatch";
    swatch.style.background = entry.color;
    row.append(swatch, document.createTextNode(entry.label));
    box.appendChild(row);
  }
}

function renderTimeline(id: string, bars: ReturnType<typeof barModel>, total: number, scale: string) {
  const svg = el<HTMLElement>(id);
  svg.innerHTML = "";
  for (const bar of bars) {
    const rect = document.createElementNS(SVG_NS, "rect");
    rect.setAttribute("x", String(bar.x));
    rect.setAttribute("y", String(bar.y));
    rect.setAttribute("width", String(bar.width));
    rect.setAttribute("height", String(bar.height));
    rect.setAttribute("class", "bar");
    rect.addEventListener("click", () => setState({ ...rangeForBucket(bar.label), eventId: null }));
    const tip = document.createElementNS(SVG_NS, "title");
    tip.textContent = `${bar.label}: ${bar.count}`;
    rect.appendChild(tip);
    svg.appendChild(rect);
  }
  el<HTMLSpanElement>(`${id}-total`).textContent = `${scale} total: ${total}`;
}

function renderEventList(payload: EventsJson) {
  lastEvents = payload;
  el<HTMLSpanElement>("event-count").textContent = String(payload.count);
  const list = el<HTMLUListElement>("event-list");
  list.innerHTML = "";
  if (payload.count === 0) {
    const li = document.createElement("li");
    li.textContent = "no events";
    list.appendChild(li);
    return;
  }
  for (const ev of payload.events.slice(0, 200)) {
    const li = document.createElement("li");
    const link = document.createElement("a");
    link.href = "#";
    link.textContent = `${ev.date} ${ev.county} (${ev.event_type})`;
    link.addEventListener("click", (e) => {
      e.preventDefault();
      setState({ eventId: ev.id });
    });
    li.appendChild(link);
    list.appendChild(li);
  }
}

function renderPopup() {
  const box = el<HTMLDivElement>("popup");
  const ev = lastEvents?.events.find((candidate) => candidate.id === state.eventId);
  if (!state.eventId || !ev) {
    box.style.display = "none";
    return;
  }
  const model = popupModel(ev, topics);
  box.style.display = "block";
  box.innerHTML = "";
  const h3 = document.createElement("h3");
  h3.textContent = model.title;
  box.appendChild(h3);
  const dl = document.createElement("dl");
  for (const [key, value] of model.fields) {
    const dt = document.createElement("dt");
    dt.textContent = key;
    const dd = document.createElement("dd");
    dd.textContent = value;
    dl.append(dt, dd);
  }
  box.appendChild(dl);
  for (const bar of model.bars) {
    const row = document.createElement("div");
    row.className = "theta-row";
    const fill = document.createElement("span");
    fill.className = "theta-bar";
    fill.style.width = `${Math.round(bar.value * 100)}%`;
    const label = document.createElement("span");
    label.textContent = `${bar.label} ${(bar.value * 100).toFixed(1)}%`;
    row.append(fill, label);
    box.appendChild(row);
  }
}

async function render() {
  el<HTMLInputElement>("threshold").value = String(state.threshold);
  el<HTMLSpanElement>("threshold-value").textContent = state.threshold.toFixed(3);
  el<HTMLSpanElement>("range-label").textContent = `${state.from} .. ${state.to}`;
  const result = await refresh.run(async (signal) => {
    const [layer, marks, monthly, yearly, events] = await Promise.all([
      api.choropleth(state, signal),
      state.topic ? api.marks(state, signal) : Promise.resolve({ topic: "", threshold: state.threshold, year: 0, marked: [] }),
      api.timeline("monthly", state.fips, signal),
      api.timeline("yearly", state.fips, signal),
      api.events(state, signal),
    ]);
    return { layer, marks, monthly, yearly, events };
  }).catch((err) => {
    showError(`server error: ${err instanceof Error ? err.message : err}`);
    return null;
  });
  if (!result) return; // superseded by a newer state change, or errored (keep last view)
  showError(null);
  lastEvents = result.events;
  if (polygons && project) {
    renderMap(paintCounties(polygons, result.layer, result.marks, project), result.events);
    renderLegend(legendEntries(result.layer));
  }
  renderTimeline("timeline-monthly", barModel(result.monthly, 560, 70), seriesTotal(result.monthly), "monthly");
  renderTimeline("timeline-yearly", barModel(result.yearly, 560, 70), seriesTotal(result.yearly), "yearly");
  renderEventList(result.events);
  renderPopup();
}

async function boot() {
  try {
    const meta = await api.meta();
    const table = meta.tables[0] ?? null;
    const model = meta.models.length ? meta.models[meta.models.length - 1] : null;
    const topicNames = table ? meta.topics_by_table[table] : [];
    if (model) topics = await api.topics(model);
    const select = el<HTMLSelectElement>("topic");
    const options = table ? topicNames : (topics ?? []).map((t) => `${t.topic_id}`);
    const labels = table ? topicNames : (topics ?? []).map((t) => `${t.topic_id}: ${t.label}`);
    options.forEach((value, i) => {
      const option = document.createElement("option");
      option.value = value;
      option.textContent = labels[i];
      select.appendChild(option);
    });
    if (!state.topic && options.length) state.topic = options[0];
    if (!state.table) state.table = table;
    if (!state.model) state.model = model;
    select.value = state.topic;
    polygons = await api.polygons();
    project = makeProjection(polygons, 640, 420);
  } catch (err) {
    showError(`failed to load store metadata: ${err instanceof Error ? err.message : err}`);
  }

  el<HTMLInputElement>("threshold").addEventListener("input", (e) => {
    setState({ threshold: Number((e.target as HTMLInputElement).value) });
  });
  el<HTMLSelectElement>("topic").addEventListener("change", (e) => {
    setState({ topic: (e.target as HTMLSelectElement).value });
  });
  el<HTMLButtonElement>("reset-range").addEventListener("click", () => {
    setState({ from: DEFAULT_STATE.from, to: DEFAULT_STATE.to, fips: null, eventId: null });
  });
  await render();
}

void boot();
