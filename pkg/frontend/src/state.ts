// View state is URL-encodable so an analysis view is a shareable link.

export interface ViewState {
  from: string; // ISO date, inclusive
  to: string;
  topic: string; // topic id of a model table or a named table topic
  threshold: number; // mark cutoff, slider range [0, 1]
  metric: "count" | "topic_prop";
  scheme: "quantile" | "equal_interval";
  table: string | null; // named proportion table, when the store ships one
  model: string | null;
  fips: string | null; // selected county
  eventId: string | null; // selected event
}

export const STUDY_WINDOW = { from: "2000-01-01", to: "2011-12-31" };

export const DEFAULT_STATE: ViewState = {
  from: STUDY_WINDOW.from,
  to: STUDY_WINDOW.to,
  topic: "",
  threshold: 0.02,
  metric: "count",
  scheme: "quantile",
  table: null,
  model: null,
  fips: null,
  eventId: null,
};

function clampDate(value: string, fallback: string): string {
  if (!/^\d{4}-\d{2}-\d{2}$/.test(value)) return fallback;
  if (value < STUDY_WINDOW.from) return STUDY_WINDOW.from;
  if (value > STUDY_WINDOW.to) return STUDY_WINDOW.to;
  return value;
}

export function encodeViewState(state: ViewState): string {
  const params = new URLSearchParams();
  for (const key of Object.keys(state) as (keyof ViewState)[]) {
    const value = state[key];
    if (value === null || value === "" || value === undefined) continue;
    if (DEFAULT_STATE[key] === value) continue;
    params.set(key, String(value));
  }
  return params.toString();
}

export function decodeViewState(query: string): ViewState {
  const params = new URLSearchParams(query);
  const state: ViewState = { ...DEFAULT_STATE };
  state.from = clampDate(params.get("from") ?? state.from, state.from);
  state.to = clampDate(params.get("to") ?? state.to, state.to);
  if (state.to < state.from) [state.from, state.to] = [state.to, state.from];
  state.topic = params.get("topic") ?? state.topic;
  const thr = Number(params.get("threshold") ?? state.threshold);
  state.threshold = Number.isFinite(thr) ? Math.min(1, Math.max(0, thr)) : DEFAULT_STATE.threshold;
  const metric = params.get("metric");
  if (metric === "count" || metric === "topic_prop") state.metric = metric;
  const scheme = params.get("scheme");
  if (scheme === "quantile" || scheme === "equal_interval") state.scheme = scheme;
  state.table = params.get("table");
  state.model = params.get("model");
  state.fips = params.get("fips");
  state.eventId = params.get("eventId");
  return state;
}

export function yearOf(state: ViewState): number {
  // marks and the choropleth year scope track the start of the viewed range
  return Number(state.from.slice(0, 4));
}
