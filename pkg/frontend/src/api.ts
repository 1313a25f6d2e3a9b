// Thin typed client over the server API. The fetch function is injected so
// tests can intercept every request and assert what the UI consumed.

import type {
  EventsJson, LayerJson, MarksJson, MetaJson, PolygonsJson, TimeSeriesJson, TopicJson,
} from "./types";
import { ViewState, yearOf } from "./state";

export interface FetchResponse {
  ok: boolean;
  status: number;
  json(): Promise<unknown>;
}

export type FetchLike = (url: string, init?: { signal?: AbortSignal }) => Promise<FetchResponse>;

export class ApiError extends Error {
  constructor(public url: string, public status: number) {
    super(`request failed: ${status} ${url}`);
  }
}

export class ApiClient {
  constructor(
    private baseUrl: string = "",
    private fetchFn: FetchLike = (url, init) => fetch(url, init),
  ) {}

  buildUrl(path: string, params: Record<string, string | number | null | undefined> = {}): string {
    const search = new URLSearchParams();
    for (const key of Object.keys(params).sort()) {
      const value = params[key];
      if (value !== null && value !== undefined && value !== "") search.set(key, String(value));
    }
    const qs = search.toString();
    return this.baseUrl + path + (qs ? `?${qs}` : "");
  }

  private async get<T>(path: string, params: Record<string, string | number | null | undefined> = {},
                       signal?: AbortSignal): Promise<T> {
    const url = this.buildUrl(path, params);
    const response = await this.fetchFn(url, { signal });
    if (!response.ok) throw new ApiError(url, response.status);
    return (await response.json()) as T;
  }

  meta(signal?: AbortSignal): Promise<MetaJson> {
    return this.get("/api/meta", {}, signal);
  }

  polygons(signal?: AbortSignal): Promise<PolygonsJson> {
    return this.get("/api/polygons", {}, signal);
  }

  choropleth(state: ViewState, signal?: AbortSignal): Promise<LayerJson> {
    return this.get("/api/choropleth", {
      metric: state.metric,
      year: yearOf(state),
      scheme: state.scheme,
      topic: state.metric === "topic_prop" ? state.topic : null,
      table: state.metric === "topic_prop" ? state.table : null,
      model: state.metric === "topic_prop" ? state.model : null,
    }, signal);
  }

  marks(state: ViewState, signal?: AbortSignal): Promise<MarksJson> {
    return this.get("/api/marks", {
      topic: state.topic,
      threshold: state.threshold,
      year: yearOf(state),
      table: state.table,
      model: state.table ? null : state.model,
    }, signal);
  }

  timeline(scale: "monthly" | "yearly", fips?: string | null, signal?: AbortSignal): Promise<TimeSeriesJson> {
    return this.get("/api/timeline", { scale, fips }, signal);
  }

  events(state: ViewState, signal?: AbortSignal): Promise<EventsJson> {
    return this.get("/api/events", {
      from: state.from,
      to: state.to,
      fips: state.fips,
      model: state.model,
    }, signal);
  }

  topics(model?: string | null, signal?: AbortSignal): Promise<TopicJson[]> {
    return this.get("/api/topics", { model }, signal);
  }
}

/** Serializes UI refreshes: a newer run aborts / supersedes the previous one
 * and stale results are dropped (latest-wins). */
export class LatestWins {
  private generation = 0;
  private controller: AbortController | null = null;

  async run<T>(task: (signal?: AbortSignal) => Promise<T>): Promise<T | null> {
    const mine = ++this.generation;
    this.controller?.abort();
    this.controller = typeof AbortController !== "undefined" ? new AbortController() : null;
    const result = await task(this.controller?.signal);
    return mine === this.generation ? result : null;
  }
}
