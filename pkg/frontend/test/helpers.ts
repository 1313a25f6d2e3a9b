// Fixture-backed fetch stub: every request the UI makes must resolve to a
// payload recorded from the real server, and each hit is logged so tests can
// prove what was consumed.

import { readFileSync } from "node:fs";
import type { FetchLike, FetchResponse } from "../src/api";

export function fixture<T = unknown>(name: string): T {
  const path = new URL(`./fixtures/${name}`, import.meta.url);
  return JSON.parse(readFileSync(path, "utf8")) as T;
}

export interface StubFetch {
  fetchFn: FetchLike;
  requested: string[];
}

export function stubFetch(routes: Record<string, string>): StubFetch {
  const requested: string[] = [];
  const fetchFn: FetchLike = async (url: string): Promise<FetchResponse> => {
    requested.push(url);
    const file = routes[url];
    if (!file) {
      return { ok: false, status: 404, json: async () => ({ error: `no fixture for ${url}` }) };
    }
    return { ok: true, status: 200, json: async () => fixture(file) };
  };
  return { fetchFn, requested };
}
