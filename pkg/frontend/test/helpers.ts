import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

import type { FetchLike } from "../src/api.js";
import type { StorageLike } from "../src/layout.js";

const here = dirname(fileURLToPath(import.meta.url));

/**
 * Load a recorded service response.  The files under fixtures/ were
 * captured from a real service run over the base corpus by
 * scripts/record_fixtures.py, so asserting against them checks the UI
 * against genuine wire payloads.
 */
export function fixture<T>(name: string): T {
  const raw = readFileSync(join(here, "fixtures", `${name}.json`), "utf8");
  return JSON.parse(raw) as T;
}

export interface Route {
  body: unknown;
  status?: number;
  generation?: number;
  headers?: Record<string, string>;
}

export interface RecordedCall {
  key: string;
  body?: unknown;
}

/**
 * In-memory stand-in for the service.  Routes are keyed by
 * "METHOD /path?query"; a key may map to a list of responses, which are
 * consumed in order with the last one sticking, so a test can model a
 * view-refresh-view sequence.
 */
export function fakeService(routes: Record<string, Route | Route[]>): {
  fetchFn: FetchLike;
  calls: RecordedCall[];
} {
  const queues = new Map<string, Route[]>();
  for (const [key, value] of Object.entries(routes)) {
    queues.set(key, Array.isArray(value) ? [...value] : [value]);
  }
  const calls: RecordedCall[] = [];
  const fetchFn: FetchLike = (input, init) => {
    const method = init?.method ?? "GET";
    const url = new URL(input, "http://service.test");
    const key = `${method} ${url.pathname}${url.search}`;
    const queue = queues.get(key);
    if (!queue || queue.length === 0) {
      return Promise.reject(new Error(`unexpected request ${key}`));
    }
    const route = queue.length === 1 ? queue[0]! : queue.shift()!;
    calls.push({
      key,
      body: init?.body === undefined ? undefined : JSON.parse(String(init.body)),
    });
    const headers = new Headers({
      "content-type": "application/json",
      ...(route.headers ?? {}),
    });
    if (route.generation !== undefined) {
      headers.set("X-Generation", String(route.generation));
    }
    return Promise.resolve(
      new Response(JSON.stringify(route.body), {
        status: route.status ?? 200,
        headers,
      }),
    );
  };
  return { fetchFn, calls };
}

export class MemoryStorage implements StorageLike {
  private map = new Map<string, string>();

  getItem(key: string): string | null {
    return this.map.get(key) ?? null;
  }

  setItem(key: string, value: string): void {
    this.map.set(key, value);
  }

  removeItem(key: string): void {
    this.map.delete(key);
  }

  keys(): string[] {
    return [...this.map.keys()];
  }
}

export const enc = encodeURIComponent;
