/** Shared test plumbing: fixture access and a scripted fetch. */

import { readFileSync } from "node:fs";
import path from "node:path";
import { fileURLToPath } from "node:url";

import type { FetchLike } from "../src/api.js";

const here = path.dirname(fileURLToPath(import.meta.url));

export function fixture(name: string): string {
  return readFileSync(path.join(here, "fixtures", name), "utf8");
}

export interface StubResponse {
  status?: number;
  body: string;
}

export interface RecordedRequest {
  url: string;
  body: unknown;
}

export type StubHandler = (
  url: string,
  body: unknown,
) => StubResponse | string | undefined;

/** fetch replacement driven by a handler; records every request. */
export function fetchStub(handler: StubHandler): {
  fetch: FetchLike;
  requests: RecordedRequest[];
} {
  const requests: RecordedRequest[] = [];
  const fetch: FetchLike = (url, init) => {
    const body = init?.body === undefined ? undefined : JSON.parse(init.body);
    requests.push({ url, body });
    const result = handler(url, body);
    if (result === undefined) {
      return Promise.resolve(response(404, `no stub for ${url}`));
    }
    const { status = 200, body: text } =
      typeof result === "string" ? { body: result } : result;
    return Promise.resolve(response(status, text));
  };
  return { fetch, requests };
}

function response(status: number, text: string) {
  return {
    ok: status >= 200 && status < 300,
    status,
    text: () => Promise.resolve(text),
  };
}

/** fetch replacement whose responses resolve only when the test says so;
 * used to deliver responses out of order. */
export function manualFetch(): {
  fetch: FetchLike;
  requests: RecordedRequest[];
  resolve(index: number, body: string, status?: number): void;
} {
  const requests: RecordedRequest[] = [];
  const resolvers: ((r: {
    ok: boolean;
    status: number;
    text(): Promise<string>;
  }) => void)[] = [];
  const fetch: FetchLike = (url, init) => {
    requests.push({
      url,
      body: init?.body === undefined ? undefined : JSON.parse(init.body),
    });
    return new Promise((res) => {
      resolvers.push(res);
    });
  };
  return {
    fetch,
    requests,
    resolve(index, body, status = 200) {
      resolvers[index](response(status, body));
    },
  };
}

/** Let queued promise callbacks run. */
export function tick(): Promise<void> {
  return new Promise((res) => {
    setImmediate(res);
  });
}

/** Leader node ids of a posted graph body, for routing check stubs. */
export function leadersOf(body: unknown): string {
  const graph = (body as { graph: { nodes: { id: number; role: string }[] } })
    .graph;
  return graph.nodes
    .filter((n) => n.role === "leader")
    .map((n) => n.id)
    .sort((a, b) => a - b)
    .join(",");
}
