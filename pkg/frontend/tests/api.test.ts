import { describe, expect, it } from "vitest";

import { ApiError, createApi } from "../src/api.js";
import type { GraphJson } from "../src/types.js";
import { fetchStub, fixture } from "./helpers.js";

const graph: GraphJson = {
  nodes: [
    { id: 1, role: "leader" },
    { id: 2, role: "follower" },
  ],
  edges: [{ id: 1, tail: 2, head: 1 }],
};

describe("createApi", () => {
  it("GETs scenarios and POSTs everything else", async () => {
    const { fetch, requests } = fetchStub((url) => {
      if (url === "/api/scenarios") return fixture("scenarios.json");
      if (url === "/api/check") return fixture("check_graphA.json");
      return undefined;
    });
    const api = createApi(fetch);

    const scenarios = await api.scenarios();
    expect(Object.keys(scenarios.scenarios)).toContain("graphA");
    expect(requests[0]).toEqual({ url: "/api/scenarios", body: undefined });

    await api.check(graph);
    expect(requests[1].url).toBe("/api/check");
    expect(requests[1].body).toEqual({ graph });
  });

  it("keeps the check response bytes verbatim", async () => {
    const { fetch } = fetchStub(() => fixture("check_graphB.json"));
    const result = await createApi(fetch).check(graph);
    expect(result.raw).toBe(fixture("check_graphB.json"));
    expect(result.payload.theorem1.verdict).toBe("pass");
  });

  it("omits stride unless given", async () => {
    const { fetch, requests } = fetchStub(() => fixture("simulate_example1.json"));
    const api = createApi(fetch);
    await api.simulate("example1");
    expect(requests[0].body).toEqual({ scenario: "example1" });
    await api.simulate("example1", 25);
    expect(requests[1].body).toEqual({ scenario: "example1", stride: 25 });
  });

  it("posts suggest with the leader budget", async () => {
    const { fetch, requests } = fetchStub(() => '{"assignments":[{"leaders":[1]}]}');
    const out = await createApi(fetch).suggest(graph, 2);
    expect(requests[0].body).toEqual({ graph, k: 2 });
    expect(out.assignments[0].leaders).toEqual([1]);
  });

  it("unwraps the service's error envelope", async () => {
    const { fetch } = fetchStub(() => ({
      status: 422,
      body: '{"error":"graph is not connected"}',
    }));
    const err = await createApi(fetch)
      .check(graph)
      .then(() => null, (e: unknown) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect((err as ApiError).status).toBe(422);
    expect((err as ApiError).message).toBe("graph is not connected");
  });

  it("falls back to the raw body for non-JSON errors", async () => {
    const { fetch } = fetchStub(() => ({ status: 500, body: "worker crashed" }));
    const err = await createApi(fetch)
      .check(graph)
      .then(() => null, (e: unknown) => e);
    expect((err as ApiError).message).toBe("worker crashed");
  });

  it("prefixes a base URL when given", async () => {
    const { fetch, requests } = fetchStub(() => fixture("scenarios.json"));
    await createApi(fetch, "http://127.0.0.1:8000").scenarios();
    expect(requests[0].url).toBe("http://127.0.0.1:8000/api/scenarios");
  });
});
