/** API client for the formation-ppc service. */

import type {
  CheckPayload,
  GraphJson,
  ScenarioJson,
  ScenariosResponse,
  SimulateResponse,
  SuggestResponse,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

/** A check result keeps the raw response body: the service emits canonical
 * JSON (sorted keys, 9 significant digits), so the bytes — not just the
 * parsed value — are the thing to display and compare. */
export interface CheckResult {
  raw: string;
  payload: CheckPayload;
}

export type FetchLike = (
  input: string,
  init?: { method?: string; headers?: Record<string, string>; body?: string },
) => Promise<{ ok: boolean; status: number; text(): Promise<string> }>;

export function createApi(fetchImpl?: FetchLike, base = "") {
  const doFetch: FetchLike =
    fetchImpl ?? ((input, init) => globalThis.fetch(input, init));

  async function request(path: string, body?: unknown): Promise<string> {
    const res = await doFetch(`${base}${path}`, body === undefined
      ? undefined
      : {
          method: "POST",
          headers: { "content-type": "application/json" },
          body: JSON.stringify(body),
        });
    const text = await res.text();
    if (!res.ok) {
      let message = text;
      try {
        const parsed = JSON.parse(text) as { error?: string };
        if (typeof parsed.error === "string") message = parsed.error;
      } catch {
        // non-JSON error body; surface it as-is
      }
      throw new ApiError(res.status, message);
    }
    return text;
  }

  return {
    async scenarios(): Promise<ScenariosResponse> {
      return JSON.parse(await request("/api/scenarios")) as ScenariosResponse;
    },

    /** Default options: both checks, so the response matches the CLI's
     * two-report payload byte for byte. */
    async check(graph: GraphJson): Promise<CheckResult> {
      const raw = await request("/api/check", { graph });
      return { raw, payload: JSON.parse(raw) as CheckPayload };
    },

    async simulate(
      scenario: ScenarioJson | string,
      stride?: number,
    ): Promise<SimulateResponse> {
      const body: Record<string, unknown> = { scenario };
      if (stride !== undefined) body.stride = stride;
      return JSON.parse(await request("/api/simulate", body)) as SimulateResponse;
    },

    async suggest(graph: GraphJson, k: number): Promise<SuggestResponse> {
      return JSON.parse(
        await request("/api/suggest", { graph, k }),
      ) as SuggestResponse;
    },
  };
}

export type Api = ReturnType<typeof createApi>;
