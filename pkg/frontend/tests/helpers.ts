import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

export interface SwapScenario {
  request: Record<string, unknown>;
  status: number;
  response: unknown;
  assignment_after?: unknown;
}

export interface ApiFixture {
  base: Record<string, unknown>;
  swaps: Record<string, SwapScenario>;
}

export function loadFixture(): ApiFixture {
  const here = dirname(fileURLToPath(import.meta.url));
  const raw = readFileSync(join(here, "fixtures", "api_fixture.json"), "utf-8");
  return JSON.parse(raw) as ApiFixture;
}

function jsonResponse(status: number, payload: unknown): Response {
  return new Response(JSON.stringify(payload), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

function sameRequest(a: Record<string, unknown>, b: Record<string, unknown>): boolean {
  const keys = Object.keys(a);
  return (
    keys.length === Object.keys(b).length && keys.every((key) => a[key] === b[key])
  );
}

/** A fetch replaying the recorded API fixture, with enough state to model one committed swap. */
export function fixtureFetch(fixture: ApiFixture): typeof fetch {
  let committed = false;
  return async (input: RequestInfo | URL, init?: RequestInit): Promise<Response> => {
    const url = typeof input === "string" ? input : input.toString();
    const path = url.replace(/^https?:\/\/[^/]+/, "");

    if (init?.method === "POST" && path === "/assignment/swap") {
      const body = JSON.parse(String(init.body)) as Record<string, unknown>;
      for (const scenario of Object.values(fixture.swaps)) {
        if (sameRequest(body, scenario.request)) {
          if (scenario.status === 200) {
            committed = true;
          }
          return jsonResponse(scenario.status, scenario.response);
        }
      }
      return jsonResponse(409, {
        detail: { error: "version_conflict", current_version: -1 },
      });
    }

    if (path === "/assignment" && committed) {
      return jsonResponse(200, fixture.swaps.valid.assignment_after);
    }
    if (path in fixture.base) {
      return jsonResponse(200, fixture.base[path]);
    }
    return jsonResponse(404, { detail: `path ${path} not recorded in fixture` });
  };
}
