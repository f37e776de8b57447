import type { FetchLike } from "../src/api.js";

export type RecordedRequest = {
  method: string;
  url: string;
  body: unknown;
};

type Canned = {
  status: number;
  payload: unknown;
};

/**
 * Canned-response stand-in for the service. Routes are keyed by
 * "METHOD url" with the query string included, so a view only gets an
 * answer when it asks with exactly the parameters a direct caller would.
 */
export class FakeServer {
  private canned = new Map<string, Canned>();
  requests: RecordedRequest[] = [];

  on(method: string, url: string, payload: unknown, status = 200): void {
    this.canned.set(`${method} ${url}`, { status, payload });
  }

  fail(method: string, url: string, status: number, error: Record<string, unknown>): void {
    this.canned.set(`${method} ${url}`, { status, payload: { error } });
  }

  calls(method: string, urlPrefix: string): RecordedRequest[] {
    return this.requests.filter(
      (r) => r.method === method && r.url.startsWith(urlPrefix),
    );
  }

  fetch: FetchLike = (input, init) => {
    const method = init?.method ?? "GET";
    let body: unknown = null;
    if (typeof init?.body === "string") {
      try {
        body = JSON.parse(init.body);
      } catch {
        body = init.body;
      }
    }
    this.requests.push({ method, url: input, body });
    const hit = this.canned.get(`${method} ${input}`);
    if (!hit) {
      return Promise.resolve(
        jsonResponse(404, {
          error: { code: "not_found", message: `no canned route for ${method} ${input}` },
        }),
      );
    }
    return Promise.resolve(jsonResponse(hit.status, hit.payload));
  };
}

function jsonResponse(status: number, payload: unknown): Response {
  return new Response(JSON.stringify(payload), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

/** Fresh mount point for a view under test. */
export function mountRoot(): HTMLElement {
  document.body.innerHTML = '<div id="test-root"></div>';
  const root = document.getElementById("test-root");
  if (!root) throw new Error("mount failed");
  return root;
}
