/** Typed client for the public service surfaces.
 *
 * Every outbound URL is recorded in requestLog, which the integration
 * tests use to assert the portal only ever touches the public APIs
 * (search, auth/profile/rights, the annotation intake, and the ingest
 * entry endpoint for publishing) and that resource fetches carry no
 * session information.
 */

import {
  Decision,
  EndpointMap,
  QdcElementMap,
  SearchResponse,
  SessionInfo,
} from "./types.js";

export class ServiceError extends Error {
  constructor(
    message: string,
    public type: string,
    public status: number,
  ) {
    super(message);
  }
}

type FetchLike = typeof fetch;

export class ApiClient {
  requestLog: string[] = [];

  constructor(
    public endpoints: EndpointMap,
    private fetchImpl: FetchLike = fetch,
  ) {}

  private async call<T>(
    url: string,
    init: RequestInit = {},
    token?: string,
  ): Promise<T> {
    this.requestLog.push(url);
    const headers: Record<string, string> = {
      ...((init.headers as Record<string, string>) ?? {}),
    };
    if (init.body) {
      headers["Content-Type"] = "application/json";
    }
    if (token) {
      headers["X-Session-Token"] = token;
    }
    const resp = await this.fetchImpl(url, { ...init, headers });
    const body = await resp.json().catch(() => ({}));
    if (!resp.ok) {
      const err = (body as { error?: { type?: string; message?: string } }).error;
      throw new ServiceError(
        err?.message ?? `service error (HTTP ${resp.status})`,
        err?.type ?? "ServiceError",
        resp.status,
      );
    }
    return body as T;
  }

  // -- search ----------------------------------------------------------

  search(expression: string, limit = 25, offset = 0): Promise<SearchResponse> {
    return this.call(`${this.endpoints.search}/search`, {
      method: "POST",
      body: JSON.stringify({ expression, limit, offset }),
    });
  }

  // -- access management -------------------------------------------------

  login(username: string, secret: string): Promise<SessionInfo> {
    return this.call(`${this.endpoints.access}/auth`, {
      method: "POST",
      body: JSON.stringify({ action: "login", username, secret }),
    });
  }

  anonymous(): Promise<SessionInfo> {
    return this.call(`${this.endpoints.access}/auth`, {
      method: "POST",
      body: JSON.stringify({ action: "anonymous" }),
    });
  }

  profileGet(token: string, key: string): Promise<{ key: string; value: unknown }> {
    return this.call(
      `${this.endpoints.access}/profile?key=${encodeURIComponent(key)}`,
      { method: "GET" },
      token,
    );
  }

  profilePut(token: string, key: string, value: unknown): Promise<void> {
    return this.call(
      `${this.endpoints.access}/profile`,
      { method: "POST", body: JSON.stringify({ key, value }) },
      token,
    );
  }

  rightsCheck(token: string, item: string): Promise<Decision> {
    return this.call(
      `${this.endpoints.access}/rights`,
      { method: "POST", body: JSON.stringify({ item }) },
      token,
    );
  }

  // -- annotation intake ---------------------------------------------------

  annotate(
    target: string,
    text: string,
    authorCategories: string[],
    authorDisplay: string,
  ): Promise<{ handle: string }> {
    return this.call(`${this.endpoints.annotation}/annotation`, {
      method: "POST",
      body: JSON.stringify({
        target,
        text,
        author_categories: authorCategories,
        author_display: authorDisplay,
      }),
    });
  }

  // -- publishing a personal collection -------------------------------------

  publishPortal(qdc: QdcElementMap, editor: string): Promise<{ handle: string }> {
    return this.call<{ result: { handle: string } }>(
      `${this.endpoints.ingest}/ingest`,
      {
        method: "POST",
        body: JSON.stringify({
          action: "publish_portal",
          params: { qdc, editor },
        }),
      },
    ).then((body) => body.result);
  }
}
