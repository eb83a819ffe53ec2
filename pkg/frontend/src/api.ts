import type {
  ContextResponse,
  FormalizeResponse,
  GrammarDoc,
  GraphArchive,
  NodeSummary,
  OverlayResponse,
  PageResponse,
  QueryResponse,
  RealizeResponse,
} from "./types.js";

/** Shape of the error envelope every service failure carries. */
export class ApiError extends Error {
  readonly status: number;
  readonly code: string;
  readonly detail: Record<string, unknown>;

  constructor(
    status: number,
    code: string,
    message: string,
    detail: Record<string, unknown> = {},
  ) {
    super(message);
    this.name = "ApiError";
    this.status = status;
    this.code = code;
    this.detail = detail;
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

/**
 * Thin client for the workbench service.
 *
 * Tracks the generation stamp the service attaches to every response so
 * mutation requests can send the value the view was rendered from.  A
 * mutation rejected with E_CONFLICT means the notebook moved underneath
 * us; callers refresh and retry (see retry.ts).
 */
export class ApiClient {
  generation = 0;

  private readonly base: string;
  private readonly fetchFn: FetchLike;

  constructor(base = "", fetchFn?: FetchLike) {
    this.base = base.replace(/\/$/, "");
    this.fetchFn = fetchFn ?? ((input, init) => fetch(input, init));
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const res = await this.fetchFn(this.base + path, init);
    this.noteGeneration(res);
    if (!res.ok) {
      throw await this.toError(res);
    }
    return (await res.json()) as T;
  }

  private noteGeneration(res: Response): void {
    const raw = res.headers.get("x-generation");
    if (raw === null) return;
    const value = Number(raw);
    if (Number.isFinite(value)) this.generation = value;
  }

  private async toError(res: Response): Promise<ApiError> {
    let code = "E_HTTP";
    let message = `${res.status} ${res.statusText}`.trim();
    let detail: Record<string, unknown> = {};
    try {
      const body = (await res.json()) as Record<string, unknown>;
      if (typeof body.code === "string") code = body.code;
      if (typeof body.message === "string") message = body.message;
      if (body.detail && typeof body.detail === "object") {
        detail = body.detail as Record<string, unknown>;
      }
    } catch {
      // non-JSON failure, keep the HTTP status text
    }
    return new ApiError(res.status, code, message, detail);
  }

  private post<T>(path: string, body: unknown): Promise<T> {
    return this.request<T>(path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  async fetchGeneration(): Promise<number> {
    const body = await this.request<{ generation: number }>("/generation");
    return body.generation;
  }

  listNodes(type?: string): Promise<NodeSummary[]> {
    const suffix = type ? `?type=${encodeURIComponent(type)}` : "";
    return this.request(`/nodes${suffix}`);
  }

  page(title: string): Promise<PageResponse> {
    return this.request(`/pages/${encodeURIComponent(title)}`);
  }

  context(title: string): Promise<ContextResponse> {
    return this.request(`/nodes/${encodeURIComponent(title)}/context`);
  }

  overlay(title: string): Promise<OverlayResponse> {
    return this.request(`/nodes/${encodeURIComponent(title)}/overlay`);
  }

  query(doc: Record<string, unknown>): Promise<QueryResponse> {
    return this.post("/query", doc);
  }

  formalize(req: {
    blockId: string;
    span: [number, number];
    nodeType: string;
    citekey?: string | null;
    generation: number;
  }): Promise<FormalizeResponse> {
    return this.post("/formalize", req);
  }

  realize(req: {
    source: string;
    relationId: string;
    destination: string;
    targetPage: string;
    generation: number;
  }): Promise<RealizeResponse> {
    return this.post("/realize", req);
  }

  grammar(): Promise<GrammarDoc> {
    return this.request("/grammar");
  }

  putGrammar(doc: GrammarDoc, generation: number): Promise<{ generation: number }> {
    return this.request("/grammar", {
      method: "PUT",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ doc, generation }),
    });
  }

  exportGraph(): Promise<GraphArchive> {
    return this.request("/export/json");
  }

  /**
   * Stable identifier for the notebook behind the service, parsed from the
   * export filename.  Used to key saved canvas layouts so two corpora do
   * not overwrite each other's boards.
   */
  async corpusId(): Promise<string> {
    const res = await this.fetchFn(`${this.base}/export/json`);
    this.noteGeneration(res);
    const disposition = res.headers.get("content-disposition") ?? "";
    try {
      await res.body?.cancel();
    } catch {
      // body may already be consumed by the fetch stub
    }
    const match = /filename="(.+)\.json"/.exec(disposition);
    if (match?.[1]) return match[1];
    return this.base === "" ? "local" : this.base;
  }
}
