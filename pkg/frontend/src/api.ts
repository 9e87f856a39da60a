/**
 * Typed client for the workbench HTTP/JSON API.
 *
 * All domain logic lives on the server; this client only shapes requests
 * and decodes responses.  The transport is injectable so tests can replay
 * recorded exchanges without a network.
 */

export interface ApiRequest {
  method: "GET" | "POST";
  path: string;
  query?: Record<string, string | number>;
  body?: unknown;
}

export interface ApiResponse {
  status: number;
  json: unknown;
}

export type Transport = (req: ApiRequest) => Promise<ApiResponse>;

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
    readonly details: Record<string, unknown> = {},
  ) {
    super(message);
    this.name = "ApiError";
  }
}

/** Optimistic commit rejected: someone else advanced the project version. */
export class ConflictError extends ApiError {
  constructor(readonly currentVersion: number, message: string) {
    super(409, "conflict", message, { current_version: currentVersion });
    this.name = "ConflictError";
  }
}

export interface TermRow {
  id: string;
  surface: string;
  lemma: string;
  pos: string;
  head_lemma: string;
  expansion_lemma: string;
  word_count: number;
  occ_count: number;
  merged_into: string | null;
  doc_refs: string[];
  index_occurrences: number;
}

export interface TermPage {
  total: number;
  page: number;
  page_size: number;
  version: number;
  items: TermRow[];
}

/**
 * One validation record as the server chooses to reveal it.  Under the
 * blind scheme hidden records arrive as anonymous `{redacted: true}`
 * entries; under double-blind they are absent entirely.
 */
export interface StatusRecord {
  user?: string;
  label?: string;
  comment?: string;
  timestamp?: string;
  redacted?: boolean;
}

export interface StatusesPayload {
  term_id: string;
  scheme: string;
  statuses: StatusRecord[];
}

export interface KwicLine {
  left: string;
  match: string;
  right: string;
}

export interface CommitOk {
  version: number;
  result?: unknown;
}

export interface ConceptTreeNode {
  id: string;
  label: string;
  informal: boolean;
  synonyms: { term_id: string; surface: string; link_type: string }[];
  children: ConceptTreeNode[];
}

interface ErrorBody {
  code?: string;
  message?: string;
  current_version?: number;
  details?: Record<string, unknown>;
  [key: string]: unknown;
}

export class ApiClient {
  constructor(private readonly transport: Transport) {}

  private async call<T>(req: ApiRequest): Promise<T> {
    const resp = await this.transport(req);
    if (resp.status >= 200 && resp.status < 300) {
      return resp.json as T;
    }
    const body = (resp.json ?? {}) as ErrorBody;
    const message = body.message ?? `request failed with status ${resp.status}`;
    if (resp.status === 409 && typeof body.current_version === "number") {
      throw new ConflictError(body.current_version, message);
    }
    throw new ApiError(
      resp.status,
      body.code ?? "error",
      message,
      (body.details as Record<string, unknown>) ?? body,
    );
  }

  parseFilter(q: string): Promise<{ ok: boolean; canonical: string }> {
    return this.call({ method: "GET", path: "/filters/parse", query: { q } });
  }

  listTerms(
    projectId: string,
    opts: { filter?: string; sort?: string; page?: number; pageSize?: number } = {},
  ): Promise<TermPage> {
    const query: Record<string, string | number> = {};
    if (opts.filter !== undefined) query.filter = opts.filter;
    if (opts.sort !== undefined) query.sort = opts.sort;
    if (opts.page !== undefined) query.page = opts.page;
    if (opts.pageSize !== undefined) query.page_size = opts.pageSize;
    return this.call({
      method: "GET",
      path: `/projects/${projectId}/terms`,
      query,
    });
  }

  statuses(projectId: string, termId: string): Promise<StatusesPayload> {
    return this.call({
      method: "GET",
      path: `/projects/${projectId}/statuses/${termId}`,
    });
  }

  kwic(termId: string, window: number): Promise<{ term_id: string; window: number; lines: KwicLine[] }> {
    return this.call({
      method: "GET",
      path: `/terms/${termId}/kwic`,
      query: { window },
    });
  }

  conceptTree(projectId: string): Promise<{ version: number; roots: ConceptTreeNode[] }> {
    return this.call({
      method: "GET",
      path: `/projects/${projectId}/concepts/tree`,
    });
  }

  commit(
    projectId: string,
    expectedVersion: number,
    op: string,
    args: Record<string, unknown>,
  ): Promise<CommitOk> {
    return this.call({
      method: "POST",
      path: `/projects/${projectId}/commit`,
      body: { expected_version: expectedVersion, op, args },
    });
  }
}

/** Real-network transport for browser/node runtimes with `fetch`. */
export function fetchTransport(baseUrl: string, token: string): Transport {
  return async (req) => {
    const url = new URL(req.path, baseUrl);
    for (const [k, v] of Object.entries(req.query ?? {})) {
      url.searchParams.set(k, String(v));
    }
    const resp = await fetch(url, {
      method: req.method,
      headers: {
        Authorization: `Bearer ${token}`,
        ...(req.body !== undefined ? { "Content-Type": "application/json" } : {}),
      },
      body: req.body !== undefined ? JSON.stringify(req.body) : undefined,
    });
    let json: unknown = null;
    try {
      json = await resp.json();
    } catch {
      json = null;
    }
    return { status: resp.status, json };
  };
}
