// Typed client for the session service HTTP+JSON API. The service is the
// only backend this UI talks to; every mutating call may carry the revision
// the client believes is current and gets a 409 when the session moved on.

export interface Requirement {
  feature: string;
  value: string;
  origin: string;
  seq: number;
}

export interface Specification {
  requirements: Requirement[];
  revision: number;
}

export interface QueryOption {
  label: string;
  exemplar_prompt: string | null;
  exemplar_image: string | null;
}

export interface ActiveQuery {
  feature: string;
  options: QueryOption[];
  has_residual: boolean;
  weight: number;
  option_distribution: number[] | null;
  candidate_index: number;
}

export interface PromptEntry {
  text: string;
  image_handle: string | null;
  source_revision: number;
  coverage: number | null;
}

export interface SessionSnapshot {
  session_id: string;
  initial_prompt: string;
  revision: number;
  status: string;
  specification: Specification;
  active_query: ActiveQuery | null;
  active_entropy: number | null;
  active_eaug: number | null;
  prompts: PromptEntry[];
  queries: unknown[];
  error: string | null;
}

export interface EditRequest {
  op: "add" | "modify" | "delete";
  feature: string;
  value?: string;
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(`${status}: ${detail}`);
    this.name = "ApiError";
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export function createClient(baseUrl: string, fetchFn?: FetchLike) {
  const base = baseUrl.replace(/\/+$/, "");
  const doFetch: FetchLike = fetchFn ?? ((input, init) => fetch(input, init));

  const request = async <T>(method: string, path: string, body?: unknown): Promise<T> => {
    const init: RequestInit = { method, headers: { "content-type": "application/json" } };
    if (body !== undefined) {
      init.body = JSON.stringify(body);
    }
    const response = await doFetch(`${base}${path}`, init);
    if (!response.ok) {
      let detail = response.statusText;
      try {
        const payload = (await response.json()) as { detail?: string };
        if (typeof payload.detail === "string") {
          detail = payload.detail;
        }
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ApiError(response.status, detail);
    }
    return (await response.json()) as T;
  };

  return {
    createSession(initialPrompt: string): Promise<SessionSnapshot> {
      return request("POST", "/sessions", { initial_prompt: initialPrompt });
    },

    getSession(sessionId: string): Promise<SessionSnapshot> {
      return request("GET", `/sessions/${encodeURIComponent(sessionId)}`);
    },

    answer(
      sessionId: string,
      answer: { option_index?: number; other_text?: string },
      revision?: number,
    ): Promise<SessionSnapshot> {
      return request("POST", `/sessions/${encodeURIComponent(sessionId)}/answer`, {
        ...answer,
        revision: revision ?? null,
      });
    },

    editRequirements(
      sessionId: string,
      edits: EditRequest[],
      revision?: number,
    ): Promise<SessionSnapshot> {
      return request("POST", `/sessions/${encodeURIComponent(sessionId)}/requirements`, {
        edits,
        revision: revision ?? null,
      });
    },

    generate(sessionId: string, revision?: number): Promise<SessionSnapshot> {
      return request("POST", `/sessions/${encodeURIComponent(sessionId)}/generate`, {
        revision: revision ?? null,
      });
    },

    mediaUrl(handle: string): string {
      return `${base}/media/${handle}`;
    },
  };
}

export type Client = ReturnType<typeof createClient>;
