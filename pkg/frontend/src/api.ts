/** Typed client for the rating service HTTP API. */

export interface Progress {
  done: number;
  total: number;
}

export interface SessionInfo {
  session_id: string;
  num_items: number;
}

export interface NextItem {
  item_id: string | null;
  image_url: string | null;
  progress: Progress;
  dataset: string | null;
  done: boolean;
}

export interface RatingPayload {
  item_id: string;
  quality: number;
  structure: number;
  nuclear: number;
  hallucination: boolean;
  judged_real: boolean;
}

export interface RatingAck {
  item_id: string;
  progress: Progress;
}

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
    this.name = "ApiError";
  }
}

export class ApiClient {
  constructor(private readonly baseUrl: string = "") {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await fetch(this.baseUrl + path, {
      headers: { "Content-Type": "application/json" },
      ...init,
    });
    if (!resp.ok) {
      let detail = resp.statusText;
      try {
        const body = (await resp.json()) as { detail?: unknown };
        if (typeof body.detail === "string") detail = body.detail;
      } catch {
        // non-JSON error body, keep the status text
      }
      throw new ApiError(resp.status, detail);
    }
    return (await resp.json()) as T;
  }

  createSession(raterId: string, seed: number): Promise<SessionInfo> {
    return this.request("/sessions", {
      method: "POST",
      body: JSON.stringify({ rater_id: raterId, seed }),
    });
  }

  next(sessionId: string): Promise<NextItem> {
    return this.request(`/sessions/${encodeURIComponent(sessionId)}/next`);
  }

  submitRating(sessionId: string, rating: RatingPayload): Promise<RatingAck> {
    return this.request(`/sessions/${encodeURIComponent(sessionId)}/ratings`, {
      method: "POST",
      body: JSON.stringify(rating),
    });
  }

  exportSession(sessionId: string): Promise<{ ratings: Record<string, unknown>[] }> {
    return this.request(`/sessions/${encodeURIComponent(sessionId)}/export`);
  }
}
