/** Typed client for the exploration service; the only backend touchpoint. */

import type {
  CategoriesResponse,
  FavoritesResponse,
  Generation,
  HomeResponse,
  ObjectsPage,
  PaintingDetail,
  PlacementRequest,
  Session,
  UsageReport,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  url(path: string): string {
    return this.baseUrl + path;
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchFn(this.baseUrl + path, init);
    let body: unknown = null;
    const text = await response.text();
    if (text) {
      try {
        body = JSON.parse(text);
      } catch {
        body = null;
      }
    }
    if (!response.ok) {
      const err = (body as { error?: { code?: string; message?: string } } | null)?.error;
      throw new ApiError(
        response.status,
        err?.code ?? "unknown_error",
        err?.message ?? `request failed: ${response.status}`,
      );
    }
    return body as T;
  }

  private post<T>(path: string, payload?: unknown): Promise<T> {
    return this.request<T>(path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: payload === undefined ? undefined : JSON.stringify(payload),
    });
  }

  getHome(): Promise<HomeResponse> {
    return this.request("/home");
  }

  getCategories(): Promise<CategoriesResponse> {
    return this.request("/categories");
  }

  getObjects(params: {
    category?: string;
    label?: string;
    cursor?: string;
    page_size?: number;
  }): Promise<ObjectsPage> {
    const query = new URLSearchParams();
    for (const [key, value] of Object.entries(params)) {
      if (value !== undefined) query.set(key, String(value));
    }
    return this.request(`/objects?${query.toString()}`);
  }

  getPainting(artworkId: string): Promise<PaintingDetail> {
    return this.request(`/paintings/${encodeURIComponent(artworkId)}`);
  }

  createSession(): Promise<Session> {
    return this.post("/sessions");
  }

  getFavorites(sessionId: string): Promise<FavoritesResponse> {
    return this.request(`/sessions/${sessionId}/favorites`);
  }

  saveFavorite(sessionId: string, detectionId: string): Promise<FavoritesResponse> {
    return this.post(`/sessions/${sessionId}/favorites/${detectionId}`);
  }

  unsaveFavorite(sessionId: string, detectionId: string): Promise<FavoritesResponse> {
    return this.request(`/sessions/${sessionId}/favorites/${detectionId}`, {
      method: "DELETE",
    });
  }

  postEvent(event: {
    session_id: string;
    ts: number;
    kind: string;
    payload: Record<string, unknown>;
  }): Promise<{ seq: number }> {
    return this.post("/events", event);
  }

  getUsageReport(): Promise<UsageReport> {
    return this.request("/reports/usage");
  }

  submitCanvas(
    sessionId: string,
    body: { placements: PlacementRequest[]; prompt: string; side?: number },
  ): Promise<{ job_id: string; status: string }> {
    return this.post(`/sessions/${sessionId}/canvas`, body);
  }

  getGeneration(jobId: string): Promise<Generation> {
    return this.request(`/generations/${jobId}`);
  }
}
