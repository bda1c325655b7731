// Typed client for the flightstat HTTP API. The UI consumes exactly
// these endpoints and computes nothing itself.

export interface SessionCreated {
  session_id: string;
  text: string;
  state: string;
}

export interface UtteranceResponse {
  session_id: string;
  text: string;
  state: string;
  slots: Record<string, string>;
}

export interface Flight {
  id: string;
  origin: string;
  destination: string;
  airline: string;
  date: string;
  time: string;
}

export interface AnalyticsSummary {
  window: { from: string | null; to: string | null };
  count: number;
  per_model: Record<string, number>;
  mean_predicted_delay: number | null;
  delayed_share: number | null;
}

export interface Prediction {
  model: string;
  predicted_delay_minutes: number;
  delayed: boolean;
  provenance: Record<string, string>;
}

export class ApiError extends Error {
  constructor(public status: number, message: string, public id?: string) {
    super(message);
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class FlightStatApi {
  constructor(
    private baseUrl: string = "",
    private fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchFn(`${this.baseUrl}${path}`, {
      headers: { "Content-Type": "application/json" },
      ...init,
    });
    const body = await response.json().catch(() => ({}));
    if (!response.ok) {
      throw new ApiError(response.status, body.error ?? response.statusText, body.id);
    }
    return body as T;
  }

  createSession(): Promise<SessionCreated> {
    return this.request("/sessions", { method: "POST" });
  }

  sendUtterance(sessionId: string, text: string): Promise<UtteranceResponse> {
    return this.request(`/sessions/${sessionId}/utterance`, {
      method: "POST",
      body: JSON.stringify({ text }),
    });
  }

  async listFlights(): Promise<Flight[]> {
    const body = await this.request<{ flights: Flight[] }>("/flights");
    return body.flights;
  }

  async addFlight(flight: Omit<Flight, "id">): Promise<string> {
    const body = await this.request<{ id: string }>("/flights", {
      method: "POST",
      body: JSON.stringify(flight),
    });
    return body.id;
  }

  removeFlight(id: string): Promise<{ ok: boolean }> {
    return this.request(`/flights/${id}`, { method: "DELETE" });
  }

  analyticsSummary(from?: string, to?: string): Promise<AnalyticsSummary> {
    const params = new URLSearchParams();
    if (from) params.set("from", from);
    if (to) params.set("to", to);
    const query = params.toString();
    return this.request(`/analytics/summary${query ? `?${query}` : ""}`);
  }

  predict(body: Record<string, unknown>): Promise<Prediction> {
    return this.request("/predict", { method: "POST", body: JSON.stringify(body) });
  }

  health(): Promise<{ status: string; models: string[] }> {
    return this.request("/health");
  }
}
