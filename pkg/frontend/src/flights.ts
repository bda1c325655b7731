// Flight-list panel state: a plain mirror of GET /flights. The service
// keeps the list sorted by (date, time); the panel renders it as-is.

import { Flight } from "./api.js";

export interface FlightsApi {
  listFlights(): Promise<Flight[]>;
  addFlight(flight: Omit<Flight, "id">): Promise<string>;
  removeFlight(id: string): Promise<{ ok: boolean }>;
}

export class FlightsController {
  flights: Flight[] = [];
  error: string | null = null;

  constructor(
    private api: FlightsApi,
    private onChange: () => void = () => {},
  ) {}

  async refresh(): Promise<void> {
    try {
      this.flights = await this.api.listFlights();
      this.error = null;
    } catch (e) {
      this.error = e instanceof Error ? e.message : String(e);
    }
    this.onChange();
  }

  async add(flight: Omit<Flight, "id">): Promise<void> {
    await this.api.addFlight(flight);
    await this.refresh();
  }

  /** The view must confirm with the user before calling this. */
  async remove(id: string): Promise<void> {
    await this.api.removeFlight(id);
    await this.refresh();
  }
}
