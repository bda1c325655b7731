// Analytics dashboard state. Every number shown comes verbatim from
// GET /analytics/summary; the client only chooses the time window.

import { AnalyticsSummary } from "./api.js";

export interface DashboardApi {
  analyticsSummary(from?: string, to?: string): Promise<AnalyticsSummary>;
}

export type WindowChoice = "all" | "hour" | "day";

export function windowBounds(choice: WindowChoice, now: Date = new Date()): { from?: string } {
  if (choice === "all") return {};
  const ms = choice === "hour" ? 60 * 60 * 1000 : 24 * 60 * 60 * 1000;
  return { from: new Date(now.getTime() - ms).toISOString() };
}

export class DashboardController {
  summary: AnalyticsSummary | null = null;
  choice: WindowChoice = "all";
  error: string | null = null;

  constructor(
    private api: DashboardApi,
    private onChange: () => void = () => {},
    private now: () => Date = () => new Date(),
  ) {}

  async refresh(choice: WindowChoice = this.choice): Promise<void> {
    this.choice = choice;
    const bounds = windowBounds(choice, this.now());
    try {
      this.summary = await this.api.analyticsSummary(bounds.from);
      this.error = null;
    } catch (e) {
      this.error = e instanceof Error ? e.message : String(e);
    }
    this.onChange();
  }
}
