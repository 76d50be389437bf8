/**
 * Pixel-bar model: a vote bar chart over counties sharing its x-axis with an
 * M-row model/county matrix whose cells mark positive predictions. Sorting
 * reorders the counties; the sliding window narrows the matrix and can be
 * shifted or resized.
 */

import type { VotesPayload } from "../api.js";
import type { SelectionStore, SortStrategy } from "../store.js";

export interface BarColumn {
  fips: string;
  votes: number;
  highlighted: boolean;
}

export interface PixelCell {
  model: string;
  fips: string;
  on: boolean;
}

export class PixelBarModel {
  constructor(
    private readonly store: SelectionStore,
    private payload: VotesPayload,
    /** per-county values used by the two value-based sort strategies */
    private sortContext: { independent: Record<string, number>; impact: Record<string, number> },
  ) {}

  setPayload(payload: VotesPayload): void {
    this.payload = payload;
  }

  modelRows(): string[] {
    const first = this.payload.counties[0];
    return first ? first.models.map((m) => m.name) : [];
  }

  /** County order under the active sort strategy. */
  order(): string[] {
    const sort: SortStrategy = this.store.snapshot().pixelSort;
    const counties = [...this.payload.counties];
    const byValue = (values: Record<string, number>) =>
      counties.sort((a, b) => (values[a.fips] ?? 0) - (values[b.fips] ?? 0) || (a.fips < b.fips ? -1 : 1));
    if (sort === "independent") byValue(this.sortContext.independent);
    else if (sort === "impact") byValue(this.sortContext.impact);
    else counties.sort((a, b) => b.votes - a.votes || (a.fips < b.fips ? -1 : 1));
    return counties.map((c) => c.fips);
  }

  /** Window-sliced order shared by the bar chart and the pixel matrix. */
  visibleOrder(): string[] {
    const order = this.order();
    const window = this.store.snapshot().pixelWindow;
    if (!window) return order;
    const start = Math.max(0, Math.min(window.start, order.length));
    return order.slice(start, start + window.size);
  }

  bars(): BarColumn[] {
    const votes = new Map(this.payload.counties.map((c) => [c.fips, c.votes]));
    const highlighted = new Set(this.store.snapshot().highlighted);
    return this.visibleOrder().map((fips) => ({
      fips,
      votes: votes.get(fips) ?? 0,
      highlighted: highlighted.has(fips),
    }));
  }

  matrix(): PixelCell[][] {
    const byFips = new Map(this.payload.counties.map((c) => [c.fips, c]));
    const rows = this.modelRows();
    return rows.map((model, r) =>
      this.visibleOrder().map((fips) => ({
        model,
        fips,
        on: byFips.get(fips)?.models[r]?.significant ?? false,
      })),
    );
  }

  /** Blue pixels per county column; must equal that county's bar height. */
  columnPixelCount(fips: string): number {
    const county = this.payload.counties.find((c) => c.fips === fips);
    return county ? county.models.filter((m) => m.significant).length : 0;
  }

  setWindow(start: number, size: number): void {
    this.store.setPixelWindow({ start, size });
  }

  shiftWindow(delta: number): void {
    const window = this.store.snapshot().pixelWindow;
    if (!window) return;
    const max = Math.max(0, this.order().length - window.size);
    const start = Math.max(0, Math.min(window.start + delta, max));
    this.store.setPixelWindow({ start, size: window.size });
  }

  resizeWindow(size: number): void {
    const window = this.store.snapshot().pixelWindow;
    this.store.setPixelWindow({ start: window?.start ?? 0, size });
  }

  highlightedCounties(): string[] {
    return this.store.snapshot().highlighted;
  }
}
