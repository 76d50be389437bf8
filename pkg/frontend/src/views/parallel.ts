/**
 * Parallel-coordinates model: one polyline per county across the configured
 * dimensions, axis brushes, and the per-impact-axis mini scatter hooks.
 * Primary (clinical) axes are flagged so the renderer can highlight them.
 */

import type { ApiClient, CountyRow, ScatterPayload } from "../api.js";
import type { SelectionStore } from "../store.js";

export interface AxisSpec {
  dimension: string;
  primary: boolean;
  min: number;
  max: number;
}

export interface Polyline {
  fips: string;
  /** normalized [0,1] position per axis, in axis order */
  points: number[];
  highlighted: boolean;
}

export class ParallelCoordinatesModel {
  readonly axes: AxisSpec[];
  private values = new Map<string, Record<string, number>>();

  constructor(
    private readonly store: SelectionStore,
    counties: CountyRow[],
    dimensions: string[],
    primary: Set<string>,
  ) {
    for (const row of counties) this.values.set(row.fips, row.summary);
    this.axes = dimensions.map((dimension) => {
      const vals = counties.map((c) => c.summary[dimension]);
      return {
        dimension,
        primary: primary.has(dimension),
        min: Math.min(...vals),
        max: Math.max(...vals),
      };
    });
  }

  counties(): string[] {
    return Array.from(this.values.keys()).sort();
  }

  /** Set or clear one axis brush and push the filtered set to the store. */
  brush(dimension: string, interval: [number, number] | null): void {
    this.store.setBrush(dimension, interval);
    this.store.setSelected(this.filtered(), "brush");
  }

  /** Counties inside every active brush interval (set intersection). */
  filtered(): string[] {
    const brushes = Array.from(this.store.brushes().entries());
    const out: string[] = [];
    for (const [fips, summary] of this.values) {
      const inside = brushes.every(([dim, [lo, hi]]) => {
        const v = summary[dim];
        return v >= lo && v <= hi;
      });
      if (inside) out.push(fips);
    }
    return out.sort();
  }

  lines(): Polyline[] {
    const highlighted = new Set(this.store.snapshot().highlighted);
    const out: Polyline[] = [];
    for (const [fips, summary] of this.values) {
      const points = this.axes.map((axis) => {
        const span = axis.max - axis.min;
        return span === 0 ? 0.5 : (summary[axis.dimension] - axis.min) / span;
      });
      out.push({ fips, points, highlighted: highlighted.has(fips) });
    }
    return out.sort((a, b) => (a.fips < b.fips ? -1 : 1));
  }

  highlightedCounties(): string[] {
    return this.store.snapshot().highlighted;
  }

  /** Mini scatters under each impact axis pair it with every primary axis. */
  miniScatterPairs(): { impact: string; primary: string }[] {
    const primaries = this.axes.filter((a) => a.primary).map((a) => a.dimension);
    const impacts = this.axes.filter((a) => !a.primary).map((a) => a.dimension);
    const pairs: { impact: string; primary: string }[] = [];
    for (const impact of impacts)
      for (const primary of primaries) pairs.push({ impact, primary });
    return pairs;
  }

  /** Clicking a mini scatter opens the detail view with the server trend. */
  openDetail(api: ApiClient, state: string, impact: string, primary: string): Promise<ScatterPayload> {
    return api.scatter(state, impact, primary);
  }
}
