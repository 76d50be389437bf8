/**
 * Paired choropleth model: two reconfigurable sides, each showing either a
 * binned variable or the consensus vote counts, with the summary histogram
 * underneath and hover tooltips carrying the per-model vote breakdown.
 *
 * Counties render as a grid cartogram (synthetic states have no geometry);
 * the color index is the API's bin assignment or the vote count verbatim.
 */

import type { CountyRow, VariablePayload, VotesPayload } from "../api.js";
import type { SelectionStore } from "../store.js";

export type SidePayload =
  | { kind: "variable"; payload: VariablePayload }
  | { kind: "votes"; payload: VotesPayload };

export interface Cell {
  fips: string;
  name: string;
  category: number;
  highlighted: boolean;
  row: number;
  col: number;
}

export interface TooltipInfo {
  fips: string;
  name: string;
  values: Record<string, number>;
  votes: number | null;
  breakdown: { name: string; significant: boolean; p: number | null }[] | null;
}

export class ChoroplethModel {
  private meta = new Map<string, CountyRow>();
  private order: string[];

  constructor(
    private readonly store: SelectionStore,
    counties: CountyRow[],
    private sides: { left: SidePayload; right: SidePayload },
  ) {
    for (const c of counties) this.meta.set(c.fips, c);
    this.order = counties.map((c) => c.fips).sort();
  }

  setSide(which: "left" | "right", payload: SidePayload): void {
    this.sides[which] = payload;
  }

  private categories(side: SidePayload): Record<string, number> {
    if (side.kind === "variable") return side.payload.assignment;
    return Object.fromEntries(side.payload.counties.map((c) => [c.fips, c.votes]));
  }

  /** Color scale domain: bin count for variables, 0..M for vote tables. */
  scaleSize(which: "left" | "right"): number {
    const side = this.sides[which];
    if (side.kind === "variable") return side.payload.counts.length;
    return side.payload.aggregate.ceiling + 1;
  }

  cells(which: "left" | "right"): Cell[] {
    const cats = this.categories(this.sides[which]);
    const highlighted = new Set(this.store.snapshot().highlighted);
    const cols = Math.ceil(Math.sqrt(this.order.length));
    return this.order.map((fips, i) => ({
      fips,
      name: this.meta.get(fips)?.name ?? fips,
      category: cats[fips] ?? 0,
      highlighted: highlighted.has(fips),
      row: Math.floor(i / cols),
      col: i % cols,
    }));
  }

  /** Histogram bars reuse the API counts; votes use the aggregate histogram. */
  histogram(which: "left" | "right"): number[] {
    const side = this.sides[which];
    if (side.kind === "variable") return side.payload.counts;
    const hist = side.payload.aggregate.histogram;
    const out: number[] = [];
    for (let v = 0; v <= side.payload.aggregate.ceiling; v++) out.push(hist[String(v)] ?? 0);
    return out;
  }

  countiesInBin(which: "left" | "right", category: number): string[] {
    const cats = this.categories(this.sides[which]);
    return this.order.filter((f) => cats[f] === category).sort();
  }

  /** Hovering a histogram bar highlights its counties on every view. */
  hoverBar(which: "left" | "right", category: number | null): void {
    if (category === null) this.store.clearHover("histogram-hover");
    else this.store.setHover(this.countiesInBin(which, category), "histogram-hover");
  }

  tooltip(fips: string): TooltipInfo {
    const row = this.meta.get(fips);
    let votes: number | null = null;
    let breakdown: TooltipInfo["breakdown"] = null;
    for (const side of [this.sides.left, this.sides.right]) {
      if (side.kind === "votes") {
        const county = side.payload.counties.find((c) => c.fips === fips);
        if (county) {
          votes = county.votes;
          breakdown = county.models.map((m) => ({
            name: m.name,
            significant: m.significant,
            p: m.p,
          }));
        }
      }
    }
    return {
      fips,
      name: row?.name ?? fips,
      values: row?.summary ?? {},
      votes,
      breakdown,
    };
  }

  highlightedCounties(): string[] {
    return this.store.snapshot().highlighted;
  }
}
