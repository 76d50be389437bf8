/**
 * County-network model: nodes, distance-threshold filtered edges (filtered
 * server-side), degree-centrality coloring, hover neighborhoods, and group
 * selection into the shared store.
 */

import type { ApiClient, NetworkPayload } from "../api.js";
import type { SelectionStore } from "../store.js";

export interface NetworkNode {
  fips: string;
  rank: number;
  score: number;
  degree: number;
  important: boolean;
  highlighted: boolean;
  x: number;
  y: number;
}

export interface NetworkEdge {
  a: string;
  b: string;
  weight: number;
}

export class NetworkModel {
  private payload: NetworkPayload;
  private positions = new Map<string, { x: number; y: number }>();

  constructor(
    private readonly store: SelectionStore,
    payload: NetworkPayload,
  ) {
    this.payload = payload;
    this.layout();
  }

  /** Distance threshold changes are resolved by the server (one source of truth). */
  async reload(api: ApiClient, state: string, kind: string, threshold: number | null): Promise<void> {
    this.payload = await api.network(state, kind, threshold ?? undefined);
    this.layout();
  }

  kind(): string {
    return this.payload.kind;
  }

  edges(): NetworkEdge[] {
    const nodes = this.payload.nodes;
    return this.payload.edges.map(([i, j, weight]) => ({ a: nodes[i], b: nodes[j], weight }));
  }

  neighbors(fips: string): string[] {
    const out: string[] = [];
    for (const e of this.edges()) {
      if (e.a === fips) out.push(e.b);
      else if (e.b === fips) out.push(e.a);
    }
    return out.sort();
  }

  /** Hovering a node highlights it and its neighborhood everywhere. */
  hover(fips: string | null): void {
    if (fips === null) this.store.clearHover("network-hover");
    else this.store.setHover([fips, ...this.neighbors(fips)], "network-hover");
  }

  /** Group select adds a cluster to the shared selection. */
  groupSelect(fips: string[]): void {
    this.store.addSelected(fips);
  }

  /** Nodes whose centrality rank clears the threshold are marked important. */
  nodes(): NetworkNode[] {
    const snap = this.store.snapshot();
    const highlighted = new Set(snap.highlighted);
    return this.payload.centrality.map((c) => {
      const pos = this.positions.get(c.fips) ?? { x: 0.5, y: 0.5 };
      return {
        fips: c.fips,
        rank: c.rank,
        score: c.score,
        degree: c.degree,
        important: c.rank <= snap.centralityThreshold,
        highlighted: highlighted.has(c.fips),
        x: pos.x,
        y: pos.y,
      };
    });
  }

  importantSet(): string[] {
    return this.nodes().filter((n) => n.important).map((n) => n.fips).sort();
  }

  highlightedCounties(): string[] {
    return this.store.snapshot().highlighted;
  }

  /**
   * Small deterministic spring layout in the unit square; edge rest length
   * follows the (socioeconomic) edge weight so distance encodes similarity.
   */
  private layout(): void {
    const nodes = this.payload.nodes;
    const n = nodes.length;
    this.positions.clear();
    if (n === 0) return;
    const pos = nodes.map((_, i) => ({
      x: 0.5 + 0.4 * Math.cos((2 * Math.PI * i) / n),
      y: 0.5 + 0.4 * Math.sin((2 * Math.PI * i) / n),
    }));
    const weights = this.payload.edges.map(([, , w]) => w);
    const maxW = Math.max(...weights, 1e-9);
    for (let iter = 0; iter < 150; iter++) {
      const force = pos.map(() => ({ x: 0, y: 0 }));
      for (let i = 0; i < n; i++) {
        for (let j = i + 1; j < n; j++) {
          const dx = pos[j].x - pos[i].x;
          const dy = pos[j].y - pos[i].y;
          const d = Math.max(Math.hypot(dx, dy), 1e-6);
          const repulse = 0.002 / (d * d);
          force[i].x -= (repulse * dx) / d;
          force[i].y -= (repulse * dy) / d;
          force[j].x += (repulse * dx) / d;
          force[j].y += (repulse * dy) / d;
        }
      }
      for (const [i, j, w] of this.payload.edges) {
        const rest = 0.08 + 0.3 * (w / maxW);
        const dx = pos[j].x - pos[i].x;
        const dy = pos[j].y - pos[i].y;
        const d = Math.max(Math.hypot(dx, dy), 1e-6);
        const pull = 0.05 * (d - rest);
        force[i].x += (pull * dx) / d;
        force[i].y += (pull * dy) / d;
        force[j].x -= (pull * dx) / d;
        force[j].y -= (pull * dy) / d;
      }
      for (let i = 0; i < n; i++) {
        pos[i].x = Math.min(0.98, Math.max(0.02, pos[i].x + force[i].x));
        pos[i].y = Math.min(0.98, Math.max(0.02, pos[i].y + force[i].y));
      }
    }
    nodes.forEach((fips, i) => this.positions.set(fips, pos[i]));
  }
}
