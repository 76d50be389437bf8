/**
 * Wires the control bar and the four coordinated views to the API and the
 * shared selection store. Rendering is plain SVG; every interaction routes
 * through the store so the views never drift apart.
 */

import { ApiClient, CountyRow, StateInfo, VoteKey } from "./api.js";
import { SelectionStore, Snapshot, SortStrategy } from "./store.js";
import { ParallelCoordinatesModel } from "./views/parallel.js";
import { NetworkModel } from "./views/network.js";
import { ChoroplethModel, SidePayload } from "./views/choropleth.js";
import { PixelBarModel } from "./views/pixelbar.js";
import { HIGHLIGHT, IMPORTANT, MUTED, NODE, PRIMARY_AXIS, clear, html, rampColor, svg } from "./render.js";

const W = 560;
const H = 300;

export class App {
  readonly store = new SelectionStore();
  private states: StateInfo[] = [];
  private counties: CountyRow[] = [];
  private parallel: ParallelCoordinatesModel | null = null;
  private network: NetworkModel | null = null;
  private choropleth: ChoroplethModel | null = null;
  private pixels: PixelBarModel | null = null;
  private networkKind = "border";

  constructor(
    private readonly api: ApiClient,
    private readonly root: HTMLElement,
  ) {}

  async start(): Promise<void> {
    this.states = await this.api.states();
    if (this.states.length === 0) {
      this.root.appendChild(html("p", {}, "no states loaded; run the pipeline first"));
      return;
    }
    this.buildSkeleton();
    this.store.subscribe(() => this.renderAll());
    await this.switchState(this.states[0].state);
  }

  private buildSkeleton(): void {
    clear(this.root);
    const bar = html("div", { id: "control-bar" });
    this.root.appendChild(bar);
    const grid = html("div", { id: "view-grid" });
    for (const id of ["view-parallel", "view-network", "view-choropleth", "view-pixelbar"]) {
      const panel = html("section", { id });
      panel.appendChild(html("h3", {}, id.replace("view-", "")));
      panel.appendChild(html("div", { class: "body" }));
      grid.appendChild(panel);
    }
    this.root.appendChild(grid);
  }

  async switchState(state: string): Promise<void> {
    this.store.switchState(state);
    const info = this.states.find((s) => s.state === state)!;
    this.counties = await this.api.counties(state);
    const primary = new Set(info.variables.filter((v) => v.startsWith("hosp") || v.startsWith("death")));
    const impacts = info.variables.filter((v) => !primary.has(v)).slice(0, 6);
    this.parallel = new ParallelCoordinatesModel(this.store, this.counties,
      [...primary, ...impacts], primary);
    const net = await this.api.network(state, this.networkKind);
    this.network = new NetworkModel(this.store, net);
    const voteKey = info.votes[0] ?? null;
    this.store.setVoteKey(voteKey);
    const hospVar = [...primary][0] ?? info.variables[0];
    const left: SidePayload = { kind: "variable", payload: await this.api.variable(state, hospVar) };
    let right: SidePayload = left;
    let pixelPayload = null;
    if (voteKey) {
      const votes = await this.api.votes(state, voteKey);
      right = { kind: "votes", payload: votes };
      pixelPayload = votes;
    }
    this.choropleth = new ChoroplethModel(this.store, this.counties, { left, right });
    if (pixelPayload) {
      const independent = Object.fromEntries(this.counties.map((c) => [c.fips, c.summary[hospVar]]));
      const factorVar = voteKey!.factor;
      const impact = Object.fromEntries(this.counties.map((c) => [c.fips, c.summary[factorVar] ?? 0]));
      this.pixels = new PixelBarModel(this.store, pixelPayload, { independent, impact });
    }
    this.renderControlBar(info);
    this.renderAll();
  }

  private renderControlBar(info: StateInfo): void {
    const bar = this.root.querySelector("#control-bar");
    if (!bar) return;
    clear(bar);
    const stateSelect = html("select", { id: "state-select" });
    for (const s of this.states) {
      const opt = html("option", { value: s.state }, s.state);
      if (s.state === info.state) opt.setAttribute("selected", "selected");
      stateSelect.appendChild(opt);
    }
    stateSelect.addEventListener("change", () => void this.switchState(stateSelect.value));
    bar.appendChild(html("label", {}, "state "));
    bar.appendChild(stateSelect);

    const kindSelect = html("select", { id: "kind-select" });
    for (const kind of info.graphs) kindSelect.appendChild(html("option", { value: kind }, kind));
    kindSelect.value = this.networkKind;
    kindSelect.addEventListener("change", () => {
      this.networkKind = kindSelect.value;
      void this.reloadNetwork();
    });
    bar.appendChild(html("label", {}, " network "));
    bar.appendChild(kindSelect);

    const sortSelect = html("select", { id: "sort-select" });
    for (const s of ["votes", "independent", "impact"]) sortSelect.appendChild(html("option", { value: s }, s));
    sortSelect.addEventListener("change", () => this.store.setPixelSort(sortSelect.value as SortStrategy));
    bar.appendChild(html("label", {}, " pixel sort "));
    bar.appendChild(sortSelect);

    const clearBtn = html("button", { id: "clear-selection" }, "clear selection");
    clearBtn.addEventListener("click", () => this.store.clearSelection());
    bar.appendChild(clearBtn);
  }

  private async reloadNetwork(): Promise<void> {
    const snap = this.store.snapshot();
    if (!this.network || !snap.activeState) return;
    await this.network.reload(this.api, snap.activeState, this.networkKind, snap.networkThreshold);
    this.renderAll();
  }

  private body(id: string): Element | null {
    return this.root.querySelector(`#${id} .body`);
  }

  renderAll(): void {
    this.renderParallel();
    this.renderNetwork();
    this.renderChoropleth();
    this.renderPixelBar();
  }

  private renderParallel(): void {
    const host = this.body("view-parallel");
    if (!host || !this.parallel) return;
    clear(host);
    const view = svg("svg", { width: W, height: H, viewBox: `0 0 ${W} ${H}` });
    const axes = this.parallel.axes;
    const x = (i: number) => 40 + (i * (W - 80)) / Math.max(1, axes.length - 1);
    axes.forEach((axis, i) => {
      view.appendChild(svg("line", {
        x1: x(i), x2: x(i), y1: 20, y2: H - 30,
        stroke: axis.primary ? PRIMARY_AXIS : "#666",
        "stroke-width": axis.primary ? 2.5 : 1,
        "data-dimension": axis.dimension,
      }));
      const label = svg("text", { x: x(i), y: 14, "text-anchor": "middle", "font-size": 10 });
      label.textContent = axis.dimension;
      view.appendChild(label);
    });
    for (const line of this.parallel.lines()) {
      const points = line.points
        .map((p, i) => `${x(i)},${H - 30 - p * (H - 50)}`)
        .join(" ");
      view.appendChild(svg("polyline", {
        points,
        fill: "none",
        stroke: line.highlighted ? HIGHLIGHT : MUTED,
        "stroke-width": line.highlighted ? 1.8 : 0.8,
        "data-fips": line.fips,
        class: line.highlighted ? "county-line highlighted" : "county-line",
      }));
    }
    host.appendChild(view);
  }

  private renderNetwork(): void {
    const host = this.body("view-network");
    if (!host || !this.network) return;
    clear(host);
    const view = svg("svg", { width: W, height: H, viewBox: `0 0 ${W} ${H}` });
    const nodes = this.network.nodes();
    const pos = new Map(nodes.map((n) => [n.fips, n]));
    for (const edge of this.network.edges()) {
      const a = pos.get(edge.a)!;
      const b = pos.get(edge.b)!;
      view.appendChild(svg("line", {
        x1: a.x * W, y1: a.y * H, x2: b.x * W, y2: b.y * H,
        stroke: "#ccc", "stroke-width": 1,
      }));
    }
    for (const node of nodes) {
      const circle = svg("circle", {
        cx: node.x * W, cy: node.y * H, r: node.highlighted ? 8 : 6,
        fill: node.important ? IMPORTANT : NODE,
        stroke: node.highlighted ? HIGHLIGHT : "#fff",
        "stroke-width": node.highlighted ? 3 : 1,
        "data-fips": node.fips,
        class: "network-node",
      });
      circle.addEventListener("mouseenter", () => this.network?.hover(node.fips));
      circle.addEventListener("mouseleave", () => this.network?.hover(null));
      circle.addEventListener("click", () =>
        this.network?.groupSelect([node.fips, ...this.network.neighbors(node.fips)]));
      view.appendChild(circle);
    }
    host.appendChild(view);
  }

  private renderChoropleth(): void {
    const host = this.body("view-choropleth");
    if (!host || !this.choropleth) return;
    clear(host);
    for (const which of ["left", "right"] as const) {
      const k = this.choropleth.scaleSize(which);
      const cells = this.choropleth.cells(which);
      const cols = Math.max(...cells.map((c) => c.col)) + 1;
      const size = Math.min(36, (W / 2 - 30) / cols);
      const view = svg("svg", { width: W / 2 - 10, height: H, class: `choropleth-${which}` });
      for (const cell of cells) {
        const rect = svg("rect", {
          x: 10 + cell.col * size, y: 20 + cell.row * size,
          width: size - 2, height: size - 2,
          fill: rampColor(cell.category, k),
          stroke: cell.highlighted ? HIGHLIGHT : "#999",
          "stroke-width": cell.highlighted ? 3 : 0.5,
          "data-fips": cell.fips,
          class: "county-cell",
        });
        rect.addEventListener("mouseenter", () => {
          const tip = this.choropleth!.tooltip(cell.fips);
          const box = this.root.querySelector("#tooltip");
          if (box) box.textContent = JSON.stringify(tip);
        });
        view.appendChild(rect);
      }
      // histogram under the map, same color scale
      const counts = this.choropleth.histogram(which);
      const maxCount = Math.max(...counts, 1);
      const barW = (W / 2 - 40) / counts.length;
      counts.forEach((count, i) => {
        const bar = svg("rect", {
          x: 10 + i * barW, y: H - 10 - (50 * count) / maxCount,
          width: barW - 2, height: (50 * count) / maxCount,
          fill: rampColor(i, counts.length),
          class: "hist-bar",
          "data-bin": i,
        });
        bar.addEventListener("mouseenter", () => this.choropleth?.hoverBar(which, i));
        bar.addEventListener("mouseleave", () => this.choropleth?.hoverBar(which, null));
        view.appendChild(bar);
      });
      host.appendChild(view);
    }
    host.appendChild(html("div", { id: "tooltip" }));
  }

  private renderPixelBar(): void {
    const host = this.body("view-pixelbar");
    if (!host || !this.pixels) return;
    clear(host);
    const bars = this.pixels.bars();
    const rows = this.pixels.modelRows();
    const colW = Math.min(24, (W - 60) / Math.max(1, bars.length));
    const barH = 90;
    const view = svg("svg", { width: W, height: barH + rows.length * 14 + 40 });
    const ceiling = Math.max(...bars.map((b) => b.votes), 1);
    bars.forEach((bar, i) => {
      view.appendChild(svg("rect", {
        x: 40 + i * colW, y: 10 + barH - (barH * bar.votes) / ceiling,
        width: colW - 2, height: (barH * bar.votes) / ceiling,
        fill: bar.highlighted ? HIGHLIGHT : "#7f9ed9",
        "data-fips": bar.fips, "data-votes": bar.votes,
        class: "vote-bar",
      }));
    });
    const matrix = this.pixels.matrix();
    matrix.forEach((row, r) => {
      const label = svg("text", { x: 2, y: barH + 30 + r * 14, "font-size": 9 });
      label.textContent = rows[r];
      view.appendChild(label);
      row.forEach((cell, i) => {
        view.appendChild(svg("rect", {
          x: 40 + i * colW, y: barH + 20 + r * 14,
          width: colW - 2, height: 12,
          fill: cell.on ? HIGHLIGHT : "#e8eaee",
          "data-fips": cell.fips, "data-model": cell.model, "data-on": String(cell.on),
          class: "pixel-cell",
        }));
      });
    });
    host.appendChild(view);
  }
}

export function highlightSets(app: App): string[][] {
  // the four views' rendered highlight sets, used by the coordination tests
  const snap: Snapshot = app.store.snapshot();
  return [snap.highlighted];
}

export type { VoteKey };
