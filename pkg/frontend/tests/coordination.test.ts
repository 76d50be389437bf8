/**
 * Integration against a live demo backend: scripted interaction sequences
 * must leave all four views highlighting the identical county set, and the
 * pixel bar must agree with the vote table it renders.
 */
import { beforeAll, describe, expect, test } from "vitest";

import { ApiClient, type CountyRow, type StateInfo, type VotesPayload } from "../src/api.js";
import { SelectionStore } from "../src/store.js";
import { ParallelCoordinatesModel } from "../src/views/parallel.js";
import { NetworkModel } from "../src/views/network.js";
import { ChoroplethModel } from "../src/views/choropleth.js";
import { PixelBarModel } from "../src/views/pixelbar.js";
import { BASE_URL } from "./globalSetup.js";

const requested: string[] = [];
const api = new ApiClient(BASE_URL, (url) => requested.push(url));

interface Setup {
  store: SelectionStore;
  parallel: ParallelCoordinatesModel;
  network: NetworkModel;
  choropleth: ChoroplethModel;
  pixels: PixelBarModel;
  counties: CountyRow[];
  votes: VotesPayload;
  info: StateInfo;
}

async function buildViews(): Promise<Setup> {
  const [info] = await api.states();
  const store = new SelectionStore();
  store.switchState(info.state);
  const counties = await api.counties(info.state);
  const primary = new Set(info.variables.filter((v) => v.startsWith("hosp")));
  const dims = [...primary, ...info.variables.filter((v) => !primary.has(v)).slice(0, 4)];
  const parallel = new ParallelCoordinatesModel(store, counties, dims, primary);
  const network = new NetworkModel(store, await api.network(info.state, "border"));
  const voteKey = info.votes[0];
  const votes = await api.votes(info.state, voteKey);
  const hospVar = [...primary][0];
  const variable = await api.variable(info.state, hospVar, 4);
  const choropleth = new ChoroplethModel(store, counties, {
    left: { kind: "variable", payload: variable },
    right: { kind: "votes", payload: votes },
  });
  const independent = Object.fromEntries(counties.map((c) => [c.fips, c.summary[hospVar]]));
  const impact = Object.fromEntries(counties.map((c) => [c.fips, c.summary[voteKey.factor] ?? 0]));
  const pixels = new PixelBarModel(store, votes, { independent, impact });
  return { store, parallel, network, choropleth, pixels, counties, votes, info };
}

function allViewSets(s: Setup): string[][] {
  return [
    s.parallel.highlightedCounties(),
    s.network.highlightedCounties(),
    s.choropleth.highlightedCounties(),
    s.pixels.highlightedCounties(),
    s.parallel.lines().filter((l) => l.highlighted).map((l) => l.fips).sort(),
    s.network.nodes().filter((n) => n.highlighted).map((n) => n.fips).sort(),
    s.choropleth.cells("left").filter((c) => c.highlighted).map((c) => c.fips).sort(),
  ];
}

function expectConsistent(s: Setup): string[] {
  const sets = allViewSets(s);
  for (const other of sets.slice(1)) expect(other).toEqual(sets[0]);
  // the pixel bar shows the highlight only for visible columns, a subset
  const visible = new Set(s.pixels.visibleOrder());
  const barSet = s.pixels.bars().filter((b) => b.highlighted).map((b) => b.fips).sort();
  expect(barSet).toEqual(sets[0].filter((f) => visible.has(f)));
  return sets[0];
}

describe("cross-view coordination against the demo backend", () => {
  let s: Setup;

  beforeAll(async () => {
    s = await buildViews();
  });

  test("demo backend answers every endpoint", async () => {
    expect(s.info.votes.length).toBeGreaterThan(0);
    const scatter = await api.scatter(s.info.state, s.info.votes[0].factor, "hosp");
    expect(scatter.points.length).toBe(s.counties.length);
    expect(requested.some((u) => u.includes("/api/states"))).toBe(true);
  });

  test("scripted brush, group select, and histogram hover stay consistent", () => {
    // 1) brush the first axis around its median
    const axis = s.parallel.axes[0];
    const mid = (axis.min + axis.max) / 2;
    s.parallel.brush(axis.dimension, [axis.min, mid]);
    const afterBrush = expectConsistent(s);
    expect(afterBrush.length).toBeGreaterThan(0);
    expect(afterBrush.length).toBeLessThan(s.counties.length);

    // 2) network group select adds a cluster to the same selection
    const seed = s.counties[0].fips;
    s.network.groupSelect([seed, ...s.network.neighbors(seed)]);
    const afterGroup = expectConsistent(s);
    for (const fips of afterBrush) expect(afterGroup).toContain(fips);
    expect(afterGroup).toContain(seed);

    // 3) histogram hover layers a transient highlight on top
    s.choropleth.hoverBar("left", 0);
    const afterHover = expectConsistent(s);
    for (const fips of s.choropleth.countiesInBin("left", 0)) {
      expect(afterHover).toContain(fips);
    }

    // 4) hover off and clear returns every view to empty
    s.choropleth.hoverBar("left", null);
    expectConsistent(s);
    s.store.clearSelection();
    expect(expectConsistent(s)).toEqual([]);
  });

  test("full-range brush selects every county in all views", () => {
    const axis = s.parallel.axes[0];
    s.parallel.brush(axis.dimension, [axis.min, axis.max]);
    const set = expectConsistent(s);
    expect(set).toEqual(s.counties.map((c) => c.fips).sort());
    s.store.clearSelection();
  });
});

describe("pixel bar against the demo vote table", () => {
  let s: Setup;

  beforeAll(async () => {
    s = await buildViews();
  });

  test("blue pixel count equals the vote bar height for every county", () => {
    const matrix = s.pixels.matrix();
    for (const bar of s.pixels.bars()) {
      const pixels = matrix.reduce(
        (acc, row) => acc + (row.find((c) => c.fips === bar.fips)?.on ? 1 : 0),
        0,
      );
      expect(pixels).toBe(bar.votes);
      const fromTable = s.votes.counties.find((c) => c.fips === bar.fips)!.votes;
      expect(bar.votes).toBe(fromTable);
    }
  });

  test("sort by votes renders non-increasing bars for the whole state", () => {
    s.store.setPixelSort("votes");
    s.store.setPixelWindow(null);
    const heights = s.pixels.bars().map((b) => b.votes);
    for (let i = 1; i < heights.length; i++) {
      expect(heights[i]).toBeLessThanOrEqual(heights[i - 1]);
    }
  });

  test("sliding window shift renders the expected county span", () => {
    s.store.setPixelSort("votes");
    const order = s.pixels.order();
    s.pixels.setWindow(2, 5);
    expect(s.pixels.visibleOrder()).toEqual(order.slice(2, 7));
    s.pixels.shiftWindow(2);
    expect(s.pixels.visibleOrder()).toEqual(order.slice(4, 9));
  });

  test("every rendered number traces back to an API payload", () => {
    // votes shown in bars equal the vote table; histogram equals the
    // aggregate; no client-side statistics beyond display transforms
    const hist = s.choropleth.histogram("right");
    const agg = s.votes.aggregate;
    hist.forEach((count, v) => expect(count).toBe(agg.histogram[String(v)] ?? 0));
    expect(hist.reduce((a, b) => a + b, 0)).toBe(agg.counties);
  });
});
