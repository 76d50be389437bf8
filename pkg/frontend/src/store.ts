/**
 * Single source of truth for the coordinated views.
 *
 * All four views highlight exactly `selected ∪ hover`; any interaction goes
 * through this store and every subscriber re-renders from the same snapshot,
 * which is what keeps the views consistent under arbitrary event orders.
 */

import type { VoteKey } from "./api.js";

export type SortStrategy = "independent" | "impact" | "votes";

export interface PixelWindow {
  start: number;
  size: number;
}

export interface Snapshot {
  activeState: string | null;
  brushes: Record<string, [number, number]>;
  selected: string[];
  hover: string[];
  highlighted: string[];
  networkThreshold: number | null;
  centralityThreshold: number;
  choroplethPair: [string, string] | null;
  voteKey: VoteKey | null;
  pixelSort: SortStrategy;
  pixelWindow: PixelWindow | null;
}

export type Cause =
  | "state-switch"
  | "brush"
  | "network-group"
  | "network-hover"
  | "histogram-hover"
  | "clear"
  | "config";

type Listener = (snap: Snapshot, cause: Cause) => void;

const sorted = (s: Set<string>) => Array.from(s).sort();

export class SelectionStore {
  private listeners = new Set<Listener>();
  private selectedSet = new Set<string>();
  private hoverSet = new Set<string>();
  private brushMap = new Map<string, [number, number]>();
  private state: string | null = null;
  private netThreshold: number | null = null;
  private centThreshold = 1;
  private pair: [string, string] | null = null;
  private votes: VoteKey | null = null;
  private sort: SortStrategy = "votes";
  private window: PixelWindow | null = null;

  subscribe(fn: Listener): () => void {
    this.listeners.add(fn);
    return () => this.listeners.delete(fn);
  }

  snapshot(): Snapshot {
    const selected = sorted(this.selectedSet);
    const hover = sorted(this.hoverSet);
    return {
      activeState: this.state,
      brushes: Object.fromEntries(this.brushMap),
      selected,
      hover,
      highlighted: sorted(new Set([...selected, ...hover])),
      networkThreshold: this.netThreshold,
      centralityThreshold: this.centThreshold,
      choroplethPair: this.pair,
      voteKey: this.votes,
      pixelSort: this.sort,
      pixelWindow: this.window,
    };
  }

  private emit(cause: Cause): void {
    const snap = this.snapshot();
    for (const fn of this.listeners) fn(snap, cause);
  }

  switchState(state: string): void {
    this.state = state;
    this.selectedSet.clear();
    this.hoverSet.clear();
    this.brushMap.clear();
    this.window = null;
    this.emit("state-switch");
  }

  /** Replace the selection (parallel-coordinates filtering). */
  setSelected(fips: Iterable<string>, cause: Cause = "brush"): void {
    this.selectedSet = new Set(fips);
    this.emit(cause);
  }

  /** Add a cluster to the selection (network group select). */
  addSelected(fips: Iterable<string>): void {
    for (const f of fips) this.selectedSet.add(f);
    this.emit("network-group");
  }

  setHover(fips: Iterable<string>, cause: Cause): void {
    this.hoverSet = new Set(fips);
    this.emit(cause);
  }

  clearHover(cause: Cause): void {
    if (this.hoverSet.size === 0) return;
    this.hoverSet.clear();
    this.emit(cause);
  }

  clearSelection(): void {
    this.selectedSet.clear();
    this.hoverSet.clear();
    this.brushMap.clear();
    this.emit("clear");
  }

  setBrush(dimension: string, interval: [number, number] | null): void {
    if (interval === null) this.brushMap.delete(dimension);
    else this.brushMap.set(dimension, interval);
    // the parallel-coordinates view recomputes the filtered set and calls
    // setSelected; the brush record itself is kept for re-rendering
  }

  brushes(): ReadonlyMap<string, [number, number]> {
    return this.brushMap;
  }

  setNetworkThreshold(d: number | null): void {
    this.netThreshold = d;
    this.emit("config");
  }

  setCentralityThreshold(rank: number): void {
    this.centThreshold = rank;
    this.emit("config");
  }

  setChoroplethPair(left: string, right: string): void {
    this.pair = [left, right];
    this.emit("config");
  }

  setVoteKey(key: VoteKey | null): void {
    this.votes = key;
    this.emit("config");
  }

  setPixelSort(sort: SortStrategy): void {
    this.sort = sort;
    this.emit("config");
  }

  setPixelWindow(window: PixelWindow | null): void {
    this.window = window;
    this.emit("config");
  }
}
