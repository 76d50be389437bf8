/**
 * Typed client for the geocon results API.
 *
 * Every number the UI displays comes from one of these payloads; views only
 * reshape them. The optional audit hook records each request so tests can
 * verify that no view invents data outside the API surface.
 */

export interface StateInfo {
  state: string;
  counties: number;
  variables: string[];
  graphs: string[];
  votes: VoteKey[];
  date_range: [string, string];
}

export interface VoteKey {
  factor: string;
  kind: string;
  alpha: number;
}

export interface CountyRow {
  fips: string;
  name: string;
  population: number | null;
  summary: Record<string, number>;
}

export interface NetworkPayload {
  nodes: string[];
  edges: [number, number, number][];
  kind: string;
  centrality: { fips: string; degree: number; score: number; rank: number }[];
}

export interface VariablePayload {
  variable: string;
  values: Record<string, number>;
  breakpoints: number[];
  assignment: Record<string, number>;
  counts: number[];
  degenerate: boolean;
}

export interface ModelVote {
  name: string;
  p: number | null;
  significant: boolean;
  rmse_base: number | null;
  rmse_factor: number | null;
}

export interface CountyVotes {
  fips: string;
  votes: number;
  models: ModelVote[];
}

export interface VotesPayload {
  state: string;
  factor: string;
  graph_kind: string;
  alpha: number;
  counties: CountyVotes[];
  aggregate: {
    total: number;
    histogram: Record<string, number>;
    ceiling: number;
    counties: number;
  };
}

export interface ScatterPayload {
  x: string;
  y: string;
  points: { fips: string; x: number; y: number }[];
  trend: { slope: number; intercept: number; r: number; degenerate: boolean; n: number };
}

export type AuditHook = (url: string) => void;

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly audit: AuditHook | null = null,
  ) {}

  private async get<T>(path: string): Promise<T> {
    const url = `${this.baseUrl}${path}`;
    this.audit?.(url);
    const res = await fetch(url);
    if (!res.ok) {
      const body = await res.text();
      throw new Error(`GET ${path} -> ${res.status}: ${body}`);
    }
    return (await res.json()) as T;
  }

  states(): Promise<StateInfo[]> {
    return this.get("/api/states");
  }

  counties(state: string): Promise<CountyRow[]> {
    return this.get(`/api/states/${state}/counties`);
  }

  network(state: string, kind: string, threshold?: number): Promise<NetworkPayload> {
    const extra = threshold === undefined ? "" : `&threshold=${threshold}`;
    return this.get(`/api/states/${state}/network?kind=${kind}${extra}`);
  }

  variable(state: string, variable: string, bins = 5): Promise<VariablePayload> {
    return this.get(`/api/states/${state}/variables/${encodeURIComponent(variable)}?bins=${bins}`);
  }

  votes(state: string, key: VoteKey): Promise<VotesPayload> {
    const { factor, kind, alpha } = key;
    return this.get(`/api/states/${state}/votes?factor=${factor}&kind=${kind}&alpha=${alpha}`);
  }

  scatter(state: string, x: string, y: string): Promise<ScatterPayload> {
    return this.get(
      `/api/states/${state}/scatter?x=${encodeURIComponent(x)}&y=${encodeURIComponent(y)}`,
    );
  }
}

export function defaultBaseUrl(): string {
  const w = globalThis as { API_BASE_URL?: string; location?: Location };
  if (w.API_BASE_URL) return w.API_BASE_URL;
  if (w.location?.search) {
    const api = new URLSearchParams(w.location.search).get("api");
    if (api) return api;
  }
  return "http://127.0.0.1:8040";
}
