import type { CountyRow, NetworkPayload, VariablePayload, VotesPayload } from "../src/api.js";

export const COUNTIES: CountyRow[] = [
  { fips: "99001", name: "A", population: 100000, summary: { hosp: 5.0, aod: 0.2, svi: 0.9 } },
  { fips: "99003", name: "B", population: 100000, summary: { hosp: 3.0, aod: 0.8, svi: 0.1 } },
  { fips: "99005", name: "C", population: 100000, summary: { hosp: 7.0, aod: 0.5, svi: 0.4 } },
  { fips: "99007", name: "D", population: 100000, summary: { hosp: 1.0, aod: 0.9, svi: 0.6 } },
];

export const NETWORK: NetworkPayload = {
  nodes: ["99001", "99003", "99005", "99007"],
  edges: [
    [0, 1, 1.0],
    [1, 2, 2.0],
    [2, 3, 1.5],
  ],
  kind: "socio",
  centrality: [
    { fips: "99003", degree: 2, score: 2 / 3, rank: 1 },
    { fips: "99005", degree: 2, score: 2 / 3, rank: 1 },
    { fips: "99001", degree: 1, score: 1 / 3, rank: 2 },
    { fips: "99007", degree: 1, score: 1 / 3, rank: 2 },
  ],
};

export const VARIABLE: VariablePayload = {
  variable: "hosp",
  values: { "99001": 5.0, "99003": 3.0, "99005": 7.0, "99007": 1.0 },
  breakpoints: [2.5, 4.0, 6.0],
  assignment: { "99001": 2, "99003": 1, "99005": 3, "99007": 0 },
  counts: [1, 1, 1, 1],
  degenerate: false,
};

function votesFor(flags: boolean[]): { votes: number; models: VotesPayload["counties"][0]["models"] } {
  return {
    votes: flags.filter(Boolean).length,
    models: flags.map((significant, i) => ({
      name: `m${i}`,
      p: significant ? 0.01 : 0.8,
      significant,
      rmse_base: 1.0,
      rmse_factor: significant ? 0.8 : 1.0,
    })),
  };
}

export const VOTES: VotesPayload = {
  state: "SYN",
  factor: "aod",
  graph_kind: "socio",
  alpha: 0.1,
  counties: [
    { fips: "99001", ...votesFor([true, true, true, false]) },
    { fips: "99003", ...votesFor([false, false, false, false]) },
    { fips: "99005", ...votesFor([true, true, true, true]) },
    { fips: "99007", ...votesFor([true, false, false, false]) },
  ],
  aggregate: {
    total: 8,
    histogram: { "0": 1, "1": 1, "2": 0, "3": 1, "4": 1 },
    ceiling: 4,
    counties: 4,
  },
};
