"""Planted-signal synthetic states for end-to-end validation.

The generator lays counties on a grid, gives each one a persistent
stochastic atmospheric factor series, and drives the hospitalization target
with a graph-diffused autoregressive process plus ``beta * factor`` (lagged
by ``factor_lag`` days) on a chosen signal subset S, plus observation
noise. Only a model that sees the factor channel observes the values the
lagged effect needs, so it can genuinely improve its forecasts inside S and
nowhere else; that asymmetry is what the consensus vote must recover.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from datetime import date, timedelta
from pathlib import Path

import numpy as np

from .graphs import SOCIO_INDEX_NAMES, socio_slug
from .ndiff import named_stream

START_DATE = date(2020, 2, 1)
POPULATION = 100_000  # uniform so per-100k scaling is the identity


@dataclass
class SynthState:
    fips: list[str]
    names: list[str]
    adjacency: list[tuple[int, int]]          # grid-neighbor index pairs
    socio: np.ndarray                         # (N, 9)
    hosp: np.ndarray                          # (T, N)
    factor: np.ndarray                        # (T, N)
    factor_name: str
    signal_counties: list[str]
    beta: float
    factor_lag: int
    seed: int
    timesteps: int = field(init=False)

    def __post_init__(self):
        self.timesteps = self.hosp.shape[0]


def _grid_edges(n: int) -> list[tuple[int, int]]:
    cols = max(1, int(math.ceil(math.sqrt(n))))
    edges = []
    for i in range(n):
        c = i % cols
        if c + 1 < cols and i + 1 < n:
            edges.append((i, i + 1))
        if i + cols < n:
            edges.append((i, i + cols))
    return edges


def generate_state(counties: int = 20, signal_set: int = 5, beta: float = 0.8,
                   timesteps: int = 250, seed: int = 7, factor_name: str = "aod",
                   factor_lag: int = 7) -> SynthState:
    """Deterministic synthetic state; all randomness flows from named
    streams of ``seed``."""
    if not 0 <= signal_set <= counties:
        raise ValueError(f"signal set of {signal_set} does not fit in {counties} counties")
    if counties < 2 or timesteps < 2:
        raise ValueError("need at least 2 counties and 2 timesteps")
    n = counties
    fips = [f"99{2 * i + 1:03d}" for i in range(n)]
    names = [f"Synth County {i + 1}" for i in range(n)]
    edges = _grid_edges(n)

    socio = named_stream(seed, "socio").normal(0.0, 1.0, size=(n, len(SOCIO_INDEX_NAMES)))

    signal_idx = sorted(named_stream(seed, "signal").choice(n, size=signal_set, replace=False))
    members = [fips[i] for i in signal_idx]

    # persistent stochastic factor: an AR(1) with unit stationary variance,
    # so its future is predictable from its own recent values but cannot be
    # recovered from the mixed hospitalization series alone
    frng = named_stream(seed, "factor")
    rho = 0.6
    innovation = np.sqrt(1.0 - rho * rho)
    factor = np.zeros((timesteps, n))
    level = frng.normal(size=n)
    for step in range(timesteps):
        level = rho * level + innovation * frng.normal(size=n)
        factor[step] = level

    # graph-diffused AR base for the hospitalization signal
    adj = np.zeros((n, n))
    for i, j in edges:
        adj[i, j] = adj[j, i] = 1.0
    deg = adj.sum(axis=1, keepdims=True)
    diffuse = np.divide(adj, deg, out=np.zeros_like(adj), where=deg > 0)
    brng = named_stream(seed, "base")
    base = np.zeros((timesteps, n))
    state = brng.normal(0.0, 0.25, size=n)
    for step in range(timesteps):
        state = 0.9 * (0.5 * state + 0.5 * diffuse @ state) + 0.1 * brng.normal(size=n)
        base[step] = state

    nrng = named_stream(seed, "noise")
    hosp = 5.0 + base + 0.05 * nrng.normal(size=(timesteps, n))
    mask = np.zeros(n)
    mask[signal_idx] = 1.0
    if factor_lag > 0:
        lagged = np.vstack([np.repeat(factor[:1], factor_lag, axis=0), factor[:-factor_lag]])
    else:
        lagged = factor
    hosp += beta * lagged * mask[None, :]

    return SynthState(fips=fips, names=names, adjacency=edges, socio=socio, hosp=hosp,
                      factor=factor, factor_name=factor_name, signal_counties=members,
                      beta=beta, factor_lag=factor_lag, seed=seed)


def write_state(state: SynthState, out_dir: str | Path, *, epochs: int = 30,
                runs: int = 10, hidden_dim: int = 8, dropout: float = 0.15,
                alpha: float = 0.1, lags: int = 5, horizon: int = 15,
                graph_kind: str = "border", experiment_seed: int | None = None) -> Path:
    """Write series/socio/adjacency CSVs plus a ready-to-run experiment
    config and the ground truth; returns the config path."""
    out = Path(out_dir)
    data = out / "data"
    data.mkdir(parents=True, exist_ok=True)
    end = START_DATE + timedelta(days=state.timesteps - 1)

    lines = ["fips,date,variable,value,population"]
    for i, fips in enumerate(state.fips):
        for step in range(state.timesteps):
            day = (START_DATE + timedelta(days=step)).isoformat()
            lines.append(f"{fips},{day},hosp,{float(state.hosp[step, i])!r},{POPULATION}")
        for step in range(state.timesteps):
            day = (START_DATE + timedelta(days=step)).isoformat()
            lines.append(f"{fips},{day},{state.factor_name},{float(state.factor[step, i])!r},")
    (data / "series.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")

    lines = ["fips,index_name,value"]
    for i, fips in enumerate(state.fips):
        for j, index_name in enumerate(SOCIO_INDEX_NAMES):
            lines.append(f"{fips},{index_name},{float(state.socio[i, j])!r}")
    (data / "socio.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")

    lines = []
    for i, j in state.adjacency:
        lines.append(f'"{state.names[i]}"|{state.fips[i]}|"{state.names[j]}"|{state.fips[j]}')
        lines.append(f'"{state.names[j]}"|{state.fips[j]}|"{state.names[i]}"|{state.fips[i]}')
    for i, fips in enumerate(state.fips):  # census files list each county with itself
        lines.append(f'"{state.names[i]}"|{fips}|"{state.names[i]}"|{fips}')
    (data / "adjacency.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")

    truth = {
        "signal_counties": state.signal_counties,
        "beta": state.beta,
        "factor": state.factor_name,
        "factor_lag": state.factor_lag,
        "seed": state.seed,
        "counties": len(state.fips),
        "timesteps": state.timesteps,
    }
    (out / "truth.json").write_text(json.dumps(truth, indent=2, sort_keys=True) + "\n",
                                    encoding="utf-8")

    socio_vars = ", ".join(f'"{socio_slug(name)}"' for name in SOCIO_INDEX_NAMES)
    config = f"""# generated synthetic experiment
[experiment]
state = "SYN"
fips_prefix = "99"
graph = "{graph_kind}"
factors = ["{state.factor_name}"]
target = "hosp"
baseline_variables = ["hosp", {socio_vars}]
runs = {runs}
epochs = {epochs}
alpha = {alpha!r}
seed = {experiment_seed if experiment_seed is not None else state.seed}
lags = {lags}
horizon = {horizon}

[model]
hidden_dim = {hidden_dim}
dropout = {dropout!r}

[optimizer]
lr = 0.02

[socio_graph]
rule = "top_k"
k = 4
scaling = "zscore"

[ingest]
start_date = "{START_DATE.isoformat()}"
end_date = "{end.isoformat()}"
per100k = []

[paths]
series_csv = "data/series.csv"
socio_csv = "data/socio.csv"
adjacency = "data/adjacency.txt"
"""
    config_path = out / "config.toml"
    config_path.write_text(config, encoding="utf-8")
    return config_path
