"""Read-only JSON API over a finished experiment output directory.

The store is loaded once at startup and never mutated by a request, so any
number of concurrent readers is safe and repeated identical requests return
identical bodies. Vote tables, graphs, and panels come straight from the
pipeline artifacts; binning, histograms, and trend lines are computed here
so the UI never does statistics of its own.
"""
from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, HTTPException, Query
from fastapi.middleware.cors import CORSMiddleware

from .consensus import VoteTable, aggregate_votes
from .graphs import CountyGraph, degree_centrality
from .ingest import FeaturePanel, load_panel
from .viz_stats import histogram, quantile_bins, trend_line

log = logging.getLogger(__name__)

DEFAULT_BINS = 5


@dataclass
class StateData:
    name: str
    panel: FeaturePanel
    counties: list[dict]
    graphs: dict[str, CountyGraph] = field(default_factory=dict)
    votes: dict[tuple[str, str, str], dict] = field(default_factory=dict)
    summaries: dict[str, dict[str, float]] = field(default_factory=dict)

    def vote_keys(self) -> list[dict]:
        return [{"factor": f, "kind": k, "alpha": float(a)}
                for f, k, a in sorted(self.votes)]


class ResultStore:
    """Immutable view of one output directory (states/<NAME>/...)."""

    def __init__(self, data_dir: str | Path):
        self.data_dir = Path(data_dir)
        self.states: dict[str, StateData] = {}
        root = self.data_dir / "states"
        if not root.is_dir():
            log.warning("no states directory under %s; serving an empty store", data_dir)
            return
        for state_dir in sorted(p for p in root.iterdir() if p.is_dir()):
            self.states[state_dir.name] = self._load_state(state_dir)

    @staticmethod
    def _load_state(state_dir: Path) -> StateData:
        panel = load_panel(state_dir)
        counties_file = state_dir / "counties.json"
        counties = (json.loads(counties_file.read_text(encoding="utf-8"))
                    if counties_file.exists() else
                    [{"fips": f, "name": f, "population": None} for f in panel.county_order])
        data = StateData(state_dir.name, panel, counties)
        for kind in ("border", "socio"):
            path = state_dir / f"graph_{kind}.json"
            if path.exists():
                data.graphs[kind] = CountyGraph.load(path)
        votes_dir = state_dir / "votes"
        if votes_dir.is_dir():
            for path in sorted(votes_dir.glob("*.json")):
                obj = json.loads(path.read_text(encoding="utf-8"))
                key = (obj["factor"], obj["graph_kind"], repr(float(obj["alpha"])))
                data.votes[key] = obj
        # per-county mean over the study window, one map per variable
        for f, var in enumerate(panel.variable_order):
            means = panel.data[:, :, f].mean(axis=0)
            data.summaries[var] = {fips: float(means[i])
                                   for i, fips in enumerate(panel.county_order)}
        county_set = set(panel.county_order)
        for obj in data.votes.values():
            extra = {c["fips"] for c in obj["counties"]} - county_set
            if extra:
                raise ValueError(f"{state_dir.name}: vote table counties {sorted(extra)} "
                                 f"missing from the panel")
        return data


def _not_found(reason: str, **detail) -> HTTPException:
    return HTTPException(status_code=404, detail={"error": reason, **detail})


def _bad_request(reason: str, **detail) -> HTTPException:
    return HTTPException(status_code=400, detail={"error": reason, **detail})


def create_app(data_dir: str | Path, ui_origin: str = "*") -> FastAPI:
    store = ResultStore(data_dir)
    app = FastAPI(title="geocon results API", docs_url=None, redoc_url=None)
    app.add_middleware(CORSMiddleware, allow_origins=[ui_origin], allow_methods=["GET"],
                       allow_headers=["*"])

    def get_state(name: str) -> StateData:
        state = store.states.get(name)
        if state is None:
            raise _not_found("unknown_state", state=name, known=sorted(store.states))
        return state

    @app.get("/api/states")
    def states() -> list[dict]:
        return [
            {
                "state": name,
                "counties": len(s.panel.county_order),
                "variables": list(s.panel.variable_order),
                "graphs": sorted(s.graphs),
                "votes": s.vote_keys(),
                "date_range": [s.panel.date_range[0].isoformat(),
                               s.panel.date_range[1].isoformat()],
            }
            for name, s in sorted(store.states.items())
        ]

    @app.get("/api/states/{name}/counties")
    def counties(name: str) -> list[dict]:
        s = get_state(name)
        summary = {fips: {var: s.summaries[var][fips] for var in s.panel.variable_order}
                   for fips in s.panel.county_order}
        return [{**county, "summary": summary.get(county["fips"], {})}
                for county in s.counties]

    @app.get("/api/states/{name}/network")
    def network(name: str, kind: str = Query("border"),
                threshold: float | None = Query(None)) -> dict:
        s = get_state(name)
        if kind not in ("border", "socio"):
            raise _bad_request("bad_kind", kind=kind)
        graph = s.graphs.get(kind)
        if graph is None:
            raise _not_found("graph_not_loaded", state=name, kind=kind)
        if threshold is not None:
            if threshold < 0:
                raise _bad_request("bad_threshold", threshold=threshold)
            if kind == "socio":
                graph = CountyGraph(nodes=list(graph.nodes),
                                    edges=[e for e in graph.edges if e[2] <= threshold],
                                    kind=graph.kind)
        centrality = [{"fips": e.fips, "degree": e.degree, "score": e.score, "rank": e.rank}
                      for e in degree_centrality(graph)]
        return {**graph.to_json(), "centrality": centrality}

    @app.get("/api/states/{name}/variables/{var}")
    def variable(name: str, var: str, bins: int = Query(DEFAULT_BINS)) -> dict:
        s = get_state(name)
        values = s.summaries.get(var)
        if values is None:
            raise _not_found("unknown_variable", state=name, variable=var,
                             known=list(s.panel.variable_order))
        if bins < 2:
            raise _bad_request("bad_bins", bins=bins)
        binning = quantile_bins(values, bins)
        return {"variable": var, "values": values, "breakpoints": binning.breakpoints,
                "assignment": binning.assignment, "counts": histogram(binning),
                "degenerate": binning.degenerate}

    @app.get("/api/states/{name}/votes")
    def votes(name: str, factor: str, kind: str, alpha: float = Query(0.1)) -> dict:
        s = get_state(name)
        obj = s.votes.get((factor, kind, repr(float(alpha))))
        if obj is None:
            raise _not_found("votes_not_loaded", state=name, factor=factor, kind=kind,
                             alpha=alpha, known=s.vote_keys())
        table = VoteTable.from_json(obj)
        agg = aggregate_votes(table)
        hist = {str(k): v for k, v in agg["histogram"].items()}
        return {**obj, "aggregate": {**agg, "histogram": hist}}

    @app.get("/api/states/{name}/scatter")
    def scatter(name: str, x: str, y: str) -> dict:
        s = get_state(name)
        for var in (x, y):
            if var not in s.summaries:
                raise _not_found("unknown_variable", state=name, variable=var,
                                 known=list(s.panel.variable_order))
        xs, ys = s.summaries[x], s.summaries[y]
        trend = trend_line(xs, ys)
        points = [{"fips": fips, "x": xs[fips], "y": ys[fips]}
                  for fips in s.panel.county_order]
        return {"x": x, "y": y, "points": points, "trend": trend.to_json()}

    return app


def main(data_dir: str | Path, port: int = 8040, host: str = "127.0.0.1") -> None:
    import uvicorn

    ui_origin = os.environ.get("GEOCON_UI_ORIGIN", "*")
    uvicorn.run(create_app(data_dir, ui_origin), host=host, port=port, log_level="info")
