"""Pipeline command line: ingest -> graph -> train -> vote -> serve,
plus synthetic-state generation and an end-to-end demo.

Flags can be seeded from the environment (GEOCON_OUT, GEOCON_JOBS,
GEOCON_SEED, GEOCON_PORT, GEOCON_DATA); an explicit flag always wins.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import consensus, graphs, ingest, synth, train
from .config import PipelineConfig, env_override, load_config
from .models import ModelSpec

log = logging.getLogger(__name__)


def state_dir(out: Path, cfg: PipelineConfig) -> Path:
    return out / "states" / cfg.state


def _require(path: Path, produced_by: str) -> Path:
    if not path.exists():
        raise FileNotFoundError(f"missing artifact {path}; run `geocon {produced_by}` first")
    return path


def _socio_channel_series(vectors, date_range) -> list[ingest.CountySeries]:
    days = (date_range[1] - date_range[0]).days + 1
    out = []
    for v in vectors:
        for slug, value in zip(graphs.SOCIO_SLUGS, v.indices):
            out.append(ingest.CountySeries(v.fips, slug, date_range[0],
                                           np.full(days, value)))
    return out


def cmd_ingest(cfg: PipelineConfig, out: Path) -> Path:
    series = ingest.load_series(cfg.series_csv)
    series = [s for s in series if s.fips.startswith(cfg.fips_prefix)]
    if not series:
        raise ValueError(f"no series with FIPS prefix {cfg.fips_prefix!r} in {cfg.series_csv}")
    series = [ingest.per_100k(s) if s.variable_id in cfg.ingest.per100k else s
              for s in series]
    window = (cfg.ingest.start_date, cfg.ingest.end_date)
    vectors = [v for v in graphs.load_socio_csv(cfg.socio_csv)
               if v.fips.startswith(cfg.fips_prefix)]
    covered = {s.fips for s in series}
    missing = sorted(covered - {v.fips for v in vectors})
    if missing:
        raise ValueError(f"counties without socioeconomic vectors: {missing}")
    panel = ingest.align_panel(series + [s for s in _socio_channel_series(vectors, window)
                                         if s.fips in covered], window)

    target_dir = state_dir(out, cfg)
    ingest.save_panel(panel, target_dir)
    names = graphs.county_names(cfg.adjacency) if Path(cfg.adjacency).exists() else {}
    populations = {s.fips: s.population for s in series if s.population}
    counties = [{"fips": f, "name": names.get(f, f), "population": populations.get(f)}
                for f in panel.county_order]
    (target_dir / "counties.json").write_text(
        json.dumps(counties, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    imputed = int(panel.impute_mask.sum())
    log.info("panel %s: %d days x %d counties x %d variables (%d imputed cells)",
             cfg.state, panel.data.shape[0], panel.data.shape[1], panel.data.shape[2], imputed)
    return target_dir


def cmd_graph(cfg: PipelineConfig, out: Path) -> None:
    target_dir = state_dir(out, cfg)
    panel = ingest.load_panel(_require(target_dir / "panel.json", "ingest").parent)
    border = graphs.build_border_graph(cfg.adjacency, cfg.fips_prefix, panel.county_order)
    vectors = {v.fips: v for v in graphs.load_socio_csv(cfg.socio_csv)}
    ordered = [vectors[f] for f in panel.county_order]
    matrix = graphs.socio_distance_matrix(ordered, cfg.socio_graph.scaling)
    socio = graphs.build_socio_graph(matrix, panel.county_order,
                                     cfg.socio_graph.selection_rule())
    for kind, graph in (("border", border), ("socio", socio)):
        graph.save(target_dir / f"graph_{kind}.json")
        report = [{"fips": e.fips, "degree": e.degree, "score": e.score, "rank": e.rank}
                  for e in graphs.degree_centrality(graph)]
        (target_dir / f"centrality_{kind}.json").write_text(
            json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        log.info("%s graph: %d nodes, %d edges", kind, graph.n, len(graph.edges))


def _load_plan(cfg: PipelineConfig, out: Path) -> train.SweepPlan:
    target_dir = state_dir(out, cfg)
    panel = ingest.load_panel(_require(target_dir / "panel.json", "ingest").parent)
    graph = graphs.CountyGraph.load(_require(target_dir / f"graph_{cfg.graph}.json", "graph"))
    base = ModelSpec(hidden_dim=cfg.model.hidden_dim, dropout=cfg.model.dropout,
                     gate_activation=cfg.model.gate_activation,
                     conv_activation=cfg.model.conv_activation,
                     standard_gru=cfg.model.standard_gru,
                     lags=cfg.lags, horizon=cfg.horizon)
    return train.build_plan(
        panel, graph, state=cfg.state, baseline_variables=cfg.baseline_variables,
        factors=cfg.factors, target=cfg.target, base_spec=base,
        ensemble_size=cfg.model.ensemble_size, roster=cfg.model.roster,
        epochs=cfg.epochs, runs=cfg.runs, seed=cfg.seed, optimizer=cfg.optimizer)


def cmd_train(cfg: PipelineConfig, out: Path, jobs: int) -> None:
    plan = _load_plan(cfg, out)
    records_path = state_dir(out, cfg) / "runs.jsonl"
    existing = train.read_records(records_path) if records_path.exists() else []
    records = train.run_experiment(plan, existing, jobs=jobs)
    train.write_records(records_path, records)
    failed = sum(r.failed for r in records)
    log.info("sweep complete: %d records (%d failed) -> %s", len(records), failed, records_path)


def cmd_vote(cfg: PipelineConfig, out: Path) -> None:
    target_dir = state_dir(out, cfg)
    panel = ingest.load_panel(_require(target_dir / "panel.json", "ingest").parent)
    records = train.read_records(_require(target_dir / "runs.jsonl", "train"))
    votes_dir = target_dir / "votes"
    votes_dir.mkdir(exist_ok=True)
    for factor in cfg.factors:
        table = consensus.tally_votes(records, cfg.alpha, factor=factor,
                                      county_order=panel.county_order)
        agg = consensus.aggregate_votes(table)
        payload = {**table.to_json(),
                   "aggregate": {**agg, "histogram": {str(k): v
                                                      for k, v in agg["histogram"].items()}}}
        path = votes_dir / f"{factor}__{cfg.graph}__a{cfg.alpha!r}.json"
        path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        log.info("factor %s: total votes %d over %d counties -> %s",
                 factor, agg["total"], agg["counties"], path)


def cmd_synth(args, out: Path) -> Path:
    state = synth.generate_state(counties=args.counties, signal_set=args.signal_set,
                                 beta=args.beta, timesteps=args.timesteps, seed=args.seed,
                                 factor_name=args.factor, factor_lag=args.factor_lag)
    config_path = synth.write_state(state, out, epochs=args.epochs, runs=args.runs,
                                    hidden_dim=args.hidden_dim, dropout=args.dropout,
                                    alpha=args.alpha, lags=args.lags, horizon=args.horizon,
                                    graph_kind=args.graph_kind)
    log.info("synthetic state written under %s (config %s)", out, config_path)
    return config_path


def cmd_demo(args, out: Path, jobs: int) -> None:
    """Small synthetic walkthrough: generate, ingest, graph, train, vote."""
    config_path = cmd_synth(args, out)
    cfg = load_config(config_path)
    cmd_ingest(cfg, out)
    cmd_graph(cfg, out)
    cmd_train(cfg, out, jobs)
    cmd_vote(cfg, out)
    votes_dir = state_dir(out, cfg) / "votes"
    for path in sorted(votes_dir.glob("*.json")):
        payload = json.loads(path.read_text(encoding="utf-8"))
        agg = payload["aggregate"]
        counties = payload["counties"]
        models = counties[0]["models"] if counties else []
        print(f"factor {payload['factor']} ({payload['graph_kind']} graph, "
              f"alpha={payload['alpha']}):")
        print(f"  total votes {agg['total']} across {agg['counties']} counties")
        print(f"  vote histogram {agg['histogram']}")
        print(f"  pixel matrix: {len(models)} model rows x {len(counties)} county columns")
    print(f"explore with: geocon serve --data {out}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="geocon",
                                     description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config=True):
        if config:
            p.add_argument("--config", type=Path, required=True,
                           default=None, help="experiment TOML")
        p.add_argument("--out", type=Path, default=env_override("OUT", "out"),
                       help="output directory (env GEOCON_OUT)")

    p = sub.add_parser("ingest", help="validate and panelize raw CSVs")
    common(p)
    p = sub.add_parser("graph", help="build border and socioeconomic graphs")
    common(p)
    p = sub.add_parser("train", help="run the paired experiment sweep (resumable)")
    common(p)
    p.add_argument("--jobs", type=int, default=env_override("JOBS", os.cpu_count() or 1))
    p.add_argument("--seed", type=int, default=env_override("SEED", None),
                   help="override the config experiment seed")
    p = sub.add_parser("vote", help="tally consensus votes from run records")
    common(p)

    for name, help_text in (("synth", "generate a planted-signal synthetic state"),
                            ("demo", "end-to-end synthetic walkthrough")):
        p = sub.add_parser(name, help=help_text)
        common(p, config=False)
        small = name == "demo"
        p.add_argument("--counties", type=int, default=12 if small else 20)
        p.add_argument("--signal-set", type=int, default=4 if small else 5)
        p.add_argument("--beta", type=float, default=0.8)
        p.add_argument("--timesteps", type=int, default=160 if small else 250)
        p.add_argument("--seed", type=int, default=env_override("SEED", 7))
        p.add_argument("--factor", default="aod")
        p.add_argument("--factor-lag", type=int, default=7)
        p.add_argument("--epochs", type=int, default=25 if small else 30)
        p.add_argument("--runs", type=int, default=4 if small else 10)
        p.add_argument("--hidden-dim", type=int, default=8 if small else 8)
        p.add_argument("--dropout", type=float, default=0.15)
        p.add_argument("--alpha", type=float, default=0.1)
        p.add_argument("--lags", type=int, default=5)
        p.add_argument("--horizon", type=int, default=15)
        p.add_argument("--graph-kind", choices=("border", "socio"), default="border")
        if small:
            p.add_argument("--jobs", type=int,
                           default=env_override("JOBS", os.cpu_count() or 1))

    p = sub.add_parser("serve", help="serve results as a JSON API")
    p.add_argument("--data", type=Path, default=env_override("DATA", "out"),
                   help="output directory to serve (env GEOCON_DATA)")
    p.add_argument("--port", type=int, default=env_override("PORT", 8040))
    p.add_argument("--host", default="127.0.0.1")
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        if args.command == "serve":
            from .serve import main as serve_main
            serve_main(args.data, port=args.port, host=args.host)
            return 0
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        if args.command == "synth":
            cmd_synth(args, out)
        elif args.command == "demo":
            cmd_demo(args, out, args.jobs)
        else:
            cfg = load_config(args.config)
            if args.command == "ingest":
                cmd_ingest(cfg, out)
            elif args.command == "graph":
                cmd_graph(cfg, out)
            elif args.command == "train":
                if args.seed is not None:
                    cfg.seed = int(args.seed)
                cmd_train(cfg, out, args.jobs)
            elif args.command == "vote":
                cmd_vote(cfg, out)
    except Exception as err:  # noqa: BLE001 - single reporting point
        if os.environ.get("GEOCON_DEBUG"):
            raise
        print(f"error: {err}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
