"""Windowing, 80/20 split, AMSGrad, and the paired experiment sweep.

Training is full-batch: one optimizer step per epoch on the mean MSE over
all samples, which keeps runs bit-reproducible for a given seed. The sweep
trains every roster member twice per run index (baseline features vs.
baseline plus one atmospheric channel) on the same derived seed so the
per-county RMSE samples are paired.
"""
from __future__ import annotations

import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from typing import Iterable, Sequence

import numpy as np

from . import ndiff
from .consensus import rmse_per_county
from .ingest import FeaturePanel, zscore
from .models import EnsembleMember, ModelSpec, forward, init_params, make_ensemble
from .ndiff import GraphNeighbors, Tape, Tensor, backward, derive_seed, named_stream

log = logging.getLogger(__name__)

DIVERGENCE_FACTOR = 1e6

BASELINE = "baseline"


def factor_feature_set(factor: str) -> str:
    return f"factor:{factor}"


@dataclass
class WindowSet:
    """Sliding windows over a panel: inputs (S, lags, N, F), targets (S, horizon, N)."""

    inputs: np.ndarray
    targets: np.ndarray
    origins: np.ndarray  # panel day index of each window start

    def __len__(self) -> int:
        return self.inputs.shape[0]


def make_windows(panel: FeaturePanel, lags: int, horizon: int,
                 index_range: tuple[int, int] | None = None,
                 target: str | int = 0) -> WindowSet:
    """Stride-1 windows whose inputs and targets both lie inside the range.

    Targets take only the target channel. A range shorter than
    lags + horizon yields an empty set with a warning.
    """
    start, end = index_range if index_range is not None else (0, panel.data.shape[0])
    if not (0 <= start <= end <= panel.data.shape[0]):
        raise ValueError(f"range ({start}, {end}) outside panel of length {panel.data.shape[0]}")
    tgt = target if isinstance(target, int) else panel.variable_order.index(target)
    count = (end - start) - lags - horizon + 1
    if count <= 0:
        log.warning("range of %d days is too short for lags=%d horizon=%d; empty window set",
                    end - start, lags, horizon)
        n, f = panel.data.shape[1], panel.data.shape[2]
        return WindowSet(np.empty((0, lags, n, f)), np.empty((0, horizon, n)),
                         np.empty((0,), dtype=np.intp))
    origins = np.arange(start, start + count, dtype=np.intp)
    inputs = np.stack([panel.data[o:o + lags] for o in origins])
    targets = np.stack([panel.data[o + lags:o + lags + horizon, :, tgt] for o in origins])
    return WindowSet(inputs, targets, origins)


def split_80_20(panel: FeaturePanel | int) -> tuple[tuple[int, int], tuple[int, int]]:
    """First 80% of days train, remainder test: ((0, k), (k, T))."""
    total = panel if isinstance(panel, int) else panel.data.shape[0]
    k = int(np.floor(0.8 * total))
    if k == 0 or k == total:
        raise ValueError(f"degenerate 80/20 split for {total} days")
    return (0, k), (k, total)


class AmsGrad:
    """AMSGrad without bias correction: the second-moment running maximum
    makes the effective step size non-increasing per coordinate."""

    def __init__(self, lr: float = 0.02, beta1: float = 0.9, beta2: float = 0.999,
                 eps: float = 1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step_count = 0
        self.skipped = 0
        self._m: dict[str, np.ndarray] = {}
        self._v: dict[str, np.ndarray] = {}
        self._vhat: dict[str, np.ndarray] = {}

    def step(self, params: dict[str, Tensor],
             grads: dict[str, np.ndarray] | None = None) -> None:
        """One update over all parameters; skipped entirely (and logged)
        if any gradient is non-finite."""
        if grads is None:
            grads = {k: (p.grad if p.grad is not None else np.zeros_like(p.data))
                     for k, p in params.items()}
        if any(not np.isfinite(g).all() for g in grads.values()):
            self.skipped += 1
            log.warning("AMSGrad step %d skipped: non-finite gradient", self.step_count + 1)
            return
        self.step_count += 1
        for name, p in params.items():
            g = grads[name]
            m = self._m.setdefault(name, np.zeros_like(p.data))
            v = self._v.setdefault(name, np.zeros_like(p.data))
            vhat = self._vhat.setdefault(name, np.zeros_like(p.data))
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            np.maximum(vhat, v, out=vhat)
            p.data -= self.lr * m / (np.sqrt(vhat) + self.eps)

    def vhat(self, name: str) -> np.ndarray:
        return self._vhat[name]


@dataclass
class OptimizerSettings:
    lr: float = 0.02
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def build(self) -> AmsGrad:
        return AmsGrad(self.lr, self.beta1, self.beta2, self.eps)


@dataclass
class TrainResult:
    params: dict[str, Tensor]
    loss_curve: list[float]
    failed: bool = False
    fail_reason: str | None = None


def train_model(spec: ModelSpec, windows: WindowSet, neigh: GraphNeighbors | None,
                epochs: int, seed: int,
                opt: OptimizerSettings | None = None) -> TrainResult:
    """Full-batch training; deterministic given (spec, windows, seed).

    Randomness is split into named streams: "init" for parameters and
    "dropout" for the per-epoch masks. A loss exceeding 1e6 x the first
    epoch's loss (or any non-finite forward) marks the run failed.
    """
    if epochs > 0 and len(windows) == 0:
        raise ValueError("cannot train on an empty window set")
    params = init_params(spec, named_stream(seed, "init"))
    dropout_rng = named_stream(seed, "dropout") if spec.dropout > 0 else None
    optimizer = (opt or OptimizerSettings()).build()
    targets = np.swapaxes(windows.targets, 1, 2)  # (S, N, horizon) to match predictions
    curve: list[float] = []
    for epoch in range(epochs):
        try:
            with Tape() as tape:
                pred = forward(windows.inputs, neigh, params, spec, dropout_rng)
                loss = ndiff.mse_loss(pred, Tensor(targets))
            value = float(loss.data)
            curve.append(value)
            if value > DIVERGENCE_FACTOR * max(curve[0], np.finfo(float).tiny):
                return TrainResult(params, curve, failed=True,
                                   fail_reason=f"diverged at epoch {epoch}")
            backward(tape, loss)
        except ndiff.NonFiniteError as err:
            return TrainResult(params, curve, failed=True,
                               fail_reason=f"non-finite at epoch {epoch}: {err}")
        optimizer.step(params)
    return TrainResult(params, curve)


def predict(spec: ModelSpec, params: dict[str, Tensor], neigh: GraphNeighbors | None,
            inputs: np.ndarray) -> np.ndarray:
    """Inference over (S, lags, N, F) windows -> (S, horizon, N); no dropout."""
    out = forward(inputs, neigh, params, spec)
    return np.swapaxes(out.data, 1, 2)


# ---------------------------------------------------------------------------
# experiment sweep


@dataclass
class RunRecord:
    """Per-(member, run, feature set) result row, one JSON line on disk."""

    state: str
    model: str
    run: int
    feature_set: str
    graph_kind: str
    seed: int
    epochs: int
    rmse: list[float] | None
    per_horizon_rmse: list[float] | None
    loss_curve: list[float]
    failed: bool = False
    fail_reason: str | None = None

    def key(self) -> tuple[str, int, str]:
        return (self.model, self.run, self.feature_set)

    def to_json_line(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_json_line(cls, line: str) -> "RunRecord":
        return cls(**json.loads(line))


@dataclass
class SweepPlan:
    """Everything a single training task needs, shared across the sweep."""

    state: str
    graph_kind: str
    roster: list[EnsembleMember]
    feature_sets: dict[str, dict]  # name -> {train: WindowSet, test: WindowSet, ...}
    neigh: GraphNeighbors
    epochs: int
    runs: int
    seed: int
    optimizer: OptimizerSettings


def _prepare_feature_set(panel: FeaturePanel, variables: Sequence[str], target: str,
                         lags: int, horizon: int) -> dict:
    sub = panel.select(variables)
    (tr_start, tr_end), (te_start, te_end) = split_80_20(sub)
    scaled, stats = zscore(sub, (tr_start, tr_end))
    train_w = make_windows(scaled, lags, horizon, (tr_start, tr_end), target)
    # test targets stay inside test days; inputs may reach back across the boundary
    test_w = make_windows(scaled, lags, horizon, (max(0, te_start - lags), te_end), target)
    if len(train_w) == 0 or len(test_w) == 0:
        raise ValueError(
            f"panel of {panel.data.shape[0]} days leaves no "
            f"{'train' if len(train_w) == 0 else 'test'} windows for "
            f"lags={lags}, horizon={horizon}")
    t_idx = scaled.variable_order.index(target)
    t_stat = stats[t_idx]
    target_scale = 1.0 if t_stat.degenerate else t_stat.std
    return {"train": train_w, "test": test_w, "target_scale": target_scale,
            "n_features": len(variables)}


def build_plan(panel: FeaturePanel, graph, *, state: str, baseline_variables: Sequence[str],
               factors: Sequence[str], target: str, base_spec: ModelSpec,
               ensemble_size: int = 8, roster: Sequence[tuple[str, dict]] | None = None,
               epochs: int = 150, runs: int = 10, seed: int = 0,
               optimizer: OptimizerSettings | None = None) -> SweepPlan:
    if list(graph.nodes) != list(panel.county_order):
        raise ValueError("graph node order does not match panel county order")
    if target not in baseline_variables:
        raise ValueError(f"target {target!r} must be part of the baseline variables")
    neigh = GraphNeighbors(len(graph.nodes), graph.index_edges())
    sets = {BASELINE: _prepare_feature_set(panel, baseline_variables, target,
                                           base_spec.lags, base_spec.horizon)}
    for f in factors:
        if f in baseline_variables:
            raise ValueError(f"factor {f!r} is already a baseline variable")
        sets[factor_feature_set(f)] = _prepare_feature_set(
            panel, list(baseline_variables) + [f], target, base_spec.lags, base_spec.horizon)
    members = make_ensemble(base_spec.bind(len(panel.county_order), 1),
                            size=ensemble_size, roster=roster)
    return SweepPlan(state=state, graph_kind=graph.kind, roster=members, feature_sets=sets,
                     neigh=neigh, epochs=epochs, runs=runs, seed=seed,
                     optimizer=optimizer or OptimizerSettings())


def plan_keys(plan: SweepPlan) -> list[tuple[str, int, str]]:
    """Canonical task order: roster order, then run index, then feature set."""
    return [(m.name, run, fs)
            for m in plan.roster
            for run in range(plan.runs)
            for fs in plan.feature_sets]


def run_seed(plan: SweepPlan, member: str, run: int) -> int:
    # shared between the baseline and with-factor halves of a pair
    return derive_seed(plan.seed, member, f"run{run}")


def _execute_task(plan: SweepPlan, key: tuple[str, int, str]) -> RunRecord:
    name, run, fs = key
    member = next(m for m in plan.roster if m.name == name)
    data = plan.feature_sets[fs]
    spec = ModelSpec(**{**asdict(member.spec), "n_features": data["n_features"]})
    seed = run_seed(plan, name, run)
    result = train_model(spec, data["train"], plan.neigh, plan.epochs, seed, plan.optimizer)
    if result.failed:
        log.warning("run failed: %s run=%d %s (%s)", name, run, fs, result.fail_reason)
        return RunRecord(plan.state, name, run, fs, plan.graph_kind, seed, plan.epochs,
                         None, None, result.loss_curve, failed=True,
                         fail_reason=result.fail_reason)
    test: WindowSet = data["test"]
    pred = predict(spec, result.params, plan.neigh, test.inputs)
    scale = data["target_scale"]
    county = rmse_per_county(pred, test.targets) * scale
    horizon = np.sqrt(((pred - test.targets) ** 2).mean(axis=(0, 2))) * scale
    return RunRecord(plan.state, name, run, fs, plan.graph_kind, seed, plan.epochs,
                     [float(x) for x in county], [float(x) for x in horizon],
                     result.loss_curve)


_POOL_PLAN: SweepPlan | None = None


def _pool_task(key: tuple[str, int, str]) -> RunRecord:
    return _execute_task(_POOL_PLAN, key)


def run_experiment(plan: SweepPlan, existing: Iterable[RunRecord] = (),
                   jobs: int = 1) -> list[RunRecord]:
    """Execute every missing (member, run, feature set) task and return all
    records in canonical order. Tasks are independent; with jobs > 1 they
    run in a process pool (fork) and results are re-sorted, so the output
    is identical to a serial run."""
    done = {r.key(): r for r in existing
            if r.state == plan.state and r.graph_kind == plan.graph_kind
            and r.epochs == plan.epochs and r.seed == run_seed(plan, r.model, r.run)}
    keys = plan_keys(plan)
    todo = [k for k in keys if k not in done]
    log.info("sweep: %d tasks total, %d already complete, %d to run",
             len(keys), len(keys) - len(todo), len(todo))
    if todo:
        if jobs > 1 and len(todo) > 1 and os.name == "posix":
            global _POOL_PLAN
            _POOL_PLAN = plan
            try:
                with ProcessPoolExecutor(max_workers=jobs) as pool:
                    for rec in pool.map(_pool_task, todo, chunksize=1):
                        done[rec.key()] = rec
            finally:
                _POOL_PLAN = None
        else:
            for key in todo:
                done[key] = _execute_task(plan, key)
    return [done[k] for k in keys]


def write_records(path, records: Sequence[RunRecord]) -> None:
    """Line-delimited JSON, canonical order, atomic replace."""
    tmp = str(path) + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(rec.to_json_line())
            fh.write("\n")
    os.replace(tmp, path)


def read_records(path) -> list[RunRecord]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(RunRecord.from_json_line(line))
    return out
