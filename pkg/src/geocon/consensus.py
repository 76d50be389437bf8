"""Per-county forecast comparison and ensemble consensus voting.

A county collects one vote from each ensemble member whose test RMSE drops
significantly when the atmospheric channel is added. Significance is a
paired one-tailed t-test over the per-run RMSE samples (runs are paired by
seed); a sign-flip permutation test is kept alongside as an independent
check on the t approximation at small n.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy import stats as sstats

log = logging.getLogger(__name__)

MIN_PAIRS = 4  # members with fewer complete paired runs abstain


def rmse_per_county(pred: np.ndarray, actual: np.ndarray) -> np.ndarray:
    """Root-mean-square error per county, pooled over all leading axes
    (test windows and horizons). Inputs are (..., N) with equal shapes."""
    pred = np.asarray(pred, dtype=np.float64)
    actual = np.asarray(actual, dtype=np.float64)
    if pred.shape != actual.shape:
        raise ValueError(f"shape mismatch {pred.shape} vs {actual.shape}")
    if pred.size == 0:
        raise ValueError("empty prediction set")
    flat = (pred - actual).reshape(-1, pred.shape[-1])
    return np.sqrt((flat * flat).mean(axis=0))


def one_tailed_test(baseline: Sequence[float], factor: Sequence[float],
                    alpha: float) -> tuple[float, bool]:
    """Paired one-sided t-test of H1: mean(baseline - factor) > 0.

    Degenerate samples bypass the t distribution: identical pairs give
    p = 1; a zero-variance shift gives p = 0 when positive, 1 when negative.
    """
    b = np.asarray(baseline, dtype=np.float64)
    f = np.asarray(factor, dtype=np.float64)
    if b.shape != f.shape or b.ndim != 1:
        raise ValueError(f"paired samples must match: {b.shape} vs {f.shape}")
    if b.size < 2:
        raise ValueError("need at least 2 paired samples")
    d = b - f
    sd = d.std(ddof=1)
    if sd == 0.0:
        mean = d.mean()
        p = 1.0 if mean <= 0.0 else 0.0
    else:
        t = d.mean() / (sd / np.sqrt(d.size))
        p = float(sstats.t.sf(t, df=d.size - 1))
    return p, p < alpha


def permutation_oracle(baseline: Sequence[float], factor: Sequence[float],
                       resamples: int = 100_000, seed: int = 0) -> float:
    """Sign-flip permutation p-value for the same one-sided hypothesis.

    p = (1 + #{resampled mean >= observed mean}) / (resamples + 1); the
    add-one term keeps p in (0, 1].
    """
    b = np.asarray(baseline, dtype=np.float64)
    f = np.asarray(factor, dtype=np.float64)
    if b.shape != f.shape or b.ndim != 1:
        raise ValueError(f"paired samples must match: {b.shape} vs {f.shape}")
    d = b - f
    observed = d.mean()
    rng = np.random.default_rng(seed)
    signs = rng.integers(0, 2, size=(resamples, d.size)) * 2 - 1
    means = (signs * d).mean(axis=1)
    return (1 + int((means >= observed).sum())) / (resamples + 1)


@dataclass
class ModelVote:
    name: str
    p_value: float | None          # None when the member abstained
    significant: bool
    mean_rmse_baseline: float | None
    mean_rmse_factor: float | None


@dataclass
class CountyVotes:
    fips: str
    votes: int
    models: list[ModelVote] = field(default_factory=list)


@dataclass
class VoteTable:
    state: str
    factor: str
    graph_kind: str
    alpha: float
    counties: list[CountyVotes] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "state": self.state,
            "factor": self.factor,
            "graph_kind": self.graph_kind,
            "alpha": self.alpha,
            "counties": [
                {
                    "fips": c.fips,
                    "votes": c.votes,
                    "models": [
                        {"name": m.name, "p": m.p_value, "significant": m.significant,
                         "rmse_base": m.mean_rmse_baseline, "rmse_factor": m.mean_rmse_factor}
                        for m in c.models
                    ],
                }
                for c in self.counties
            ],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "VoteTable":
        counties = [
            CountyVotes(
                fips=c["fips"], votes=c["votes"],
                models=[ModelVote(m["name"], m["p"], m["significant"],
                                  m["rmse_base"], m["rmse_factor"])
                        for m in c["models"]])
            for c in obj["counties"]
        ]
        return cls(obj["state"], obj["factor"], obj["graph_kind"], obj["alpha"], counties)


def tally_votes(records: Iterable, alpha: float, *, factor: str,
                county_order: Sequence[str]) -> VoteTable:
    """Fold run records into a per-county vote table for one factor.

    For every roster member the per-county RMSE vectors of its complete
    (baseline, with-factor) run pairs form the paired samples; incomplete or
    failed pairs are dropped with a log line, and a member with fewer than
    MIN_PAIRS pairs abstains everywhere rather than vote from noise.
    """
    from .train import BASELINE, factor_feature_set  # local import to avoid a cycle

    wanted = factor_feature_set(factor)
    by_member: dict[str, dict[int, dict[str, np.ndarray]]] = {}
    state = graph_kind = None
    order: list[str] = []
    for rec in records:
        if rec.feature_set not in (BASELINE, wanted):
            continue
        state, graph_kind = rec.state, rec.graph_kind
        if rec.model not in order:
            order.append(rec.model)
        if rec.failed or rec.rmse is None:
            log.info("tally: dropping failed run %s/%d/%s", rec.model, rec.run, rec.feature_set)
            continue
        by_member.setdefault(rec.model, {}).setdefault(rec.run, {})[rec.feature_set] = \
            np.asarray(rec.rmse, dtype=np.float64)
    if state is None:
        raise ValueError("no run records to tally")

    n_counties = len(county_order)
    member_tests: dict[str, list[ModelVote]] = {}
    for name in order:
        runs = by_member.get(name, {})
        pairs = [(r[BASELINE], r[wanted]) for r in runs.values()
                 if BASELINE in r and wanted in r]
        dropped = len(runs) - len(pairs)
        if dropped:
            log.info("tally: member %s lost %d incomplete pair(s)", name, dropped)
        if len(pairs) < MIN_PAIRS:
            log.warning("tally: member %s abstains (%d complete pairs < %d)",
                        name, len(pairs), MIN_PAIRS)
            member_tests[name] = [ModelVote(name, None, False, None, None)] * n_counties
            continue
        base = np.stack([p[0] for p in pairs])    # (runs, N)
        fact = np.stack([p[1] for p in pairs])
        votes = []
        for i in range(n_counties):
            p, sig = one_tailed_test(base[:, i], fact[:, i], alpha)
            votes.append(ModelVote(name, p, sig,
                                   float(base[:, i].mean()), float(fact[:, i].mean())))
        member_tests[name] = votes

    counties = []
    for i, fips in enumerate(county_order):
        models = [member_tests[name][i] for name in order]
        counties.append(CountyVotes(fips=fips, votes=sum(m.significant for m in models),
                                    models=models))
    return VoteTable(state=state, factor=factor, graph_kind=graph_kind, alpha=alpha,
                     counties=counties)


def aggregate_votes(table: VoteTable) -> dict:
    """State-level total plus the histogram over vote counts 0..M."""
    ceiling = max((len(c.models) for c in table.counties), default=0)
    hist = {v: 0 for v in range(ceiling + 1)}
    total = 0
    for county in table.counties:
        total += county.votes
        hist[county.votes] = hist.get(county.votes, 0) + 1
    return {"total": total, "histogram": hist, "ceiling": ceiling,
            "counties": len(table.counties)}
