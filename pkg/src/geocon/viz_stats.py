"""Presentation-side statistics: quantile binning, histograms, trend lines.

Binning follows sort-rank semantics: a county whose value has minimal sort
position r lands in bin floor(r*k/n), so tied values always share a bin
(the lower one). The interpolated quantile breakpoints are reported for
legends but the assignment is rank-based.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class QuantileBinning:
    k: int
    breakpoints: list[float]
    assignment: dict[str, int]
    degenerate: bool = False

    def to_json(self) -> dict:
        return {"k": self.k, "breakpoints": self.breakpoints,
                "assignment": self.assignment, "degenerate": self.degenerate}


def quantile_bins(values: dict[str, float], k: int) -> QuantileBinning:
    """Assign each county to one of k quantile categories.

    All-equal input collapses to the single bin 0 and is flagged.
    """
    if k < 2:
        raise ValueError(f"need at least 2 bins, got {k}")
    if not values:
        raise ValueError("empty value map")
    keys = sorted(values)
    vals = np.array([values[key] for key in keys], dtype=np.float64)
    n = vals.size
    if np.all(vals == vals[0]):
        return QuantileBinning(k, [], {key: 0 for key in keys}, degenerate=True)

    order = np.argsort(vals, kind="stable")
    min_rank = np.empty(n, dtype=np.intp)
    prev_val, prev_rank = None, 0
    for pos, idx in enumerate(order):
        if prev_val is None or vals[idx] != prev_val:
            prev_val, prev_rank = vals[idx], pos
        min_rank[idx] = prev_rank
    bins = np.minimum(min_rank * k // n, k - 1)

    raw = np.quantile(vals, [i / k for i in range(1, k)])
    breakpoints: list[float] = []
    for b in raw:  # strictly ascending after de-duplication
        if not breakpoints or b > breakpoints[-1]:
            breakpoints.append(float(b))
    return QuantileBinning(k, breakpoints,
                           {key: int(bins[i]) for i, key in enumerate(keys)})


def histogram(binning: QuantileBinning) -> list[int]:
    """Counties per bin; the counts always sum to the county total."""
    counts = [0] * binning.k
    for b in binning.assignment.values():
        counts[b] += 1
    return counts


@dataclass
class TrendLine:
    slope: float
    intercept: float
    r: float
    degenerate: bool = False
    n: int = 0

    def to_json(self) -> dict:
        return {"slope": self.slope, "intercept": self.intercept, "r": self.r,
                "degenerate": self.degenerate, "n": self.n}


def trend_line(x: dict[str, float], y: dict[str, float]) -> TrendLine:
    """Ordinary-least-squares line over the counties present in both maps.

    Zero variance on either axis is flagged degenerate with slope 0 and
    r = 0 so callers always have something to draw.
    """
    common = sorted(set(x) & set(y))
    if len(common) < 2:
        raise ValueError(f"need at least 2 common counties, got {len(common)}")
    xv = np.array([x[c] for c in common], dtype=np.float64)
    yv = np.array([y[c] for c in common], dtype=np.float64)
    var_x = ((xv - xv.mean()) ** 2).sum()
    var_y = ((yv - yv.mean()) ** 2).sum()
    if var_x == 0.0 or var_y == 0.0:
        return TrendLine(0.0, float(yv.mean()), 0.0, degenerate=True, n=len(common))
    cov = ((xv - xv.mean()) * (yv - yv.mean())).sum()
    slope = cov / var_x
    intercept = float(yv.mean() - slope * xv.mean())
    r = cov / np.sqrt(var_x * var_y)
    return TrendLine(float(slope), intercept, float(r), n=len(common))
