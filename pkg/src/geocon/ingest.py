"""Loading, validation, and alignment of county-level daily series.

Input files are UTF-8 CSV (see README for the schemas). FIPS codes are kept
as zero-padded strings end to end; dates become day offsets from the panel
start as soon as a panel exists, and only the I/O boundary speaks calendar.
"""
from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field, replace
from datetime import date, timedelta
from pathlib import Path

import numpy as np

from .validation import check_fips

log = logging.getLogger(__name__)

SERIES_HEADER = ["fips", "date", "variable", "value", "population"]
SOCIO_HEADER = ["fips", "index_name", "value"]

CLINICAL_PREFIXES = ("hosp", "death")


def is_clinical(variable_id: str) -> bool:
    return variable_id.startswith(CLINICAL_PREFIXES)


@dataclass
class CountySeries:
    """Daily values of one variable for one county; NaN marks missing days."""

    fips: str
    variable_id: str
    start_date: date
    values: np.ndarray
    population: int | None = None

    def __post_init__(self):
        check_fips(self.fips)
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 1:
            raise ValueError("series values must be one-dimensional")
        if is_clinical(self.variable_id) and (self.population is None or self.population <= 0):
            raise ValueError(
                f"clinical variable {self.variable_id!r} for county {self.fips} "
                f"needs a positive population")

    @property
    def end_date(self) -> date:
        return self.start_date + timedelta(days=len(self.values) - 1)

    def value_on(self, day: date) -> float:
        offset = (day - self.start_date).days
        if 0 <= offset < len(self.values):
            return float(self.values[offset])
        return float("nan")


@dataclass
class FeaturePanel:
    """Aligned (T, N, F) array over a study window.

    ``impute_mask`` rides along as a sidecar: True where a cell was filled
    rather than observed.
    """

    county_order: list[str]
    variable_order: list[str]
    data: np.ndarray
    date_range: tuple[date, date]
    impute_mask: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        t, n, f = self.data.shape
        if len(self.county_order) != n or len(self.variable_order) != f:
            raise ValueError("panel axes do not match county/variable orders")
        if len(set(self.county_order)) != n:
            raise ValueError("duplicate counties in panel order")
        span = (self.date_range[1] - self.date_range[0]).days + 1
        if span != t:
            raise ValueError(f"date range covers {span} days but data has {t} rows")
        if not np.isfinite(self.data).all():
            raise ValueError("panel contains non-finite entries after imputation")
        if self.impute_mask is None:
            self.impute_mask = np.zeros(self.data.shape, dtype=bool)

    @property
    def tau(self) -> int:
        return self.data.shape[0] - 1

    def select(self, variables) -> "FeaturePanel":
        """Channel subset in the given order (copies the data)."""
        idx = [self.variable_order.index(v) for v in variables]
        return FeaturePanel(list(self.county_order), list(variables),
                            self.data[:, :, idx].copy(), self.date_range,
                            self.impute_mask[:, :, idx].copy())


def _reject(diags: list[str], row_num: int, reason: str) -> None:
    msg = f"row {row_num}: {reason}"
    diags.append(msg)
    log.warning("rejected %s", msg)


def load_series(path: str | Path) -> list[CountySeries]:
    """Parse a daily-series CSV into one CountySeries per (fips, variable).

    Malformed rows are rejected with a logged diagnostic naming the row;
    out-of-order or duplicate dates within a series are hard errors. Date
    gaps become NaN and are resolved later by ``align_panel``.
    """
    path = Path(path)
    groups: dict[tuple[str, str], dict] = {}
    diagnostics: list[str] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [c.strip() for c in reader.fieldnames] != SERIES_HEADER:
            raise ValueError(f"{path}: expected header {','.join(SERIES_HEADER)}")
        for row_num, row in enumerate(reader, start=2):
            fips = (row["fips"] or "").strip()
            if not (len(fips) == 5 and fips.isdigit()):
                _reject(diagnostics, row_num, f"malformed FIPS {fips!r}")
                continue
            try:
                day = date.fromisoformat((row["date"] or "").strip())
            except ValueError:
                _reject(diagnostics, row_num, f"unparseable date {row['date']!r}")
                continue
            raw_value = (row["value"] or "").strip()
            try:
                value = float(raw_value) if raw_value else float("nan")
            except ValueError:
                _reject(diagnostics, row_num, f"unparseable value {raw_value!r}")
                continue
            raw_pop = (row["population"] or "").strip()
            population = None
            if raw_pop:
                try:
                    population = int(raw_pop)
                except ValueError:
                    _reject(diagnostics, row_num, f"unparseable population {raw_pop!r}")
                    continue
            key = (fips, (row["variable"] or "").strip())
            group = groups.setdefault(key, {"days": [], "values": [], "population": None})
            if group["days"]:
                last = group["days"][-1]
                if day == last:
                    raise ValueError(f"{path}: duplicate date {day} for {key} (row {row_num})")
                if day < last:
                    raise ValueError(
                        f"{path}: non-monotone dates for {key}: {day} after {last} "
                        f"(row {row_num})")
            group["days"].append(day)
            group["values"].append(value)
            if group["population"] is None and population is not None:
                group["population"] = population

    series = []
    for (fips, variable), group in sorted(groups.items()):
        start, end = group["days"][0], group["days"][-1]
        values = np.full((end - start).days + 1, np.nan)
        for day, value in zip(group["days"], group["values"]):
            values[(day - start).days] = value
        series.append(CountySeries(fips, variable, start, values, group["population"]))
    log.info("loaded %d series from %s (%d rows rejected)", len(series), path, len(diagnostics))
    return series


def per_100k(series: CountySeries) -> CountySeries:
    """Rate per 100k population; the variable id gains a ``_per100k`` suffix."""
    if series.population is None or series.population <= 0:
        raise ValueError(f"county {series.fips} has no population for per-100k scaling")
    return replace(series, variable_id=series.variable_id + "_per100k",
                   values=series.values * (100_000.0 / series.population))


IMPUTE_POLICY = "ffill-lead-zero"


def align_panel(series: list[CountySeries], date_range: tuple[date, date],
                impute: str = IMPUTE_POLICY) -> FeaturePanel:
    """Aligned panel over the window: forward-fill interior gaps, zero-fill
    leading gaps, and record every imputed cell in the sidecar mask.

    Every (county, variable) pair must be observed at least once inside the
    window; the error lists all offenders at once. Only the default
    imputation policy is implemented; the parameter exists so callers state
    it explicitly.
    """
    if impute != IMPUTE_POLICY:
        raise ValueError(f"unknown imputation policy {impute!r}")
    start, end = date_range
    if end < start:
        raise ValueError(f"empty date range {start}..{end}")
    days = (end - start).days + 1
    county_order = sorted({s.fips for s in series})
    variable_order = sorted({s.variable_id for s in series})
    by_key: dict[tuple[str, str], CountySeries] = {}
    for s in series:
        key = (s.fips, s.variable_id)
        if key in by_key:
            raise ValueError(f"multiple series for {key}")
        by_key[key] = s

    data = np.full((days, len(county_order), len(variable_order)), np.nan)
    for (fips, variable), s in by_key.items():
        n = county_order.index(fips)
        f = variable_order.index(variable)
        src_lo = max(0, (start - s.start_date).days)
        src_hi = min(len(s.values), (end - s.start_date).days + 1)
        if src_lo < src_hi:
            dst_lo = src_lo - (start - s.start_date).days
            data[dst_lo:dst_lo + (src_hi - src_lo), n, f] = s.values[src_lo:src_hi]

    missing_pairs = []
    for n, fips in enumerate(county_order):
        for f, variable in enumerate(variable_order):
            if not np.isfinite(data[:, n, f]).any():
                missing_pairs.append((fips, variable))
    if missing_pairs:
        raise ValueError(f"no observations in range for: {missing_pairs}")

    mask = ~np.isfinite(data)
    for n in range(data.shape[1]):
        for f in range(data.shape[2]):
            col = data[:, n, f]
            finite = np.isfinite(col)
            first = int(np.argmax(finite))
            col[:first] = 0.0
            for t in range(first + 1, days):
                if not np.isfinite(col[t]):
                    col[t] = col[t - 1]
    return FeaturePanel(county_order, variable_order, data, date_range, mask)


@dataclass
class VariableStats:
    variable: str
    mean: float
    std: float
    degenerate: bool = False


def zscore(panel: FeaturePanel,
           fit_range: tuple[int, int]) -> tuple[FeaturePanel, list[VariableStats]]:
    """Standardize every variable by mean/std computed over ``fit_range``
    only (train window), leaving zero-variance variables unscaled but
    flagged."""
    lo, hi = fit_range
    if not (0 <= lo < hi <= panel.data.shape[0]):
        raise ValueError(f"bad fit range ({lo}, {hi}) for {panel.data.shape[0]} days")
    data = panel.data.copy()
    stats = []
    for f, variable in enumerate(panel.variable_order):
        window = panel.data[lo:hi, :, f]
        mean = float(window.mean())
        std = float(window.std())
        if std == 0.0:
            stats.append(VariableStats(variable, mean, 1.0, degenerate=True))
            continue
        data[:, :, f] = (data[:, :, f] - mean) / std
        stats.append(VariableStats(variable, mean, std))
    scaled = FeaturePanel(list(panel.county_order), list(panel.variable_order), data,
                          panel.date_range, panel.impute_mask.copy())
    return scaled, stats


def inverse_zscore(panel: FeaturePanel, stats: list[VariableStats]) -> FeaturePanel:
    data = panel.data.copy()
    for f, st in enumerate(stats):
        if not st.degenerate:
            data[:, :, f] = data[:, :, f] * st.std + st.mean
    return FeaturePanel(list(panel.county_order), list(panel.variable_order), data,
                        panel.date_range, panel.impute_mask.copy())


# ---------------------------------------------------------------------------
# artifacts


def save_panel(panel: FeaturePanel, directory: str | Path) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    np.savez_compressed(directory / "panel.npz", data=panel.data, mask=panel.impute_mask)
    meta = {
        "county_order": panel.county_order,
        "variable_order": panel.variable_order,
        "start_date": panel.date_range[0].isoformat(),
        "end_date": panel.date_range[1].isoformat(),
    }
    (directory / "panel.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n",
                                          encoding="utf-8")


def load_panel(directory: str | Path) -> FeaturePanel:
    directory = Path(directory)
    meta = json.loads((directory / "panel.json").read_text(encoding="utf-8"))
    archive = np.load(directory / "panel.npz")
    return FeaturePanel(
        meta["county_order"], meta["variable_order"], archive["data"],
        (date.fromisoformat(meta["start_date"]), date.fromisoformat(meta["end_date"])),
        archive["mask"])
