"""Experiment configuration: TOML file plus GEOCON_* environment overrides.

Relative paths in [paths] are resolved against the config file's directory
so a generated experiment folder is relocatable.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path

try:
    import tomllib  # Python >= 3.11
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib

from .graphs import SOCIO_SLUGS, Threshold, TopK
from .train import OptimizerSettings
from .validation import check_probability

SOCIO_GROUP = "@socio"  # expands to all nine index channels


@dataclass
class IngestSettings:
    start_date: date
    end_date: date
    per100k: list[str] = field(default_factory=list)


@dataclass
class ModelSettings:
    hidden_dim: int = 128
    dropout: float = 0.5
    gate_activation: str = "sigmoid"
    conv_activation: str = "relu"
    standard_gru: bool = False
    ensemble_size: int = 8
    roster: list[tuple[str, dict]] | None = None


@dataclass
class SocioGraphSettings:
    rule: str = "top_k"
    k: int = 4
    threshold: float = 0.0
    scaling: str = "zscore"

    def selection_rule(self) -> "TopK | Threshold":
        if self.rule == "top_k":
            return TopK(self.k)
        if self.rule == "threshold":
            return Threshold(self.threshold)
        raise ValueError(f"unknown socio graph rule {self.rule!r}")


@dataclass
class PipelineConfig:
    state: str
    fips_prefix: str
    graph: str
    factors: list[str]
    target: str
    baseline_variables: list[str]
    runs: int = 10
    epochs: int = 150
    alpha: float = 0.1
    seed: int = 0
    lags: int = 5
    horizon: int = 15
    ingest: IngestSettings = None  # type: ignore[assignment]
    model: ModelSettings = field(default_factory=ModelSettings)
    optimizer: OptimizerSettings = field(default_factory=OptimizerSettings)
    socio_graph: SocioGraphSettings = field(default_factory=SocioGraphSettings)
    series_csv: Path = None  # type: ignore[assignment]
    socio_csv: Path = None  # type: ignore[assignment]
    adjacency: Path = None  # type: ignore[assignment]

    def validate(self) -> None:
        if self.graph not in ("border", "socio"):
            raise ValueError(f"experiment.graph must be 'border' or 'socio', got {self.graph!r}")
        if not (len(self.fips_prefix) == 2 and self.fips_prefix.isdigit()):
            raise ValueError(f"fips_prefix must be 2 digits, got {self.fips_prefix!r}")
        check_probability(self.alpha, "experiment.alpha")
        if self.target not in self.baseline_variables:
            raise ValueError(f"target {self.target!r} missing from baseline_variables")
        for f in self.factors:
            if f in self.baseline_variables:
                raise ValueError(f"factor {f!r} already in baseline_variables")
        if min(self.runs, self.epochs, self.lags, self.horizon) < 0:
            raise ValueError("runs/epochs/lags/horizon must be nonnegative")
        for label, path in (("series_csv", self.series_csv),
                            ("socio_csv", self.socio_csv),
                            ("adjacency", self.adjacency)):
            if not Path(path).exists():
                raise FileNotFoundError(f"paths.{label}: {path} does not exist")


def _expand_variables(names: list[str]) -> list[str]:
    out: list[str] = []
    for name in names:
        if name == SOCIO_GROUP:
            out.extend(SOCIO_SLUGS)
        else:
            out.append(name)
    return out


def load_config(path: str | Path) -> PipelineConfig:
    path = Path(path)
    with open(path, "rb") as fh:
        raw = tomllib.load(fh)
    try:
        exp = raw["experiment"]
        paths = raw["paths"]
        ing = raw["ingest"]
    except KeyError as err:
        raise ValueError(f"{path}: missing config table {err}") from None

    def resolve(p: str) -> Path:
        q = Path(p)
        return q if q.is_absolute() else (path.parent / q)

    model_raw = dict(raw.get("model", {}))
    roster = model_raw.pop("roster", None)
    if roster is not None:
        roster = [(entry.pop("name"), entry) for entry in (dict(e) for e in roster)]
    model = ModelSettings(**model_raw, roster=roster)
    optimizer = OptimizerSettings(**raw.get("optimizer", {}))
    socio_graph = SocioGraphSettings(**raw.get("socio_graph", {}))
    ingest = IngestSettings(
        start_date=date.fromisoformat(str(ing["start_date"])),
        end_date=date.fromisoformat(str(ing["end_date"])),
        per100k=list(ing.get("per100k", [])),
    )
    cfg = PipelineConfig(
        state=str(exp["state"]),
        fips_prefix=str(exp["fips_prefix"]),
        graph=str(exp["graph"]),
        factors=[str(f) for f in exp["factors"]],
        target=str(exp["target"]),
        baseline_variables=_expand_variables([str(v) for v in exp["baseline_variables"]]),
        runs=int(exp.get("runs", 10)),
        epochs=int(exp.get("epochs", 150)),
        alpha=float(exp.get("alpha", 0.1)),
        seed=int(exp.get("seed", 0)),
        lags=int(exp.get("lags", 5)),
        horizon=int(exp.get("horizon", 15)),
        ingest=ingest,
        model=model,
        optimizer=optimizer,
        socio_graph=socio_graph,
        series_csv=resolve(str(paths["series_csv"])),
        socio_csv=resolve(str(paths["socio_csv"])),
        adjacency=resolve(str(paths["adjacency"])),
    )
    cfg.validate()
    return cfg


def env_override(name: str, fallback):
    """GEOCON_<NAME> beats the built-in default but not an explicit flag."""
    raw = os.environ.get(f"GEOCON_{name.upper()}")
    if raw is None:
        return fallback
    if isinstance(fallback, int) and not isinstance(fallback, bool):
        return int(raw)
    return raw
