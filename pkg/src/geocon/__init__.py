"""County-level spatiotemporal forecasting with ensemble consensus voting."""

from .consensus import (VoteTable, aggregate_votes, one_tailed_test,
                        permutation_oracle, rmse_per_county, tally_votes)
from .estimators import BaselineLSTMForecaster, PanelScaler, RecurrentGraphForecaster
from .graphs import (CountyGraph, SocioVector, build_border_graph, build_socio_graph,
                     degree_centrality, socio_distance_matrix)
from .ingest import CountySeries, FeaturePanel, align_panel, load_series, per_100k, zscore
from .models import EnsembleMember, ModelSpec, make_ensemble
from .train import AmsGrad, RunRecord, WindowSet, make_windows, run_experiment, split_80_20
from .viz_stats import QuantileBinning, TrendLine, histogram, quantile_bins, trend_line

__version__ = "0.1.0"

__all__ = [
    "VoteTable", "aggregate_votes", "one_tailed_test", "permutation_oracle",
    "rmse_per_county", "tally_votes",
    "BaselineLSTMForecaster", "PanelScaler", "RecurrentGraphForecaster",
    "CountyGraph", "SocioVector", "build_border_graph", "build_socio_graph",
    "degree_centrality", "socio_distance_matrix",
    "CountySeries", "FeaturePanel", "align_panel", "load_series", "per_100k", "zscore",
    "EnsembleMember", "ModelSpec", "make_ensemble",
    "AmsGrad", "RunRecord", "WindowSet", "make_windows", "run_experiment", "split_80_20",
    "QuantileBinning", "TrendLine", "histogram", "quantile_bins", "trend_line",
    "__version__",
]
