"""Scikit-learn style wrappers so the forecasters and the panel scaler
compose with the wider ecosystem (get_params/set_params, clone, pipelines).

The estimators delegate to the functional core: hyperparameters are stored
verbatim in ``__init__`` and all fitted state lands in trailing-underscore
attributes.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin, TransformerMixin
from sklearn.exceptions import NotFittedError

from .graphs import CountyGraph
from .ingest import FeaturePanel, inverse_zscore, zscore
from .models import ModelSpec
from .ndiff import GraphNeighbors
from .train import OptimizerSettings, WindowSet, predict, train_model


def _check_xy(X, y):
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 4:
        raise ValueError(f"X must be (samples, lags, nodes, features), got shape {X.shape}")
    if y.ndim != 3 or y.shape[0] != X.shape[0] or y.shape[2] != X.shape[2]:
        raise ValueError(f"y must be (samples, horizon, nodes) matching X, got {y.shape}")
    if not (np.isfinite(X).all() and np.isfinite(y).all()):
        raise ValueError("inputs must be finite")
    return X, y


class _ForecasterMixin:
    def _fit_common(self, X, y, spec: ModelSpec, neigh: GraphNeighbors | None):
        X, y = _check_xy(X, y)
        windows = WindowSet(X, y, np.arange(X.shape[0], dtype=np.intp))
        opt = OptimizerSettings(self.lr, self.beta1, self.beta2, self.eps)
        result = train_model(spec, windows, neigh, self.epochs, self.seed, opt)
        self.spec_ = spec
        self.neigh_ = neigh
        self.params_ = result.params
        self.loss_curve_ = result.loss_curve
        self.failed_ = result.failed
        self.fail_reason_ = result.fail_reason
        return self

    def predict(self, X) -> np.ndarray:
        """Forecasts of shape (samples, horizon, nodes)."""
        if not hasattr(self, "params_"):
            raise NotFittedError("call fit before predict")
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 3:
            X = X[None]
        return predict(self.spec_, self.params_, self.neigh_, X)


class RecurrentGraphForecaster(_ForecasterMixin, RegressorMixin, BaseEstimator):
    """Recurrent graph-convolution forecaster over a fixed county graph.

    X is (samples, lags, nodes, features); y is (samples, horizon, nodes).
    """

    def __init__(self, graph: CountyGraph | None = None, aggregator: str = "mean",
                 nlayers: int = 1, hidden_dim: int = 128,
                 gate_activation: str = "sigmoid", conv_activation: str = "relu",
                 dropout: float = 0.5, standard_gru: bool = False, epochs: int = 150,
                 lr: float = 0.02, beta1: float = 0.9, beta2: float = 0.999,
                 eps: float = 1e-8, seed: int = 0):
        self.graph = graph
        self.aggregator = aggregator
        self.nlayers = nlayers
        self.hidden_dim = hidden_dim
        self.gate_activation = gate_activation
        self.conv_activation = conv_activation
        self.dropout = dropout
        self.standard_gru = standard_gru
        self.epochs = epochs
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.seed = seed

    def fit(self, X, y):
        if self.graph is None:
            raise ValueError("RecurrentGraphForecaster needs a graph")
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 4:
            raise ValueError(f"X must be 4-dimensional, got shape {X.shape}")
        spec = ModelSpec(kind="rgc", aggregator=self.aggregator, nlayers=self.nlayers,
                         hidden_dim=self.hidden_dim, gate_activation=self.gate_activation,
                         conv_activation=self.conv_activation, dropout=self.dropout,
                         lags=X.shape[1], horizon=np.asarray(y).shape[1],
                         n_nodes=X.shape[2], n_features=X.shape[3],
                         standard_gru=self.standard_gru)
        if self.graph.n != spec.n_nodes:
            raise ValueError(f"graph has {self.graph.n} nodes, data has {spec.n_nodes}")
        neigh = GraphNeighbors(self.graph.n, self.graph.index_edges())
        return self._fit_common(X, y, spec, neigh)


class BaselineLSTMForecaster(_ForecasterMixin, RegressorMixin, BaseEstimator):
    """Per-county LSTM baseline: no cross-county coupling."""

    def __init__(self, hidden_dim: int = 128, dropout: float = 0.5, epochs: int = 150,
                 lr: float = 0.02, beta1: float = 0.9, beta2: float = 0.999,
                 eps: float = 1e-8, seed: int = 0):
        self.hidden_dim = hidden_dim
        self.dropout = dropout
        self.epochs = epochs
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.seed = seed

    def fit(self, X, y):
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 4:
            raise ValueError(f"X must be 4-dimensional, got shape {X.shape}")
        spec = ModelSpec(kind="lstm", hidden_dim=self.hidden_dim, dropout=self.dropout,
                         lags=X.shape[1], horizon=np.asarray(y).shape[1],
                         n_nodes=X.shape[2], n_features=X.shape[3])
        return self._fit_common(X, y, spec, None)


class PanelScaler(TransformerMixin, BaseEstimator):
    """Per-variable z-scoring of a FeaturePanel using train-window statistics."""

    def __init__(self, fit_range: tuple[int, int] | None = None):
        self.fit_range = fit_range

    def fit(self, panel: FeaturePanel, y=None):
        rng = self.fit_range or (0, panel.data.shape[0])
        _, self.stats_ = zscore(panel, rng)
        return self

    def transform(self, panel: FeaturePanel) -> FeaturePanel:
        if not hasattr(self, "stats_"):
            raise NotFittedError("call fit before transform")
        data = panel.data.copy()
        for f, st in enumerate(self.stats_):
            if panel.variable_order[f] != st.variable:
                raise ValueError("panel variables do not match the fitted statistics")
            if not st.degenerate:
                data[:, :, f] = (data[:, :, f] - st.mean) / st.std
        return FeaturePanel(list(panel.county_order), list(panel.variable_order), data,
                            panel.date_range, panel.impute_mask.copy())

    def inverse_transform(self, panel: FeaturePanel) -> FeaturePanel:
        if not hasattr(self, "stats_"):
            raise NotFittedError("call fit before inverse_transform")
        return inverse_zscore(panel, self.stats_)
