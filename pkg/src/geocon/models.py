"""Recurrent graph-convolution forecaster, LSTM baseline, and ensemble roster.

The recurrent update is intentionally nonstandard: the gates read the
previous *embedding* H_{t-1} (not the recurrent state), the candidate bias
sits outside the tanh, and the new state mixes the previous candidate with
the current one. ``standard_gru`` switches to the conventional GRU for
ablation.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import ndiff
from .ndiff import GraphNeighbors, Tensor

AGGREGATORS = ("mean", "sum", "max")
ACTIVATIONS = {"sigmoid": ndiff.sigmoid, "relu": ndiff.relu}


@dataclass(frozen=True)
class ModelSpec:
    """Hyperparameters of one ensemble member, bound to a data shape."""

    kind: str = "rgc"                 # "rgc" | "lstm"
    aggregator: str = "mean"          # rgc only
    nlayers: int = 1                  # graph-conv depth (rgc only)
    hidden_dim: int = 128
    gate_activation: str = "sigmoid"
    conv_activation: str = "relu"
    dropout: float = 0.5
    lags: int = 5                     # input window length h
    horizon: int = 15                 # forecast steps per sample
    n_nodes: int = 0                  # output dimension N (counties)
    n_features: int = 0               # input channels F
    standard_gru: bool = False

    def validate(self) -> None:
        if self.kind not in ("rgc", "lstm"):
            raise ValueError(f"unknown model kind {self.kind!r}")
        if self.kind == "rgc" and self.aggregator not in AGGREGATORS:
            raise ValueError(f"unknown aggregator {self.aggregator!r}")
        if self.kind == "rgc" and self.nlayers < 1:
            raise ValueError("nlayers must be >= 1")
        if self.hidden_dim < 1 or self.lags < 1 or self.horizon < 1:
            raise ValueError("hidden_dim, lags and horizon must all be >= 1")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError(f"dropout must be in [0, 1), got {self.dropout}")
        if self.gate_activation not in ACTIVATIONS or self.conv_activation not in ACTIVATIONS:
            raise ValueError("activations must be 'sigmoid' or 'relu'")
        if self.n_nodes < 1 or self.n_features < 1:
            raise ValueError("spec is not bound to data (n_nodes / n_features unset)")

    def bind(self, n_nodes: int, n_features: int) -> "ModelSpec":
        return dataclasses.replace(self, n_nodes=n_nodes, n_features=n_features)


def _uniform(rng: np.random.Generator, shape: tuple[int, ...], name: str) -> Tensor:
    bound = 1.0 / np.sqrt(shape[0])
    return Tensor(rng.uniform(-bound, bound, size=shape), requires_grad=True, name=name)


def _zeros(shape: tuple[int, ...], name: str) -> Tensor:
    return Tensor(np.zeros(shape), requires_grad=True, name=name)


def init_params(spec: ModelSpec, rng: np.random.Generator) -> dict[str, Tensor]:
    """Fresh trainable tensors in a fixed creation order (stream-stable).

    Weight matrices are uniform in +/- 1/sqrt(fan_in); biases start at zero.
    """
    spec.validate()
    H, F, w = spec.hidden_dim, spec.n_features, spec.horizon
    params: dict[str, Tensor] = {}
    if spec.kind == "rgc":
        params["f_mlp.w"] = _uniform(rng, (F, H), "f_mlp.w")
        params["f_mlp.b"] = _zeros((H,), "f_mlp.b")
        for layer in range(1, spec.nlayers + 1):
            params[f"conv{layer}.w"] = _uniform(rng, (2 * H, H), f"conv{layer}.w")
        for gate in ("z", "r", "q"):
            params[f"gru.w{gate}"] = _uniform(rng, (2 * H, H), f"gru.w{gate}")
            params[f"gru.b{gate}"] = _zeros((H,), f"gru.b{gate}")
    else:
        for gate in ("i", "f", "c", "o"):
            params[f"lstm.w{gate}"] = _uniform(rng, (F + H, H), f"lstm.w{gate}")
            params[f"lstm.b{gate}"] = _zeros((H,), f"lstm.b{gate}")
    params["head.w"] = _uniform(rng, (H, w), "head.w")
    params["head.b"] = _zeros((w,), "head.b")
    return params


def graph_conv(x: Tensor, neigh: GraphNeighbors, params: dict[str, Tensor],
               spec: ModelSpec) -> Tensor:
    """Per-timestamp node embedding: input map, then nlayers of
    aggregate-neighbors / concat-self / linear / activation. Readout is the
    identity per-node stack, so the output keeps shape (..., N, hidden)."""
    if x.shape[-2] != neigh.n:
        raise ValueError(f"graph has {neigh.n} nodes but features have {x.shape[-2]}")
    act = ACTIVATIONS[spec.conv_activation]
    h = ndiff.add(ndiff.matmul(x, params["f_mlp.w"]), params["f_mlp.b"])
    for layer in range(1, spec.nlayers + 1):
        h_neigh = ndiff.neighbor_aggregate(h, neigh, spec.aggregator)
        h = act(ndiff.matmul(ndiff.concat(h_neigh, h), params[f"conv{layer}.w"]))
    return h


def gru_step(h_prev: Tensor, h_t: Tensor, state_prev: Tensor,
             params: dict[str, Tensor], spec: ModelSpec) -> tuple[Tensor, Tensor]:
    """One recurrent update; returns (output state, candidate).

    Literal mode (default): ``state_prev`` is the previous candidate; gates
    read [H_{t-1}, H_t]; the candidate bias is added outside the tanh; the
    output mixes previous and current candidates. Standard mode:
    ``state_prev`` is the previous output state and the usual GRU equations
    apply (both returned tensors coincide).
    """
    gate = ACTIVATIONS[spec.gate_activation]
    carry = state_prev if spec.standard_gru else h_prev
    gate_in = ndiff.concat(carry, h_t)
    z = gate(ndiff.add(ndiff.matmul(gate_in, params["gru.wz"]), params["gru.bz"]))
    r = gate(ndiff.add(ndiff.matmul(gate_in, params["gru.wr"]), params["gru.br"]))
    cand_in = ndiff.concat(ndiff.mul(r, state_prev), h_t)
    if spec.standard_gru:
        q_hat = ndiff.tanh(ndiff.add(ndiff.matmul(cand_in, params["gru.wq"]), params["gru.bq"]))
    else:
        q_hat = ndiff.add(ndiff.tanh(ndiff.matmul(cand_in, params["gru.wq"])), params["gru.bq"])
    ones = Tensor(np.ones(z.shape))
    mixed = ndiff.add(ndiff.mul(z, state_prev), ndiff.mul(ndiff.sub(ones, z), q_hat))
    return mixed, q_hat


def _check_window(windows: np.ndarray, spec: ModelSpec) -> np.ndarray:
    w = np.asarray(windows, dtype=np.float64)
    if w.ndim == 3:
        w = w[None]
    if w.ndim != 4 or w.shape[1] != spec.lags or w.shape[2] != spec.n_nodes \
            or w.shape[3] != spec.n_features:
        raise ValueError(
            f"window shape {np.asarray(windows).shape} does not match spec "
            f"(lags={spec.lags}, nodes={spec.n_nodes}, features={spec.n_features})")
    return w


def rgc_apply(windows: np.ndarray, neigh: GraphNeighbors, params: dict[str, Tensor],
              spec: ModelSpec, dropout_rng: np.random.Generator | None = None) -> Tensor:
    """Batched forward pass; returns predictions of shape (B, N, horizon).

    The first timestamp uses its own embedding as H_{t-1}; the candidate
    state starts at zero. Dropout hits the final output state only and is
    active only when a generator is supplied.
    """
    w = _check_window(windows, spec)
    B = w.shape[0]
    state = Tensor(np.zeros((B, spec.n_nodes, spec.hidden_dim)))
    h_prev: Tensor | None = None
    out_state = state
    for t in range(spec.lags):
        try:
            h_t = graph_conv(Tensor(w[:, t]), neigh, params, spec)
            if h_prev is None:
                h_prev = h_t
            out_state, cand = gru_step(h_prev, h_t, state, params, spec)
        except ndiff.NonFiniteError as err:
            raise ndiff.NonFiniteError(f"{err} at timestamp index {t}") from err
        state = out_state if spec.standard_gru else cand
        h_prev = h_t
    rate = spec.dropout if dropout_rng is not None else 0.0
    dropped = ndiff.dropout(out_state, rate, dropout_rng)
    return ndiff.add(ndiff.matmul(dropped, params["head.w"]), params["head.b"])


def lstm_apply(windows: np.ndarray, params: dict[str, Tensor], spec: ModelSpec,
               dropout_rng: np.random.Generator | None = None) -> Tensor:
    """Standard LSTM cell run per node independently (no cross-node terms)."""
    w = _check_window(windows, spec)
    B = w.shape[0]
    shape = (B, spec.n_nodes, spec.hidden_dim)
    h, c = Tensor(np.zeros(shape)), Tensor(np.zeros(shape))
    for t in range(spec.lags):
        try:
            xt = ndiff.concat(Tensor(w[:, t]), h)
            i = ndiff.sigmoid(ndiff.add(ndiff.matmul(xt, params["lstm.wi"]), params["lstm.bi"]))
            f = ndiff.sigmoid(ndiff.add(ndiff.matmul(xt, params["lstm.wf"]), params["lstm.bf"]))
            o = ndiff.sigmoid(ndiff.add(ndiff.matmul(xt, params["lstm.wo"]), params["lstm.bo"]))
            g = ndiff.tanh(ndiff.add(ndiff.matmul(xt, params["lstm.wc"]), params["lstm.bc"]))
            c = ndiff.add(ndiff.mul(f, c), ndiff.mul(i, g))
            h = ndiff.mul(o, ndiff.tanh(c))
        except ndiff.NonFiniteError as err:
            raise ndiff.NonFiniteError(f"{err} at timestamp index {t}") from err
    rate = spec.dropout if dropout_rng is not None else 0.0
    dropped = ndiff.dropout(h, rate, dropout_rng)
    return ndiff.add(ndiff.matmul(dropped, params["head.w"]), params["head.b"])


def forward(windows: np.ndarray, neigh: GraphNeighbors | None, params: dict[str, Tensor],
            spec: ModelSpec, dropout_rng: np.random.Generator | None = None) -> Tensor:
    if spec.kind == "rgc":
        if neigh is None:
            raise ValueError("rgc models need a graph")
        return rgc_apply(windows, neigh, params, spec, dropout_rng)
    return lstm_apply(windows, params, spec, dropout_rng)


def rgc_forward(window: np.ndarray, neigh: GraphNeighbors, params: dict[str, Tensor],
                spec: ModelSpec) -> np.ndarray:
    """Single-window inference: (lags, N, F) -> forecast (horizon, N)."""
    out = rgc_apply(window, neigh, params, spec)
    return out.data[0].T.copy()


def lstm_forward(window: np.ndarray, params: dict[str, Tensor],
                 spec: ModelSpec) -> np.ndarray:
    """Single-window inference: (lags, N, F) -> forecast (horizon, N)."""
    out = lstm_apply(window, params, spec)
    return out.data[0].T.copy()


# ---------------------------------------------------------------------------
# ensemble roster


@dataclass(frozen=True)
class EnsembleMember:
    name: str
    spec: ModelSpec


DEFAULT_ROSTER: tuple[tuple[str, dict], ...] = (
    ("lstm", {"kind": "lstm"}),
    ("rgc_mean_1", {"kind": "rgc", "aggregator": "mean", "nlayers": 1}),
    ("rgc_mean_2", {"kind": "rgc", "aggregator": "mean", "nlayers": 2}),
    ("rgc_sum_1", {"kind": "rgc", "aggregator": "sum", "nlayers": 1}),
    ("rgc_sum_2", {"kind": "rgc", "aggregator": "sum", "nlayers": 2}),
    ("rgc_max_1", {"kind": "rgc", "aggregator": "max", "nlayers": 1}),
    ("rgc_max_2", {"kind": "rgc", "aggregator": "max", "nlayers": 2}),
    ("rgc_mean_2_relugate",
     {"kind": "rgc", "aggregator": "mean", "nlayers": 2, "gate_activation": "relu"}),
)


def make_ensemble(base: ModelSpec, size: int = 8,
                  roster: Sequence[tuple[str, dict]] | None = None) -> list[EnsembleMember]:
    """Build the voting roster: ``size`` members from the default list
    (1 LSTM + graph variants over aggregator x depth, one relu-gated), or an
    explicit ``roster`` of (name, spec overrides)."""
    entries = list(roster) if roster is not None else list(DEFAULT_ROSTER[:size])
    if roster is None and size > len(DEFAULT_ROSTER):
        raise ValueError(f"default roster has {len(DEFAULT_ROSTER)} members, asked for {size}")
    names = [name for name, _ in entries]
    if len(set(names)) != len(names):
        raise ValueError(f"duplicate ensemble member names: {names}")
    return [EnsembleMember(name, dataclasses.replace(base, **overrides))
            for name, overrides in entries]
