"""Minimal reverse-mode autodiff over small dense tensors.

A Tape records primitive operations while it is active (``with Tape():``);
``backward`` replays it in reverse to accumulate gradients into every
tensor with ``requires_grad``. Outside an active tape the primitives are
plain numpy computations, which is how inference runs.
"""
from __future__ import annotations

import logging
import threading
from typing import Callable, Iterable, Sequence

import numpy as np

log = logging.getLogger(__name__)

_local = threading.local()


class NonFiniteError(ArithmeticError):
    """A primitive produced NaN or Inf; message carries the tape location."""


def _tape_stack() -> list:
    stack = getattr(_local, "stack", None)
    if stack is None:
        stack = []
        _local.stack = stack
    return stack


def active_tape() -> "Tape | None":
    stack = _tape_stack()
    return stack[-1] if stack else None


class Tensor:
    """Dense float64 array plus gradient slot.

    ``data`` is row-major and never shared with the caller's buffer when
    constructed from a list; wrapping an existing float64 ndarray keeps it.
    """

    __slots__ = ("data", "grad", "requires_grad", "name")

    def __init__(self, data, requires_grad: bool = False, name: str | None = None):
        arr = np.asarray(data, dtype=np.float64)
        if not arr.flags["C_CONTIGUOUS"]:
            arr = np.ascontiguousarray(arr)
        self.data = arr
        self.grad: np.ndarray | None = None
        self.requires_grad = bool(requires_grad)
        self.name = name

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        return float(self.data)

    def zero_grad(self) -> None:
        self.grad = None

    def __repr__(self) -> str:
        tag = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.data.shape}{tag}, requires_grad={self.requires_grad})"


class TapeEntry:
    __slots__ = ("op", "parents", "output", "backward_fn")

    def __init__(self, op: str, parents: tuple[Tensor, ...], output: Tensor,
                 backward_fn: Callable[[np.ndarray], Sequence[np.ndarray | None]]):
        self.op = op
        self.parents = parents
        self.output = output
        self.backward_fn = backward_fn


class Tape:
    """Ordered record of primitive ops; topological by construction."""

    def __init__(self):
        self.entries: list[TapeEntry] = []
        self._produced: set[int] = set()

    def __enter__(self) -> "Tape":
        _tape_stack().append(self)
        return self

    def __exit__(self, *exc) -> None:
        _tape_stack().pop()

    def __len__(self) -> int:
        return len(self.entries)

    def record(self, entry: TapeEntry) -> None:
        self.entries.append(entry)
        self._produced.add(id(entry.output))

    def produced(self, t: Tensor) -> bool:
        return id(t) in self._produced


def _check_finite(op: str, out: np.ndarray) -> None:
    # cheap probe first: a NaN/Inf anywhere poisons the sum
    if np.isfinite(out.sum()):
        return
    if np.isfinite(out).all():
        return  # benign overflow of the probe sum itself
    tape = active_tape()
    where = f" (tape position {len(tape.entries)})" if tape is not None else ""
    raise NonFiniteError(f"non-finite output from '{op}'{where}")


def _emit(op: str, parents: tuple[Tensor, ...], data: np.ndarray,
          backward_fn: Callable[[np.ndarray], Sequence[np.ndarray | None]]) -> Tensor:
    _check_finite(op, data)
    tape = active_tape()
    needs = tape is not None and any(p.requires_grad for p in parents)
    out = Tensor(data, requires_grad=needs)
    if needs:
        tape.record(TapeEntry(op, parents, out, backward_fn))
    return out


def backward(tape: Tape, loss: Tensor) -> dict[Tensor, np.ndarray]:
    """Accumulate d(loss)/d(t) for every requires_grad tensor on the tape.

    Gradients are summed when a tensor feeds several operations. Leaf
    gradients are written to ``t.grad`` and returned keyed by tensor; a
    requires_grad leaf that never influences the loss gets zeros.
    """
    if loss.size != 1:
        raise ValueError(f"backward needs a scalar loss, got shape {loss.shape}")
    if not tape.produced(loss):
        raise ValueError("loss tensor is not on the tape")

    grads: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
    leaves: dict[int, Tensor] = {}
    for entry in reversed(tape.entries):
        for p in entry.parents:
            if p.requires_grad and not tape.produced(p):
                leaves[id(p)] = p
        g = grads.pop(id(entry.output), None)
        if g is None:
            continue  # branch not reaching the loss
        parent_grads = entry.backward_fn(g)
        for p, pg in zip(entry.parents, parent_grads):
            if pg is None:
                continue
            if not (p.requires_grad or tape.produced(p)):
                continue
            acc = grads.get(id(p))
            if acc is None:
                grads[id(p)] = pg
            else:
                acc += pg

    result: dict[Tensor, np.ndarray] = {}
    for tid, leaf in leaves.items():
        leaf.grad = grads.get(tid, np.zeros_like(leaf.data))
        result[leaf] = leaf.grad
    return result


# ---------------------------------------------------------------------------
# primitives


def _shape_guard(op: str, ok: bool, *shapes) -> None:
    if not ok:
        raise ValueError(f"{op}: incompatible shapes {' vs '.join(str(s) for s in shapes)}")


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """a @ b with b two-dimensional; leading axes of a are batch-stacked."""
    _shape_guard("matmul", b.ndim == 2 and a.ndim >= 2 and a.shape[-1] == b.shape[0],
                 a.shape, b.shape)
    ad, bd = a.data, b.data
    out = ad @ bd

    def bw(g: np.ndarray):
        g2 = g.reshape(-1, g.shape[-1])
        if a.requires_grad:
            ga = (g2 @ bd.T).reshape(ad.shape)
        else:
            ga = None
        if b.requires_grad:
            gb = ad.reshape(-1, ad.shape[-1]).T @ g2
        else:
            gb = None
        return ga, gb

    return _emit("matmul", (a, b), out, bw)


def add(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise add; b may also be a (d,) bias broadcast over leading axes."""
    bias = b.ndim == 1 and a.ndim > 1 and a.shape[-1] == b.shape[0]
    _shape_guard("add", a.shape == b.shape or bias, a.shape, b.shape)
    out = a.data + b.data

    def bw(g: np.ndarray):
        ga = g if a.requires_grad else None
        if not b.requires_grad:
            gb = None
        elif bias:
            gb = g.reshape(-1, g.shape[-1]).sum(axis=0)
        else:
            gb = g
        return ga, gb

    return _emit("add", (a, b), out, bw)


def sub(a: Tensor, b: Tensor) -> Tensor:
    _shape_guard("sub", a.shape == b.shape, a.shape, b.shape)
    out = a.data - b.data

    def bw(g: np.ndarray):
        return (g if a.requires_grad else None,
                -g if b.requires_grad else None)

    return _emit("sub", (a, b), out, bw)


def mul(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise (Hadamard) product."""
    _shape_guard("mul", a.shape == b.shape, a.shape, b.shape)
    ad, bd = a.data, b.data
    out = ad * bd

    def bw(g: np.ndarray):
        return (g * bd if a.requires_grad else None,
                g * ad if b.requires_grad else None)

    return _emit("mul", (a, b), out, bw)


def concat(a: Tensor, b: Tensor) -> Tensor:
    """Concatenate along the last axis."""
    _shape_guard("concat", a.shape[:-1] == b.shape[:-1], a.shape, b.shape)
    split = a.shape[-1]
    out = np.concatenate([a.data, b.data], axis=-1)

    def bw(g: np.ndarray):
        return (g[..., :split] if a.requires_grad else None,
                g[..., split:] if b.requires_grad else None)

    return _emit("concat", (a, b), out, bw)


def sigmoid(x: Tensor) -> Tensor:
    # clip keeps exp in range; the saturated tails round to exactly 0/1 anyway
    out = 1.0 / (1.0 + np.exp(-np.clip(x.data, -500.0, 500.0)))

    def bw(g: np.ndarray):
        return (g * out * (1.0 - out),)

    return _emit("sigmoid", (x,), out, bw)


def tanh(x: Tensor) -> Tensor:
    out = np.tanh(x.data)

    def bw(g: np.ndarray):
        return (g * (1.0 - out * out),)

    return _emit("tanh", (x,), out, bw)


def relu(x: Tensor) -> Tensor:
    out = np.maximum(x.data, 0.0)

    def bw(g: np.ndarray):
        return (g * (x.data > 0.0),)

    return _emit("relu", (x,), out, bw)


def dropout(x: Tensor, rate: float, rng: np.random.Generator | None = None,
            mask: np.ndarray | None = None) -> Tensor:
    """Inverted dropout: kept activations are scaled by 1/(1-rate).

    The mask is sampled once per call from ``rng``; pass ``mask`` to pin it.
    rate 0 is the identity and needs no generator.
    """
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"dropout rate must be in [0, 1), got {rate}")
    if rate == 0.0:
        return _emit("dropout", (x,), x.data.copy(), lambda g: (g,))
    if mask is None:
        if rng is None:
            raise ValueError("dropout with rate > 0 needs a generator or an explicit mask")
        mask = rng.random(x.shape) >= rate
    keep = mask.astype(np.float64) / (1.0 - rate)
    out = x.data * keep

    def bw(g: np.ndarray):
        return (g * keep,)

    return _emit("dropout", (x,), out, bw)


class GraphNeighbors:
    """Precomputed neighborhood structure for ``neighbor_aggregate``.

    Neighbor lists are kept sorted ascending so the max-aggregation
    subgradient breaks ties toward the lowest neighbor index.
    """

    def __init__(self, n: int, edges: Iterable[tuple[int, int]]):
        lists: list[set[int]] = [set() for _ in range(n)]
        for i, j in edges:
            if i == j:
                continue
            if not (0 <= i < n and 0 <= j < n):
                raise ValueError(f"edge ({i}, {j}) out of range for {n} nodes")
            lists[i].add(j)
            lists[j].add(i)
        self.n = n
        self.lists = [np.array(sorted(s), dtype=np.intp) for s in lists]
        self.isolated = np.array([len(s) == 0 for s in self.lists])

        mat = np.zeros((n, n))
        for v, nb in enumerate(self.lists):
            mat[v, nb] = 1.0
        self.mat_sum = mat
        deg = mat.sum(axis=1)
        self.mat_mean = np.divide(mat, deg[:, None], out=np.zeros_like(mat), where=deg[:, None] > 0)

        max_deg = max((len(s) for s in self.lists), default=0)
        self.pad_idx = np.zeros((n, max(max_deg, 1)), dtype=np.intp)
        self.pad_mask = np.zeros((n, max(max_deg, 1)), dtype=bool)
        for v, nb in enumerate(self.lists):
            self.pad_idx[v, : len(nb)] = nb
            self.pad_mask[v, : len(nb)] = True
        self._warned_isolated = False


def neighbor_aggregate(h: Tensor, neigh: GraphNeighbors, agg: str = "mean") -> Tensor:
    """Map node v to AGG over its neighbors' rows of h.

    h has shape (..., N, H); isolated nodes aggregate to the zero vector
    for every ``agg`` (logged once per graph for max).
    """
    _shape_guard("neighbor_aggregate", h.ndim >= 2 and h.shape[-2] == neigh.n,
                 h.shape, (neigh.n, "?"))
    if agg in ("mean", "sum"):
        mat = neigh.mat_mean if agg == "mean" else neigh.mat_sum
        mat_t = mat.T.copy()

        def bw(g: np.ndarray):
            return (mat_t @ g,)

        # (N, N) @ (..., N, H): the aggregation matrix broadcasts over batch axes
        out = mat @ h.data
        return _emit(f"neighbor_aggregate[{agg}]", (h,), out, bw)

    if agg != "max":
        raise ValueError(f"unknown aggregator {agg!r}")

    if neigh.isolated.any() and not neigh._warned_isolated:
        log.warning("max aggregation over %d isolated node(s): defined as the zero vector",
                    int(neigh.isolated.sum()))
        neigh._warned_isolated = True

    squeeze = h.ndim == 2
    hd = h.data[None] if squeeze else h.data.reshape(-1, neigh.n, h.shape[-1])
    B, N, H = hd.shape
    gathered = hd[:, neigh.pad_idx, :]                       # (B, N, D, H)
    gathered = np.where(neigh.pad_mask[None, :, :, None], gathered, -np.inf)
    arg = gathered.argmax(axis=2)                            # first max = lowest neighbor index
    out = np.take_along_axis(gathered, arg[:, :, None, :], axis=2)[:, :, 0, :]
    out[:, neigh.isolated, :] = 0.0
    lead = h.shape[:-2]

    def bw(g: np.ndarray):
        gb = g.reshape(B, N, H).copy()
        gb[:, neigh.isolated, :] = 0.0
        src = neigh.pad_idx[np.arange(N)[None, :, None], arg]  # (B, N, H) source node ids
        dh = np.zeros_like(hd)
        b_ix = np.arange(B)[:, None, None]
        h_ix = np.arange(H)[None, None, :]
        np.add.at(dh, (b_ix, src, h_ix), gb)
        return (dh[0] if squeeze else dh.reshape(h.shape),)

    out = out[0] if squeeze else out.reshape(*lead, N, H)
    return _emit("neighbor_aggregate[max]", (h,), out, bw)


def mse_loss(pred: Tensor, target: Tensor) -> Tensor:
    """Mean squared error over all elements; returns a scalar tensor."""
    _shape_guard("mse_loss", pred.shape == target.shape, pred.shape, target.shape)
    diff = pred.data - target.data
    n = diff.size
    out = np.asarray((diff * diff).sum() / n)

    def bw(g: np.ndarray):
        scaled = (2.0 / n) * g * diff
        return (scaled if pred.requires_grad else None,
                -scaled if target.requires_grad else None)

    return _emit("mse_loss", (pred, target), out, bw)
