"""Central-finite-difference gradient checking."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import Tape, Tensor, backward


@dataclass
class GradCheckReport:
    max_rel_error: float
    worst_param: str
    worst_index: tuple[int, ...]
    analytic: float
    numeric: float

    def __str__(self) -> str:  # pragma: no cover - formatting only
        return (f"max rel error {self.max_rel_error:.3e} at {self.worst_param}{self.worst_index} "
                f"(analytic {self.analytic:.6e}, numeric {self.numeric:.6e})")


def grad_check(f: Callable[[], Tensor], params: dict[str, Tensor],
               eps: float = 1e-5) -> GradCheckReport:
    """Compare analytic gradients of scalar ``f()`` against central differences.

    ``f`` must be deterministic (dropout off / fixed masks) and close over
    ``params``; each call re-evaluates the forward pass. The relative error
    denominator is floored at 1e-6 so near-zero coordinates do not explode.
    """
    with Tape() as tape:
        loss = f()
    backward(tape, loss)
    # a parameter that never touches the loss has a zero gradient
    analytic = {name: (np.array(p.grad, copy=True) if p.grad is not None
                       else np.zeros_like(p.data))
                for name, p in params.items()}

    worst = GradCheckReport(0.0, "", (), 0.0, 0.0)
    for name, p in params.items():
        flat = p.data.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + eps
            f_plus = float(f().data)
            flat[i] = orig - eps
            f_minus = float(f().data)
            flat[i] = orig
            numeric = (f_plus - f_minus) / (2.0 * eps)
            a = float(analytic[name].reshape(-1)[i])
            rel = abs(a - numeric) / max(abs(a), abs(numeric), 1e-6)
            if rel >= worst.max_rel_error:
                idx = np.unravel_index(i, p.data.shape) if p.data.ndim else ()
                worst = GradCheckReport(rel, name, tuple(int(k) for k in idx), a, numeric)
    return worst
