"""Central-finite-difference gradient checking.

The oracle only ever calls the forward pass, so it stays independent of
the reverse-mode code it validates.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .tensor import Tensor


@dataclass
class GradCheckEntry:
    name: str
    max_rel_error: float
    passed: bool


@dataclass
class GradCheckReport:
    entries: list[GradCheckEntry]
    tolerance: float

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.entries)

    @property
    def max_rel_error(self) -> float:
        return max((e.max_rel_error for e in self.entries), default=0.0)

    def __str__(self) -> str:
        lines = [
            f"  {e.name}: max rel err {e.max_rel_error:.3e} "
            f"({'ok' if e.passed else 'FAIL'})"
            for e in self.entries
        ]
        return "\n".join(lines)


def grad_check(
    fn: Callable[[], Tensor],
    inputs: dict[str, Tensor],
    tolerance: float = 1e-4,
    step: float = 1e-5,
) -> GradCheckReport:
    """Compare reverse-mode gradients of the scalar fn() against central
    differences for every element of every named input tensor.

    fn must be pure: re-evaluating it may not mutate state (pass
    running=None to batch norm, etc.). Step size is relative:
    h = step * max(1, |x|).
    """
    for t in inputs.values():
        t.zero_grad()
    loss = fn()
    loss.backward()
    analytic = {
        name: (t.grad.copy() if t.grad is not None else np.zeros_like(t.data))
        for name, t in inputs.items()
    }

    entries = []
    for name, tensor in inputs.items():
        flat = tensor.data.reshape(-1)
        numeric = np.zeros_like(flat)
        for i in range(flat.size):
            orig = flat[i]
            h = step * max(1.0, abs(orig))
            flat[i] = orig + h
            up = float(fn().data)
            flat[i] = orig - h
            down = float(fn().data)
            flat[i] = orig
            numeric[i] = (up - down) / (2.0 * h)
        a = analytic[name].reshape(-1)
        denom = np.maximum(np.maximum(np.abs(a), np.abs(numeric)), 1e-6)
        rel = float(np.max(np.abs(a - numeric) / denom)) if flat.size else 0.0
        entries.append(GradCheckEntry(name=name, max_rel_error=rel, passed=rel < tolerance))
    return GradCheckReport(entries=entries, tolerance=tolerance)
