"""Dense-matrix helpers and a central-difference gradient checker.

Arrays are plain numpy ndarrays: float32 during training, float64 inside
gradient checks (central differences are unreliable at single precision).
NaN/Inf is an error at operation boundaries, never silently propagated.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimMismatchError, NonFiniteError


def check_finite(x, what="array"):
    x = np.asarray(x)
    if not np.all(np.isfinite(x)):
        raise NonFiniteError(f"{what} contains NaN/Inf")
    return x


def matmul(a, b):
    a = check_finite(a, "matmul lhs")
    b = check_finite(b, "matmul rhs")
    if a.ndim != 2 or b.ndim != 2:
        raise DimMismatchError("matmul expects 2-d arrays")
    if a.shape[1] != b.shape[0]:
        raise DimMismatchError(f"inner dims differ: {a.shape} x {b.shape}")
    return check_finite(a @ b, "matmul result")


def sigmoid(x):
    x = np.asarray(x)
    out = np.empty_like(x, dtype=x.dtype if x.dtype.kind == "f" else np.float64)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def relu(x):
    return np.maximum(np.asarray(x), 0)


def activate(kind, x):
    x = check_finite(x, "activate input")
    if kind == "sigmoid":
        return sigmoid(x)
    if kind == "relu":
        return relu(x)
    if kind == "tanh":
        return np.tanh(x)
    raise ValueError(f"unknown activation {kind!r}")


@dataclass(frozen=True)
class GradReport:
    max_rel_error: dict      # parameter-group name -> worst relative error
    tolerance: float

    @property
    def passed(self) -> bool:
        return all(e < self.tolerance for e in self.max_rel_error.values())

    @property
    def worst(self) -> float:
        return max(self.max_rel_error.values()) if self.max_rel_error else 0.0


def grad_check(f, params, tolerance=1e-3, step=1e-5, eps=1e-8) -> GradReport:
    """Compare analytic gradients of f against central differences.

    f(params) must return (loss, grads) where grads maps each group name in
    params to an array of matching shape.  params are promoted to float64.
    Relative error per element is |ga - gn| / max(|ga|, |gn|, eps).
    """
    params = {k: np.asarray(v, dtype=np.float64).copy() for k, v in params.items()}
    loss, grads = f(params)
    if not np.isfinite(loss):
        raise NonFiniteError("loss is not finite at the check point")
    report = {}
    for name, p in params.items():
        ga = check_finite(np.asarray(grads[name], dtype=np.float64), f"gradient {name}")
        if ga.shape != p.shape:
            raise DimMismatchError(f"gradient {name} shape {ga.shape} != {p.shape}")
        worst = 0.0
        it = np.nditer(p, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            orig = p[idx]
            p[idx] = orig + step
            lp, _ = f(params)
            p[idx] = orig - step
            lm, _ = f(params)
            p[idx] = orig
            gn = (lp - lm) / (2 * step)
            denom = max(abs(ga[idx]), abs(gn), eps)
            worst = max(worst, abs(ga[idx] - gn) / denom)
        report[name] = worst
    return GradReport(max_rel_error=report, tolerance=tolerance)
