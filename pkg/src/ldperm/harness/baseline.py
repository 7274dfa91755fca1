"""Nonprivate reference optimum for excess-risk measurement."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ldperm.losses import GenLinLoss
from ldperm.solver import project_ball

WINDOW = 200
MAX_ITER = 20_000


@dataclass(frozen=True)
class BaselineResult:
    w: np.ndarray
    value: float
    iterations: int
    converged: bool

    @property
    def warning(self) -> bool:
        return not self.converged


def baseline_optimum(
    loss: GenLinLoss,
    xs,
    ys,
    tol: float = 1e-4,
    radius: float = 1.0,
    max_iter: int = MAX_ITER,
) -> BaselineResult:
    """Minimize (1/n) sum f(y_i <x_i, w>) over the radius ball.

    Projected subgradient descent with steps radius / sqrt(k) and a
    step-weighted running average. Both the iterate and the average are
    scored; stops once the best value improves by less than ``tol`` over a
    200-step window.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    yx = ys[:, None] * xs
    n, p = xs.shape

    def value(w):
        return float(np.mean(loss.value(yx @ w)))

    w = np.zeros(p)
    avg = np.zeros(p)
    weight = 0.0
    best_w, best = w.copy(), value(w)
    history = [best]
    converged = False
    k = 0
    for k in range(1, max_iter + 1):
        g = yx.T @ loss.derivative(yx @ w) / n
        gnorm = float(np.linalg.norm(g))
        if gnorm == 0.0:
            converged = True
            break
        step = radius / math.sqrt(k)
        w = project_ball(w - step * g, radius)
        weight += step
        avg += (step / weight) * (w - avg)
        for cand in (w, avg):
            v = value(cand)
            if v < best:
                best, best_w = v, cand.copy()
        history.append(best)
        if k >= WINDOW and history[k - WINDOW] - best < tol:
            converged = True
            break
    return BaselineResult(best_w, best, k, converged)
