"""Projected stochastic inexact gradient descent over an l2 ball."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable, Literal

import numpy as np

from ldperm.errors import DomainError, SolverAbort


def project_ball(w, radius: float = 1.0) -> np.ndarray:
    """Euclidean projection onto {w : ||w||_2 <= radius}."""
    w = np.asarray(w, dtype=float)
    norm = float(np.linalg.norm(w))
    if norm <= radius:
        return w
    return w * (radius / norm)


@dataclass(frozen=True)
class SolverConfig:
    iterations: int
    radius: float = 1.0
    step_rule: Literal["fixed", "inv_sqrt"] = "inv_sqrt"
    step_scale: float = 1.0
    averaging: Literal["last", "uniform_tail"] = "uniform_tail"
    seed: int = 0

    def __post_init__(self):
        if self.iterations < 1:
            raise DomainError("iterations must be >= 1")
        if not self.radius > 0:
            raise DomainError("radius must be positive")
        if not self.step_scale > 0:
            raise DomainError("step_scale must be positive")
        if self.step_rule not in ("fixed", "inv_sqrt"):
            raise DomainError(f"unknown step rule {self.step_rule!r}")
        if self.averaging not in ("last", "uniform_tail"):
            raise DomainError(f"unknown averaging {self.averaging!r}")


@dataclass
class Trace:
    """Per-iteration log. Row t describes the step taken from iterate t."""

    iteration: np.ndarray
    player_id: np.ndarray
    iterate_norm: np.ndarray
    step_size: np.ndarray
    surrogate_risk: np.ndarray | None = None

    def __len__(self) -> int:
        return int(self.iteration.shape[0])

    def truncated(self, length: int) -> "Trace":
        return Trace(
            self.iteration[:length],
            self.player_id[:length],
            self.iterate_norm[:length],
            self.step_size[:length],
            None if self.surrogate_risk is None else self.surrogate_risk[:length],
        )

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["iteration", "player_id", "iterate_norm", "step_size"])
            for row in zip(self.iteration, self.player_id, self.iterate_norm, self.step_size):
                writer.writerow([int(row[0]), int(row[1]), repr(float(row[2])), repr(float(row[3]))])


def run_sigm(
    oracle: Callable[[np.ndarray, int], object],
    config: SolverConfig,
    n_players: int,
    dim: int,
    sigma_hat: float = 1.0,
    risk_fn: Callable[[np.ndarray], float] | None = None,
) -> tuple[np.ndarray, Trace]:
    """Run projected SGD from w = 0, sampling one player per step with replacement.

    ``oracle(w, player_id)`` returns a gradient vector or an object with a
    ``gradient`` attribute. Under ``inv_sqrt`` the step is
    step_scale / (sigma_hat * sqrt(t)).
    """
    if n_players < 1:
        raise DomainError("need at least one player")
    if config.step_rule == "inv_sqrt" and not sigma_hat > 0:
        raise DomainError("inv_sqrt steps need a positive sigma_hat")
    rng = np.random.default_rng(config.seed)
    n_iter = config.iterations
    players = rng.integers(0, n_players, size=n_iter)
    t = np.arange(1, n_iter + 1)
    if config.step_rule == "inv_sqrt":
        steps = config.step_scale / (sigma_hat * np.sqrt(t))
    else:
        steps = np.full(n_iter, config.step_scale)

    norms = np.empty(n_iter)
    risks = np.empty(n_iter) if risk_fn is not None else None
    tail_start = n_iter - math.ceil(n_iter / 2)
    tail_sum = np.zeros(dim)
    w = np.zeros(dim)
    for k in range(n_iter):
        norms[k] = float(np.linalg.norm(w))
        if risks is not None:
            risks[k] = risk_fn(w)
        out = oracle(w, int(players[k]))
        g = np.asarray(getattr(out, "gradient", out), dtype=float)
        if g.shape != (dim,) or not np.all(np.isfinite(g)):
            trace = Trace(t, players, norms, steps, risks).truncated(k + 1)
            raise SolverAbort(
                f"non-finite or misshapen gradient at iteration {k + 1} "
                f"(player {int(players[k])}, ||w|| = {norms[k]:.4g})",
                trace,
            )
        w = project_ball(w - steps[k] * g, config.radius)
        if k >= tail_start:
            tail_sum += w
    trace = Trace(t, players, norms, steps, risks)
    if config.averaging == "last":
        return w, trace
    return project_ball(tail_sum / (n_iter - tail_start), config.radius), trace
