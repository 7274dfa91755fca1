"""Player-side Gaussian randomization and the basic-composition accountant.

Each player releases 1 + d(d+1) noisy copies of x and of y. Each copy is a
Gaussian mechanism with l2 sensitivity 2 (two points of the unit ball), so
a release with variance v and failure probability delta' spends

    eps' = sqrt(2 ln(1.25/delta') * 2**2 / v).

Budgets add up over all 2 (1 + d(d+1)) releases.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from ldperm.errors import DomainError, NormViolation

SENSITIVITY = 2.0
NORM_SLACK = 1e-12

Mode = Literal["paper_faithful", "calibrated"]
MODES = ("paper_faithful", "calibrated")


@dataclass(frozen=True)
class PrivacyBudget:
    epsilon: float
    delta: float
    mode: Mode = "calibrated"

    def __post_init__(self):
        if not self.epsilon > 0:
            raise DomainError(f"epsilon must be positive, got {self.epsilon}")
        if not 0 < self.delta < 1:
            raise DomainError(f"delta must lie in (0, 1), got {self.delta}")
        if self.mode not in MODES:
            raise DomainError(f"mode must be one of {MODES}, got {self.mode!r}")


def n_copies(d: int) -> int:
    return d * (d + 1)


def n_releases(d: int) -> int:
    """Scalar/vector releases per player: head + copies, for x and for y."""
    return 2 * (1 + n_copies(d))


def gaussian_variance(eps: float, delta: float, sensitivity: float = SENSITIVITY) -> float:
    """Classical Gaussian-mechanism variance 2 ln(1.25/delta) Delta^2 / eps^2."""
    return 2.0 * math.log(1.25 / delta) * sensitivity**2 / eps**2


def gaussian_epsilon(variance: float, delta: float, sensitivity: float = SENSITIVITY) -> float:
    """Inverse of :func:`gaussian_variance` at fixed delta."""
    if variance <= 0:
        return math.inf
    return math.sqrt(2.0 * math.log(1.25 / delta) * sensitivity**2 / variance)


@dataclass(frozen=True)
class NoisePlan:
    head_var: float
    copy_var: float
    composed_epsilon: float
    composed_delta: float
    head_epsilon: float = math.inf
    copy_epsilon: float = math.inf
    release_delta: float = 0.0
    mode: str = "calibrated"
    warnings: tuple[str, ...] = field(default=())

    @property
    def warn(self) -> bool:
        return bool(self.warnings)

    @property
    def is_noiseless(self) -> bool:
        return self.head_var == 0.0 and self.copy_var == 0.0

    @classmethod
    def noiseless(cls) -> "NoisePlan":
        """Zero-variance plan for exactness tests. Provides no privacy."""
        return cls(0.0, 0.0, math.inf, 0.0, mode="zero")


def _release_warnings(head_eps: float, copy_eps: float) -> tuple[str, ...]:
    out = []
    for label, e in (("head", head_eps), ("copy", copy_eps)):
        if e >= 1.0:
            out.append(
                f"per-release epsilon {e:.4g} for {label} copies is >= 1; "
                "the classical Gaussian calibration assumes epsilon < 1"
            )
    return tuple(out)


def plan_noise(budget: PrivacyBudget, d: int) -> NoisePlan:
    """Per-release variances for degree ``d`` and the budget they actually compose to."""
    if d < 1:
        raise DomainError("degree must be >= 1")
    eps, delta = budget.epsilon, budget.delta
    m = n_copies(d)
    releases = n_releases(d)
    if budget.mode == "paper_faithful":
        log_term = math.log(1.25 / delta)
        head_var = 32.0 * log_term / eps**2
        copy_var = 8.0 * log_term * d**2 * (d + 1) ** 2 / eps**2
        release_delta = delta
    else:
        release_delta = delta / releases
        head_var = copy_var = gaussian_variance(eps / releases, release_delta)
    head_eps = gaussian_epsilon(head_var, release_delta)
    copy_eps = gaussian_epsilon(copy_var, release_delta)
    return NoisePlan(
        head_var=head_var,
        copy_var=copy_var,
        composed_epsilon=2.0 * (head_eps + m * copy_eps),
        composed_delta=releases * release_delta,
        head_epsilon=head_eps,
        copy_epsilon=copy_eps,
        release_delta=release_delta,
        mode=budget.mode,
        warnings=_release_warnings(head_eps, copy_eps),
    )


def clip_record(x, y) -> tuple[np.ndarray, float]:
    """Project x onto the unit ball and clamp y to [-1, 1]."""
    x = np.asarray(x, dtype=float)
    y = float(y)
    if not (np.all(np.isfinite(x)) and math.isfinite(y)):
        raise DomainError("record contains non-finite values")
    norm = float(np.linalg.norm(x))
    if norm > 1.0:
        x = x / norm
    return x, min(1.0, max(-1.0, y))


@dataclass(frozen=True)
class PlayerReport:
    """One player's single message to the server.

    Copy k of ``x_copies``/``y_copies`` is copy k+1 in 1-based numbering.
    """

    player_id: int
    degree: int
    x0: np.ndarray
    y0: float
    x_copies: np.ndarray
    y_copies: np.ndarray

    def __post_init__(self):
        m = n_copies(self.degree)
        if self.x_copies.shape[0] != m or self.y_copies.shape != (m,):
            raise DomainError(f"expected {m} copies for degree {self.degree}")
        if self.x_copies.shape[1] != self.x0.shape[0]:
            raise DomainError("copies and head disagree on dimension")
        if not (
            np.all(np.isfinite(self.x0))
            and math.isfinite(self.y0)
            and np.all(np.isfinite(self.x_copies))
            and np.all(np.isfinite(self.y_copies))
        ):
            raise DomainError("report contains non-finite entries")

    @property
    def dim(self) -> int:
        return int(self.x0.shape[0])

    def to_json(self) -> dict:
        return {
            "player_id": int(self.player_id),
            "x0": self.x0.tolist(),
            "y0": float(self.y0),
            "x_copies": self.x_copies.tolist(),
            "y_copies": self.y_copies.tolist(),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "PlayerReport":
        y_copies = np.asarray(obj["y_copies"], dtype=float)
        m = y_copies.shape[0]
        d = int(round((math.sqrt(1 + 4 * m) - 1) / 2))
        if n_copies(d) != m:
            raise DomainError(f"{m} copies is not of the form d(d+1)")
        x0 = np.asarray(obj["x0"], dtype=float)
        x_copies = np.asarray(obj["x_copies"], dtype=float).reshape(m, x0.shape[0])
        return cls(int(obj["player_id"]), d, x0, float(obj["y0"]), x_copies, y_copies)


def player_stream(master_seed: int, player_id: int) -> np.random.Generator:
    """Counter-based substream keyed by (master_seed, player_id).

    Within the stream the draw order is x0, y0, the copies of x (copy-major),
    then the copies of y.
    """
    seq = np.random.SeedSequence(master_seed, spawn_key=(int(player_id),))
    return np.random.Generator(np.random.Philox(seq))


def check_record(x: np.ndarray, y: float) -> None:
    norm = float(np.linalg.norm(x))
    if norm > 1.0 + NORM_SLACK:
        raise NormViolation(f"||x||_2 = {norm:.6g} exceeds 1")
    if abs(y) > 1.0 + NORM_SLACK:
        raise NormViolation(f"|y| = {abs(y):.6g} exceeds 1")


def randomize_player(
    x,
    y,
    plan: NoisePlan,
    d: int,
    rng: np.random.Generator,
    player_id: int = 0,
) -> PlayerReport:
    """Add independent Gaussian noise to the head copy and to d(d+1) further copies."""
    x = np.asarray(x, dtype=float)
    y = float(y)
    check_record(x, y)
    p = x.shape[0]
    m = n_copies(d)
    z = rng.standard_normal(p + 1 + m * p + m)
    head_sd = math.sqrt(plan.head_var)
    copy_sd = math.sqrt(plan.copy_var)
    x0 = x + head_sd * z[:p]
    y0 = y + head_sd * z[p]
    x_copies = x + copy_sd * z[p + 1 : p + 1 + m * p].reshape(m, p)
    y_copies = y + copy_sd * z[p + 1 + m * p :]
    return PlayerReport(player_id, d, x0, float(y0), x_copies, y_copies)
