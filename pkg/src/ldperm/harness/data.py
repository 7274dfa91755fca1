"""Synthetic datasets and CSV persistence."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ldperm.errors import DomainError
from ldperm.privacy import NORM_SLACK

GENERATORS = ("separable_svm", "logistic_planted", "uniform_ball")
LOGISTIC_SIGNAL = 4.0


@dataclass(frozen=True)
class Dataset:
    xs: np.ndarray
    ys: np.ndarray
    provenance: str = "unknown"

    def __post_init__(self):
        xs = np.atleast_2d(np.asarray(self.xs, dtype=float))
        ys = np.asarray(self.ys, dtype=float).ravel()
        if xs.shape[0] < 1 or xs.shape[1] < 1:
            raise DomainError("dataset needs n >= 1 and p >= 1")
        if xs.shape[0] != ys.shape[0]:
            raise DomainError("xs and ys disagree on the number of records")
        norms = np.linalg.norm(xs, axis=1)
        if np.any(norms > 1.0 + NORM_SLACK) or np.any(np.abs(ys) > 1.0 + NORM_SLACK):
            raise DomainError("records must satisfy ||x||_2 <= 1 and |y| <= 1; clip them first")
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)

    @property
    def n(self) -> int:
        return int(self.xs.shape[0])

    @property
    def p(self) -> int:
        return int(self.xs.shape[1])

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            for y, x in zip(self.ys, self.xs):
                writer.writerow([repr(float(y))] + [repr(float(v)) for v in x])

    @classmethod
    def from_csv(cls, path, clip: bool = False) -> "Dataset":
        """Load y-first CSV rows. With ``clip`` the records are projected into bounds."""
        rows = np.loadtxt(path, delimiter=",", ndmin=2)
        ys, xs = rows[:, 0], rows[:, 1:]
        if clip:
            xs, ys = clip_all(xs, ys)
        return cls(xs, ys, provenance=f"csv:{Path(path).name}")


def clip_all(xs, ys) -> tuple[np.ndarray, np.ndarray]:
    """Row-wise unit-ball projection of xs and clamping of ys."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(ys))):
        raise DomainError("dataset contains non-finite values")
    norms = np.linalg.norm(xs, axis=1, keepdims=True)
    xs = xs / np.maximum(norms, 1.0)
    return xs, np.clip(ys, -1.0, 1.0)


def uniform_ball(rng: np.random.Generator, n: int, p: int) -> np.ndarray:
    g = rng.standard_normal((n, p))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    return g * rng.random((n, 1)) ** (1.0 / p)


def _unit_vector(rng: np.random.Generator, p: int) -> np.ndarray:
    v = rng.standard_normal(p)
    return v / np.linalg.norm(v)


def generate_synthetic(kind: str, n: int, p: int, margin: float = 0.0, seed: int = 0) -> Dataset:
    """Draw a dataset satisfying the unit-ball bounds.

    ``separable_svm`` labels by sign(<w*, x>) and rejects points closer than
    ``margin`` to the hyperplane; ``logistic_planted`` draws +-1 labels with
    probability sigmoid(4 <w*, x>); ``uniform_ball`` pairs uniform-ball xs
    with uniform ys in [-1, 1].
    """
    if n < 1 or p < 1:
        raise DomainError("n and p must be >= 1")
    if not 0.0 <= margin < 0.5:
        raise DomainError("margin must lie in [0, 0.5)")
    if kind not in GENERATORS:
        raise DomainError(f"unknown generator {kind!r}; choose from {GENERATORS}")
    rng = np.random.default_rng(seed)
    provenance = f"{kind}(n={n},p={p},margin={margin},seed={seed})"

    if kind == "uniform_ball":
        return Dataset(uniform_ball(rng, n, p), rng.uniform(-1.0, 1.0, n), provenance)

    w_star = _unit_vector(rng, p)
    if kind == "logistic_planted":
        xs = uniform_ball(rng, n, p)
        prob = 1.0 / (1.0 + np.exp(-LOGISTIC_SIGNAL * (xs @ w_star)))
        ys = np.where(rng.random(n) < prob, 1.0, -1.0)
        return Dataset(xs, ys, provenance)

    xs = uniform_ball(rng, n, p)
    while True:
        bad = np.abs(xs @ w_star) < margin
        if not bad.any():
            break
        xs[bad] = uniform_ball(rng, int(bad.sum()), p)
    ys = np.where(xs @ w_star >= 0.0, 1.0, -1.0)
    return Dataset(xs, ys, provenance)
