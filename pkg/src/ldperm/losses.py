"""Generalized linear losses f(y <x, w>) and the kink-location sampler.

Every 1-Lipschitz convex f on [-1, 1] splits as

    f(t) = (f'(1) - f'(-1)) / 2 * E_s |t - s| + (f'(1) + f'(-1)) / 2 * t + c

where s is drawn by picking u uniformly in [f'(-1), f'(1)] and returning
the largest s whose subdifferential contains u.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from ldperm.approx import smoothed_hinge, smoothed_hinge_d1
from ldperm.errors import DomainError, InvariantViolation

HINGE_MARGIN = 0.5
# slack on the u-comparison so plateaus equal to u are treated as containing u
_U_TOL = 1e-12
_BRACKET = 1e-15


@dataclass(frozen=True)
class GenLinLoss:
    """A scalar convex loss f on [-1, 1] with its derivative.

    ``derivative`` must be vectorized, non-decreasing, and return the left
    derivative at kinks; ``d_left``/``d_right`` are f'(-1) and f'(1).
    """

    name: str
    value: Callable
    derivative: Callable
    d_left: float
    d_right: float

    def __post_init__(self):
        if self.d_left > self.d_right:
            raise DomainError(f"{self.name}: need f'(-1) <= f'(1)")

    @property
    def is_affine(self) -> bool:
        return self.d_right == self.d_left

    @property
    def kink_weight(self) -> float:
        """Coefficient of E|t - s| in the decomposition."""
        return (self.d_right - self.d_left) / 2.0

    @property
    def slope(self) -> float:
        """Coefficient of t in the decomposition."""
        return (self.d_right + self.d_left) / 2.0


def _hinge(t):
    return np.maximum(0.0, HINGE_MARGIN - np.asarray(t, dtype=float))


def _hinge_d(t):
    return np.where(np.asarray(t, dtype=float) <= HINGE_MARGIN, -1.0, 0.0)


def _plus(t):
    return np.maximum(0.0, np.asarray(t, dtype=float))


def _plus_d(t):
    return np.where(np.asarray(t, dtype=float) <= 0.0, 0.0, 1.0)


def _abs(t):
    return np.abs(np.asarray(t, dtype=float))


def _abs_d(t):
    return np.where(np.asarray(t, dtype=float) <= 0.0, -1.0, 1.0)


def _logistic(t):
    return np.logaddexp(0.0, -np.asarray(t, dtype=float))


def _logistic_d(t):
    return -1.0 / (1.0 + np.exp(np.asarray(t, dtype=float)))


def _make(name, value, derivative) -> GenLinLoss:
    return GenLinLoss(
        name,
        value,
        derivative,
        float(derivative(-1.0)),
        # right derivative at 1 == left derivative there for every shipped loss
        float(derivative(1.0)),
    )


CATALOG: dict[str, GenLinLoss] = {
    "hinge": _make("hinge", _hinge, _hinge_d),
    "plus": _make("plus", _plus, _plus_d),
    "abs": _make("abs", _abs, _abs_d),
    "logistic": _make("logistic", _logistic, _logistic_d),
}


def get_loss(name: str) -> GenLinLoss:
    try:
        return CATALOG[name]
    except KeyError:
        raise DomainError(f"unknown loss {name!r}; choose from {sorted(CATALOG)}") from None


def smoothed_hinge_loss(beta: float) -> GenLinLoss:
    """f_beta as a catalog entry (smooth, so its derivative has no kinks)."""
    return _make(
        f"smoothed_hinge[{beta:g}]",
        lambda t: smoothed_hinge(t, beta),
        lambda t: smoothed_hinge_d1(t, beta),
    )


def eval_empirical_risk(loss: GenLinLoss, w, xs, ys) -> float:
    """(1/n) sum_i f(y_i <x_i, w>)."""
    w = np.asarray(w, dtype=float)
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    ys = np.atleast_1d(np.asarray(ys, dtype=float))
    if w.ndim != 1 or xs.shape[1] != w.shape[0]:
        raise DomainError(f"weight dimension {w.shape} does not match data dimension {xs.shape[1]}")
    if xs.shape[0] != ys.shape[0]:
        raise DomainError("xs and ys disagree on the number of records")
    return float(np.mean(loss.value(ys * (xs @ w))))


def sample_q(loss: GenLinLoss, u_draws):
    """Map uniform variates in [0, 1) to kink locations s in [-1, 1].

    u = f'(-1) + u_draw (f'(1) - f'(-1)); returns sup{s : f'_-(s) <= u},
    the largest s with u in the subdifferential. Bisection stops once the
    bracket is narrower than 1e-15, well inside 1e-9.
    """
    if loss.is_affine:
        raise DomainError(f"{loss.name} is affine; its decomposition has no kink term")
    draws = np.asarray(u_draws, dtype=float)
    u = loss.d_left + draws.ravel() * (loss.d_right - loss.d_left)
    thresh = u + _U_TOL

    lo = np.full(u.shape, -1.0)
    hi = np.full(u.shape, 1.0)
    d_lo = np.asarray(loss.derivative(lo), dtype=float)
    d_hi = np.asarray(loss.derivative(hi), dtype=float)
    at_top = d_hi <= thresh
    active = ~at_top
    # ~51 halvings reach the 1e-15 bracket width from [-1, 1]; the cap is a backstop
    for _ in range(200):
        if not active.any():
            break
        mid = 0.5 * (lo + hi)
        done = (hi - lo <= _BRACKET) | (mid <= lo) | (mid >= hi)
        active &= ~done
        if not active.any():
            break
        d_mid = np.asarray(loss.derivative(mid), dtype=float)
        bad = active & ((d_mid < d_lo - _U_TOL) | (d_mid > d_hi + _U_TOL))
        if bad.any():
            raise InvariantViolation(
                f"{loss.name}: derivative is not non-decreasing near s={mid[bad][0]:.6g}"
            )
        go_right = active & (d_mid <= thresh)
        go_left = active & ~go_right
        lo = np.where(go_right, mid, lo)
        d_lo = np.where(go_right, d_mid, d_lo)
        hi = np.where(go_left, mid, hi)
        d_hi = np.where(go_left, d_mid, d_hi)
    s = np.where(at_top, 1.0, lo)
    return float(s[0]) if draws.ndim == 0 else s.reshape(draws.shape)


@dataclass
class DecompositionReport:
    max_deviation: float
    constant: float
    std_error: float
    thetas: np.ndarray
    deviations: np.ndarray

    def within(self, k: float = 4.0, floor: float = 1e-12) -> bool:
        """Deviation at most k standard errors (plus a float-rounding floor)."""
        return self.max_deviation <= k * self.std_error + floor


def verify_decomposition(
    loss: GenLinLoss,
    theta_grid,
    num_samples: int = 10**5,
    seed: int = 0,
    *,
    q_samples=None,
) -> DecompositionReport:
    """Monte-Carlo check that the kink mixture reproduces ``loss`` up to a constant.

    ``q_samples`` replaces the sampled kinks (e.g. a known point mass).
    The constant is the least-squares fit, i.e. the mean residual.
    """
    theta = np.atleast_1d(np.asarray(theta_grid, dtype=float))
    target = np.asarray(loss.value(theta), dtype=float)
    if loss.is_affine:
        mixture = np.zeros_like(theta)
        se = np.zeros_like(theta)
    else:
        if q_samples is None:
            if num_samples < 10**4:
                raise DomainError("verify_decomposition needs at least 1e4 samples")
            rng = np.random.default_rng(seed)
            s = sample_q(loss, rng.random(num_samples))
        else:
            s = np.asarray(q_samples, dtype=float).ravel()
        dist = np.abs(theta[:, None] - s[None, :])
        mixture = loss.kink_weight * dist.mean(axis=1)
        se = (
            loss.kink_weight * dist.std(axis=1, ddof=1) / np.sqrt(s.size)
            if s.size > 1
            else np.zeros_like(theta)
        )
    approx = mixture + loss.slope * theta
    c = float(np.mean(target - approx))
    dev = np.abs(approx + c - target)
    return DecompositionReport(float(dev.max()), c, float(se.max()), theta, dev)
