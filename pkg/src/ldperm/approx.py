"""Bernstein approximation of smoothed loss derivatives.

The pipeline approximates the derivative of a smoothed hinge (or plus)
function on the raw argument range [-1, 1]. Bernstein polynomials live on
[0, 1], so targets are composed with the affine map t = 2u - 1 and the
polynomial is evaluated at u = (t + 1) / 2.
"""

from __future__ import annotations

import math
from functools import cached_property
from dataclasses import dataclass
from typing import Callable, Literal

import numpy as np
from scipy.special import gammaln, xlog1py, xlogy

from ldperm.errors import ConstructionError, DomainError, SizingError

DEFAULT_DEGREE_CEILING = 1024
DEGREE_CONSTANT = 2.0


def log_binom(k, v):
    """Natural log of C(k, v), elementwise."""
    k = np.asarray(k, dtype=float)
    v = np.asarray(v, dtype=float)
    return gammaln(k + 1.0) - gammaln(v + 1.0) - gammaln(k - v + 1.0)


def binom_weights(k: int) -> np.ndarray:
    """C(k, v) for v = 0..k as floats."""
    return np.exp(log_binom(k, np.arange(k + 1)))


def bernstein_basis(v, k: int, x):
    """Evaluate b_{v,k}(x) = C(k,v) x^v (1-x)^(k-v).

    Computed in log space so degrees in the hundreds neither overflow the
    binomial nor underflow the powers prematurely. ``v`` and ``x`` broadcast.
    """
    v_arr = np.asarray(v)
    if np.any(v_arr < 0) or np.any(v_arr > k):
        raise DomainError(f"basis index must satisfy 0 <= v <= k={k}, got {v}")
    x_arr = np.asarray(x, dtype=float)
    logb = log_binom(k, v_arr) + xlogy(v_arr, x_arr) + xlog1py(k - v_arr, -x_arr)
    out = np.exp(logb)
    return float(out) if out.ndim == 0 else out


def basis_matrix(k: int, x) -> np.ndarray:
    """Rows are points, columns are b_{0,k} .. b_{k,k}."""
    x_arr = np.atleast_1d(np.asarray(x, dtype=float))
    return bernstein_basis(np.arange(k + 1)[None, :], k, x_arr[:, None])


@dataclass(frozen=True)
class BernsteinPoly:
    """Degree-d Bernstein polynomial with an affine domain map.

    ``coeffs[j]`` is the target's value at node j/d of the unit interval.
    ``lo``/``hi`` record the raw interval mapped onto [0, 1].
    """

    degree: int
    coeffs: np.ndarray
    lo: float = 0.0
    hi: float = 1.0
    sup_error: float | None = None
    mean_error: float | None = None

    def __post_init__(self):
        coeffs = np.asarray(self.coeffs, dtype=float)
        if self.degree < 1:
            raise ConstructionError("degree must be a positive integer")
        if coeffs.shape != (self.degree + 1,):
            raise ConstructionError(
                f"expected {self.degree + 1} coefficients, got {coeffs.shape}"
            )
        if not np.all(np.isfinite(coeffs)):
            raise ConstructionError("non-finite Bernstein coefficient")
        if not self.hi > self.lo:
            raise ConstructionError("domain map needs hi > lo")
        coeffs.setflags(write=False)
        object.__setattr__(self, "coeffs", coeffs)

    @cached_property
    def weights(self) -> np.ndarray:
        """c_j * C(d, j), the factor multiplying x^j (1-x)^(d-j)."""
        return self.coeffs * binom_weights(self.degree)

    def to_unit(self, t):
        return (np.asarray(t, dtype=float) - self.lo) / (self.hi - self.lo)

    def __call__(self, u):
        """Evaluate on the unit interval."""
        u_arr = np.asarray(u, dtype=float)
        vals = basis_matrix(self.degree, u_arr.ravel()) @ self.coeffs
        return float(vals[0]) if u_arr.ndim == 0 else vals.reshape(u_arr.shape)

    def at(self, t):
        """Evaluate at raw argument ``t`` (mapped through the domain map)."""
        return self(self.to_unit(t))


def bernstein_interpolate(f: Callable, k: int) -> BernsteinPoly:
    """Bernstein polynomial B_k(f) of a function on [0, 1]."""
    if k < 1:
        raise ConstructionError("degree must be >= 1")
    nodes = np.arange(k + 1) / k
    vals = np.array([f(t) for t in nodes], dtype=float)
    if not np.all(np.isfinite(vals)):
        bad = nodes[~np.isfinite(vals)]
        raise ConstructionError(f"target is not finite at nodes {bad.tolist()}")
    return BernsteinPoly(k, vals)


def _node_matrix(k: int) -> np.ndarray:
    # M[a, v] = b_{v,k}(a/k): values of B_k g at the nodes are M @ g(nodes)
    return basis_matrix(k, np.arange(k + 1) / k)


def iterated_bernstein(f: Callable, k: int, h: int) -> Callable:
    """Iterated Bernstein operator B_k^(h) = I - (I - B_k)^h applied to ``f``.

    Uses I - (I - B)^h = B * sum_{i<h} (I - B)^i, so the result is an
    ordinary Bernstein polynomial whose coefficients are
    sum_{i<h} (I - M)^i f(nodes).
    """
    if h < 1:
        raise ConstructionError("iteration order h must be >= 1")
    base = bernstein_interpolate(f, k)
    residual_op = np.eye(k + 1) - _node_matrix(k)
    term = base.coeffs.copy()
    coeffs = term.copy()
    for _ in range(h - 1):
        term = residual_op @ term
        coeffs = coeffs + term
    return BernsteinPoly(k, coeffs)


# -- smoothed surrogates ------------------------------------------------------

def smoothed_hinge(x, beta: float):
    """f_beta(x) = (1/2 - x + sqrt((1/2 - x)^2 + beta^2)) / 2."""
    a = 0.5 - np.asarray(x, dtype=float)
    return (a + np.hypot(a, beta)) / 2.0


def smoothed_hinge_d1(x, beta: float):
    a = np.asarray(x, dtype=float) - 0.5
    return (-1.0 + a / np.hypot(a, beta)) / 2.0


def smoothed_hinge_d2(x, beta: float):
    a = np.asarray(x, dtype=float) - 0.5
    return beta**2 / (2.0 * (a * a + beta**2) ** 1.5)


def smoothed_plus(x, beta: float):
    """h_beta(x) = (x + sqrt(x^2 + beta^2)) / 2."""
    x = np.asarray(x, dtype=float)
    return (x + np.hypot(x, beta)) / 2.0


def smoothed_plus_d1(x, beta: float):
    x = np.asarray(x, dtype=float)
    return (1.0 + x / np.hypot(x, beta)) / 2.0


# -- degree selection ---------------------------------------------------------

@dataclass(frozen=True)
class SmoothingParams:
    """Smoothing scale ``beta`` and target excess risk ``alpha``.

    ``alpha`` only matters when no ``degree_override`` is given.
    """

    beta: float
    alpha: float | None = None
    degree_override: int | None = None

    def __post_init__(self):
        if not 0.0 < self.beta <= 1.0:
            raise DomainError(f"beta must lie in (0, 1], got {self.beta}")
        if self.alpha is None and self.degree_override is None:
            raise DomainError("need alpha or degree_override to fix the degree")
        if self.alpha is not None and not self.alpha > 0.0:
            raise DomainError(f"alpha must be positive, got {self.alpha}")
        if self.degree_override is not None and self.degree_override < 1:
            raise DomainError("degree_override must be a positive integer")

    @classmethod
    def from_alpha(cls, alpha: float, degree_override: int | None = None):
        """beta = alpha / 4, the choice that balances smoothing and approximation."""
        return cls(beta=alpha / 4.0, alpha=alpha, degree_override=degree_override)

    def degree(self) -> int:
        if self.degree_override is not None:
            return int(self.degree_override)
        raw = DEGREE_CONSTANT / (self.beta**2 * self.alpha)
        # absorb float noise so exact integers are not bumped up by ceil
        return max(1, math.ceil(raw - 1e-9 * raw))


DERIVATIVES = {"hinge": smoothed_hinge_d1, "plus": smoothed_plus_d1}


def unit_grid(step: float) -> np.ndarray:
    count = int(round(1.0 / step))
    return np.linspace(0.0, 1.0, count + 1)


def approximation_error(poly: BernsteinPoly, target: Callable, step: float = 1e-3):
    """(sup, mean) of |P(u) - target(u)| over a uniform grid on [0, 1]."""
    u = unit_grid(step)
    err = np.abs(poly(u) - target(u))
    return float(err.max()), float(err.mean())


def build_derivative_poly(
    kind: Literal["hinge", "plus"],
    params: SmoothingParams,
    *,
    ceiling: int = DEFAULT_DEGREE_CEILING,
    grid_step: float = 1e-3,
) -> BernsteinPoly:
    """Bernstein approximation of f'_beta (hinge) or h'_beta (plus) on [-1, 1].

    The target is g(u) = D(2u - 1) for u in [0, 1]; the measured grid error
    is stored on the returned polynomial.
    """
    if kind not in DERIVATIVES:
        raise DomainError(f"unknown kind {kind!r}; expected one of {sorted(DERIVATIVES)}")
    d = params.degree()
    if d > ceiling:
        raise SizingError(
            f"degree {d} exceeds the ceiling {ceiling}; "
            "pass degree_override or raise the ceiling"
        )
    deriv = DERIVATIVES[kind]
    beta = params.beta

    def target(u):
        return deriv(2.0 * np.asarray(u, dtype=float) - 1.0, beta)

    base = bernstein_interpolate(target, d)
    poly = BernsteinPoly(d, base.coeffs, lo=-1.0, hi=1.0)
    sup_err, mean_err = approximation_error(poly, target, grid_step)
    return BernsteinPoly(d, base.coeffs, lo=-1.0, hi=1.0, sup_error=sup_err, mean_error=mean_err)
