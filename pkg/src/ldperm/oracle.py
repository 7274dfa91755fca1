"""Server-side gradient reconstruction from noisy player reports.

A report carries d(d+1) independent noisy copies of (x, y). They are split
into d+1 blocks of d copies; in block j the first j copies estimate u^j and
the remaining d-j estimate (1-u)^(d-j), where u is the rescaled argument of
the approximating polynomial. Independence of the copies makes each block
an unbiased estimate of the Bernstein basis term, so the weighted sum is
unbiased for P_d(u).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, NamedTuple

import numpy as np

from ldperm.approx import BernsteinPoly
from ldperm.errors import DomainError
from ldperm.losses import GenLinLoss
from ldperm.privacy import PlayerReport, n_copies

DEFAULT_PILOT_SIZE = 200


class Certificate(NamedTuple):
    gamma: float
    smoothness: float
    sigma_bound: float


NO_CERTIFICATE = Certificate(0.0, 0.0, 0.0)


@dataclass(frozen=True)
class OracleSample:
    gradient: np.ndarray
    player_id: int
    certificate: Certificate = NO_CERTIFICATE


def copy_schedule(d: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """0-based copy indices feeding the u-product and (1-u)-product of each block."""
    out = []
    for j in range(d + 1):
        start = j * d
        out.append((np.arange(start, start + j), np.arange(start + j, start + d)))
    return out


@lru_cache(maxsize=64)
def _block_mask(d: int) -> np.ndarray:
    cols = np.arange(d)
    return cols[None, :] < np.arange(d + 1)[:, None]


def _bernstein_estimate(u: np.ndarray, poly: BernsteinPoly) -> float:
    """Unbiased estimate of P_d(u) from d(d+1) independent noisy copies of u."""
    d = poly.degree
    u = u.reshape(d + 1, d)
    factors = np.where(_block_mask(d), u, 1.0 - u)
    return float(poly.weights @ factors.prod(axis=1))


def _check(w, report: PlayerReport, poly: BernsteinPoly) -> np.ndarray:
    if report.degree != poly.degree:
        raise DomainError(
            f"report degree {report.degree} does not match polynomial degree {poly.degree}"
        )
    w = np.asarray(w, dtype=float)
    if w.shape != report.x0.shape:
        raise DomainError(f"weight shape {w.shape} does not match report dimension {report.dim}")
    return w


def hinge_gradient(
    w,
    report: PlayerReport,
    poly: BernsteinPoly,
    certificate: Certificate = NO_CERTIFICATE,
) -> OracleSample:
    """Noisy estimate of P_d(u(y<w, x>)) y x for one player's report."""
    w = _check(w, report, poly)
    inner = report.y_copies * (report.x_copies @ w)
    scale = _bernstein_estimate(poly.to_unit(inner), poly)
    return OracleSample(scale * report.y0 * report.x0, report.player_id, certificate)


def genlin_gradient(
    w,
    report: PlayerReport,
    poly: BernsteinPoly,
    loss: GenLinLoss,
    s_draws,
    certificate: Certificate = NO_CERTIFICATE,
) -> OracleSample:
    """Noisy gradient of the smoothed kink-mixture surrogate of ``loss``.

    With a = f'(1) - f'(-1) and kinks s_k drawn per copy, the scalar factor is
    a * P_d(u((y_k <w, x_k> - s_k) / 2)) + f'(-1); ``poly`` approximates h'_beta.
    """
    w = _check(w, report, poly)
    s = np.asarray(s_draws, dtype=float).ravel()
    if s.shape[0] != n_copies(poly.degree):
        raise DomainError(f"need {n_copies(poly.degree)} kink samples, got {s.shape[0]}")
    inner = report.y_copies * (report.x_copies @ w)
    est = _bernstein_estimate(poly.to_unit((inner - s) / 2.0), poly)
    scale = (loss.d_right - loss.d_left) * est + affine_term(loss)
    return OracleSample(scale * report.y0 * report.x0, report.player_id, certificate)


def affine_term(loss: GenLinLoss) -> float:
    """Constant part of the surrogate derivative.

    d/dt [2 h(t/2) - t/2] = h'(t/2) - 1/2, so the kink part contributes
    -(f'(1) - f'(-1))/2 on top of the linear slope (f'(1) + f'(-1))/2,
    leaving f'(-1).
    """
    return (loss.d_right + loss.d_left) / 2.0 - (loss.d_right - loss.d_left) / 2.0


def plus_reduction_gradient(
    w,
    report: PlayerReport,
    poly: BernsteinPoly,
    certificate: Certificate = NO_CERTIFICATE,
) -> OracleSample:
    """Absolute-value gradient via |t| = 2 max(0, t) - t, ``poly`` approximating h'_beta."""
    w = _check(w, report, poly)
    inner = report.y_copies * (report.x_copies @ w)
    scale = 2.0 * _bernstein_estimate(poly.to_unit(inner), poly) - 1.0
    return OracleSample(scale * report.y0 * report.x0, report.player_id, certificate)


# -- noiseless surrogates -----------------------------------------------------

def hinge_surrogate_gradient(w, x, y, poly: BernsteinPoly) -> np.ndarray:
    """P_d(u(y <w, x>)) y x, the expectation of :func:`hinge_gradient` over noise."""
    x = np.asarray(x, dtype=float)
    return poly.at(y * float(np.dot(w, x))) * y * x


def genlin_surrogate_gradient(w, x, y, poly: BernsteinPoly, loss: GenLinLoss, s) -> np.ndarray:
    """Expectation over noise of :func:`genlin_gradient`, averaged over kinks ``s``."""
    x = np.asarray(x, dtype=float)
    theta = y * float(np.dot(w, x))
    s = np.atleast_1d(np.asarray(s, dtype=float))
    kink = float(np.mean(poly.at((theta - s) / 2.0)))
    return ((loss.d_right - loss.d_left) * kink + affine_term(loss)) * y * x


# -- certification ------------------------------------------------------------

def pilot_batch(
    gradient_fn: Callable[[np.ndarray, int], np.ndarray],
    w,
    n_players: int,
    rng: np.random.Generator,
    size: int = DEFAULT_PILOT_SIZE,
) -> np.ndarray:
    """``size`` oracle draws at ``w`` with players sampled uniformly."""
    ids = rng.integers(0, n_players, size=size)
    return np.stack([np.asarray(gradient_fn(w, int(i)), dtype=float) for i in ids])


def certify(sup_error: float, beta: float, pilot) -> Certificate:
    """(gamma, smoothness, sigma) for the reconstructed oracle.

    gamma bounds |<bias, v - w>| over the unit ball: 2 * sup_error.
    sigma is the pilot root-mean-square deviation, sqrt(E||G - E G||^2).
    """
    pilot = np.atleast_2d(np.asarray(pilot, dtype=float))
    centered = pilot - pilot.mean(axis=0)
    sigma = float(np.sqrt(np.mean(np.sum(centered**2, axis=1))))
    return Certificate(2.0 * float(sup_error), 1.0 / beta, sigma)
