"""End-to-end private training runs and their result files."""

from __future__ import annotations

import csv
import logging
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ldperm.approx import SmoothingParams, build_derivative_poly
from ldperm.harness.baseline import BaselineResult, baseline_optimum
from ldperm.harness.config import ExperimentConfig
from ldperm.harness.data import GENERATORS, Dataset, clip_all, generate_synthetic
from ldperm.losses import eval_empirical_risk, get_loss, sample_q
from ldperm.oracle import (
    Certificate,
    certify,
    genlin_gradient,
    hinge_gradient,
    pilot_batch,
    plus_reduction_gradient,
)
from ldperm.privacy import (
    NoisePlan,
    PlayerReport,
    PrivacyBudget,
    n_copies,
    plan_noise,
    player_stream,
    randomize_player,
)
from ldperm.solver import SolverConfig, run_sigm

log = logging.getLogger(__name__)

RESULT_COLUMNS = (
    "loss",
    "epsilon",
    "delta",
    "degree",
    "n",
    "p",
    "seed",
    "excess_risk",
    "baseline_value",
    "wall_ms",
)
PILOT_RADIUS = 0.5
KINK_BLOCK = 1024


class NoninteractivityError(RuntimeError):
    pass


class PlayerPool:
    """Holds raw records on the player side and hands out one report per player.

    Every release is logged; once :meth:`seal` is called (the server has
    started) no further reports can be produced.
    """

    def __init__(self, dataset: Dataset):
        self._xs = dataset.xs
        self._ys = dataset.ys
        self.reads = np.zeros(dataset.n, dtype=int)
        self.events: list[tuple] = []
        self.sealed = False

    def randomize_all(self, plan: NoisePlan, d: int, master_seed: int) -> list[PlayerReport]:
        if self.sealed:
            raise NoninteractivityError("server already started; players cannot be queried again")
        if np.any(self.reads):
            raise NoninteractivityError("players were already randomized in this experiment")
        reports = []
        for i in range(self.reads.shape[0]):
            self.reads[i] += 1
            reports.append(
                randomize_player(self._xs[i], self._ys[i], plan, d, player_stream(master_seed, i), i)
            )
        self.events.append(("randomize", int(self.reads.shape[0])))
        return reports

    def seal(self) -> None:
        self.sealed = True
        self.events.append(("server_start",))

    def audit(self) -> dict:
        order = [e[0] for e in self.events]
        return {
            "each_player_read_once": bool(np.all(self.reads == 1)),
            "randomized_before_server": order == ["randomize", "server_start"],
            "events": list(self.events),
        }


@dataclass
class Replication:
    seed: int
    excess_risk: float
    private_value: float
    w: np.ndarray
    certificate: Certificate
    wall_ms: int
    audit: dict


@dataclass
class ExperimentResult:
    loss: str
    epsilon: float
    delta: float
    mode: str
    degree: int
    n: int
    p: int
    baseline_value: float
    sup_error: float
    replications: list[Replication] = field(default_factory=list)
    plan: NoisePlan | None = None

    @property
    def seeds(self) -> list[int]:
        return [r.seed for r in self.replications]

    @property
    def excess_risks(self) -> np.ndarray:
        return np.array([r.excess_risk for r in self.replications])

    @property
    def median_excess_risk(self) -> float:
        return float(np.median(self.excess_risks))

    def rows(self) -> list[dict]:
        return [
            {
                "loss": self.loss,
                "epsilon": repr(float(self.epsilon)),
                "delta": repr(float(self.delta)),
                "degree": self.degree,
                "n": self.n,
                "p": self.p,
                "seed": r.seed,
                "excess_risk": repr(float(r.excess_risk)),
                "baseline_value": repr(float(self.baseline_value)),
                "wall_ms": r.wall_ms,
            }
            for r in self.replications
        ]

    def write_csv(self, path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=RESULT_COLUMNS)
            writer.writeheader()
            writer.writerows(self.rows())


def load_dataset(cfg: ExperimentConfig) -> Dataset:
    """Generate or read the dataset, then clip every record into bounds."""
    if cfg.dataset in GENERATORS:
        raw = generate_synthetic(cfg.dataset, cfg.n, cfg.p, cfg.margin, cfg.data_seed)
    else:
        raw = Dataset.from_csv(cfg.dataset, clip=True)
    xs, ys = clip_all(raw.xs, raw.ys)
    return Dataset(xs, ys, raw.provenance)


def resolve_degree(cfg: ExperimentConfig) -> int:
    if cfg.theory:
        return SmoothingParams.from_alpha(cfg.alpha).degree()
    return int(cfg.degree)


def make_plan(cfg: ExperimentConfig, d: int) -> NoisePlan:
    if cfg.privacy_mode == "zero":
        return NoisePlan.noiseless()
    return plan_noise(PrivacyBudget(cfg.epsilon, cfg.delta, cfg.privacy_mode), d)


def _gradient_source(cfg, reports, poly, seed):
    """Per-iteration oracle closure over the (already released) reports."""
    pipeline = cfg.resolved_pipeline
    if pipeline == "hinge":
        return lambda w, i: hinge_gradient(w, reports[i], poly).gradient
    if pipeline == "reduction":
        return lambda w, i: plus_reduction_gradient(w, reports[i], poly).gradient
    loss = get_loss(cfg.loss)
    m = n_copies(poly.degree)
    kink_rng = np.random.default_rng([seed, 2])
    if loss.is_affine:
        zeros = np.zeros(m)
        return lambda w, i: genlin_gradient(w, reports[i], poly, loss, zeros).gradient

    # kinks do not depend on w, so draw them in blocks to amortize the bisection
    buffer = iter(())

    def oracle(w, i):
        nonlocal buffer
        s = next(buffer, None)
        if s is None:
            buffer = iter(sample_q(loss, kink_rng.random((KINK_BLOCK, m))))
            s = next(buffer)
        return genlin_gradient(w, reports[i], poly, loss, s).gradient

    return oracle


def run_replication(
    cfg: ExperimentConfig,
    dataset: Dataset,
    baseline: BaselineResult,
    seed: int,
    d: int,
    plan: NoisePlan,
) -> tuple[Replication, float]:
    start = time.perf_counter()
    loss = get_loss(cfg.loss)
    pool = PlayerPool(dataset)
    reports = pool.randomize_all(plan, d, master_seed=seed)
    pool.seal()

    kind = "hinge" if cfg.resolved_pipeline == "hinge" else "plus"
    poly = build_derivative_poly(
        kind,
        SmoothingParams(cfg.smoothing_beta, degree_override=d),
        ceiling=cfg.degree_ceiling,
    )
    grad = _gradient_source(cfg, reports, poly, seed)

    pilot_rng = np.random.default_rng([seed, 1])
    direction = pilot_rng.standard_normal(dataset.p)
    w_pilot = PILOT_RADIUS * direction / np.linalg.norm(direction)
    pilot = pilot_batch(grad, w_pilot, dataset.n, pilot_rng, cfg.pilot_size)
    cert = certify(poly.sup_error, cfg.smoothing_beta, pilot)
    sigma_hat = cert.sigma_bound if cert.sigma_bound > 0 else 1.0

    solver_cfg = SolverConfig(
        iterations=cfg.iterations or dataset.n,
        step_rule="inv_sqrt",
        step_scale=cfg.step_scale,
        averaging=cfg.averaging,
        seed=seed,
    )
    w_out, _ = run_sigm(grad, solver_cfg, dataset.n, dataset.p, sigma_hat)
    value = eval_empirical_risk(loss, w_out, dataset.xs, dataset.ys)
    wall_ms = int(round((time.perf_counter() - start) * 1000))
    rep = Replication(seed, value - baseline.value, value, w_out, cert, wall_ms, pool.audit())
    return rep, poly.sup_error


def run_experiment(cfg: ExperimentConfig, write: bool = True) -> ExperimentResult:
    """Clip, plan noise, randomize once, fit, and score every seed in ``cfg``."""
    cfg.validate()
    dataset = load_dataset(cfg)
    loss = get_loss(cfg.loss)
    d = resolve_degree(cfg)
    plan = make_plan(cfg, d)
    for msg in plan.warnings:
        log.warning(msg)
    baseline = baseline_optimum(loss, dataset.xs, dataset.ys, tol=cfg.baseline_tol)
    if baseline.warning:
        log.warning("baseline did not converge within %d iterations", baseline.iterations)

    result = ExperimentResult(
        loss=cfg.loss,
        epsilon=math.inf if cfg.privacy_mode == "zero" else float(cfg.epsilon),
        delta=cfg.delta,
        mode=cfg.privacy_mode,
        degree=d,
        n=dataset.n,
        p=dataset.p,
        baseline_value=baseline.value,
        sup_error=math.nan,
        plan=plan,
    )
    for seed in cfg.seeds:
        rep, sup_error = run_replication(cfg, dataset, baseline, seed, d, plan)
        result.sup_error = sup_error
        result.replications.append(rep)
        log.info("seed %d: excess risk %.5f", seed, rep.excess_risk)
    if write:
        result.write_csv(Path(cfg.out_dir) / "results.csv")
    return result


def read_results(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def summarize(rows: list[dict]) -> list[dict]:
    """Median excess risk per (loss, epsilon, delta, degree, n, p) group."""
    groups: dict[tuple, list[float]] = {}
    for row in rows:
        key = tuple(row[c] for c in RESULT_COLUMNS[:6])
        groups.setdefault(key, []).append(float(row["excess_risk"]))
    out = []
    for key, vals in groups.items():
        entry = dict(zip(RESULT_COLUMNS[:6], key))
        entry.update(runs=len(vals), median_excess_risk=float(np.median(vals)))
        out.append(entry)
    return out
