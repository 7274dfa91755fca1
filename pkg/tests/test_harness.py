import csv
import math
from dataclasses import replace

import numpy as np
import pytest

from ldperm.errors import DomainError
from ldperm.harness.baseline import baseline_optimum
from ldperm.harness.config import ConfigError, ExperimentConfig, dump_config, load_config, parse_config
from ldperm.harness.data import Dataset, clip_all, generate_synthetic
from ldperm.harness.experiment import (
    RESULT_COLUMNS,
    NoninteractivityError,
    PlayerPool,
    read_results,
    run_experiment,
    summarize,
)
from ldperm.losses import CATALOG
from ldperm.privacy import NoisePlan


class TestData:
    @pytest.mark.parametrize("kind", ["separable_svm", "logistic_planted", "uniform_ball"])
    def test_bounds(self, kind):
        ds = generate_synthetic(kind, 500, 4, 0.2, seed=1)
        assert ds.xs.shape == (500, 4)
        assert np.all(np.linalg.norm(ds.xs, axis=1) <= 1 + 1e-12)
        assert np.all(np.abs(ds.ys) <= 1)

    def test_margin_and_labels(self):
        ds = generate_synthetic("separable_svm", 1000, 3, 0.3, seed=2)
        rng = np.random.default_rng(2)
        w_star = rng.standard_normal(3)
        w_star /= np.linalg.norm(w_star)
        margins = ds.ys * (ds.xs @ w_star)
        assert np.all(margins >= 0.3)

    def test_reproducible(self):
        a = generate_synthetic("logistic_planted", 50, 2, seed=4)
        b = generate_synthetic("logistic_planted", 50, 2, seed=4)
        np.testing.assert_array_equal(a.xs, b.xs)
        np.testing.assert_array_equal(a.ys, b.ys)

    def test_csv_round_trip(self, tmp_path):
        ds = generate_synthetic("uniform_ball", 30, 3, seed=0)
        ds.to_csv(tmp_path / "d.csv")
        back = Dataset.from_csv(tmp_path / "d.csv")
        np.testing.assert_array_equal(back.xs, ds.xs)
        np.testing.assert_array_equal(back.ys, ds.ys)

    def test_clip_from_csv(self, tmp_path):
        (tmp_path / "raw.csv").write_text("2.0,3.0,4.0\n-0.5,0.1,0.0\n")
        with pytest.raises(DomainError):
            Dataset.from_csv(tmp_path / "raw.csv")
        ds = Dataset.from_csv(tmp_path / "raw.csv", clip=True)
        np.testing.assert_allclose(ds.xs[0], [0.6, 0.8])
        assert ds.ys[0] == 1.0

    def test_clip_all_rejects_nan(self):
        with pytest.raises(DomainError):
            clip_all([[np.nan]], [0.0])

    @pytest.mark.parametrize("kwargs", [dict(kind="nope"), dict(margin=0.6), dict(n=0)])
    def test_validation(self, kwargs):
        args = dict(kind="separable_svm", n=10, p=2, margin=0.1, seed=0) | kwargs
        with pytest.raises(DomainError):
            generate_synthetic(**args)


class TestBaseline:
    @pytest.mark.parametrize("name", ["hinge", "abs", "logistic"])
    def test_against_grid_search(self, name):
        rng = np.random.default_rng(8)
        ds = generate_synthetic("uniform_ball", 20, 2, seed=8)
        ys = np.where(rng.random(20) < 0.5, -1.0, 1.0)
        loss = CATALOG[name]
        step = 0.004
        g = np.arange(-1, 1 + step, step)
        gx, gy = np.meshgrid(g, g)
        pts = np.stack([gx.ravel(), gy.ravel()], axis=1)
        pts = pts[np.linalg.norm(pts, axis=1) <= 1]
        yx = ys[:, None] * ds.xs
        grid_min = float(np.min(np.mean(loss.value(pts @ yx.T), axis=1)))
        res = baseline_optimum(loss, ds.xs, ys, tol=1e-8)
        # grid spacing bounds the grid's own suboptimality by step / sqrt(2) (1-Lipschitz loss)
        assert res.value <= grid_min + 1e-6
        assert res.value >= grid_min - step
        assert np.linalg.norm(res.w) <= 1 + 1e-12

    def test_separable_hinge_small(self):
        ds = generate_synthetic("separable_svm", 500, 3, 0.3, seed=0)
        res = baseline_optimum(CATALOG["hinge"], ds.xs, ds.ys)
        assert res.converged and not res.warning
        assert res.value < 0.2

    def test_iteration_cap(self):
        ds = generate_synthetic("logistic_planted", 100, 3, seed=0)
        res = baseline_optimum(CATALOG["logistic"], ds.xs, ds.ys, tol=1e-14, max_iter=250)
        assert res.iterations == 250 and res.warning

    def test_bad_tol(self):
        with pytest.raises(ValueError):
            baseline_optimum(CATALOG["hinge"], np.zeros((1, 1)), np.ones(1), tol=0)


def small_cfg(tmp_path, **kw):
    base = dict(
        loss="hinge", n=300, p=3, epsilon=None, mode="zero", degree=8, seeds=[0, 1],
        out_dir=str(tmp_path / "out"), margin=0.3,
    )
    base.update(kw)
    return ExperimentConfig(**base)


class TestConfig:
    def test_parse(self):
        cfg, supplied = parse_config("loss = abs  # comment\nn: 500\nseeds = 1, 2,3\ntheory = true\nalpha = 1\n")
        assert cfg.loss == "abs" and cfg.n == 500 and cfg.seeds == [1, 2, 3] and cfg.theory
        assert supplied == {"loss", "n", "seeds", "theory", "alpha"}

    def test_unknown_key_and_bad_value(self):
        with pytest.raises(ConfigError) as info:
            parse_config("lossy = hinge\nn = many\njunk line\n")
        assert len(info.value.problems) == 3

    def test_validation_lists_every_problem(self):
        cfg = ExperimentConfig(loss="huber", n=0, epsilon=-1.0, delta=2.0, degree=None, seeds=[])
        with pytest.raises(ConfigError) as info:
            cfg.validate()
        text = "\n".join(info.value.problems)
        for key in ("loss", "n:", "epsilon", "delta", "degree", "seeds"):
            assert key in text

    def test_zero_mode_with_epsilon(self, tmp_path):
        with pytest.raises(ConfigError, match="zero-noise"):
            small_cfg(tmp_path, epsilon=1.0).validate()

    def test_pipeline_compatibility(self, tmp_path):
        with pytest.raises(ConfigError):
            small_cfg(tmp_path, pipeline="reduction").validate()
        assert small_cfg(tmp_path, loss="abs", pipeline="reduction").validate().resolved_pipeline == "reduction"
        assert small_cfg(tmp_path, loss="logistic").resolved_pipeline == "genlin"

    def test_beta_resolution(self, tmp_path):
        assert small_cfg(tmp_path).smoothing_beta == 0.25
        assert small_cfg(tmp_path, alpha=0.4).smoothing_beta == pytest.approx(0.1)
        assert small_cfg(tmp_path, alpha=0.4, beta=0.3).smoothing_beta == 0.3

    def test_dump_round_trip(self, tmp_path):
        cfg = small_cfg(tmp_path, mode="calibrated", epsilon=2.0)
        path = tmp_path / "c.cfg"
        path.write_text(dump_config(cfg))
        assert load_config(path) == cfg


class TestPool:
    def test_audit_and_noninteractivity(self):
        ds = generate_synthetic("separable_svm", 20, 2, 0.1, seed=0)
        pool = PlayerPool(ds)
        reports = pool.randomize_all(NoisePlan.noiseless(), 2, 0)
        assert len(reports) == 20
        with pytest.raises(NoninteractivityError):
            pool.randomize_all(NoisePlan.noiseless(), 2, 0)
        pool.seal()
        with pytest.raises(NoninteractivityError):
            pool.randomize_all(NoisePlan.noiseless(), 2, 0)
        audit = pool.audit()
        assert audit["each_player_read_once"] and audit["randomized_before_server"]


class TestExperiment:
    def test_zero_noise_learns(self, tmp_path):
        res = run_experiment(small_cfg(tmp_path, degree=32, n=1000, iterations=3000))
        assert res.median_excess_risk < 0.05
        assert res.epsilon == math.inf
        for rep in res.replications:
            assert rep.audit["each_player_read_once"] and rep.audit["randomized_before_server"]
            assert rep.certificate.gamma == pytest.approx(2 * res.sup_error)

    def test_huge_epsilon_matches_zero_noise(self, tmp_path):
        zero = run_experiment(small_cfg(tmp_path, iterations=2000), write=False)
        loud = run_experiment(
            small_cfg(tmp_path, mode="calibrated", epsilon=1e6, iterations=2000), write=False
        )
        assert abs(zero.median_excess_risk - loud.median_excess_risk) < 0.02

    def test_csv_layout(self, tmp_path):
        cfg = small_cfg(tmp_path, mode="calibrated", epsilon=4.0, degree=2)
        run_experiment(cfg)
        path = tmp_path / "out" / "results.csv"
        with open(path, newline="") as fh:
            header = next(csv.reader(fh))
        assert tuple(header) == RESULT_COLUMNS
        rows = read_results(path)
        assert [r["seed"] for r in rows] == ["0", "1"]
        summary = summarize(rows)
        assert len(summary) == 1 and summary[0]["runs"] == 2

    @pytest.mark.parametrize("loss,pipeline", [("abs", "genlin"), ("abs", "reduction"), ("logistic", "auto")])
    def test_other_pipelines_run(self, tmp_path, loss, pipeline):
        cfg = small_cfg(tmp_path, loss=loss, pipeline=pipeline, degree=4, iterations=1000)
        res = run_experiment(cfg, write=False)
        assert np.all(np.isfinite(res.excess_risks))
        assert np.all(res.excess_risks > -1e-3)

    def test_rerun_is_identical(self, tmp_path):
        cfg = small_cfg(tmp_path, mode="calibrated", epsilon=2.0, degree=3, loss="logistic")
        a = [{k: v for k, v in r.items() if k != "wall_ms"} for r in run_experiment(cfg, write=False).rows()]
        b = [{k: v for k, v in r.items() if k != "wall_ms"} for r in run_experiment(cfg, write=False).rows()]
        assert a == b

    def test_theory_degree(self, tmp_path):
        cfg = small_cfg(tmp_path, degree=None, theory=True, alpha=1.0, seeds=[0], iterations=50)
        assert run_experiment(cfg, write=False).degree == 32

    def test_dataset_file(self, tmp_path):
        ds = generate_synthetic("separable_svm", 100, 2, 0.2, seed=3)
        ds.to_csv(tmp_path / "d.csv")
        cfg = small_cfg(tmp_path, dataset=str(tmp_path / "d.csv"), n=100, p=2, seeds=[0])
        res = run_experiment(cfg, write=False)
        assert res.n == 100 and res.p == 2

    def test_different_seeds_differ(self, tmp_path):
        res = run_experiment(small_cfg(tmp_path, mode="calibrated", epsilon=50.0, degree=1, iterations=200), write=False)
        assert not np.array_equal(res.replications[0].w, res.replications[1].w)

    def test_replace_keeps_validation(self, tmp_path):
        cfg = replace(small_cfg(tmp_path), degree=0)
        with pytest.raises(ConfigError):
            run_experiment(cfg)

    def test_abs_pipelines_agree_without_noise(self, tmp_path):
        common = dict(loss="abs", n=1000, degree=16, iterations=3000, seeds=[0, 1, 2])
        general = run_experiment(small_cfg(tmp_path, pipeline="genlin", **common), write=False)
        reduced = run_experiment(small_cfg(tmp_path, pipeline="reduction", **common), write=False)
        assert abs(general.median_excess_risk - reduced.median_excess_risk) <= 0.05
        assert general.median_excess_risk < 0.1
