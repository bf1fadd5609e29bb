import math

import numpy as np
import pytest

from plapreg.evaluation import (
    EvalReport,
    FoldSpec,
    GraphConfig,
    KOutOfRange,
    LengthMismatch,
    ZeroDenominator,
    asymptotic_study,
    fold_spec_for_training_pct,
    make_folds,
    optima_csv,
    repeat_seed,
    reports_csv,
    rmse_percent,
    run_baseline_eval,
    run_plaplace_eval,
    sweep,
)
from plapreg.plaplace import SolverConfig
from plapreg.synth import GaussianBlobs, LinearCombo, SynthSpec, generate


class TestRmsePercent:
    def test_exact_prediction_is_zero(self):
        y = np.array([1.0, 2.0, 3.0])
        assert rmse_percent(y, y) == 0.0

    def test_uniform_relative_error(self):
        assert rmse_percent(np.array([2.0, 2.0, 2.0, 2.0]), np.array([3.0, 3.0, 3.0, 3.0])) == pytest.approx(50.0, abs=1e-12)

    def test_zero_prediction_of_pythagorean_pair(self):
        assert rmse_percent(np.array([3.0, 4.0]), np.array([0.0, 0.0])) == pytest.approx(100.0, abs=1e-12)

    def test_scale_invariance(self):
        rng = np.random.default_rng(151)
        y = rng.uniform(1, 5, size=20)
        yhat = y + rng.normal(size=20)
        base = rmse_percent(y, yhat)
        assert rmse_percent(13.7 * y, 13.7 * yhat) == pytest.approx(base, rel=1e-12)

    def test_proportional_prediction(self):
        rng = np.random.default_rng(157)
        y = rng.uniform(1, 5, size=30)
        for a in (0.0, 0.4, 1.0, 2.6):
            assert rmse_percent(y, a * y) == pytest.approx(100.0 * abs(1 - a), abs=1e-10)

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            rmse_percent(np.ones(3), np.ones(4))
        with pytest.raises(LengthMismatch):
            rmse_percent(np.ones(0), np.ones(0))

    def test_zero_denominator(self):
        with pytest.raises(ZeroDenominator):
            rmse_percent(np.zeros(3), np.ones(3))


class TestFolds:
    def test_modified_515_by_10(self):
        plan = make_folds(515, 10, "modified", seed=0)
        train_sizes = sorted({len(tr) for tr, _ in plan.rotations()})
        test_sizes = sorted({len(te) for _, te in plan.rotations()})
        assert train_sizes == [51, 52]
        assert test_sizes == [463, 464]

    def test_standard_10_by_5(self):
        plan = make_folds(10, 5, "standard", seed=1)
        for train, test in plan.rotations():
            assert len(test) == 2 and len(train) == 8

    def test_same_seed_identical(self):
        a = make_folds(100, 7, "standard", seed=99)
        b = make_folds(100, 7, "standard", seed=99)
        np.testing.assert_array_equal(a.assignments, b.assignments)

    def test_exhaustive_and_disjoint(self):
        plan = make_folds(53, 4, "standard", seed=3)
        all_test = np.concatenate([te for _, te in plan.rotations()])
        assert sorted(all_test.tolist()) == list(range(53))
        for train, test in plan.rotations():
            assert not set(train) & set(test)
            assert len(train) + len(test) == 53

    def test_fold_sizes_differ_by_at_most_one(self):
        plan = make_folds(47, 6, "modified", seed=5)
        sizes = [np.sum(plan.assignments == f) for f in range(6)]
        assert max(sizes) - min(sizes) <= 1

    def test_modified_swaps_roles_of_standard(self):
        std = make_folds(30, 2, "standard", seed=8)
        mod = make_folds(30, 2, "modified", seed=8)
        np.testing.assert_array_equal(std.assignments, mod.assignments)
        std_rot = list(std.rotations())
        mod_rot = list(mod.rotations())
        for (s_train, s_test), (m_train, m_test) in zip(std_rot, mod_rot):
            np.testing.assert_array_equal(s_train, m_test)
            np.testing.assert_array_equal(s_test, m_train)

    def test_k_out_of_range(self):
        with pytest.raises(KOutOfRange):
            make_folds(10, 1, "standard", seed=0)
        with pytest.raises(KOutOfRange):
            make_folds(10, 11, "standard", seed=0)

    def test_training_pct_mapping(self):
        expected = {80: (5, "standard"), 50: (2, "modified"), 33: (3, "modified"),
                    25: (4, "modified"), 20: (5, "modified"), 10: (10, "modified"), 5: (20, "modified")}
        for pct, (k, mode) in expected.items():
            spec = fold_spec_for_training_pct(pct)
            assert (spec.k, spec.mode) == (k, mode)

    def test_modified_training_fraction_is_one_over_k_within_one_row(self):
        n = 515
        for pct in (5, 10, 20, 25, 33, 50):
            spec = fold_spec_for_training_pct(pct)
            plan = make_folds(n, spec.k, spec.mode, seed=0)
            for train, _ in plan.rotations():
                assert abs(len(train) - n / spec.k) <= 1.0

    def test_repeat_seed_deterministic_and_distinct(self):
        assert repeat_seed(7, 0) == repeat_seed(7, 0)
        seeds = {repeat_seed(7, r) for r in range(50)}
        assert len(seeds) == 50


def smooth_table(n=120, dim=5, noise=0.05, seed=23):
    return generate(SynthSpec(n=n, dim=dim, noise_sd=noise, seed=seed))


class TestPlaplaceEval:
    def test_entry_count_matches_repeats_times_folds(self):
        t = smooth_table()
        report = run_plaplace_eval(
            t, "target", GraphConfig(k=8), SolverConfig(p=3.0),
            FoldSpec(k=5, mode="standard"), repeats=10, seed=0,
        )
        assert report.rmse.shape == (10, 5)
        assert np.isfinite(report.rmse).sum() == 50

    def test_constant_target_gives_zero_rmse(self):
        t = smooth_table(n=60)
        t.targets["target"][:] = 3.0
        report = run_plaplace_eval(
            t, "target", GraphConfig(k=6), SolverConfig(p=2.0),
            FoldSpec(k=4, mode="modified"), repeats=2, seed=1,
        )
        np.testing.assert_allclose(report.rmse, 0.0, atol=1e-10)

    def test_mean_std_recomputable(self):
        t = smooth_table()
        report = run_plaplace_eval(
            t, "target", GraphConfig(k=8), SolverConfig(p=2.5),
            FoldSpec(k=3, mode="modified"), repeats=3, seed=4,
        )
        finite = report.rmse[np.isfinite(report.rmse)]
        assert report.rmse_mean == pytest.approx(finite.mean(), abs=1e-12)
        assert report.rmse_std == pytest.approx(finite.std(), abs=1e-12)

    def test_bit_reproducible(self):
        t = smooth_table(n=80)
        args = (t, "target", GraphConfig(k=6), SolverConfig(p=4.0), FoldSpec(k=5, mode="modified"))
        r1 = run_plaplace_eval(*args, repeats=2, seed=11)
        r2 = run_plaplace_eval(*args, repeats=2, seed=11)
        np.testing.assert_array_equal(r1.rmse, r2.rmse)

    def test_disconnected_fold_recorded_and_skipped(self):
        centers = np.zeros((2, 4))
        centers[1, 0] = 200.0
        t = generate(SynthSpec(n=60, dim=4, structure=GaussianBlobs(centers=centers), seed=29))
        report = run_plaplace_eval(
            t, "target", GraphConfig(k=3), SolverConfig(p=2.0),
            FoldSpec(k=20, mode="modified"), repeats=1, seed=2,
        )
        assert report.fold_errors  # some training folds sit inside one blob
        assert report.valid  # but not all of them
        assert np.isnan(report.rmse).sum() == len(report.fold_errors)


class TestBaselineEval:
    def test_ridge_on_noiseless_linear_data(self):
        t = generate(SynthSpec(n=100, dim=4, target_fn=LinearCombo(), noise_sd=0.0, seed=31))
        report = run_baseline_eval(
            t, "target", {"model": "ridge", "lambda": 1e-9, "degree": 1},
            FoldSpec(k=5, mode="standard"), repeats=2, seed=0,
        )
        assert report.rmse_mean <= 0.1

    def test_constant_target_zero_rmse(self):
        t = smooth_table(n=50)
        t.targets["target"][:] = 2.5
        report = run_baseline_eval(
            t, "target", {"model": "ridge", "lambda": 1.0},
            FoldSpec(k=5, mode="standard"), repeats=1, seed=0,
        )
        assert report.rmse_mean <= 1e-9

    def test_entry_count(self):
        t = smooth_table(n=60)
        report = run_baseline_eval(
            t, "target", {"model": "lssvr", "gamma": 0.01, "c": 100.0},
            FoldSpec(k=5, mode="standard"), repeats=10, seed=0,
        )
        assert np.isfinite(report.rmse).sum() == 50

    def test_polyridge_params_recorded(self):
        t = smooth_table(n=40, dim=3)
        report = run_baseline_eval(
            t, "target", {"model": "polyridge", "degree": 2, "lambda": 0.5},
            FoldSpec(k=4, mode="standard"), repeats=1, seed=0,
        )
        assert report.params == {"lambda": 0.5, "degree": 2}
        assert report.valid


class TestSweep:
    def test_single_cell_grid(self):
        t = smooth_table(n=70)
        result = sweep(t, "target", p_grid=(3.0,), k_grid=(6,), training_pcts=(50.0,), repeats=2, seed=5)
        assert len(result.reports) == 1
        assert len(result.optima) == 1
        opt = result.optima[0]
        assert (opt.p, opt.k) == (3.0, 6)
        assert opt.rmse_mean == pytest.approx(result.reports[0].rmse_mean)

    def test_one_report_per_cell_and_optima_per_pct(self):
        t = smooth_table(n=70)
        result = sweep(
            t, "target", p_grid=(2.0, 4.0), k_grid=(5, 8), training_pcts=(20.0, 50.0), repeats=1, seed=6
        )
        assert len(result.reports) == 2 * 2 * 2
        assert [o.training_pct for o in result.optima] == [20.0, 50.0]
        for o in result.optima:
            cells = [r for r in result.reports if r.training_pct == o.training_pct]
            assert o.rmse_mean == min(r.rmse_mean for r in cells)

    def test_invalid_report_excluded_from_optima(self):
        empty = EvalReport(
            target="t", dataset="d", model="plaplace", params={"p": 2.0, "k": 3},
            training_pct=5.0, rmse=np.full((1, 2), np.nan), rmse_mean=float("nan"),
            rmse_std=float("nan"), nonconverged_count=0,
        )
        assert not empty.valid


class TestAsymptotic:
    def test_constant_labels_zero_everywhere(self):
        t = smooth_table(n=50)
        t.targets["target"][:] = 4.0
        series = asymptotic_study(t, "target", k_list=(5,), p_list=(2.0, math.inf), repeats=1, seed=0)
        assert len(series) == 1
        np.testing.assert_allclose(series[0].rmse_mean, 0.0, atol=1e-9)
        assert series[0].converged

    def test_one_series_per_k(self):
        t = smooth_table(n=60)
        series = asymptotic_study(t, "target", k_list=(5, 9), p_list=(2.0, 10.0, math.inf), repeats=1, seed=1)
        assert [s.k for s in series] == [5, 9]
        for s in series:
            assert s.rmse_mean.shape == (3,)

    def test_p_list_must_end_with_inf(self):
        t = smooth_table(n=40)
        with pytest.raises(ValueError):
            asymptotic_study(t, "target", k_list=(5,), p_list=(2.0, 10.0), repeats=1, seed=0)


class TestReportSerialization:
    def test_csv_columns_and_blanks(self):
        t = smooth_table(n=50)
        plap = run_plaplace_eval(
            t, "target", GraphConfig(k=5), SolverConfig(p=math.inf),
            FoldSpec(k=2, mode="modified"), repeats=1, seed=0,
        )
        base = run_baseline_eval(
            t, "target", {"model": "lssvr", "gamma": 0.001, "c": 10.0},
            FoldSpec(k=2, mode="standard"), repeats=1, seed=0,
        )
        text = reports_csv([plap, base])
        lines = text.strip().split("\n")
        assert lines[0] == "target,dataset,model,p,k,gamma,c,lambda,degree,training_pct,rmse_mean,rmse_std,nonconverged_count"
        assert lines[1].split(",")[3] == "inf"
        assert lines[2].split(",")[3] == ""  # no p for lssvr

    def test_to_dict_handles_nan(self):
        report = EvalReport(
            target="t", dataset="d", model="plaplace", params={"p": 2.0, "k": 3},
            training_pct=5.0, rmse=np.array([[1.0, np.nan]]), rmse_mean=1.0,
            rmse_std=0.0, nonconverged_count=1, fold_errors=["repeat 0 fold 1: oops"],
        )
        d = report.to_dict()
        assert d["rmse"] == [[1.0, None]]
        assert d["nonconverged_count"] == 1

    def test_optima_csv_shape(self):
        t = smooth_table(n=60)
        result = sweep(t, "target", p_grid=(2.0,), k_grid=(5,), training_pcts=(50.0, 25.0), repeats=1, seed=2)
        lines = optima_csv(result.optima).strip().split("\n")
        assert lines[0] == "training_pct,best_p,best_k,rmse_mean"
        assert len(lines) == 3
