"""Tests for the sweep driver: spec validation, aggregation, overlays,
thread invariance, the regularization comparison, and the weak-features
table."""

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from advreg.adversarial import AdversarialBudget
from advreg.csvio import render_table
from advreg.datamodels import EquicorrelatedModel, IsotropicModel, LatentModel, Scaling
from advreg.norms import INF
from advreg.sweeps import (
    ROW_COLUMNS,
    EstimatorSpec,
    SweepSpec,
    run_regularization_comparison,
    run_sweep,
    run_weak_features,
)

ISO = IsotropicModel(m=8, r2=2.0, sigma2=1.0)


class TestEstimatorSpec:
    def test_rejects_unknown_kind(self):
        with pytest.raises(ValueError, match="unknown estimator kind"):
            EstimatorSpec("ols")

    def test_rejects_negative_delta(self):
        with pytest.raises(ValueError, match="nonnegative"):
            EstimatorSpec("ridge", -0.1)

    def test_labels_name_kind_and_penalty(self):
        assert EstimatorSpec("min_norm").label() == "min_norm"
        assert EstimatorSpec("ridge", 0.5).label() == "ridge(delta=0.5)"
        assert EstimatorSpec("advtrain", 0.1, INF).label() == "advtrain_linf(delta=0.1)"
        assert EstimatorSpec("advtrain", 0.1, 2).label() == "advtrain_l2(delta=0.1)"

    def test_from_obj_shorthand(self):
        assert EstimatorSpec.from_obj("ridge:0.5") == EstimatorSpec("ridge", 0.5)
        assert EstimatorSpec.from_obj("min_norm") == EstimatorSpec("min_norm")
        assert EstimatorSpec.from_obj("advtrain:2:0.1") == EstimatorSpec("advtrain", 0.1, 2)
        assert EstimatorSpec.from_obj("advtrain") == EstimatorSpec("advtrain", 0.0, INF)
        spec = EstimatorSpec("lasso", 0.2)
        assert EstimatorSpec.from_obj(spec) is spec

    def test_from_obj_dict_round_trip(self):
        spec = EstimatorSpec("advtrain", 0.25, INF)
        assert EstimatorSpec.from_obj(spec.to_dict()) == spec
        with pytest.raises(ValueError, match="unknown fields"):
            EstimatorSpec.from_obj({"kind": "ridge", "alpha": 1.0})
        with pytest.raises(ValueError, match="missing field 'kind'"):
            EstimatorSpec.from_obj({"delta": 1.0})

    def test_from_obj_rejects_overlong_shorthand(self):
        with pytest.raises(ValueError, match="too many fields"):
            EstimatorSpec.from_obj("ridge:0.5:2")


class TestSweepSpec:
    def test_validation(self):
        with pytest.raises(ValueError, match="n must be"):
            SweepSpec(ISO, 0, (0.5,))
        with pytest.raises(ValueError, match="gamma_grid must be non-empty"):
            SweepSpec(ISO, 10, ())
        with pytest.raises(ValueError, match="positive and finite"):
            SweepSpec(ISO, 10, (-1.0,))
        with pytest.raises(ValueError, match="labels must be unique"):
            SweepSpec(ISO, 10, (0.5,), estimators=("ridge:0.5", "ridge:0.5"))
        with pytest.raises(ValueError, match="replicates"):
            SweepSpec(ISO, 10, (0.5,), replicates=0)
        with pytest.raises(ValueError, match="unknown fields"):
            SweepSpec(ISO, 10, (0.5,), budgets=({"delta": 1.0, "q": 2},))

    def test_dict_round_trip(self):
        spec = SweepSpec(
            EquicorrelatedModel(m=12, r2=4.0, sigma2=1.0, rho=0.5, scaling=Scaling.SQRT_LOG),
            n=30,
            gamma_grid=(0.5, 2.0),
            estimators=(EstimatorSpec("min_norm"), EstimatorSpec("advtrain", 0.1, 2)),
            budgets=(AdversarialBudget(0.0, 2), AdversarialBudget(1.0, INF)),
            replicates=3,
            seed=9,
            mc_samples=100,
        )
        again = SweepSpec.from_dict(spec.to_dict())
        assert again == spec
        assert again.to_dict() == spec.to_dict()

    def test_from_dict_reports_field_paths(self):
        good = SweepSpec(ISO, 10, (0.5,)).to_dict()
        with pytest.raises(ValueError, match="unknown fields \\['bogus'\\]"):
            SweepSpec.from_dict({**good, "bogus": 1})
        with pytest.raises(ValueError, match="missing field 'gamma_grid'"):
            SweepSpec.from_dict({k: v for k, v in good.items() if k != "gamma_grid"})
        with pytest.raises(ValueError, match="field 'model'"):
            SweepSpec.from_dict({**good, "model": {"family": "isotropic"}})
        with pytest.raises(ValueError, match="sweep config must be a mapping"):
            SweepSpec.from_dict([good])


class TestRunSweep:
    def test_zero_budget_rows_match_standard_risk_exactly(self):
        spec = SweepSpec(ISO, n=20, gamma_grid=(0.5, 2.0), replicates=3, seed=1)
        result = run_sweep(spec, threads=1)
        assert result.rows and all(r.delta == 0.0 for r in result.rows)
        for row in result.rows:
            assert row.adv_risk_median == row.standard_risk_median
            assert row.bound_lower_median == row.adv_risk_median
            assert row.bound_upper_median == row.adv_risk_median
        assert result.max_sandwich_violation == 0.0

    def test_gamma_one_is_skipped_with_note(self):
        spec = SweepSpec(ISO, n=20, gamma_grid=(0.5, 1.0, 2.0), replicates=2, seed=1)
        result = run_sweep(spec, threads=1)
        assert sorted({r.gamma for r in result.rows}) == [0.5, 2.0]
        assert any("gamma=1 skipped" in note for note in result.notes)

    def test_m_rounding_to_zero_is_an_error(self):
        with pytest.raises(ValueError, match="m=0 < 1"):
            run_sweep(SweepSpec(ISO, n=4, gamma_grid=(0.05,), replicates=1), threads=1)

    def test_bounds_sandwich_the_exact_risk(self):
        spec = SweepSpec(
            ISO,
            n=20,
            gamma_grid=(0.5, 2.0, 4.0),
            budgets=(AdversarialBudget(0.5, 2), AdversarialBudget(0.2, INF)),
            replicates=3,
            seed=3,
        )
        result = run_sweep(spec, threads=1)
        assert result.max_sandwich_violation <= 1e-9
        for row in result.rows:
            assert row.bound_lower_median <= row.adv_risk_median + 1e-12
            assert row.n_ok == 3

    def test_asymptotic_overlay_matches_closed_form(self):
        # Ratio-0.5 fits of 1 feature per 2 observations: the limiting total
        # risk is sigma2 / (1 - gamma) = 2 and the limiting squared l2 norm
        # is r2 + sigma2 * gamma / (1 - gamma) = 3.
        spec = SweepSpec(
            ISO,
            n=40,
            gamma_grid=(0.5,),
            estimators=(EstimatorSpec("min_norm"), EstimatorSpec("ridge", 0.5)),
            budgets=(AdversarialBudget(0.0, 2), AdversarialBudget(1.0, 2)),
            replicates=2,
            seed=5,
        )
        rows = run_sweep(spec, threads=1).rows
        minnorm = [r for r in rows if r.estimator == "min_norm"]
        assert len(minnorm) == 2
        for row in minnorm:
            assert_allclose(row.asym_risk, 2.0, rtol=1e-12)
            assert_allclose(row.asym_norm_l2_sq, 3.0, rtol=1e-12)
        zero, one = (r for r in minnorm if r.delta == 0.0), (r for r in minnorm if r.delta == 1.0)
        (zero,), (one,) = zero, one
        assert zero.asym_lower == zero.asym_upper == zero.asym_risk
        assert_allclose(one.asym_lower, 2.0 + 3.0, rtol=1e-12)
        assert_allclose(one.asym_upper, (math.sqrt(2.0) + math.sqrt(3.0)) ** 2, rtol=1e-12)
        for row in rows:
            if row.estimator != "min_norm":
                assert math.isnan(row.asym_risk)

    def test_overlay_scales_norm_with_eta(self):
        model = IsotropicModel(m=8, r2=2.0, sigma2=1.0, scaling=Scaling.SQRT_M)
        rows = run_sweep(SweepSpec(model, n=40, gamma_grid=(0.5,), replicates=1), threads=1).rows
        (row,) = rows
        assert_allclose(row.asym_risk, 2.0, rtol=1e-12)
        assert_allclose(row.asym_norm_l2_sq, 20 * 3.0, rtol=1e-12)

    def test_thread_count_does_not_change_output(self):
        spec = SweepSpec(
            ISO,
            n=20,
            gamma_grid=(0.5, 2.0),
            estimators=("min_norm", "ridge:0.1"),
            budgets=(AdversarialBudget(0.0, 2), AdversarialBudget(0.5, 2)),
            replicates=3,
            seed=11,
        )
        serial = run_sweep(spec, threads=1)
        threaded = run_sweep(spec, threads=3)
        cols, rows_a = serial.table()
        _, rows_b = threaded.table()
        assert render_table(cols, rows_a, {}) == render_table(cols, rows_b, {})
        assert serial.notes == threaded.notes

    def test_monte_carlo_columns_agree_with_closed_form(self):
        spec = SweepSpec(
            ISO,
            n=20,
            gamma_grid=(2.0,),
            budgets=(AdversarialBudget(0.5, 2),),
            replicates=2,
            seed=7,
            mc_samples=4000,
        )
        (row,) = run_sweep(spec, threads=1).rows
        assert math.isfinite(row.mc_risk_median)
        assert row.mc_sigma_max < 5.0

    def test_keep_replicates_stores_reports(self):
        spec = SweepSpec(ISO, n=20, gamma_grid=(0.5, 2.0), replicates=3, seed=1, keep_replicates=True)
        result = run_sweep(spec, threads=1)
        assert len(result.records) == 6
        rec = result.records[0]
        assert rec.estimator == "min_norm"
        assert rec.report.standard_risk >= 0.0

    def test_select_filters_rows(self):
        spec = SweepSpec(
            ISO,
            n=20,
            gamma_grid=(0.5, 2.0),
            estimators=("min_norm", "ridge:0.1"),
            budgets=(AdversarialBudget(0.0, 2), AdversarialBudget(0.5, 2)),
            replicates=1,
            seed=2,
        )
        result = run_sweep(spec, threads=1)
        picked = result.select(budget=AdversarialBudget(0.5, 2), estimator="min_norm")
        assert [r.gamma for r in picked] == [0.5, 2.0]
        assert all(r.delta == 0.5 and r.estimator == "min_norm" for r in picked)

    def test_table_uses_norm_labels_and_row_columns(self):
        spec = SweepSpec(ISO, n=20, gamma_grid=(0.5,), budgets=(AdversarialBudget(0.2, INF),), replicates=1)
        cols, rows = run_sweep(spec, threads=1).table()
        assert cols == list(ROW_COLUMNS)
        assert rows[0]["p"] == "inf"

    def test_latent_overlay_uses_effective_parameters(self):
        theta = tuple([1.0 / math.sqrt(5.0)] * 5)
        model = LatentModel(m=8, d=5, theta=theta, sigma_xi2=0.1, scaling=Scaling.SQRT_M)
        spec = SweepSpec(model, n=10, gamma_grid=(4.0,), replicates=1, seed=3)
        (row,) = run_sweep(spec, threads=1).rows
        assert math.isfinite(row.asym_risk) and row.asym_risk > 0.0
        assert math.isfinite(row.asym_norm_l2_sq) and row.asym_norm_l2_sq > 0.0


class TestRegularizationComparison:
    def _spec(self, **kw):
        defaults = dict(
            model=IsotropicModel(m=8, r2=1.0, sigma2=1.0, scaling=Scaling.SQRT_M),
            n=16,
            gamma_grid=(0.5, 2.0),
            estimators=("ridge", "lasso", "advtrain:2", "advtrain:inf"),
            budgets=(AdversarialBudget(0.01, 2),),
            replicates=2,
            seed=4,
        )
        defaults.update(kw)
        return SweepSpec(**defaults)

    def test_requires_all_four_estimator_kinds(self):
        spec = self._spec(estimators=("ridge", "lasso", "advtrain:2"))
        with pytest.raises(ValueError, match="advtrain\\(p=inf\\)"):
            run_regularization_comparison(spec, [0.1])

    def test_rejects_bad_delta_grid(self):
        with pytest.raises(ValueError, match="non-empty"):
            run_regularization_comparison(self._spec(), [])
        with pytest.raises(ValueError, match="nonnegative"):
            run_regularization_comparison(self._spec(), [-1.0])

    def test_expands_deltas_and_forces_sqrt_m_scaling(self):
        spec = self._spec(model=IsotropicModel(m=8, r2=1.0, sigma2=1.0))
        result = run_regularization_comparison(spec, [0.01, 0.1], threads=1)
        assert any("replaced by 'sqrt_m'" in note for note in result.notes)
        labels = {r.estimator for r in result.rows}
        assert labels == {
            "ridge(delta=0.01)",
            "lasso(delta=0.01)",
            "advtrain_l2(delta=0.01)",
            "advtrain_linf(delta=0.01)",
            "ridge(delta=0.1)",
            "lasso(delta=0.1)",
            "advtrain_l2(delta=0.1)",
            "advtrain_linf(delta=0.1)",
        }
        # 2 grid points x 8 expanded estimators x 1 budget
        assert len(result.rows) == 16

    def test_keeps_min_norm_reference_when_present(self):
        spec = self._spec(estimators=("min_norm", "ridge", "lasso", "advtrain:2", "advtrain:inf"))
        result = run_regularization_comparison(spec, [0.1], threads=1)
        labels = {r.estimator for r in result.rows}
        assert "min_norm" in labels
        assert "ridge(delta=0.1)" in labels


class TestWeakFeatures:
    def test_exact_columns(self):
        table = run_weak_features([1, 4, 100], 0.1, samples=2000, seed=0)
        assert_allclose(table.risk, [1.0, 0.25, 0.01], rtol=1e-15)
        assert_allclose(table.norm_l1, [1.0, 2.0, 10.0], rtol=1e-12)
        # linf attack lower bound: risk + delta^2 * m; more features help the
        # risk but eventually hurt the bound.
        assert_allclose(table.linf_lower, [1.01, 0.29, 1.01], rtol=1e-12)

    def test_monte_carlo_confirms_risk(self):
        table = run_weak_features([10, 50], 0.1, samples=20_000, seed=1)
        for exact, mc, se in zip(table.risk, table.mc_risk, table.mc_se):
            assert abs(mc - exact) <= 4.0 * se

    def test_deterministic_for_fixed_seed(self):
        a = run_weak_features([5, 10], 0.2, samples=3000, seed=6)
        b = run_weak_features([5, 10], 0.2, samples=3000, seed=6)
        assert a == b

    def test_validation(self):
        with pytest.raises(ValueError, match="non-empty"):
            run_weak_features([], 0.1)
        with pytest.raises(ValueError, match="positive integers"):
            run_weak_features([0], 0.1)
        with pytest.raises(ValueError, match="nonnegative"):
            run_weak_features([4], -0.1)
        with pytest.raises(ValueError, match="at least 2 samples"):
            run_weak_features([4], 0.1, samples=1)

    def test_as_columns_keys(self):
        table = run_weak_features([4], 0.0, samples=100, seed=0)
        assert list(table.as_columns()) == ["m", "risk", "norm_l1", "linf_lower", "mc_risk", "mc_se"]
