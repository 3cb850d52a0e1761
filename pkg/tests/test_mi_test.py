import math

import numpy as np
import pytest
from scipy.stats import norm

from app.business_logic import mi_test_bl
from app.business_logic.exceptions import DimensionError, NumericError, TuningError
from app.business_logic.mi_test_bl import (
    MomentInequalityTest,
    asymptotic_critical_value,
    default_tuning,
    gms_shift,
    gms_shifts,
    joint_point_test,
    point_test,
    resolve_tuning,
    simulate_critical_value,
    statistic_from_stats,
)
from app.business_logic.moment_engine_bl import enumerate_instruments
from app.models.instrument_models import ConstantInstrument
from app.models.statuses_enums import DrawModeEnum, KappanRuleEnum
from app.models.test_models import MomentStats, TuningParams
from tests.helpers import fully_censored, make_sample

BETA = [1.0, 2.0]


def _stats(mbar, sigma_bar2, weights=None, overall=0.04, n=100):
    mbar = np.atleast_1d(np.asarray(mbar, dtype=float))
    return MomentStats(
        n=n,
        blocks=1,
        mbar=mbar,
        sigma_hat2=np.asarray(sigma_bar2, dtype=float) * np.ones_like(mbar),
        sigma_bar2=np.asarray(sigma_bar2, dtype=float) * np.ones_like(mbar),
        overall=np.array([overall]),
        weights=np.ones_like(mbar) if weights is None else np.asarray(weights, dtype=float),
    )


class TestDefaultTuning:
    def test_closed_form_values(self):
        Bn, kappan = default_tuning(250, 0.16)
        assert Bn == pytest.approx(1.608, abs=1e-3)
        assert kappan == pytest.approx(1.556, abs=1e-3)

    def test_no_censoring_limit(self):
        _, kappan = default_tuning(250, 0.0)
        _, plain = default_tuning(250, 0.3, kappan_rule=KappanRuleEnum.plain)
        assert kappan == pytest.approx(math.sqrt(0.6 * math.log(250)))
        assert plain == pytest.approx(kappan)

    def test_small_n_guard(self):
        Bn, kappan = default_tuning(16, 0.2)
        assert math.isfinite(Bn) and math.isfinite(kappan)
        with pytest.raises(TuningError):
            default_tuning(15, 0.2)

    def test_censoring_rate_range(self):
        with pytest.raises(TuningError):
            default_tuning(100, 1.0)

    def test_explicit_values_and_scales(self):
        assert resolve_tuning(TuningParams(Bn=1.0, kappan=2.0), 250, 0.16) == (1.0, 2.0)
        Bn, kappan = resolve_tuning(TuningParams(bn_scale=2.0, kappan_scale=0.5), 250, 0.16)
        rule_bn, rule_kappan = default_tuning(250, 0.16)
        assert Bn == pytest.approx(2 * rule_bn)
        assert kappan == pytest.approx(0.5 * rule_kappan)


class TestStatistic:
    def test_nonnegative_moments_give_zero(self):
        assert statistic_from_stats(_stats([0.0, 0.3, 1.0], 0.04)) == 0.0

    def test_single_negative_moment(self):
        w = 0.37
        assert statistic_from_stats(_stats([-0.1], 0.04, weights=[w])) == pytest.approx(25 * w)

    def test_zero_variance_moment_drops_out(self):
        assert statistic_from_stats(_stats([-0.1], 0.0)) == 0.0

    def test_statistic_is_nonnegative_on_data(self, medium_sample):
        family = enumerate_instruments("mixed", R=2, p=1, X2=medium_sample.discrete_support)
        for slope in (-3.0, 0.0, 2.0, 5.0):
            assert mi_test_bl.test_statistic(medium_sample, [1.0, slope], family, 1e-4) >= 0.0

    def test_joint_statistic_with_large_t_equals_beta_statistic(self, medium_sample):
        family = enumerate_instruments("mixed", R=1, p=1, X2=medium_sample.discrete_support)
        beta_only = mi_test_bl.test_statistic(medium_sample, BETA, family, 1e-4)
        joint = mi_test_bl.joint_test_statistic(medium_sample, BETA, [2.0], [1000.0], 1.0, family, 1e-4)
        assert joint == pytest.approx(beta_only, abs=1e-12)

    def test_joint_statistic_without_y_equals_beta_statistic(self, medium_sample):
        family = enumerate_instruments("mixed", R=1, p=1, X2=medium_sample.discrete_support)
        assert mi_test_bl.joint_test_statistic(medium_sample, BETA, [], [], 1.0, family, 1e-4) == \
            mi_test_bl.test_statistic(medium_sample, BETA, family, 1e-4)

    def test_joint_statistic_length_mismatch(self, medium_sample):
        family = enumerate_instruments("mixed", R=1, p=1, X2=medium_sample.discrete_support)
        with pytest.raises(DimensionError):
            mi_test_bl.joint_test_statistic(medium_sample, BETA, [1.0, 2.0], [0.0], 1.0, family, 1e-4)


class TestGmsShift:
    def test_boundary_ratio_is_not_selected(self):
        # sqrt(100) * 0.25 / 0.5 = 5
        assert gms_shifts(_stats([0.25], 0.25), Bn=1.6, kappan=5.0)[0] == 0.0

    def test_selected_moment(self):
        phi = gms_shifts(_stats([0.25], 0.25, overall=0.04), Bn=1.6, kappan=2.5)
        assert phi[0] == pytest.approx(0.064)

    def test_negative_moment_is_not_selected(self):
        assert gms_shifts(_stats([-0.25], 0.25), Bn=1.6, kappan=0.1)[0] == 0.0

    def test_single_instrument_path(self, medium_sample):
        one = ConstantInstrument()
        assert gms_shift(medium_sample, [1.0, -20.0], one, 1.6, 1e6, 1e-4) == 0.0


class TestCriticalValue:
    def test_degenerate_covariance(self):
        draws = np.random.default_rng(0).standard_normal((500, 1))
        cv = asymptotic_critical_value(np.zeros((1, 1)), np.ones(1), np.zeros(1), np.ones(1), 0.05, 1e-6, draws)
        assert cv == 0.0

    def test_single_instrument_quantile(self):
        draws = np.random.default_rng(1).standard_normal((200_000, 1))
        cv = asymptotic_critical_value(np.ones((1, 1)), np.ones(1), np.zeros(1), np.ones(1), 0.05, 1e-6, draws)
        assert cv == pytest.approx(norm.ppf(0.95) ** 2, abs=0.05)

    def test_non_finite_covariance(self):
        draws = np.zeros((100, 1))
        with pytest.raises(NumericError):
            asymptotic_critical_value(np.full((1, 1), np.nan), np.ones(1), np.zeros(1), np.ones(1), 0.05, 1e-6, draws)

    def test_larger_kappan_never_lowers_the_critical_value(self, medium_sample):
        low = MomentInequalityTest(medium_sample, TuningParams(R=1, n_reps=300, Bn=1.6, kappan=0.5))
        high = MomentInequalityTest(medium_sample, TuningParams(R=1, n_reps=300, Bn=1.6, kappan=1.0))
        for slope in (0.0, 2.0, 4.0):
            assert high.critical_value(high.stats([1.0, slope])) >= low.critical_value(low.stats([1.0, slope]))

    def test_smaller_alpha_never_lowers_the_critical_value(self, medium_sample, fast_tuning):
        tester = MomentInequalityTest(medium_sample, fast_tuning)
        stats = tester.stats(BETA)
        assert tester.critical_value(stats, alpha=0.01) >= tester.critical_value(stats, alpha=0.05)

    def test_gaussian_draws_match_the_covariance(self):
        h2 = np.array([[1.0, 0.5], [0.5, 1.0]])
        draws = mi_test_bl.simulate_gaussian(h2, 100_000, np.random.default_rng(2))
        np.testing.assert_allclose(np.cov(draws, rowvar=False), h2, atol=0.02)

    def test_module_entry_point(self, medium_sample, fast_tuning):
        family = enumerate_instruments("mixed", R=1, p=1, X2=medium_sample.discrete_support)
        cv = simulate_critical_value(medium_sample, BETA, family, fast_tuning)
        tester = MomentInequalityTest(medium_sample, fast_tuning, family=family)
        assert cv == tester.critical_value(tester.stats(BETA))


class TestPointTest:
    def test_all_moments_nonnegative_accepts(self):
        sample = fully_censored(make_sample(30, seed=4))
        outcome = point_test(sample, BETA, TuningParams(R=1, n_reps=200, Bn=1.0, kappan=1.0))
        assert outcome.statistic == 0.0
        assert not outcome.reject

    def test_skip_zero_leaves_critical_value_unset(self):
        sample = fully_censored(make_sample(30, seed=4))
        tester = MomentInequalityTest(sample, TuningParams(R=1, n_reps=200, Bn=1.0, kappan=1.0), skip_zero=True)
        outcome = tester.test_beta(BETA)
        assert outcome.critical_value is None
        assert not outcome.reject

    def test_same_seed_same_outcome(self, medium_sample, fast_tuning):
        first = point_test(medium_sample, BETA, fast_tuning)
        second = point_test(medium_sample, BETA, fast_tuning)
        assert first.statistic == second.statistic
        assert first.critical_value == second.critical_value

    def test_joint_without_y_equals_point_test(self, medium_sample, fast_tuning):
        single = point_test(medium_sample, BETA, fast_tuning)
        joint = joint_point_test(medium_sample, BETA, [], [], 1.0, fast_tuning)
        assert joint.statistic == single.statistic
        assert joint.critical_value == single.critical_value
        assert joint.reject == single.reject

    def test_fresh_draws_are_keyed_by_point_index(self, medium_sample):
        tester = MomentInequalityTest(medium_sample, TuningParams(R=1, n_reps=200, draw_mode=DrawModeEnum.fresh))
        stats = tester.stats(BETA)
        assert tester.critical_value(stats, point_index=3) == tester.critical_value(stats, point_index=3)
        assert tester.critical_value(stats, point_index=3) != tester.critical_value(stats, point_index=4)

    def test_far_slope_is_rejected(self):
        sample = make_sample(120, seed=21, censor_share=0.1, slope=3.0)
        outcome = point_test(sample, [1.0, -10.0], TuningParams(R=2, n_reps=300))
        assert outcome.reject
        assert outcome.statistic > outcome.critical_value

    def test_diagnostics_summary(self, medium_sample, fast_tuning):
        outcome = point_test(medium_sample, BETA, fast_tuning)
        summary = outcome.summary()
        assert summary["moments"] == 16
        assert 0 <= summary["gms_selected"] <= summary["active"] <= summary["moments"]

    def test_joint_needs_positive_y_tilde(self, medium_sample, fast_tuning):
        tester = MomentInequalityTest(medium_sample, fast_tuning)
        with pytest.raises(DimensionError):
            tester.test_joint(BETA, [1.0], [0.0], None)
