import numpy as np
import pytest

from app.business_logic.exceptions import DgpSpecError, DimensionError
from app.business_logic.population_bl import PopulationBusinessLogic
from app.models.confset_models import AxisRange, ParamGrid
from app.models.population_models import DgpSpec, PopulationTable
from app.models.statuses_enums import EnvelopeStatusEnum, ModelIdEnum, SupportEnum

TABLE_GRID = ParamGrid(sign1=[1], free=[AxisRange(low=-1.0, high=8.0, step=0.01)])


@pytest.fixture
def lab():
    return PopulationBusinessLogic()


def _beta2_interval(bound):
    return bound.intervals["beta_x2"][0]


class TestSimulateDgp:
    def test_uncensored_model(self, lab):
        sample = lab.simulate_dgp(DgpSpec(model=ModelIdEnum.model1), 500, seed=3)
        assert sample.censor_rate == 0.0
        assert sample.p == 0
        assert len(sample.discrete_support) == 22

    @pytest.mark.parametrize("model, rate", [(ModelIdEnum.dgp1, 0.16), (ModelIdEnum.dgp2, 0.30)])
    def test_censoring_rates(self, lab, model, rate):
        sample = lab.simulate_dgp(DgpSpec(model=model), 100_000, seed=1)
        assert sample.p == 1
        assert sample.censor_rate == pytest.approx(rate, abs=0.01)

    def test_seed_reproduces_the_sample(self, lab):
        spec = DgpSpec(model=ModelIdEnum.dgp2)
        first, second = lab.simulate_dgp(spec, 50, seed=9), lab.simulate_dgp(spec, 50, seed=9)
        assert np.array_equal(first.y0, second.y0)
        assert np.array_equal(first.x, second.x)

    def test_invalid_spec(self, lab):
        with pytest.raises(DgpSpecError):
            DgpSpec(beta=(0.0, 1.0))
        with pytest.raises(DgpSpecError):
            lab.simulate_dgp(DgpSpec(), 0)


class TestPopulationTable:
    def test_without_censoring_y1_equals_y0(self, lab):
        table = lab.population_table(DgpSpec(model=ModelIdEnum.model1), draws_per_point=2000)
        for c in (0.1, 1.0, 5.0):
            np.testing.assert_array_equal(table.p1_geq(c), table.p0_geq(c))

    def test_same_point_comparison_is_one_half(self, lab):
        table = lab.population_table(DgpSpec(model=ModelIdEnum.model1), draws_per_point=2000)
        np.testing.assert_allclose(np.diag(table.pair_prob), 0.5, atol=1e-12)

    def test_continuous_support_is_rejected(self, lab):
        with pytest.raises(DgpSpecError):
            lab.population_table(DgpSpec(model=ModelIdEnum.dgp1))


class TestIdentifiedSet:
    @pytest.mark.parametrize("model, support, low, high, tol", [
        (ModelIdEnum.model1, SupportEnum.i, 2.51, 3.49, 0.011),
        (ModelIdEnum.model1, SupportEnum.ii, 2.51, 3.49, 0.011),
        pytest.param(ModelIdEnum.model1, SupportEnum.iii, 2.81, 3.19, 0.05, marks=pytest.mark.slow),
        (ModelIdEnum.model2, SupportEnum.i, 2.00, 4.00, 0.02),
        (ModelIdEnum.model2, SupportEnum.ii, 2.00, 3.49, 0.02),
        (ModelIdEnum.model3, SupportEnum.i, 1.50, 5.00, 0.10),
        (ModelIdEnum.model3, SupportEnum.ii, 1.50, 3.99, 0.02),
    ])
    def test_projected_intervals(self, lab, model, support, low, high, tol):
        table = lab.population_table(DgpSpec(model=model, support=support))
        interval = _beta2_interval(lab.compute_BI(table, TABLE_GRID))
        assert interval["low"] == pytest.approx(low, abs=tol)
        assert interval["high"] == pytest.approx(high, abs=tol)
        assert not interval["unbounded_below"] and not interval["unbounded_above"]

    def test_wider_support_is_at_least_as_informative(self, lab):
        narrow = lab.compute_BI(lab.population_table(DgpSpec(model=ModelIdEnum.model2), draws_per_point=4000),
                                TABLE_GRID)
        wide = lab.compute_BI(lab.population_table(DgpSpec(model=ModelIdEnum.model2, support=SupportEnum.ii),
                                                   draws_per_point=4000), TABLE_GRID)
        assert np.all(narrow.member[wide.member])

    def test_sign_coordinate_is_not_flagged(self, lab):
        table = lab.population_table(DgpSpec(model=ModelIdEnum.model1), draws_per_point=2000)
        grid = ParamGrid(sign1=[1, -1], free=[AxisRange(low=-1.0, high=8.0, step=0.5)])
        sign = lab.compute_BI(table, grid).intervals["beta_x1"][0]
        assert not sign["unbounded_below"] and not sign["unbounded_above"]

    def test_true_beta_is_a_member_without_tolerance(self, lab):
        for model in (ModelIdEnum.model1, ModelIdEnum.model2, ModelIdEnum.model3):
            spec = DgpSpec(model=model)
            bound = lab.compute_BI(lab.population_table(spec, draws_per_point=4000), TABLE_GRID, tolerance=0.0)
            row = np.flatnonzero(np.all(np.isclose(bound.beta_points, spec.true_beta), axis=1))
            assert bound.member[row].all()

    def test_models_are_nested(self, lab):
        members = [
            lab.compute_BI(lab.population_table(DgpSpec(model=m), draws_per_point=4000), TABLE_GRID).member
            for m in (ModelIdEnum.model1, ModelIdEnum.model2, ModelIdEnum.model3)
        ]
        assert np.all(members[1][members[0]])
        assert np.all(members[2][members[1]])

    def test_single_support_point_is_uninformative(self, lab):
        table = lab.population_table(DgpSpec(model=ModelIdEnum.model1), draws_per_point=1000)
        single = PopulationTable(spec=table.spec, points=table.points[:1], y0=table.y0[:1], d=table.d[:1],
                                 pair_prob=table.pair_prob[:1, :1])
        bound = lab.compute_BI(single, TABLE_GRID)
        assert bound.uninformative
        assert bound.member.all()

    def test_grid_dimension(self, lab):
        table = lab.population_table(DgpSpec(), draws_per_point=100)
        grid = ParamGrid(sign1=[1], free=[AxisRange(low=0.0, high=1.0, step=0.5)] * 2)
        with pytest.raises(DimensionError):
            lab.compute_BI(table, grid)


class TestTransformationEnvelope:
    y_grid = [0.2, 0.5, 0.77, 1.5, 4.0]
    t_grid = AxisRange(low=-10.0, high=10.0, step=0.02).values()

    @pytest.mark.parametrize("model", [ModelIdEnum.model1, ModelIdEnum.model2, ModelIdEnum.model3])
    @pytest.mark.parametrize("support", [SupportEnum.i, SupportEnum.ii])
    def test_true_transformation_is_never_excluded(self, lab, model, support):
        spec = DgpSpec(model=model, support=support)
        table = lab.population_table(spec, draws_per_point=4000)
        bound = lab.compute_BI(table, TABLE_GRID, tolerance=0.0)
        bound = lab.compute_TBI(table, bound, self.y_grid, self.t_grid, 0.77)
        assert len(bound.envelope) == len(self.y_grid)
        for point in bound.envelope:
            if point.status != EnvelopeStatusEnum.unbounded_below:
                assert point.threshold < point.true_value
            if point.status == EnvelopeStatusEnum.finite:
                assert point.lower <= point.true_value + 0.05

    @pytest.mark.parametrize("model", [ModelIdEnum.model1, ModelIdEnum.model3])
    def test_envelope_is_nondecreasing_in_y(self, lab, model):
        table = lab.population_table(DgpSpec(model=model), draws_per_point=4000)
        y_grid = [0.1, 0.2, 0.35, 0.5, 0.77, 1.0, 1.5, 2.5, 4.0, 7.0, 10.0]
        bound = lab.compute_TBI(table, lab.compute_BI(table, TABLE_GRID), y_grid, self.t_grid, 0.77)
        thresholds = [-np.inf if p.threshold is None else p.threshold for p in bound.envelope]
        assert thresholds == sorted(thresholds)

    def test_envelope_statuses(self, lab):
        table = lab.population_table(DgpSpec(model=ModelIdEnum.model1), draws_per_point=2000)
        bound = lab.compute_TBI(table, lab.compute_BI(table, TABLE_GRID), self.y_grid, self.t_grid, 0.77)
        for point in bound.envelope:
            assert point.finite_lower_bound == (point.status in (EnvelopeStatusEnum.finite, EnvelopeStatusEnum.above_grid))
            if point.status == EnvelopeStatusEnum.finite:
                assert point.lower > point.threshold
                assert point.lower - point.threshold <= 0.02 + 1e-9

    def test_true_value_is_zero_at_the_anchor(self, lab):
        table = lab.population_table(DgpSpec(model=ModelIdEnum.model1), draws_per_point=1000)
        bound = lab.compute_TBI(table, lab.compute_BI(table, TABLE_GRID), [0.77], self.t_grid, 0.77)
        assert bound.envelope[0].true_value == 0.0

    def test_empty_identified_set(self, lab):
        table = lab.population_table(DgpSpec(model=ModelIdEnum.model1), draws_per_point=1000)
        grid = ParamGrid(sign1=[1], free=[AxisRange(low=-1.0, high=0.0, step=0.5)])
        bound = lab.compute_BI(table, grid, tolerance=0.0)
        assert not bound.member.any()
        bound = lab.compute_TBI(table, bound, [1.0], self.t_grid, 0.77)
        assert bound.envelope[0].status == EnvelopeStatusEnum.empty

    def test_anchor_must_be_positive(self, lab):
        table = lab.population_table(DgpSpec(model=ModelIdEnum.model1), draws_per_point=100)
        bound = lab.compute_BI(table, TABLE_GRID)
        with pytest.raises(DgpSpecError):
            lab.compute_TBI(table, bound, [1.0], self.t_grid, 0.0)
