import numpy as np
import pytest

from app.business_logic.confset_bl import ConfsetBusinessLogic, marginal, project, project_values
from app.business_logic.exceptions import DimensionError, GridError, ResourceError
from app.config import AppConfig
from app.models.confset_models import AxisRange, ConfidenceSet, Interval, ParamGrid
from app.models.test_models import TuningParams
from app.workers.grid_worker import GridWorker
from tests.helpers import fully_censored, make_sample


def _set(values, accepted_mask):
    points = np.array([[1.0, v] for v in values])
    edges = [(1.0, 1.0), (float(min(values)), float(max(values)))]
    return ConfidenceSet(coordinate_names=["beta_x1", "beta_x2"], points=points,
                         accepted=np.array(accepted_mask, dtype=bool), outcomes=[], edges=edges)


class TestProject:
    def test_bounded_hull(self):
        cs = _set([2.1, 2.2, 2.3, 2.4, 2.5], [False, True, True, True, False])
        assert project(cs, 1) == [Interval(low=2.2, high=2.4)]

    def test_acceptance_at_the_edge_is_unbounded(self):
        cs = _set([2.1, 2.2, 2.3], [False, True, True])
        interval = project(cs, 1)[0]
        assert interval.low == 2.2
        assert interval.unbounded_above and not interval.unbounded_below
        assert interval.describe() == "[2.2, +inf)"

    def test_empty_set(self):
        cs = _set([2.1, 2.2], [False, False])
        assert project(cs, 1) == [Interval(empty=True)]

    def test_single_accepted_point_is_degenerate(self):
        cs = _set([2.3], [True])
        assert project(cs, 1) == [Interval(low=2.3, high=2.3)]

    def test_runs_split_disconnected_pieces(self):
        cs = _set([1.0, 2.0, 3.0, 4.0, 5.0], [False, True, False, True, True])
        pieces = project(cs, 1, runs=True)
        assert [(p.low, p.high) for p in pieces] == [(2.0, 2.0), (4.0, 5.0)]
        assert pieces[1].unbounded_above
        assert project(cs, 1) == [Interval(low=2.0, high=5.0, unbounded_above=True)]

    def test_invalid_coordinate(self):
        with pytest.raises(DimensionError):
            project(_set([1.0], [True]), 2)

    def test_projecting_the_marginal_is_idempotent(self):
        cs = _set([1.0, 2.0, 3.0, 4.0], [False, True, True, False])
        assert project(marginal(cs, 1), 0) == project(cs, 1)

    def test_project_values(self):
        intervals = project_values(np.array([-1.0, 0.0, 1.0]), np.array([True, True, False]), (-1.0, 1.0))
        assert intervals == [Interval(low=-1.0, high=0.0, unbounded_below=True)]


class TestBetaConfidenceSet:
    grid = ParamGrid(sign1=[1], free=[AxisRange(low=-2.0, high=6.0, step=1.0)])

    def test_smaller_alpha_gives_a_larger_set(self, medium_sample):
        bl = ConfsetBusinessLogic(GridWorker(max_workers=1))
        narrow = bl.beta_confidence_set(medium_sample, self.grid, TuningParams(R=1, n_reps=200, alpha=0.05))
        wide = bl.beta_confidence_set(medium_sample, self.grid, TuningParams(R=1, n_reps=200, alpha=0.01))
        assert np.all(wide.accepted[narrow.accepted])

    def test_worker_count_does_not_change_the_result(self, medium_sample, fast_tuning):
        one = ConfsetBusinessLogic(GridWorker(max_workers=1)).beta_confidence_set(medium_sample, self.grid, fast_tuning)
        four = ConfsetBusinessLogic(GridWorker(max_workers=4)).beta_confidence_set(medium_sample, self.grid, fast_tuning)
        assert np.array_equal(one.accepted, four.accepted)
        assert [o.statistic for o in one.outcomes] == [o.statistic for o in four.outcomes]
        assert [o.critical_value for o in one.outcomes] == [o.critical_value for o in four.outcomes]

    def test_projections_cover_every_coordinate(self, medium_sample, fast_tuning, inline_worker):
        cs = ConfsetBusinessLogic(inline_worker).beta_confidence_set(medium_sample, self.grid, fast_tuning)
        assert set(cs.projections) == {"beta_x1", "beta_x2"}
        assert cs.points.shape == (9, 2)
        assert len(cs.outcomes) == 9

    def test_dimension_mismatch(self, medium_sample, fast_tuning, inline_worker):
        grid = ParamGrid(sign1=[1], free=[AxisRange(low=0.0, high=1.0, step=1.0)] * 2)
        with pytest.raises(DimensionError):
            ConfsetBusinessLogic(inline_worker).beta_confidence_set(medium_sample, grid, fast_tuning)

    def test_grid_cap(self, medium_sample, fast_tuning, inline_worker):
        bl = ConfsetBusinessLogic(inline_worker)
        bl.config = AppConfig(MAX_GRID_POINTS=5)
        with pytest.raises(ResourceError):
            bl.beta_confidence_set(medium_sample, self.grid, fast_tuning)

    def test_axis_order(self):
        with pytest.raises(GridError):
            AxisRange(low=1.0, high=0.0, step=0.1)

    def test_sign_coordinate_is_never_flagged_unbounded(self, fast_tuning, inline_worker):
        sample = fully_censored(make_sample(30, seed=4))
        grid = ParamGrid(sign1=[1, -1], free=[AxisRange(low=-2.0, high=2.0, step=1.0)])
        cs = ConfsetBusinessLogic(inline_worker).beta_confidence_set(sample, grid, fast_tuning)
        assert cs.accepted.all()
        assert cs.projections["beta_x1"] == [Interval(low=-1.0, high=1.0).model_dump()]
        assert cs.projections["beta_x2"] == [
            Interval(low=-2.0, high=2.0, unbounded_below=True, unbounded_above=True).model_dump()
        ]

    def test_projection_keys_follow_covariate_names(self):
        sample = make_sample(5, seed=1).model_copy(update={"covariate_names": ["age", "transplant"]})
        assert ConfsetBusinessLogic.beta_names(sample) == ["beta_age", "beta_transplant"]

    def test_sign_coordinate_has_no_edge(self):
        assert ParamGrid(sign1=[1, -1], free=[AxisRange(low=0.0, high=1.0, step=0.5)]).coordinate_edges() == [
            None, (0.0, 1.0)
        ]


class TestJointConfidenceSet:
    def test_t_is_never_excluded_above_when_beta_moments_hold(self, inline_worker):
        sample = fully_censored(make_sample(30, seed=9))
        grid = ParamGrid(sign1=[1], free=[AxisRange(low=1.0, high=2.0, step=1.0)],
                         t_axis=AxisRange(low=-3.0, high=20.0, step=1.0))
        tuning = TuningParams(R=1, n_reps=200, Bn=1.0, kappan=1.0)
        y_grid = [1.0, 5.0]
        cs = ConfsetBusinessLogic(inline_worker).joint_confidence_set(sample, grid, y_grid, 2.0, tuning)
        for y in y_grid:
            interval = Interval(**cs.projections[f"T({y:g})"][0])
            assert not interval.empty
            assert interval.unbounded_above

    def test_per_y_scan_names(self, medium_sample, fast_tuning, inline_worker):
        grid = ParamGrid(sign1=[1], free=[AxisRange(low=2.0, high=3.0, step=1.0)],
                         t_axis=AxisRange(low=-2.0, high=2.0, step=1.0))
        cs = ConfsetBusinessLogic(inline_worker).joint_confidence_set(medium_sample, grid, [1.0, 4.0], 2.0, fast_tuning)
        assert cs.coordinate_names == ["beta_x1", "beta_x2", "y", "t"]
        assert {"beta_x1", "beta_x2", "T(1)", "T(4)"} <= set(cs.projections)
        # every scan evaluates the top of the t axis
        for y in (1.0, 4.0):
            for slope in (2.0, 3.0):
                rows = (cs.points[:, 2] == y) & (cs.points[:, 1] == slope)
                assert cs.points[rows, 3].max() == 2.0

    def test_product_grid(self, medium_sample, fast_tuning, inline_worker):
        grid = ParamGrid(sign1=[1], free=[AxisRange(low=2.0, high=3.0, step=1.0)],
                         t_axis=AxisRange(low=-1.0, high=1.0, step=1.0))
        cs = ConfsetBusinessLogic(inline_worker).joint_confidence_set(
            medium_sample, grid, [1.0, 4.0], 2.0, fast_tuning, per_y=False)
        assert cs.points.shape == (2 * 3 * 3, 4)
        assert cs.coordinate_names == ["beta_x1", "beta_x2", "T(1)", "T(4)"]

    def test_needs_a_t_axis(self, medium_sample, fast_tuning, inline_worker):
        grid = ParamGrid(sign1=[1], free=[AxisRange(low=2.0, high=3.0, step=1.0)])
        with pytest.raises(GridError):
            ConfsetBusinessLogic(inline_worker).joint_confidence_set(medium_sample, grid, [1.0], 2.0, fast_tuning)
