from functools import partial
from typing import List, Optional, Sequence

import numpy as np

from app.app_container import app_container
from app.business_logic.exceptions import DimensionError, GridError, ResourceError
from app.business_logic.mi_test_bl import MomentInequalityTest
from app.models.confset_models import ConfidenceSet, Interval, ParamGrid
from app.models.observation_models import Sample
from app.models.test_models import TuningParams
from app.utils.error_handler import handle_exceptions
from app.utils.logger import LoggerManager
from app.workers.grid_worker import GridWorker

logger = LoggerManager.get_logger('confset_bl')


def _runs(values: np.ndarray, accepted_values: set) -> List[List[float]]:
    runs, current = [], []
    for v in values:
        if v in accepted_values:
            current.append(v)
        elif current:
            runs.append(current)
            current = []
    if current:
        runs.append(current)
    return runs


def project(cs: ConfidenceSet, coord: int, runs: bool = False) -> List[Interval]:
    """
    Project the accepted points on one coordinate.

    Returns the convex hull as a single interval, or one interval per maximal
    run of consecutive accepted grid values when runs is set. Acceptance at a
    grid edge is flagged unbounded in that direction. Axes searched at a single
    value and coordinates without an edge (the sign of beta_1) are never
    flagged. No accepted point gives one empty interval.
    """
    if not 0 <= coord < cs.points.shape[1]:
        raise DimensionError(f"coordinate {coord} outside 0..{cs.points.shape[1] - 1}")
    if cs.is_empty:
        return [Interval(empty=True)]
    grid_values = np.unique(cs.points[:, coord])
    accepted_values = set(np.unique(cs.accepted_points[:, coord]).tolist())
    edge = cs.edges[coord]
    flaggable = edge is not None and edge[1] > edge[0]
    edge_low, edge_high = edge if flaggable else (None, None)
    pieces = _runs(grid_values.tolist(), accepted_values) if runs else [sorted(accepted_values)]
    return [
        Interval(
            low=float(piece[0]),
            high=float(piece[-1]),
            unbounded_below=flaggable and piece[0] <= edge_low,
            unbounded_above=flaggable and piece[-1] >= edge_high,
        )
        for piece in pieces
    ]


def marginal(cs: ConfidenceSet, coord: int) -> ConfidenceSet:
    """One-dimensional set of the grid values of a coordinate, accepted when any point with that value is."""
    values = np.unique(cs.points[:, coord])
    accepted_values = np.unique(cs.accepted_points[:, coord]) if not cs.is_empty else np.empty(0)
    accepted = np.isin(values, accepted_values)
    name = cs.coordinate_names[coord]
    return ConfidenceSet(
        coordinate_names=[name],
        points=values[:, None],
        accepted=accepted,
        outcomes=[],
        edges=[cs.edges[coord]],
        projections={name: [i.model_dump() for i in project_values(values, accepted, cs.edges[coord])]},
    )


def project_values(values: np.ndarray, accepted: np.ndarray, edge: tuple) -> List[Interval]:
    tmp = ConfidenceSet(coordinate_names=["v"], points=np.asarray(values, dtype=float)[:, None],
                        accepted=np.asarray(accepted, dtype=bool), outcomes=[], edges=[edge])
    return project(tmp, 0)


class ConfsetBusinessLogic:
    """
    Grid-search confidence sets. Grid points are independent jobs on the
    GridWorker; each job keys its random stream by its grid index.
    """
    def __init__(self, grid_worker: Optional[GridWorker] = None):
        self.logger = logger
        self.config = app_container.config()
        self.grid_worker = grid_worker or app_container.grid_worker()

    def _check_size(self, size: int):
        if size == 0:
            raise GridError("search grid is empty")
        if size > self.config.MAX_GRID_POINTS:
            raise ResourceError(f"grid of {size} points exceeds MAX_GRID_POINTS={self.config.MAX_GRID_POINTS}")

    @staticmethod
    def beta_names(sample: Sample) -> List[str]:
        names = sample.covariate_names or [f"x{i + 1}" for i in range(sample.k)]
        return [f"beta_{name}" for name in names]

    def _build(self, names, points, outcomes, edges, runs: bool) -> ConfidenceSet:
        accepted = np.array([not o.reject for o in outcomes], dtype=bool)
        cs = ConfidenceSet(coordinate_names=names, points=points, accepted=accepted, outcomes=outcomes, edges=edges)
        projections = {name: [i.model_dump() for i in project(cs, c, runs)] for c, name in enumerate(names)}
        return cs.model_copy(update={"projections": projections})

    @handle_exceptions(logger=logger)
    def beta_confidence_set(self, sample: Sample, grid: ParamGrid, tuning: TuningParams,
                            tester: Optional[MomentInequalityTest] = None, runs: bool = False) -> ConfidenceSet:
        if grid.k != sample.k:
            raise DimensionError(f"grid has {grid.k} coordinates but the sample has k={sample.k}")
        self._check_size(grid.size)
        points = grid.beta_points()
        self.logger.info(f"Searching {points.shape[0]} beta points (n={sample.n}, k={sample.k})")
        tester = tester or MomentInequalityTest(sample, tuning, skip_zero=True)
        jobs = [partial(tester.test_beta, point, idx) for idx, point in enumerate(points)]
        outcomes = self.grid_worker.run(jobs, label="beta points")
        cs = self._build(self.beta_names(sample), points, outcomes, grid.coordinate_edges(), runs)
        if cs.is_empty:
            self.logger.warning("No beta grid point was accepted")
        else:
            self.logger.info(f"Accepted {int(cs.accepted.sum())} of {points.shape[0]} beta points")
        return cs

    @staticmethod
    def _scan_t(tester: MomentInequalityTest, beta: np.ndarray, y: float, t_values: np.ndarray,
                y_tilde: float, base_index: int) -> List[tuple]:
        # ascending scan; the first accepted t is this beta's lower bound, the top of the axis decides boundedness
        evaluated = []
        for idx, t in enumerate(t_values):
            outcome = tester.test_joint(beta, [y], [t], y_tilde, point_index=base_index + idx)
            evaluated.append((idx, outcome))
            if not outcome.reject:
                break
        last = t_values.shape[0] - 1
        if evaluated[-1][0] != last:
            evaluated.append((last, tester.test_joint(beta, [y], [t_values[last]], y_tilde, point_index=base_index + last)))
        return evaluated

    @handle_exceptions(logger=logger)
    def joint_confidence_set(self, sample: Sample, grid: ParamGrid, y_grid: Sequence[float], y_tilde: float,
                             tuning: TuningParams, per_y: bool = True,
                             beta_candidates: Optional[np.ndarray] = None) -> ConfidenceSet:
        """
        Confidence set for (beta, T(y_1), ..., T(y_q)) on a grid.

        With per_y set, every y is tested jointly with beta alone (q = 1) and t
        is scanned upward per beta, stopping at the first accepted value; the
        largest t is always evaluated. Otherwise the full product grid of beta
        and one t per y is searched.

        Returns:
            ConfidenceSet whose projections hold beta coordinates and one
            "T(y)" entry per y.
        """
        if grid.t_axis is None:
            raise GridError("joint search needs a t axis")
        y_grid = [float(y) for y in y_grid]
        if not y_grid:
            raise GridError("joint search needs at least one y")
        if grid.k != sample.k:
            raise DimensionError(f"grid has {grid.k} coordinates but the sample has k={sample.k}")
        betas = grid.beta_points() if beta_candidates is None else np.atleast_2d(np.asarray(beta_candidates, dtype=float))
        t_values = grid.t_axis.values()
        t_edge = (float(t_values[0]), float(t_values[-1]))
        names = self.beta_names(sample)
        tester = MomentInequalityTest(sample, tuning, skip_zero=True)

        if per_y:
            self._check_size(betas.shape[0] * t_values.shape[0] * len(y_grid))
            self.logger.info(f"Joint search per y: {len(y_grid)} y values x {betas.shape[0]} beta points x up to {t_values.shape[0]} t values")
            stride = t_values.shape[0]
            jobs = [
                partial(self._scan_t, tester, beta, y, t_values, y_tilde, (y_idx * betas.shape[0] + b_idx) * stride)
                for y_idx, y in enumerate(y_grid)
                for b_idx, beta in enumerate(betas)
            ]
            scans = self.grid_worker.run(jobs, label="joint beta/y scans")
            rows, outcomes = [], []
            for job_idx, evaluated in enumerate(scans):
                y = y_grid[job_idx // betas.shape[0]]
                beta = betas[job_idx % betas.shape[0]]
                for t_idx, outcome in evaluated:
                    rows.append(np.concatenate([beta, [y, t_values[t_idx]]]))
                    outcomes.append(outcome)
            points = np.array(rows)
            accepted = np.array([not o.reject for o in outcomes], dtype=bool)
            all_names = names + ["y", "t"]
            edges = grid.coordinate_edges() + [(min(y_grid), max(y_grid)), t_edge]
            cs = ConfidenceSet(coordinate_names=all_names, points=points, accepted=accepted, outcomes=outcomes, edges=edges)
            projections = {name: [i.model_dump() for i in project(cs, c)] for c, name in enumerate(names)}
            for y in y_grid:
                rows_y = points[:, -2] == y
                intervals = project_values(points[rows_y, -1], accepted[rows_y], t_edge)
                projections[f"T({y:g})"] = [i.model_dump() for i in intervals]
            return cs.model_copy(update={"projections": projections})

        q = len(y_grid)
        size = betas.shape[0] * t_values.shape[0] ** q
        self._check_size(size)
        self.logger.info(f"Joint search over the product grid: {size} points")
        t_mesh = np.stack([m.ravel() for m in np.meshgrid(*([t_values] * q), indexing="ij")], axis=1)
        points = np.array([np.concatenate([beta, t]) for beta in betas for t in t_mesh])
        jobs = [
            partial(tester.test_joint, row[:sample.k], y_grid, list(row[sample.k:]), y_tilde, idx)
            for idx, row in enumerate(points)
        ]
        outcomes = self.grid_worker.run(jobs, label="joint points")
        t_names = [f"T({y:g})" for y in y_grid]
        edges = grid.coordinate_edges() + [t_edge] * q
        return self._build(names + t_names, points, outcomes, edges, runs=False)


def beta_confidence_set(sample: Sample, grid: ParamGrid, tuning: TuningParams, runs: bool = False) -> ConfidenceSet:
    return ConfsetBusinessLogic().beta_confidence_set(sample, grid, tuning, runs=runs)


def joint_confidence_set(sample: Sample, grid: ParamGrid, y_grid: Sequence[float], y_tilde: float,
                         tuning: TuningParams, per_y: bool = True) -> ConfidenceSet:
    return ConfsetBusinessLogic().joint_confidence_set(sample, grid, y_grid, y_tilde, tuning, per_y=per_y)
