import math
from typing import Optional, Sequence

import numpy as np

from app.business_logic.confset_bl import project_values
from app.business_logic.exceptions import DgpSpecError, DimensionError, GridError
from app.business_logic.moment_engine_bl import INDEX_DECIMALS
from app.models.confset_models import ParamGrid
from app.models.observation_models import Sample
from app.models.population_models import BoundResult, DgpSpec, EnvelopePoint, PopulationTable
from app.models.statuses_enums import EnvelopeStatusEnum
from app.utils.error_handler import handle_exceptions
from app.utils.logger import LoggerManager

logger = LoggerManager.get_logger('population_bl')

COORDINATE_NAMES = ["beta_x1", "beta_x2"]


def _latent(spec: DgpSpec, x1: np.ndarray, x2: np.ndarray, log_u, log_v, log_w):
    """log Y* and log C; broadcasting over covariates and draws."""
    b1, b2 = spec.beta
    g0, g1, g2 = spec.gamma
    log_y = b1 * x1 + b2 * x2 + log_u + log_v
    if not spec.censored:
        return log_y, None
    log_c = spec.alpha0 + (g0 + g1 * x1 + g2 * x2) * log_u + log_w
    return log_y, log_c


def _observe(log_y: np.ndarray, log_c: Optional[np.ndarray]):
    # ties Y* = C count as uncensored
    if log_c is None:
        d = np.ones(log_y.shape, dtype=np.int8)
        log_y0 = log_y
    else:
        d = (log_y <= log_c).astype(np.int8)
        log_y0 = np.minimum(log_y, log_c)
    return np.maximum(np.exp(log_y0), np.finfo(float).tiny), d


class PopulationBusinessLogic:
    """
    Simulation of the MPH designs and population-level computation of B_I
    and of the lower envelope of T_{B_I}(y).
    """
    def __init__(self):
        self.logger = logger

    @handle_exceptions(logger=logger)
    def simulate_dgp(self, spec: DgpSpec, n: int, seed: Optional[int] = None) -> Sample:
        """
        Draw n observations (min(Y*, C), I[Y* <= C], X1, X2).

        Args:
            spec: the design.
            n: sample size.
            seed: overrides spec.seed (Monte Carlo replications pass their own).
        """
        if n < 1:
            raise DgpSpecError(f"n must be at least 1, got {n}")
        rng = np.random.default_rng(spec.seed if seed is None else seed)
        if spec.is_discrete:
            x1 = rng.choice(spec.x1_values(), size=n)
        else:
            x1 = rng.normal(0.0, spec.x1_sd, size=n)
        x2 = rng.integers(0, 2, size=n).astype(float)
        log_u, log_v, log_w = np.log(rng.exponential(1.0, size=(3, n)))
        y0, d = _observe(*_latent(spec, x1, x2, log_u, log_v, log_w))

        x = np.column_stack([x1, x2])
        if spec.is_discrete:
            p, support = 0, [tuple(row) for row in spec.support_points().tolist()]
        else:
            p, support = 1, [(0.0,), (1.0,)]
        sample = Sample(y0=y0, d=d, x=x, p=p, discrete_support=support, covariate_names=["x1", "x2"])
        self.logger.debug(f"Simulated {spec.model.value} with n={n}: censoring rate {sample.censor_rate:.3f}")
        return sample

    @handle_exceptions(logger=logger)
    def population_table(self, spec: DgpSpec, draws_per_point: Optional[int] = None) -> PopulationTable:
        """
        Conditional laws of (Y0, D) at every support point from one set of
        common (U, V, W) draws, and P(Y1i >= Y0j | x_i, x_j) averaged over
        ordered draw pairs a != b.
        """
        if not spec.is_discrete:
            raise DgpSpecError("population computation needs a discrete X1 support; set support to i, ii or iii")
        N = draws_per_point or spec.draws_per_point
        if N < 2:
            raise DgpSpecError(f"draws_per_point must be at least 2, got {N}")
        rng = np.random.default_rng(spec.seed)
        log_u, log_v, log_w = np.log(rng.exponential(1.0, size=(3, N)))
        points = spec.support_points()
        x1, x2 = points[:, :1], points[:, 1:]
        y0, d = _observe(*_latent(spec, x1, x2, log_u, log_v, log_w))

        S = points.shape[0]
        censored = d == 0
        pair_prob = np.empty((S, S))
        for t in range(S):
            sorted_t = np.sort(y0[t])
            # number of b with Y0_tb <= Y1_sa; every b when a is censored
            counts = np.where(censored, N, np.searchsorted(sorted_t, y0, side="right"))
            same_draw = censored | (y0 >= y0[t])
            pair_prob[:, t] = (counts.sum(axis=1) - same_draw.sum(axis=1)) / (N * (N - 1))
        self.logger.info(
            f"Population table for {spec.model.value}/{spec.support.value}: {S} support points x {N} draws, "
            f"censoring rate {float(censored.mean()):.3f}"
        )
        return PopulationTable(spec=spec, points=points, y0=y0, d=d, pair_prob=pair_prob)

    @staticmethod
    def default_tolerance(table: PopulationTable) -> float:
        # two Monte Carlo standard errors of a probability near 1/2
        return 2.0 * math.sqrt(0.25 / table.draws)

    @handle_exceptions(logger=logger)
    def compute_BI(self, table: PopulationTable, beta_grid: ParamGrid, tolerance: Optional[float] = None) -> BoundResult:
        """
        beta is in B_I iff every support pair with x_i'beta >= x_j'beta has
        P(Y1i >= Y0j | x_i, x_j) >= 1/2 - tolerance.
        """
        if beta_grid.k != table.points.shape[1]:
            raise DimensionError(f"grid has {beta_grid.k} coordinates, support has {table.points.shape[1]}")
        if beta_grid.size == 0:
            raise GridError("search grid is empty")
        tolerance = self.default_tolerance(table) if tolerance is None else tolerance
        betas = beta_grid.beta_points()
        violating = table.pair_prob < 0.5 - tolerance
        uninformative = not bool(violating.any())
        index = np.round(table.points @ betas.T, INDEX_DECIMALS)
        member = np.empty(betas.shape[0], dtype=bool)
        for m in range(betas.shape[0]):
            xb = index[:, m]
            member[m] = not np.any(violating & (xb[:, None] >= xb[None, :]))

        edges = beta_grid.coordinate_edges()
        intervals = {
            name: [i.model_dump() for i in project_values(betas[:, c], member, edges[c])]
            for c, name in enumerate(COORDINATE_NAMES)
        }
        if uninformative:
            self.logger.warning("No support pair restricts beta; B_I is the whole grid")
        self.logger.info(f"B_I holds {int(member.sum())} of {betas.shape[0]} grid points: {intervals[COORDINATE_NAMES[-1]]}")
        return BoundResult(
            beta_points=betas,
            member=member,
            tolerance=tolerance,
            uninformative=uninformative,
            intervals=intervals,
        )

    @handle_exceptions(logger=logger)
    def compute_TBI(self, table: PopulationTable, bound: BoundResult, y_grid: Sequence[float],
                    t_grid: np.ndarray, y_tilde: float) -> BoundResult:
        """
        Lower envelope of T_{B_I}(y) on a t grid.

        For beta in B_I, t is in T_{I,beta}(y) iff every support pair with
        x_i'beta - x_j'beta >= t has P(Y1i >= y | x_i) >= P(Y0j >= y~ | x_j).
        That set is (t*, +inf) with t* the largest difference over violating
        pairs, so the envelope is min over B_I of t*.
        """
        if not y_tilde > 0:
            raise DgpSpecError(f"y_tilde must be positive, got {y_tilde}")
        t_grid = np.asarray(t_grid, dtype=float)
        if t_grid.size == 0:
            raise GridError("t grid is empty")
        members = bound.members
        index = np.round(table.points @ members.T, INDEX_DECIMALS)
        diffs = np.round(index.T[:, :, None] - index.T[:, None, :], INDEX_DECIMALS)
        p0 = table.p0_geq(y_tilde)
        envelope = []
        for y in y_grid:
            y = float(y)
            true_value = round(table.spec.t_scale * (math.log(y) - math.log(y_tilde)), INDEX_DECIMALS)
            if members.shape[0] == 0:
                envelope.append(EnvelopePoint(y=y, status=EnvelopeStatusEnum.empty, finite_lower_bound=False, true_value=true_value))
                continue
            violating = table.p1_geq(y)[:, None] < p0[None, :] - bound.tolerance
            thresholds = np.where(violating[None, :, :], diffs, -np.inf).max(axis=(1, 2))
            threshold = float(thresholds.min())
            if threshold == -np.inf:
                point = EnvelopePoint(y=y, status=EnvelopeStatusEnum.unbounded_below, finite_lower_bound=False,
                                      true_value=true_value)
            elif threshold >= t_grid[-1]:
                point = EnvelopePoint(y=y, threshold=threshold, status=EnvelopeStatusEnum.above_grid,
                                      finite_lower_bound=True, true_value=true_value)
            else:
                lower = float(t_grid[np.searchsorted(t_grid, threshold, side="right")])
                point = EnvelopePoint(y=y, lower=lower, threshold=threshold, status=EnvelopeStatusEnum.finite,
                                      finite_lower_bound=True, true_value=true_value)
            envelope.append(point)
        self.logger.info(f"T_B_I envelope over {len(envelope)} y values, y_tilde={y_tilde}")
        return bound.model_copy(update={"envelope": envelope, "y_tilde": y_tilde, "t_grid": t_grid})


def simulate_dgp(spec: DgpSpec, n: int, seed: Optional[int] = None) -> Sample:
    return PopulationBusinessLogic().simulate_dgp(spec, n, seed)


def population_table(spec: DgpSpec, draws_per_point: Optional[int] = None) -> PopulationTable:
    return PopulationBusinessLogic().population_table(spec, draws_per_point)


def compute_BI(table: PopulationTable, beta_grid: ParamGrid, tolerance: Optional[float] = None) -> BoundResult:
    return PopulationBusinessLogic().compute_BI(table, beta_grid, tolerance)


def compute_TBI(table: PopulationTable, bound: BoundResult, y_grid: Sequence[float], t_grid: np.ndarray,
                y_tilde: float) -> BoundResult:
    return PopulationBusinessLogic().compute_TBI(table, bound, y_grid, t_grid, y_tilde)
