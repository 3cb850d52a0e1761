import math
import threading
from typing import Optional, Sequence, Tuple

import numpy as np

from app.app_container import app_container
from app.business_logic.data_bl import DataBusinessLogic
from app.business_logic.exceptions import DimensionError, NumericError, TuningError
from app.business_logic.moment_engine_bl import (
    Instrument,
    MomentEngine,
    enumerate_instruments,
    h2hat,
    mbar,
    sigma_bar2,
)
from app.models.instrument_models import ConstantInstrument, InstrumentFamily
from app.models.observation_models import Beta, Sample
from app.models.statuses_enums import BnRuleEnum, DrawModeEnum, KappanRuleEnum
from app.models.test_models import MomentDiagnostics, MomentStats, TestOutcome, TuningParams
from app.utils.error_handler import handle_exceptions
from app.utils.logger import LoggerManager

logger = LoggerManager.get_logger('mi_test_bl')

# default tuning needs ln ln n comfortably positive
SMALL_N = 15

BN_CONSTANTS = {BnRuleEnum.baseline: 0.8, BnRuleEnum.andrews_shi: 0.4}


def default_tuning(n: int, censor_rate: float,
                   bn_rule: BnRuleEnum = BnRuleEnum.baseline,
                   kappan_rule: KappanRuleEnum = KappanRuleEnum.censoring) -> Tuple[float, float]:
    """
    Closed-form GMS tuning.

        B_n     = (c ln n / ln ln n)^{1/2}, c = 0.8 (baseline) or 0.4
        kappa_n = ((1 - p^{1/3})^{2/5} 0.6 ln n)^{1/2}  (censoring)
                  (0.6 ln n)^{1/2}                       (plain)
                  (0.3 ln n)^{1/2}                       (andrews_shi)

    p is the sample censoring rate.
    """
    if n <= SMALL_N:
        raise TuningError(f"default tuning is undefined for n={n} <= {SMALL_N}; set Bn and kappan explicitly")
    if not 0.0 <= censor_rate < 1.0:
        raise TuningError(f"censoring rate must lie in [0, 1), got {censor_rate}")
    log_n = math.log(n)
    Bn = math.sqrt(BN_CONSTANTS[BnRuleEnum(bn_rule)] * log_n / math.log(log_n))
    kappan_rule = KappanRuleEnum(kappan_rule)
    if kappan_rule == KappanRuleEnum.censoring:
        kappan = math.sqrt((1.0 - censor_rate ** (1.0 / 3.0)) ** 0.4 * 0.6 * log_n)
    elif kappan_rule == KappanRuleEnum.plain:
        kappan = math.sqrt(0.6 * log_n)
    else:
        kappan = math.sqrt(0.3 * log_n)
    return Bn, kappan


def resolve_tuning(tuning: TuningParams, n: int, censor_rate: float) -> Tuple[float, float]:
    """Explicit Bn/kappan win; otherwise the rules, times their scale factors."""
    if tuning.Bn is not None and tuning.kappan is not None:
        return tuning.Bn, tuning.kappan
    rule_bn, rule_kappan = default_tuning(n, censor_rate, tuning.bn_rule, tuning.kappan_rule)
    Bn = tuning.Bn if tuning.Bn is not None else rule_bn * tuning.bn_scale
    kappan = tuning.kappan if tuning.kappan is not None else rule_kappan * tuning.kappan_scale
    return Bn, kappan


def standardized_moments(stats: MomentStats) -> np.ndarray:
    """sqrt(n) mbar / sigma_bar, zero where sigma_bar vanishes."""
    z = np.zeros_like(stats.mbar)
    active = stats.active
    z[active] = math.sqrt(stats.n) * stats.mbar[active] / stats.sigma_bar[active]
    return z


def statistic_from_stats(stats: MomentStats) -> float:
    negative = np.minimum(standardized_moments(stats), 0.0)
    return float(np.sum(stats.weights * negative * negative))


def gms_shifts(stats: MomentStats, Bn: float, kappan: float) -> np.ndarray:
    """phi per stacked moment: overall variance of its block times Bn where the moment is clearly slack."""
    selected = stats.active & (standardized_moments(stats) / kappan > 1.0)
    level = np.repeat(np.maximum(stats.overall, 0.0) * Bn, stats.block_size)
    return np.where(selected, level, 0.0)


def gaussian_factor(h2: np.ndarray) -> np.ndarray:
    """F with F F' equal to the symmetrized covariance, negative eigenvalues clipped at 0."""
    H = 0.5 * (h2 + h2.T)
    eigvals, eigvecs = np.linalg.eigh(H)
    return eigvecs * np.sqrt(np.clip(eigvals, 0.0, None))


def simulate_gaussian(h2: np.ndarray, n_reps: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.standard_normal((n_reps, h2.shape[0]))
    return z @ gaussian_factor(h2).T


def quantile_order_statistic(values: np.ndarray, alpha: float, eta: float) -> float:
    """Order statistic ceil(n_reps (1 - alpha + eta)) of the ascending values."""
    ordered = np.sort(values)
    position = min(math.ceil(ordered.shape[0] * (1.0 - alpha + eta)) - 1, ordered.shape[0] - 1)
    return float(ordered[position])


def asymptotic_critical_value(h2: np.ndarray, sigma_bar: np.ndarray, phi: np.ndarray, weights: np.ndarray,
                              alpha: float, eta: float, draws: np.ndarray) -> float:
    """
    Quantile of sum_g w(g) [(v_g + phi_g) / sigma_bar_g]_-^2 with v = draws F'.

    Args:
        h2: covariance kernel of the moments entering the simulation.
        sigma_bar, phi, weights: per-moment vectors aligned with h2.
        draws: (n_reps, G) standard normal draws.
    """
    if not np.all(np.isfinite(h2)):
        raise NumericError("covariance kernel has non-finite entries")
    if h2.shape[0] == 0:
        return 0.0
    v = draws @ gaussian_factor(h2).T
    negative = np.minimum((v + phi) / sigma_bar, 0.0)
    t_asy = np.sum(weights * negative * negative, axis=1)
    return quantile_order_statistic(t_asy, alpha, eta)


class MomentInequalityTest:
    """
    Point tests of H0: beta = b and of joint hypotheses (beta, T(y_1..y_q)) = (b, t)
    on one sample. The moment engine, the tuning and the common Gaussian draws
    are shared by every point tested through one instance.
    """
    def __init__(self, sample: Sample, tuning: TuningParams, family: Optional[InstrumentFamily] = None,
                 skip_zero: bool = False):
        self.logger = logger
        self.config = app_container.config()
        self.sample = sample
        self.tuning = tuning
        self.skip_zero = skip_zero
        self.ts = DataBusinessLogic.transform_continuous(sample)
        self.family = family or enumerate_instruments(tuning.mode, tuning.R, sample.p, sample.discrete_support)
        self.engine = MomentEngine(
            self.ts,
            self.family,
            max_incidence_entries=self.config.MAX_INCIDENCE_ENTRIES,
            max_instruments=self.config.MAX_INSTRUMENTS,
        )
        self.Bn, self.kappan = resolve_tuning(tuning, sample.n, sample.censor_rate)
        self._common_draws = {}
        self._lock = threading.Lock()
        self.logger.info(
            f"Test ready: n={sample.n}, instruments={self.family.size} (occupied {self.engine.occupied.size}), "
            f"Bn={self.Bn:.4f}, kappan={self.kappan:.4f}, draws={tuning.draw_mode.value}"
        )

    def _beta(self, beta) -> Beta:
        if isinstance(beta, Beta):
            if beta.k != self.sample.k:
                raise DimensionError(f"beta has {beta.k} coordinates but the sample has k={self.sample.k}")
            return beta
        return DataBusinessLogic.validate_beta(beta, k=self.sample.k)

    def _kernels(self, beta: Beta, y_grid: Sequence[float], t_vector: Sequence[float], y_tilde: Optional[float]):
        if len(y_grid) != len(t_vector):
            raise DimensionError(f"y grid has {len(y_grid)} points but t vector has {len(t_vector)}")
        if len(y_grid) and (y_tilde is None or not y_tilde > 0):
            raise DimensionError("joint hypotheses need a positive y_tilde")
        kernels = [self.engine.beta_kernel(beta)]
        for y, t in zip(y_grid, t_vector):
            kernels.append(self.engine.dagger_kernel(beta, y, t, y_tilde))
        return kernels

    def stats(self, beta, y_grid: Sequence[float] = (), t_vector: Sequence[float] = (),
              y_tilde: Optional[float] = None, covariance: bool = True) -> MomentStats:
        kernels = self._kernels(self._beta(beta), y_grid, t_vector, y_tilde)
        return self.engine.moment_stats(kernels, self.tuning.epsilon, covariance=covariance)

    def _draws(self, blocks: int, point_index: int) -> np.ndarray:
        columns = blocks * self.engine.occupied.size
        n_reps = self.tuning.n_reps
        if self.tuning.draw_mode == DrawModeEnum.fresh:
            rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([self.tuning.seed, point_index])))
            return rng.standard_normal((n_reps, columns))
        with self._lock:
            if blocks not in self._common_draws:
                rng = np.random.default_rng(self.tuning.seed)
                self._common_draws[blocks] = rng.standard_normal((n_reps, columns))
            return self._common_draws[blocks]

    def critical_value(self, stats: MomentStats, point_index: int = 0, alpha: Optional[float] = None) -> float:
        """GMS critical value for a stats object built with covariance=True."""
        alpha = self.tuning.alpha if alpha is None else alpha
        phi = gms_shifts(stats, self.Bn, self.kappan)
        index = stats.h2_index
        # moments with sigma_bar = 0 drop out of the simulation
        keep = stats.active[index]
        draws = self._draws(stats.blocks, point_index)[:, keep]
        return asymptotic_critical_value(
            stats.h2[np.ix_(keep, keep)],
            stats.sigma_bar[index][keep],
            phi[index][keep],
            stats.weights[index][keep],
            alpha,
            self.tuning.eta,
            draws,
        )

    def _outcome(self, beta, y_grid, t_vector, y_tilde, point_index: int) -> TestOutcome:
        if self.skip_zero:
            light = self.stats(beta, y_grid, t_vector, y_tilde, covariance=False)
            if statistic_from_stats(light) == 0.0:
                return TestOutcome(
                    statistic=0.0, critical_value=None, reject=False, Bn=self.Bn, kappan=self.kappan,
                    seed=self.tuning.seed, diagnostics=self._diagnostics(light),
                )
        stats = self.stats(beta, y_grid, t_vector, y_tilde, covariance=True)
        statistic = statistic_from_stats(stats)
        critical = self.critical_value(stats, point_index)
        if not stats.active.all():
            self.logger.debug(f"{int((~stats.active).sum())} moments have zero modified variance and were dropped")
        return TestOutcome(
            statistic=statistic,
            critical_value=critical,
            reject=statistic > critical,
            Bn=self.Bn,
            kappan=self.kappan,
            seed=self.tuning.seed,
            diagnostics=self._diagnostics(stats),
        )

    def _diagnostics(self, stats: MomentStats) -> MomentDiagnostics:
        return MomentDiagnostics(
            mbar=stats.mbar,
            sigma_bar=stats.sigma_bar,
            selected=gms_shifts(stats, self.Bn, self.kappan) > 0,
            active=stats.active,
        )

    def test_beta(self, beta, point_index: int = 0) -> TestOutcome:
        return self._outcome(beta, (), (), None, point_index)

    def test_joint(self, beta, y_grid: Sequence[float], t_vector: Sequence[float], y_tilde: float,
                   point_index: int = 0) -> TestOutcome:
        return self._outcome(beta, list(y_grid), list(t_vector), y_tilde, point_index)


def test_statistic(sample: Sample, beta, family: InstrumentFamily, epsilon: float) -> float:
    """Weighted sum of squared negative parts of the standardized beta-moments."""
    ts = DataBusinessLogic.transform_continuous(sample)
    engine = MomentEngine(ts, family)
    beta = DataBusinessLogic.validate_beta(beta.vector if isinstance(beta, Beta) else beta, k=sample.k)
    stats = engine.moment_stats([engine.beta_kernel(beta)], epsilon, covariance=False)
    return statistic_from_stats(stats)


def joint_test_statistic(sample: Sample, beta, y_grid: Sequence[float], t_vector: Sequence[float],
                         y_tilde: float, family: InstrumentFamily, epsilon: float) -> float:
    if len(y_grid) != len(t_vector):
        raise DimensionError(f"y grid has {len(y_grid)} points but t vector has {len(t_vector)}")
    ts = DataBusinessLogic.transform_continuous(sample)
    engine = MomentEngine(ts, family)
    beta = DataBusinessLogic.validate_beta(beta.vector if isinstance(beta, Beta) else beta, k=sample.k)
    kernels = [engine.beta_kernel(beta)] + [engine.dagger_kernel(beta, y, t, y_tilde) for y, t in zip(y_grid, t_vector)]
    return statistic_from_stats(engine.moment_stats(kernels, epsilon, covariance=False))


def gms_shift(sample, beta, g: Instrument, Bn: float, kappan: float, epsilon: float) -> float:
    """phi(g) = sigma_hat2(beta, 1) Bn if kappan^{-1} sqrt(n) mbar / sigma_bar > 1, else 0."""
    variance = sigma_bar2(sample, beta, g, epsilon)
    if variance <= 0:
        return 0.0
    n = sample.n
    ratio = math.sqrt(n) * mbar(sample, beta, g) / math.sqrt(variance) / kappan
    if ratio > 1.0:
        one = ConstantInstrument(value=1)
        return max(h2hat(sample, beta, one, one), 0.0) * Bn
    return 0.0


@handle_exceptions(logger=logger)
def simulate_critical_value(sample: Sample, beta, family: InstrumentFamily, tuning: TuningParams) -> float:
    tester = MomentInequalityTest(sample, tuning, family=family)
    return tester.critical_value(tester.stats(beta))


@handle_exceptions(logger=logger)
def point_test(sample: Sample, beta, tuning: TuningParams) -> TestOutcome:
    outcome = MomentInequalityTest(sample, tuning).test_beta(beta)
    logger.info(f"Point test: statistic={outcome.statistic:.6g}, critical value={outcome.critical_value}, reject={outcome.reject}")
    return outcome


@handle_exceptions(logger=logger)
def joint_point_test(sample: Sample, beta, y_grid: Sequence[float], t_vector: Sequence[float],
                     y_tilde: float, tuning: TuningParams) -> TestOutcome:
    outcome = MomentInequalityTest(sample, tuning).test_joint(beta, y_grid, t_vector, y_tilde)
    logger.info(f"Joint test: statistic={outcome.statistic:.6g}, critical value={outcome.critical_value}, reject={outcome.reject}")
    return outcome
