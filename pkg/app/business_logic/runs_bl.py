from functools import partial
from typing import List, Optional, Tuple

import numpy as np
import pandas as pd

from app.app_container import app_container
from app.business_logic.confset_bl import ConfsetBusinessLogic
from app.business_logic.data_bl import DataBusinessLogic
from app.business_logic.exceptions import ConfigError, GridError, IngestionError, ResourceError
from app.business_logic.mi_test_bl import MomentInequalityTest
from app.business_logic.moment_engine_bl import enumerate_instruments
from app.business_logic.population_bl import COORDINATE_NAMES, PopulationBusinessLogic
from app.business_logic.validators.run_validators import RunValidators
from app.business_logic.validators.sample_validators import SampleValidators
from app.models.confset_models import AxisRange, ParamGrid
from app.models.mapper import ResultMapper
from app.models.observation_models import Sample
from app.models.run_models import ColumnSchema, ResultBundle, RunConfig, TuningVariant, YGridSpec
from app.models.statuses_enums import CommandEnum
from app.models.test_models import TuningParams
from app.utils.error_handler import handle_exceptions
from app.utils.logger import LoggerManager
from app.utils.object_utils import get_fingerprint, to_jsonable
from app.utils.system_info import system_info
from app.utils.time_utils import Stopwatch
from app.workers.grid_worker import GridWorker

logger = LoggerManager.get_logger('runs_bl')

# normalization anchor of the population designs
POPULATION_Y_TILDE = 0.77

# fields that describe where and how fast a run executes, not what it computes
EXECUTION_FIELDS = {"threads", "out", "dry_run"}


def default_grid(command: CommandEnum, k: int) -> ParamGrid:
    if command == CommandEnum.identify:
        return ParamGrid(sign1=[1, -1], free=[AxisRange(low=-1.0, high=8.0, step=0.01)])
    if command == CommandEnum.montecarlo:
        return ParamGrid(sign1=[1], free=[AxisRange(low=-1.0, high=9.0, step=0.5)])
    if command == CommandEnum.empirical:
        return ParamGrid(sign1=[1, -1], free=[AxisRange(low=0.0, high=100.0, step=0.1)])
    return ParamGrid(sign1=[1, -1], free=[AxisRange(low=-10.0, high=10.0, step=0.1)] * (k - 1))


def default_t_axis(command: CommandEnum) -> AxisRange:
    if command == CommandEnum.identify:
        return AxisRange(low=-10.0, high=10.0, step=0.02)
    return AxisRange(low=-10.0, high=3.0, step=0.1)


def default_y_grid(command: CommandEnum) -> YGridSpec:
    if command == CommandEnum.identify:
        return YGridSpec(low=0.1, high=10.0, count=25, log=True)
    # durations in days for the empirical application
    return YGridSpec(low=30.0, high=900.0, count=30, log=False)


def robustness_variants() -> List[TuningVariant]:
    """Baseline plus the tuning perturbations of the rejection-frequency robustness table."""
    variants = [
        TuningVariant(label="baseline"),
        TuningVariant(label="epsilon=0.001", overrides={"epsilon": 0.001}),
        TuningVariant(label="epsilon=0.00001", overrides={"epsilon": 0.00001}),
        TuningVariant(label="R=3", overrides={"R": 3}),
        TuningVariant(label="R=7", overrides={"R": 7}),
    ]
    for n in (100, 500, 1000):
        for epsilon in ("0.001", "0.0001", "0.00001"):
            variants.append(TuningVariant(label=f"n={n},epsilon={epsilon}", overrides={"epsilon": float(epsilon)}, n=n))
    variants += [
        TuningVariant(label="Bn/2", overrides={"bn_scale": 0.5}),
        TuningVariant(label="2Bn", overrides={"bn_scale": 2.0}),
        TuningVariant(label="kappan/2", overrides={"kappan_scale": 0.5}),
        TuningVariant(label="2kappan", overrides={"kappan_scale": 2.0}),
        TuningVariant(label="(Bn,kappan)/2", overrides={"bn_scale": 0.5, "kappan_scale": 0.5}),
        TuningVariant(label="2(Bn,kappan)", overrides={"bn_scale": 2.0, "kappan_scale": 2.0}),
        TuningVariant(label="kappan plain", overrides={"kappan_rule": "plain"}),
    ]
    return variants


def replication_seed(base_seed: int, rep: int) -> int:
    return int(np.random.SeedSequence([base_seed, rep]).generate_state(1)[0])


class RunsBusinessLogic:
    """
    Orchestrates CLI commands: resolves defaults, runs the computation and
    packs results into a ResultBundle.
    """
    def __init__(self, grid_worker: Optional[GridWorker] = None, data_bl: Optional[DataBusinessLogic] = None):
        self.logger = logger
        self.config = app_container.config()
        self.grid_worker = grid_worker or app_container.grid_worker()
        self.data_bl = data_bl or DataBusinessLogic()
        self.population_bl = PopulationBusinessLogic()
        self.confset_bl = ConfsetBusinessLogic(self.grid_worker)
        self.run_validators = RunValidators(self.config.MAX_GRID_POINTS)
        self.sample_validators = SampleValidators()

    # ---------- configuration ----------

    def materialize(self, config: RunConfig, k: Optional[int] = None) -> RunConfig:
        """Fill every default that does not need the data."""
        update = {"tuning": config.tuning.model_copy(update={"seed": config.seed})}
        command = config.command
        if config.grid is None and command in (CommandEnum.identify, CommandEnum.montecarlo, CommandEnum.empirical):
            update["grid"] = default_grid(command, 2)
        elif config.grid is None and k is not None and command in (CommandEnum.confset, CommandEnum.joint):
            update["grid"] = default_grid(command, k)
        if command in (CommandEnum.identify, CommandEnum.joint) or (command == CommandEnum.empirical and config.include_joint):
            if config.y_grid is None:
                update["y_grid"] = default_y_grid(command)
            if config.t_axis is None:
                update["t_axis"] = default_t_axis(command)
        if command == CommandEnum.identify and config.y_tilde is None:
            update["y_tilde"] = POPULATION_Y_TILDE
        if command == CommandEnum.empirical and config.data is not None and not config.data.columns.covariates:
            columns = ColumnSchema(
                duration=config.data.columns.duration,
                event=config.data.columns.event,
                continuous=["age"],
                discrete=["transplant"],
                group="transplant",
            )
            update["data"] = config.data.model_copy(update={"columns": columns})
        return config.model_copy(update=update)

    def _validate(self, config: RunConfig):
        if not self.run_validators.validate_run(config):
            raise ConfigError(f"invalid configuration for '{config.command.value}'; see the warnings above")

    def _load_sample(self, config: RunConfig) -> Sample:
        if config.data is not None:
            sample, _ = self.data_bl.load_csv(config.data.path, config.data.columns)
        else:
            sample = self.population_bl.simulate_dgp(config.dgp, config.n, seed=config.seed)
        if self.sample_validators.validate_sample(sample) is False:
            raise IngestionError("sample failed validation; see the warnings above")
        return sample

    @staticmethod
    def _with_t_axis(grid: ParamGrid, t_axis: AxisRange) -> ParamGrid:
        return grid.model_copy(update={"t_axis": t_axis})

    def _grid_for(self, config: RunConfig, sample: Sample) -> ParamGrid:
        grid = config.grid or default_grid(config.command, sample.k)
        if not self.run_validators.validate_grid_dimension(grid, sample.k):
            raise GridError(f"grid has {grid.k} coordinates but the data have k={sample.k}")
        return grid

    @staticmethod
    def echo(config: RunConfig) -> dict:
        return to_jsonable(config.model_dump(mode="python", exclude=EXECUTION_FIELDS))

    def _bundle(self, config: RunConfig, payload: dict, series: dict, stopwatch: Stopwatch) -> ResultBundle:
        echo = self.echo(config)
        meta = {
            "command": config.command.value,
            "wall_clock": stopwatch.to_dict(),
            "system": system_info.get_system_info(),
            "fingerprint": get_fingerprint(echo),
            "threads": self.grid_worker.max_workers,
            "worker": self.grid_worker.last_metrics,
        }
        return ResultBundle(
            command=config.command,
            config=echo,
            seed=config.seed,
            payload=to_jsonable(payload),
            series=series,
            meta=to_jsonable(meta),
        )

    # ---------- dry run ----------

    def _design_layout(self, config: RunConfig) -> Tuple[int, list]:
        if config.data is not None:
            sample, _ = self.data_bl.load_csv(config.data.path, config.data.columns)
            return sample.p, sample.discrete_support
        spec = config.dgp
        if spec.is_discrete:
            return 0, [tuple(row) for row in spec.support_points().tolist()]
        return 1, [(0.0,), (1.0,)]

    @handle_exceptions(logger=logger)
    def dry_run(self, config: RunConfig) -> dict:
        """Grid size and instrument counts, without computing anything."""
        config = self.materialize(config)
        report = {"command": config.command.value}
        if config.command == CommandEnum.fetch_data:
            return report
        p, support = self._design_layout(config)
        k = p + len(support[0])
        config = self.materialize(config, k=k)
        grid = config.grid or default_grid(config.command, k)
        points = grid.size
        if config.command in (CommandEnum.joint,) or (config.command == CommandEnum.empirical and config.include_joint):
            points *= config.t_axis.count * len(config.y_grid.grid())
        if config.command == CommandEnum.test:
            points = 1
        if config.command == CommandEnum.montecarlo:
            points *= config.replications * len(config.variants)
        report["grid_points"] = points
        if config.command != CommandEnum.identify:
            family = enumerate_instruments(config.tuning.mode, config.tuning.R, p, support)
            report["instruments_per_r"] = family.counts_per_r()
            report["instruments_total"] = family.size
        else:
            report["support_points"] = len(support)
        self.logger.info(f"Dry run: {report}")
        return report

    # ---------- commands ----------

    @handle_exceptions(logger=logger)
    def run_identify(self, config: RunConfig) -> ResultBundle:
        with Stopwatch() as stopwatch:
            config = self.materialize(config)
            self._validate(config)
            table = self.population_bl.population_table(config.dgp)
            bound = self.population_bl.compute_BI(table, config.grid, config.tolerance)
            y_values = config.y_grid.grid()
            bound = self.population_bl.compute_TBI(table, bound, y_values, config.t_axis.values(), config.y_tilde)
            payload = {
                "model": config.dgp.model.value,
                "support": config.dgp.support.value,
                "true_beta": config.dgp.true_beta,
                "draws_per_point": table.draws,
                "bound": ResultMapper.bound_to_payload(bound),
            }
            series = {
                "membership": ResultMapper.membership_to_frame(bound, COORDINATE_NAMES),
                "intervals": ResultMapper.intervals_to_frame(bound.intervals),
                "envelope": ResultMapper.envelope_to_frame(bound),
            }
        return self._bundle(config, payload, series, stopwatch)

    @handle_exceptions(logger=logger)
    def run_test(self, config: RunConfig) -> ResultBundle:
        with Stopwatch() as stopwatch:
            config = self.materialize(config)
            self._validate(config)
            sample = self._load_sample(config)
            beta = DataBusinessLogic.validate_beta(config.beta, k=sample.k)
            tester = MomentInequalityTest(sample, config.tuning)
            payload = {"n": sample.n, "censor_rate": sample.censor_rate, "beta": beta.vector}
            if config.t_vector is not None:
                if config.y_tilde is None:
                    config = config.model_copy(update={"y_tilde": float(np.median(sample.y0))})
                outcome = tester.test_joint(beta, config.y_grid.values, config.t_vector, config.y_tilde)
                payload.update({"y_grid": config.y_grid.values, "t_vector": config.t_vector, "y_tilde": config.y_tilde})
            else:
                outcome = tester.test_beta(beta)
            payload["outcome"] = ResultMapper.outcome_to_payload(outcome)
            self.logger.info(f"Test at beta={beta.vector.tolist()}: {'reject' if outcome.reject else 'accept'}")
        return self._bundle(config, payload, {}, stopwatch)

    @handle_exceptions(logger=logger)
    def run_confset(self, config: RunConfig) -> ResultBundle:
        with Stopwatch() as stopwatch:
            config = self.materialize(config)
            self._validate(config)
            sample = self._load_sample(config)
            grid = self._grid_for(config, sample)
            config = config.model_copy(update={"grid": grid})
            cs = self.confset_bl.beta_confidence_set(sample, grid, config.tuning)
            payload = {"n": sample.n, "censor_rate": sample.censor_rate, "confidence_set": ResultMapper.confidence_set_to_payload(cs)}
            series = {
                "points": ResultMapper.confidence_set_to_frame(cs),
                "intervals": ResultMapper.intervals_to_frame(cs.projections),
            }
        return self._bundle(config, payload, series, stopwatch)

    def _joint(self, config: RunConfig, sample: Sample, grid: ParamGrid, beta_candidates=None):
        y_values = [float(y) for y in config.y_grid.grid()]
        cs = self.confset_bl.joint_confidence_set(
            sample, self._with_t_axis(grid, config.t_axis), y_values, config.y_tilde, config.tuning,
            per_y=config.per_y, beta_candidates=beta_candidates,
        )
        return cs, y_values

    @handle_exceptions(logger=logger)
    def run_joint(self, config: RunConfig) -> ResultBundle:
        with Stopwatch() as stopwatch:
            config = self.materialize(config)
            self._validate(config)
            sample = self._load_sample(config)
            grid = self._grid_for(config, sample)
            config = config.model_copy(update={"grid": grid})
            if config.y_tilde is None:
                config = config.model_copy(update={"y_tilde": float(np.median(sample.y0))})
            cs, y_values = self._joint(config, sample, grid)
            payload = {
                "n": sample.n,
                "y_tilde": config.y_tilde,
                "joint_set": ResultMapper.confidence_set_to_payload(cs),
            }
            series = {"intervals": ResultMapper.intervals_to_frame(cs.projections)}
            if config.per_y:
                series["bands"] = ResultMapper.joint_bands_to_frame(cs, y_values)
        return self._bundle(config, payload, series, stopwatch)

    def _replication(self, spec, n: int, tuning: TuningParams, betas: np.ndarray, seed: int):
        sample = self.population_bl.simulate_dgp(spec, n, seed=seed)
        tester = MomentInequalityTest(sample, tuning.model_copy(update={"seed": seed}), skip_zero=True)
        rejections = np.array([tester.test_beta(beta, point_index=idx).reject for idx, beta in enumerate(betas)])
        return rejections, sample.censor_rate

    @staticmethod
    def _variant_tuning(tuning: TuningParams, variant: TuningVariant) -> TuningParams:
        try:
            return TuningParams(**{**tuning.model_dump(), **variant.overrides})
        except Exception as e:
            raise ConfigError(f"variant '{variant.label}': {str(e)}") from e

    @handle_exceptions(logger=logger)
    def run_montecarlo(self, config: RunConfig) -> ResultBundle:
        """
        Rejection frequencies over replications for every beta grid point and
        tuning variant. Replication r uses seed SeedSequence([seed, r]) for both
        the sample and the critical-value draws, shared across variants.
        """
        with Stopwatch() as stopwatch:
            config = self.materialize(config)
            self._validate(config)
            if not self.run_validators.validate_grid_size(config.grid, config.replications * len(config.variants)):
                raise ResourceError("Monte Carlo grid exceeds MAX_GRID_POINTS")
            betas = config.grid.beta_points()
            seeds = [replication_seed(config.seed, rep) for rep in range(config.replications)]
            variants, frames = [], []
            for variant in config.variants:
                tuning = self._variant_tuning(config.tuning, variant)
                n = variant.n or config.n
                jobs = [partial(self._replication, config.dgp, n, tuning, betas, seed) for seed in seeds]
                results = self.grid_worker.run(jobs, label=f"replications ({variant.label})")
                rejections = np.vstack([r for r, _ in results])
                censor_rates = np.array([c for _, c in results])
                frequency = rejections.mean(axis=0)
                se = np.sqrt(frequency * (1.0 - frequency) / config.replications)
                variants.append({
                    "label": variant.label,
                    "n": n,
                    "overrides": variant.overrides,
                    "rejection_frequency": frequency,
                    "standard_error": se,
                    "mean_censor_rate": float(censor_rates.mean()),
                    "censor_rates": censor_rates,
                })
                frame = pd.DataFrame(betas, columns=COORDINATE_NAMES)
                frame.insert(0, "variant", variant.label)
                frame["rejection_frequency"] = frequency
                frame["standard_error"] = se
                frames.append(frame)
                self.logger.info(f"Variant {variant.label}: rejection frequencies {np.round(frequency, 3).tolist()}")
            payload = {
                "model": config.dgp.model.value,
                "replications": config.replications,
                "beta_points": betas,
                "variants": variants,
            }
            series = {"rejection": pd.concat(frames, ignore_index=True)}
        return self._bundle(config, payload, series, stopwatch)

    @handle_exceptions(logger=logger)
    def run_empirical(self, config: RunConfig) -> ResultBundle:
        """
        Beta confidence set on a data file and, with include_joint, marginal
        T(y) bands. The joint step searches only the betas accepted by the
        marginal set.
        """
        with Stopwatch() as stopwatch:
            config = self.materialize(config)
            self._validate(config)
            sample, report = self.data_bl.load_csv(config.data.path, config.data.columns)
            if self.sample_validators.validate_sample(sample) is False:
                raise IngestionError("sample failed validation; see the warnings above")
            grid = self._grid_for(config, sample)
            cs = self.confset_bl.beta_confidence_set(sample, grid, config.tuning)
            payload = {
                "ingestion": report.model_dump(),
                "confidence_set": ResultMapper.confidence_set_to_payload(cs),
            }
            series = {
                "points": ResultMapper.confidence_set_to_frame(cs),
                "intervals": ResultMapper.intervals_to_frame(cs.projections),
            }
            if config.include_joint:
                if config.y_tilde is None:
                    config = config.model_copy(update={"y_tilde": float(np.median(sample.y0))})
                if cs.is_empty:
                    self.logger.warning("Beta confidence set is empty; skipping the joint T(y) bands")
                    payload["joint_set"] = None
                else:
                    joint, y_values = self._joint(config, sample, grid, beta_candidates=cs.accepted_points)
                    payload["y_tilde"] = config.y_tilde
                    payload["joint_set"] = ResultMapper.confidence_set_to_payload(joint)
                    if config.per_y:
                        series["bands"] = ResultMapper.joint_bands_to_frame(joint, y_values)
        return self._bundle(config, payload, series, stopwatch)

    @handle_exceptions(logger=logger)
    def fetch_data(self, config: RunConfig) -> ResultBundle:
        with Stopwatch() as stopwatch:
            dest = config.data.path if config.data is not None else None
            path = self.data_bl.samples_db.fetch_stanford_heart(dest)
            sample, report = self.data_bl.load_csv(path, ColumnSchema(continuous=["age"], discrete=["transplant"], group="transplant"))
            payload = {"path": path, "ingestion": report.model_dump()}
        return self._bundle(config, payload, {}, stopwatch)

    def run(self, config: RunConfig) -> ResultBundle:
        handlers = {
            CommandEnum.identify: self.run_identify,
            CommandEnum.test: self.run_test,
            CommandEnum.confset: self.run_confset,
            CommandEnum.joint: self.run_joint,
            CommandEnum.montecarlo: self.run_montecarlo,
            CommandEnum.empirical: self.run_empirical,
            CommandEnum.fetch_data: self.fetch_data,
        }
        self.logger.info(f"Running command '{config.command.value}' with seed {config.seed}")
        return handlers[config.command](config)
