from typing import Any, Dict, List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.models.confset_models import AxisRange, ParamGrid
from app.models.population_models import DgpSpec
from app.models.statuses_enums import CommandEnum
from app.models.test_models import TuningParams


class ColumnSchema(BaseModel):
    """
    Column mapping of a duration CSV file.
    Fields:
        - duration: observed duration column
        - event: event indicator column, 1 = event, 0 = censored
        - continuous: continuous covariate columns, in x order
        - discrete: discrete covariate columns, in x order after the continuous block
        - group: optional column used to report per-group censoring rates
        - discrete_support: declared support of the discrete block (superset of observed tuples)
    """
    duration: str = "time"
    event: str = "death"
    continuous: List[str] = Field(default_factory=list)
    discrete: List[str] = Field(default_factory=list)
    group: Optional[str] = None
    discrete_support: Optional[List[List[float]]] = None

    @property
    def covariates(self) -> List[str]:
        return list(self.continuous) + list(self.discrete)


class DataSource(BaseModel):
    path: str
    columns: ColumnSchema = Field(default_factory=ColumnSchema)


class YGridSpec(BaseModel):
    """
    Durations at which T(y) is bounded: explicit values, or count points
    between low and high, log-spaced when log is set.
    """
    values: Optional[List[float]] = None
    low: float = Field(0.1, gt=0)
    high: float = Field(10.0, gt=0)
    count: int = Field(25, ge=1)
    log: bool = True

    def grid(self) -> np.ndarray:
        if self.values:
            return np.array(self.values, dtype=float)
        if self.log:
            return np.round(np.exp(np.linspace(np.log(self.low), np.log(self.high), self.count)), 10)
        return np.round(np.linspace(self.low, self.high, self.count), 10)


class TuningVariant(BaseModel):
    """A named set of TuningParams overrides for the robustness table."""
    label: str
    overrides: Dict[str, Any] = Field(default_factory=dict)
    n: Optional[int] = Field(None, ge=3)


class RunConfig(BaseModel):
    """
    Resolved configuration of one CLI run. Exactly one of data and dgp is set
    for commands that need a sample or a design.
    """
    model_config = ConfigDict(extra="forbid")

    command: CommandEnum
    data: Optional[DataSource] = None
    dgp: Optional[DgpSpec] = None
    tuning: TuningParams = Field(default_factory=TuningParams)
    grid: Optional[ParamGrid] = None
    y_grid: Optional[YGridSpec] = None
    y_tilde: Optional[float] = Field(None, gt=0)
    t_axis: Optional[AxisRange] = None
    tolerance: Optional[float] = Field(None, ge=0)
    beta: Optional[List[float]] = None
    t_vector: Optional[List[float]] = None
    per_y: bool = True
    include_joint: bool = False
    n: int = Field(250, ge=3)
    replications: int = Field(200, ge=1)
    variants: List[TuningVariant] = Field(default_factory=lambda: [TuningVariant(label="baseline")])
    seed: int = Field(0, ge=0)
    threads: int = Field(1, ge=1)
    out: str = "results"
    dry_run: bool = False

    @model_validator(mode="after")
    def _check_sources(self):
        needs_data = self.command in (CommandEnum.confset, CommandEnum.joint, CommandEnum.empirical)
        needs_dgp = self.command in (CommandEnum.identify, CommandEnum.montecarlo)
        if self.data is not None and self.dgp is not None:
            raise ValueError("set exactly one of 'data' and 'dgp'")
        if needs_data and self.data is None:
            raise ValueError(f"command '{self.command.value}' requires 'data'")
        if needs_dgp and self.dgp is None:
            raise ValueError(f"command '{self.command.value}' requires 'dgp'")
        if self.command == CommandEnum.test and self.data is None and self.dgp is None:
            raise ValueError("command 'test' requires 'data' or 'dgp'")
        if self.command == CommandEnum.test and self.beta is None:
            raise ValueError("command 'test' requires 'beta'")
        if self.t_vector is not None:
            if self.y_grid is None or self.y_grid.values is None:
                raise ValueError("'t_vector' needs explicit 'y_grid.values'")
            if len(self.t_vector) != len(self.y_grid.values):
                raise ValueError("'t_vector' and 'y_grid.values' must have equal length")
        return self


class ResultBundle(BaseModel):
    """
    Output of one command: the resolved config, the seed, the payload and
    plot-ready series. Meta data (wall clock, host) is kept apart from the
    payload so that the payload file is reproducible byte for byte.
    """
    model_config = ConfigDict(arbitrary_types_allowed=True)

    command: CommandEnum
    config: dict
    seed: int
    payload: dict = Field(default_factory=dict)
    series: dict = Field(default_factory=dict)
    meta: dict = Field(default_factory=dict)
