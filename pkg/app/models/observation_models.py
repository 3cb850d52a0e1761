from typing import List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from scipy.special import ndtr

from app.business_logic.exceptions import DimensionError, IngestionError, NormalizationError


class Observation(BaseModel):
    """
    One censored duration record.
    Fields:
        - y0: observed duration, min of latent duration and censoring time
        - d: 1 if the event was observed, 0 if censored
        - x: covariates, continuous block first
    """
    model_config = ConfigDict(frozen=True)

    y0: float = Field(gt=0)
    d: Literal[0, 1]
    x: Tuple[float, ...]


class Sample(BaseModel):
    """
    An i.i.d. sample of censored durations held column-wise.
    Fields:
        - y0: (n,) observed durations
        - d: (n,) event indicators
        - x: (n, k) covariates; the first p columns are continuous
        - p: number of continuous covariates
        - discrete_support: distinct tuples of the discrete block (or a declared superset)
        - covariate_names: column names, in x order
    """
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    y0: np.ndarray
    d: np.ndarray
    x: np.ndarray
    p: int = Field(ge=0)
    discrete_support: List[Tuple[float, ...]]
    covariate_names: List[str] = Field(default_factory=list)

    @model_validator(mode="after")
    def _check_shapes(self):
        n = self.y0.shape[0]
        if self.y0.ndim != 1 or self.d.shape != (n,):
            raise DimensionError("y0 and d must be vectors of equal length")
        if self.x.ndim != 2 or self.x.shape[0] != n:
            raise DimensionError(f"x must have shape (n, k) with n={n}, got {self.x.shape}")
        if self.p > self.x.shape[1]:
            raise DimensionError(f"p={self.p} exceeds the covariate dimension {self.x.shape[1]}")
        if not np.all(np.isfinite(self.y0)) or np.any(self.y0 <= 0):
            raise IngestionError("durations must be finite and strictly positive")
        if not np.all((self.d == 0) | (self.d == 1)):
            raise IngestionError("event indicator must be coded 0/1")
        if not self.discrete_support:
            raise DimensionError("discrete support must contain at least one tuple")
        width = self.x.shape[1] - self.p
        for b in self.discrete_support:
            if len(b) != width:
                raise DimensionError(f"discrete support tuple {b} does not have {width} entries")
        present = {tuple(row) for row in self.x[:, self.p:].tolist()}
        missing = present - set(self.discrete_support)
        if missing:
            raise DimensionError(f"discrete tuples {sorted(missing)} are not in the declared support")
        return self

    @property
    def n(self) -> int:
        return int(self.y0.shape[0])

    @property
    def k(self) -> int:
        return int(self.x.shape[1])

    @property
    def censor_rate(self) -> float:
        return float(np.mean(self.d == 0)) if self.n else 0.0

    @property
    def x_continuous(self) -> np.ndarray:
        return self.x[:, :self.p]

    @property
    def x_discrete(self) -> np.ndarray:
        return self.x[:, self.p:]

    def discrete_codes(self) -> np.ndarray:
        """Index of each row's discrete tuple in discrete_support."""
        lookup = {b: idx for idx, b in enumerate(self.discrete_support)}
        return np.array([lookup[tuple(row)] for row in self.x_discrete.tolist()], dtype=np.int64)

    @property
    def observations(self) -> List[Observation]:
        return [
            Observation(y0=float(y), d=int(e), x=tuple(float(v) for v in row))
            for y, e, row in zip(self.y0, self.d, self.x)
        ]


class TransformedSample(BaseModel):
    """
    A Sample whose continuous block has been mapped into (0,1) by
    x -> Phi(Sigma^{-1/2}(x - mean)). The raw sample is kept for x'beta.
    """
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    sample: Sample
    u: np.ndarray
    mean: np.ndarray
    inv_sqrt: np.ndarray

    @property
    def n(self) -> int:
        return self.sample.n

    @property
    def p(self) -> int:
        return self.sample.p

    def transform(self, x_continuous: np.ndarray) -> np.ndarray:
        """Apply the fitted transform to new continuous covariate rows."""
        points = np.atleast_2d(np.asarray(x_continuous, dtype=float))
        if points.shape[1] != self.p:
            raise DimensionError(f"expected {self.p} continuous coordinates, got {points.shape[1]}")
        return ndtr((points - self.mean) @ self.inv_sqrt.T)


class Beta(BaseModel):
    """
    A normalized parameter vector beta = (sign1, rest) with |beta_1| = 1 and no intercept.
    """
    model_config = ConfigDict(frozen=True)

    sign1: Literal[-1, 1]
    rest: Tuple[float, ...]

    @field_validator("sign1", mode="before")
    @classmethod
    def _check_sign(cls, value):
        if value not in (-1, 1, -1.0, 1.0):
            raise NormalizationError(f"first coordinate must be ±1, got {value}")
        return int(value)

    @property
    def k(self) -> int:
        return 1 + len(self.rest)

    @property
    def vector(self) -> np.ndarray:
        return np.array((float(self.sign1),) + tuple(self.rest), dtype=float)


class IngestionReport(BaseModel):
    """
    Counts reported when a data file is loaded.
    """
    n: int
    censored: int
    uncensored: int
    censor_rate: float
    group_column: Optional[str] = None
    group_censor_rates: dict = Field(default_factory=dict)
