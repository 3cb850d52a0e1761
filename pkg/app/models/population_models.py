import math
from typing import List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.business_logic.exceptions import DgpSpecError
from app.models.statuses_enums import EnvelopeStatusEnum, ModelIdEnum, SupportEnum

DEFAULT_ALPHA0 = {
    ModelIdEnum.model1: math.inf,
    ModelIdEnum.model2: 3.0,
    ModelIdEnum.model3: 1.6,
    ModelIdEnum.dgp1: 3.0,
    ModelIdEnum.dgp2: 1.6,
}

SUPPORT_AXES = {
    SupportEnum.i: (-2.5, 2.5, 0.5),
    SupportEnum.ii: (-5.0, 5.0, 0.5),
    SupportEnum.iii: (-5.0, 5.0, 0.2),
}


class DgpSpec(BaseModel):
    """
    The MPH design
        log Y* = beta1 X1 + beta2 X2 + log U + log V
        log C  = alpha0 + (gamma0 + gamma1 X1 + gamma2 X2) log U + log W
    with U, V, W unit exponential and X2 uniform on {0, 1}.
    alpha0 = +inf means no censoring.
    """
    model_config = ConfigDict(frozen=True)

    model: ModelIdEnum = ModelIdEnum.model1
    alpha0: Optional[float] = None
    beta: Tuple[float, float] = (0.5, 1.5)
    gamma: Tuple[float, float, float] = (-0.5, 0.5, -1.0)
    support: Optional[SupportEnum] = None
    # N(0, 2) read as standard deviation 2; this puts the median of Y* at 0.77
    x1_sd: float = Field(2.0, gt=0)
    draws_per_point: int = Field(20000, ge=2)
    seed: int = Field(0, ge=0)

    @model_validator(mode="after")
    def _materialize_defaults(self):
        if self.alpha0 is None:
            object.__setattr__(self, "alpha0", DEFAULT_ALPHA0[self.model])
        if self.support is None:
            is_dgp = self.model in (ModelIdEnum.dgp1, ModelIdEnum.dgp2)
            object.__setattr__(self, "support", SupportEnum.normal if is_dgp else SupportEnum.i)
        if math.isnan(self.alpha0) or self.alpha0 == -math.inf:
            raise DgpSpecError(f"alpha0 must be finite or +inf, got {self.alpha0}")
        if self.beta[0] == 0:
            raise DgpSpecError("beta1 must be nonzero for the |beta1| = 1 normalization")
        return self

    @property
    def censored(self) -> bool:
        return math.isfinite(self.alpha0)

    @property
    def is_discrete(self) -> bool:
        return self.support != SupportEnum.normal

    def x1_values(self) -> np.ndarray:
        low, high, step = SUPPORT_AXES[self.support]
        count = int(round((high - low) / step)) + 1
        return np.round(low + step * np.arange(count), 10)

    def support_points(self) -> np.ndarray:
        """(S, 2) support of (X1, X2), X1 outer."""
        x1 = self.x1_values()
        return np.array([(a, b) for a in x1 for b in (0.0, 1.0)])

    @property
    def true_beta(self) -> np.ndarray:
        # scale-normalized so that |beta_1| = 1
        return np.round(np.array(self.beta) / abs(self.beta[0]), 10)

    @property
    def t_scale(self) -> float:
        return 1.0 / abs(self.beta[0])


class PopulationTable(BaseModel):
    """
    Simulated conditional laws of (Y0, D) at every support point.
    Fields:
        - spec: the design
        - points: (S, 2) support points
        - y0: (S, N) simulated durations, column a is common random draw a
        - d: (S, N) event indicators
        - pair_prob: (S, S) estimate of P(Y1i >= Y0j | x_i, x_j) over draw pairs a != b
    """
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    spec: DgpSpec
    points: np.ndarray
    y0: np.ndarray
    d: np.ndarray
    pair_prob: np.ndarray

    @property
    def draws(self) -> int:
        return int(self.y0.shape[1])

    def p1_geq(self, c: float) -> np.ndarray:
        """P(Y1 >= c | x) = P(D = 0) + P(D = 1, Y0 >= c), per support point."""
        return np.mean((self.d == 0) | (self.y0 >= c), axis=1)

    def p0_geq(self, c: float) -> np.ndarray:
        return np.mean(self.y0 >= c, axis=1)


class EnvelopePoint(BaseModel):
    """
    Lower end of T_{B_I}(y) at one y. threshold is the supremum of x'beta
    differences over violating pairs, minimized over B_I; the set is
    (threshold, +inf) and lower is the first t-grid point above it.
    """
    y: float
    lower: Optional[float] = None
    threshold: Optional[float] = None
    status: EnvelopeStatusEnum
    finite_lower_bound: bool
    true_value: Optional[float] = None


class BoundResult(BaseModel):
    """
    Population bounds on a parameter grid.
    Fields:
        - beta_points: (M, k) grid
        - member: (M,) membership in B_I
        - tolerance: slack on the 1/2 threshold
        - uninformative: no support pair restricts beta
        - intervals: projected interval per free coordinate
        - envelope: lower envelope of T_{B_I}(y) per y, once computed
        - y_tilde: normalization anchor used for the envelope
    """
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    beta_points: np.ndarray
    member: np.ndarray
    tolerance: float
    uninformative: bool
    intervals: dict = Field(default_factory=dict)
    envelope: List[EnvelopePoint] = Field(default_factory=list)
    y_tilde: Optional[float] = None
    t_grid: Optional[np.ndarray] = None

    @property
    def members(self) -> np.ndarray:
        return self.beta_points[self.member]
