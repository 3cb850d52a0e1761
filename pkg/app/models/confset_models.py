import math
from typing import List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from app.business_logic.exceptions import GridError
from app.models.test_models import TestOutcome

# Grid values are rounded so that exact ties (e.g. beta2 = 2.5) survive float arithmetic.
GRID_DECIMALS = 10


class AxisRange(BaseModel):
    """
    A closed, evenly spaced axis low, low + step, ..., <= high.
    """
    model_config = ConfigDict(frozen=True)

    low: float = Field(allow_inf_nan=False)
    high: float = Field(allow_inf_nan=False)
    step: float = Field(gt=0, allow_inf_nan=False)

    @model_validator(mode="after")
    def _check_order(self):
        if self.high < self.low:
            raise GridError(f"axis high={self.high} is below low={self.low}")
        return self

    @property
    def count(self) -> int:
        return int(math.floor((self.high - self.low) / self.step + 1e-9)) + 1

    def values(self) -> np.ndarray:
        return np.round(self.low + self.step * np.arange(self.count), GRID_DECIMALS)


class ParamGrid(BaseModel):
    """
    Search window for beta = (sign1, rest) and, for joint searches, t.
    Fields:
        - sign1: values of the normalized first coordinate searched
        - free: one axis per free coordinate beta_2..beta_k
        - t_axis: axis for T(y) in joint searches
    """
    model_config = ConfigDict(frozen=True)

    sign1: List[int] = Field(default_factory=lambda: [1, -1])
    free: List[AxisRange]
    t_axis: Optional[AxisRange] = None

    @field_validator("sign1")
    @classmethod
    def _check_sign1(cls, value):
        if not value:
            raise GridError("sign1 must list at least one of +1, -1")
        for s in value:
            if s not in (-1, 1):
                raise GridError(f"sign1 values must be +1 or -1, got {s}")
        return value

    @property
    def k(self) -> int:
        return 1 + len(self.free)

    @property
    def size(self) -> int:
        return len(self.sign1) * int(np.prod([axis.count for axis in self.free], dtype=np.int64))

    def beta_points(self) -> np.ndarray:
        """(M, k) array of beta vectors; sign1 outermost, last coordinate fastest."""
        axes = [np.array(self.sign1, dtype=float)] + [axis.values() for axis in self.free]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def coordinate_edges(self) -> List[Optional[tuple]]:
        # the sign of beta_1 is not a search axis and has no edge
        edges = [None]
        for axis in self.free:
            values = axis.values()
            edges.append((float(values[0]), float(values[-1])))
        return edges


class Interval(BaseModel):
    """
    A projected interval. Endpoints touching the search edge are reported as
    unbounded in that direction; empty marks a projection of an empty set.
    """
    low: Optional[float] = None
    high: Optional[float] = None
    unbounded_below: bool = False
    unbounded_above: bool = False
    empty: bool = False

    def describe(self) -> str:
        if self.empty:
            return "empty set"
        left = "(-inf" if self.unbounded_below else f"[{self.low:g}"
        right = "+inf)" if self.unbounded_above else f"{self.high:g}]"
        return f"{left}, {right}"


class ConfidenceSet(BaseModel):
    """
    Accepted grid points and their coordinate projections.
    Fields:
        - coordinate_names: one name per column of points
        - points: (M, dim) searched grid points
        - accepted: (M,) acceptance mask
        - outcomes: TestOutcome per grid point, in grid order
        - edges: (min, max) of the grid along each coordinate, None where
          acceptance at the extreme value says nothing about boundedness
        - projections: convex-hull interval per coordinate name
    """
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    coordinate_names: List[str]
    points: np.ndarray
    accepted: np.ndarray
    outcomes: List[TestOutcome]
    edges: List[Optional[tuple]]
    projections: dict = Field(default_factory=dict)

    @property
    def accepted_points(self) -> np.ndarray:
        return self.points[self.accepted]

    @property
    def is_empty(self) -> bool:
        return not bool(self.accepted.any())
