from typing import List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from app.models.statuses_enums import InstrumentModeEnum


class InstrumentIndex(BaseModel):
    """
    One instrumental function g(x_i, x_j) = I[x_i in cell(a, b)] * I[x_j in cell(a_tilde, b_tilde)].
    Fields:
        - mode: enumeration mode of the owning family
        - r: side-count parameter; cells have side 1/(2r)
        - a, a_tilde: 1-based cube multi-indices for observations i and j
        - b, b_tilde: discrete tuples for observations i and j (mixed, finite_support)
    """
    model_config = ConfigDict(frozen=True)

    mode: InstrumentModeEnum
    r: Optional[int] = None
    a: Tuple[int, ...] = ()
    a_tilde: Tuple[int, ...] = ()
    b: Optional[Tuple[float, ...]] = None
    b_tilde: Optional[Tuple[float, ...]] = None


class ConstantInstrument(BaseModel):
    """g(x_i, x_j) identically equal to value (0 or 1)."""
    model_config = ConfigDict(frozen=True)

    value: int = Field(1, ge=0, le=1)


class InstrumentLevel(BaseModel):
    """
    All instruments sharing one r. Instrument (u, v) of this level has
    global id offset + u * cells + v, where u and v are cell ids.
    """
    model_config = ConfigDict(frozen=True)

    r: int
    cells: int
    offset: int
    weight: float


class InstrumentFamily(BaseModel):
    """
    The enumerated family of instrumental functions and their weights.
    """
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    mode: InstrumentModeEnum
    R: int
    p: int
    k: int
    support: List[Tuple[float, ...]]
    levels: List[InstrumentLevel]

    @property
    def size(self) -> int:
        last = self.levels[-1]
        return last.offset + last.cells ** 2

    def __len__(self) -> int:
        return self.size

    @property
    def weights(self) -> np.ndarray:
        return np.concatenate([np.full(level.cells ** 2, level.weight) for level in self.levels])

    def counts_per_r(self) -> dict:
        return {level.r: level.cells ** 2 for level in self.levels}

    def level_of(self, gid: int) -> InstrumentLevel:
        for level in self.levels:
            if level.offset <= gid < level.offset + level.cells ** 2:
                return level
        raise IndexError(f"instrument id {gid} outside family of size {self.size}")

    def _decode_cell(self, level: InstrumentLevel, cell: int):
        if self.mode == InstrumentModeEnum.finite_support:
            return (), self.support[cell]
        if self.mode == InstrumentModeEnum.all_cube:
            a = np.unravel_index(cell, (2 * level.r,) * self.k)
            return tuple(int(v) + 1 for v in a), None
        cube, b_idx = divmod(cell, len(self.support))
        a = np.unravel_index(cube, (2 * level.r,) * self.p) if self.p else ()
        return tuple(int(v) + 1 for v in a), self.support[b_idx]

    def index(self, gid: int) -> InstrumentIndex:
        """Decode a global instrument id into its InstrumentIndex."""
        level = self.level_of(gid)
        u, v = divmod(gid - level.offset, level.cells)
        a, b = self._decode_cell(level, u)
        a_tilde, b_tilde = self._decode_cell(level, v)
        r = None if self.mode == InstrumentModeEnum.finite_support else level.r
        return InstrumentIndex(mode=self.mode, r=r, a=a, a_tilde=a_tilde, b=b, b_tilde=b_tilde)

    def indices(self) -> List[InstrumentIndex]:
        return [self.index(gid) for gid in range(self.size)]
