"""
Moment kernels, instrumental functions and U-statistics.

The single-instrument operations (mbar, h2hat, sigma_bar2) work on dense
n x n kernel matrices. MomentEngine evaluates every instrument at once
through a sparse incidence matrix F (ordered pairs x instruments) that does
not depend on beta:

    mbar  = F' m / (n(n-1))
    S     = L' diag(m) F                  per-observation row sums
    h2    = (S_a' S_b - F' diag(m_a m_b) F) / (n(n-1)(n-2)) - mbar_a mbar_b

Kernel values are multiples of 1/2, so every sum above is exact in float64.
"""
from typing import List, Optional, Sequence, Union

import numpy as np
from scipy import sparse

from app.business_logic.exceptions import (
    DimensionError,
    InstrumentError,
    ResourceError,
    SampleSizeError,
    TuningError,
)
from app.models.instrument_models import ConstantInstrument, InstrumentFamily, InstrumentIndex, InstrumentLevel
from app.models.observation_models import Beta, Observation, Sample, TransformedSample
from app.models.statuses_enums import InstrumentModeEnum
from app.models.test_models import MomentStats
from app.utils.logger import LoggerManager

logger = LoggerManager.get_logger('moment_engine_bl')

INDEX_DECIMALS = 10
CELL_DECIMALS = 9
WEIGHT_OFFSET = 100.0

Instrument = Union[InstrumentIndex, ConstantInstrument]


def _direction(beta) -> np.ndarray:
    if isinstance(beta, Beta):
        return beta.vector
    return np.asarray(beta, dtype=float)


def index_projection(x: np.ndarray, beta) -> np.ndarray:
    """x'beta, rounded so that exact ties on parameter grids compare equal.
    beta may be a Beta or any unnormalized direction."""
    direction = _direction(beta)
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != direction.shape[0]:
        raise DimensionError(f"covariates have dimension {x.shape[-1]} but beta has {direction.shape[0]}")
    return np.round(x @ direction, INDEX_DECIMALS)


def beta_kernel_values(y0_i, d_i, y0_j, d_j, xb_i, xb_j) -> np.ndarray:
    y0_i, d_i, y0_j, d_j, xb_i, xb_j = map(np.asarray, (y0_i, d_i, y0_j, d_j, xb_i, xb_j))
    y1i_geq_y0j = (d_i == 0) | (y0_i >= y0_j)
    y1j_gt_y0i = (d_j == 0) | (y0_j > y0_i)
    return -0.5 + (y1i_geq_y0j & (xb_i >= xb_j)) + (y1j_gt_y0i & (xb_j > xb_i))


def dagger_kernel_values(y0_i, d_i, y0_j, d_j, xb_i, xb_j, y, t, y_tilde) -> np.ndarray:
    # scalars from a single Observation pair take the same path as arrays
    y0_i, d_i, y0_j, d_j, xb_i, xb_j = map(np.asarray, (y0_i, d_i, y0_j, d_j, xb_i, xb_j))
    diff = np.round(xb_i - xb_j, INDEX_DECIMALS)
    t = round(float(t), INDEX_DECIMALS)
    y1i_geq_y = ((d_i == 0) | (y0_i >= y)).astype(float)
    y1j_geq_y = ((d_j == 0) | (y0_j >= y)).astype(float)
    y0i_geq = (y0_i >= y_tilde).astype(float)
    y0j_geq = (y0_j >= y_tilde).astype(float)
    return (y1i_geq_y - y0j_geq) * (diff >= t) + (y1j_geq_y - y0i_geq) * (-diff >= t)


def _check_pair(wi: Observation, wj: Observation, beta) -> tuple:
    direction = _direction(beta)
    if len(wi.x) != direction.shape[0] or len(wj.x) != direction.shape[0]:
        raise DimensionError(
            f"observations have dimensions {len(wi.x)}, {len(wj.x)} but beta has {direction.shape[0]}"
        )
    xb = index_projection(np.array([wi.x, wj.x]), direction)
    return xb[0], xb[1]


def m_kernel(wi: Observation, wj: Observation, beta) -> float:
    """
    m = -1/2 + I[Y1i >= Y0j] I[xi'b >= xj'b] + I[Y1j > Y0i] I[xj'b > xi'b].
    A censored observation has Y1 = +inf, which is handled through d.
    """
    xb_i, xb_j = _check_pair(wi, wj, beta)
    return float(beta_kernel_values(wi.y0, wi.d, wj.y0, wj.d, xb_i, xb_j))


def mdagger_kernel(wi: Observation, wj: Observation, beta, y: float, t: float, y_tilde: float) -> float:
    """
    m-dagger = (I[Y1i >= y] - I[Y0j >= y~]) I[xi'b - xj'b >= t]
             + (I[Y1j >= y] - I[Y0i >= y~]) I[xj'b - xi'b >= t].
    """
    xb_i, xb_j = _check_pair(wi, wj, beta)
    return float(dagger_kernel_values(wi.y0, wi.d, wj.y0, wj.d, xb_i, xb_j, y, t, y_tilde))


def enumerate_instruments(mode, R: int, p: int, X2: Sequence[Sequence[float]]) -> InstrumentFamily:
    """
    Enumerate the instrumental functions for r = 1..R.

    Args:
        mode: mixed, finite_support or all_cube.
        R: truncation integer (ignored by finite_support).
        p: number of continuous covariates.
        X2: discrete support (the full covariate support in finite_support mode).

    Returns:
        InstrumentFamily with one level per r.
    """
    mode = InstrumentModeEnum(mode)
    support = [tuple(float(v) for v in b) for b in X2]
    if not support:
        raise InstrumentError("discrete support is empty")
    widths = {len(b) for b in support}
    if len(widths) != 1:
        raise InstrumentError(f"discrete support tuples have mixed lengths {sorted(widths)}")
    k = p + widths.pop()
    levels: List[InstrumentLevel] = []

    if mode == InstrumentModeEnum.finite_support:
        if p != 0:
            raise InstrumentError("finite_support mode requires every covariate to be discrete (p = 0)")
        cells = len(support)
        levels.append(InstrumentLevel(r=1, cells=cells, offset=0, weight=1.0 / cells ** 2))
        return InstrumentFamily(mode=mode, R=1, p=p, k=k, support=support, levels=levels)

    if R < 1:
        raise InstrumentError(f"R must be at least 1, got {R}")
    if mode == InstrumentModeEnum.all_cube and k == 0:
        raise InstrumentError("all_cube mode needs at least one covariate")
    offset = 0
    for r in range(1, R + 1):
        if mode == InstrumentModeEnum.mixed:
            cells = (2 * r) ** p * len(support)
        else:
            cells = (2 * r) ** k
        weight = 1.0 / ((r * r + WEIGHT_OFFSET) * cells ** 2)
        levels.append(InstrumentLevel(r=r, cells=cells, offset=offset, weight=weight))
        offset += cells ** 2
    return InstrumentFamily(mode=mode, R=R, p=p, k=k, support=support, levels=levels)


def _cube_cells(coords: np.ndarray, r: int) -> np.ndarray:
    # half-open cells ((a-1)/2r, a/2r]; 0 falls in no cell
    return np.ceil(np.round(np.asarray(coords, dtype=float) * (2 * r), CELL_DECIMALS)).astype(np.int64)


def discrete_rank_coordinates(x_discrete: np.ndarray, support: Sequence[tuple]) -> np.ndarray:
    """Map each discrete column into (0,1] by rank / number of distinct support values."""
    x_discrete = np.atleast_2d(np.asarray(x_discrete, dtype=float))
    out = np.empty_like(x_discrete)
    for c in range(x_discrete.shape[1]):
        values = np.array(sorted({b[c] for b in support}))
        ranks = np.searchsorted(values, x_discrete[:, c]) + 1
        out[:, c] = ranks / values.shape[0]
    return out


def cube_coordinates(ts: TransformedSample) -> np.ndarray:
    """(n, k) coordinates in (0,1] used by all_cube instruments."""
    sample = ts.sample
    return np.hstack([ts.u, discrete_rank_coordinates(sample.x_discrete, sample.discrete_support)])


def _in_cell(mode: InstrumentModeEnum, r: Optional[int], a: tuple, b: Optional[tuple], x: np.ndarray) -> bool:
    x = np.asarray(x, dtype=float)
    if mode == InstrumentModeEnum.finite_support:
        return tuple(x.tolist()) == tuple(b)
    p = len(a)
    coords = x[:p]
    if mode == InstrumentModeEnum.mixed and tuple(x[p:].tolist()) != tuple(b):
        return False
    cells = _cube_cells(coords, r)
    return bool(np.all(cells == np.asarray(a)) and np.all((cells >= 1) & (cells <= 2 * r)))


def instrument_indicator(g: Instrument, xi: Sequence[float], xj: Sequence[float]) -> int:
    """
    g(x_i, x_j) for one instrument. Continuous coordinates must already be in [0,1];
    in all_cube mode every coordinate must be (see cube_coordinates).
    """
    if isinstance(g, ConstantInstrument):
        return g.value
    return int(_in_cell(g.mode, g.r, g.a, g.b, xi) and _in_cell(g.mode, g.r, g.a_tilde, g.b_tilde, xj))


def _as_transformed(sample) -> TransformedSample:
    if isinstance(sample, TransformedSample):
        return sample
    if isinstance(sample, Sample):
        from app.business_logic.data_bl import DataBusinessLogic
        return DataBusinessLogic.transform_continuous(sample)
    raise TypeError(f"expected a Sample or TransformedSample, got {type(sample).__name__}")


def _membership(ts: TransformedSample, g: InstrumentIndex, role: str) -> np.ndarray:
    sample = ts.sample
    a, b = (g.a, g.b) if role == "i" else (g.a_tilde, g.b_tilde)
    if g.mode == InstrumentModeEnum.finite_support:
        return np.all(sample.x == np.asarray(b), axis=1)
    if g.mode == InstrumentModeEnum.all_cube:
        coords = cube_coordinates(ts)
        match = np.ones(sample.n, dtype=bool)
    else:
        coords = ts.u
        match = np.all(sample.x_discrete == np.asarray(b), axis=1) if sample.x_discrete.shape[1] else np.ones(sample.n, dtype=bool)
    cells = _cube_cells(coords, g.r)
    return match & np.all(cells == np.asarray(a, dtype=np.int64), axis=1)


def _kernel_matrix(ts: TransformedSample, beta) -> np.ndarray:
    sample = ts.sample
    xb = index_projection(sample.x, beta)
    y0, d = sample.y0, sample.d
    mat = beta_kernel_values(y0[:, None], d[:, None], y0[None, :], d[None, :], xb[:, None], xb[None, :])
    np.fill_diagonal(mat, 0.0)
    return mat


def _indicator_matrix(ts: TransformedSample, g: Instrument) -> np.ndarray:
    n = ts.n
    if isinstance(g, ConstantInstrument):
        mat = np.full((n, n), float(g.value))
    else:
        mat = np.outer(_membership(ts, g, "i"), _membership(ts, g, "j")).astype(float)
    np.fill_diagonal(mat, 0.0)
    return mat


def mbar(sample, beta, g: Instrument) -> float:
    """U-statistic mean of m * g over ordered pairs i != j."""
    ts = _as_transformed(sample)
    n = ts.n
    if n < 2:
        raise SampleSizeError(f"mbar needs n >= 2, got n={n}")
    return float(np.sum(_kernel_matrix(ts, beta) * _indicator_matrix(ts, g)) / (n * (n - 1)))


def h2hat(sample, beta, g: Instrument, g_star: Instrument) -> float:
    """Order-3 covariance kernel h2(g, g*) via the row-sum identity."""
    ts = _as_transformed(sample)
    n = ts.n
    if n < 3:
        raise SampleSizeError(f"h2hat needs n >= 3, got n={n}")
    kernel = _kernel_matrix(ts, beta)
    left = kernel * _indicator_matrix(ts, g)
    right = kernel * _indicator_matrix(ts, g_star)
    triple = float(np.sum(left.sum(axis=1) * right.sum(axis=1)) - np.sum(left * right))
    pairs = n * (n - 1)
    return triple / (pairs * (n - 2)) - (left.sum() / pairs) * (right.sum() / pairs)


def sigma_bar2(sample, beta, g: Instrument, epsilon: float) -> float:
    """sigma_hat2(g) + epsilon * sigma_hat2(g = 1); negative estimates count as 0."""
    if not epsilon > 0:
        raise TuningError(f"epsilon must be positive, got {epsilon}")
    ts = _as_transformed(sample)
    one = ConstantInstrument(value=1)
    return max(h2hat(ts, beta, g, g), 0.0) + epsilon * max(h2hat(ts, beta, one, one), 0.0)


class MomentEngine:
    """
    Evaluates every instrument of a family on one sample. Everything that
    does not depend on beta (pair order, duration comparisons, the incidence
    matrix) is built once here.
    """
    def __init__(self, ts: TransformedSample, family: InstrumentFamily,
                 max_incidence_entries: Optional[int] = None, max_instruments: Optional[int] = None):
        self.logger = logger
        self.ts = ts
        self.family = family
        sample = ts.sample
        self.n = sample.n
        if self.n < 3:
            raise SampleSizeError(f"moment engine needs n >= 3, got n={self.n}")
        self._check_family(sample, family)
        self.max_instruments = max_instruments

        pairs = self.n * (self.n - 1)
        if max_incidence_entries is not None and pairs * len(family.levels) > max_incidence_entries:
            raise ResourceError(
                f"{pairs} ordered pairs x {len(family.levels)} levels exceeds the incidence cap {max_incidence_entries}"
            )
        # i outer, j inner, ascending
        self.pair_i, self.pair_j = np.nonzero(~np.eye(self.n, dtype=bool))
        y0, d = sample.y0, sample.d
        self._y0_i, self._y0_j = y0[self.pair_i], y0[self.pair_j]
        self._d_i, self._d_j = d[self.pair_i], d[self.pair_j]

        incidence = self._build_incidence()
        self.occupied = np.flatnonzero(np.diff(incidence.tocsc().indptr) > 0)
        self.incidence = incidence[:, self.occupied].tocsr()
        self.owner = sparse.csr_matrix(
            (np.ones(pairs), (self.pair_i, np.arange(pairs))), shape=(self.n, pairs)
        )
        self.logger.debug(
            f"Engine ready: n={self.n}, instruments={family.size}, occupied={self.occupied.size}, "
            f"incidence nnz={incidence.nnz}"
        )

    @staticmethod
    def _check_family(sample: Sample, family: InstrumentFamily):
        if family.mode == InstrumentModeEnum.all_cube:
            if family.k != sample.k:
                raise InstrumentError(f"family built for k={family.k}, sample has k={sample.k}")
            return
        if family.p != sample.p:
            raise InstrumentError(f"family built for p={family.p}, sample has p={sample.p}")
        if list(family.support) != list(sample.discrete_support):
            raise InstrumentError("family support differs from the sample's discrete support")

    def cell_ids(self) -> List[np.ndarray]:
        """Per level, the cell of every observation (-1 when in no cell)."""
        sample = self.ts.sample
        if self.family.mode == InstrumentModeEnum.finite_support:
            return [sample.discrete_codes()]
        if self.family.mode == InstrumentModeEnum.all_cube:
            coords, codes, n_codes = cube_coordinates(self.ts), None, 1
        else:
            coords, codes, n_codes = self.ts.u, sample.discrete_codes(), len(sample.discrete_support)
        dims = coords.shape[1]
        out = []
        for level in self.family.levels:
            sides = 2 * level.r
            cells = _cube_cells(coords, level.r)
            valid = np.all((cells >= 1) & (cells <= sides), axis=1)
            if dims:
                cube = np.ravel_multi_index(tuple(np.clip(cells - 1, 0, sides - 1).T), (sides,) * dims)
            else:
                cube = np.zeros(sample.n, dtype=np.int64)
            cell = cube * n_codes + (codes if codes is not None else 0)
            out.append(np.where(valid, cell, -1))
        return out

    def _build_incidence(self) -> sparse.csr_matrix:
        rows, cols = [], []
        for level, cell in zip(self.family.levels, self.cell_ids()):
            ci, cj = cell[self.pair_i], cell[self.pair_j]
            ok = (ci >= 0) & (cj >= 0)
            rows.append(np.flatnonzero(ok))
            cols.append(level.offset + ci[ok] * level.cells + cj[ok])
        rows = np.concatenate(rows)
        cols = np.concatenate(cols)
        return sparse.csr_matrix(
            (np.ones(rows.shape[0]), (rows, cols)), shape=(self.pair_i.shape[0], self.family.size)
        )

    def projection(self, beta) -> np.ndarray:
        return index_projection(self.ts.sample.x, beta)

    def beta_kernel(self, beta) -> np.ndarray:
        xb = self.projection(beta)
        return beta_kernel_values(self._y0_i, self._d_i, self._y0_j, self._d_j, xb[self.pair_i], xb[self.pair_j])

    def dagger_kernel(self, beta, y: float, t: float, y_tilde: float) -> np.ndarray:
        xb = self.projection(beta)
        return dagger_kernel_values(
            self._y0_i, self._d_i, self._y0_j, self._d_j, xb[self.pair_i], xb[self.pair_j], y, t, y_tilde
        )

    def moment_stats(self, kernels: Sequence[np.ndarray], epsilon: float, covariance: bool = True) -> MomentStats:
        """
        Stack the moments of several kernels over the family.

        Args:
            kernels: kernel values over ordered pairs, one array per block.
            epsilon: variance regularization.
            covariance: also build the full covariance kernel over occupied instruments.
        """
        if not epsilon > 0:
            raise TuningError(f"epsilon must be positive, got {epsilon}")
        n = self.n
        pairs = n * (n - 1)
        triples = pairs * (n - 2)
        G = self.family.size
        blocks = len(kernels)
        occupied = self.occupied
        if covariance and self.max_instruments is not None and blocks * occupied.size > self.max_instruments:
            raise ResourceError(
                f"covariance over {blocks * occupied.size} moments exceeds MAX_INSTRUMENTS={self.max_instruments}"
            )

        F = self.incidence
        Ft = F.T.tocsr()
        mbar_full = np.zeros(blocks * G)
        sigma_hat2_full = np.zeros(blocks * G)
        sigma_bar2_full = np.zeros(blocks * G)
        overall = np.zeros(blocks)
        means, sums = [], []
        for idx, m in enumerate(kernels):
            m = np.asarray(m, dtype=float)
            mean = Ft @ m / pairs
            S = (self.owner @ (sparse.diags(m) @ F)).toarray()
            diag = ((S * S).sum(axis=0) - Ft @ (m * m)) / triples - mean * mean

            row = self.owner @ m
            mean_one = m.sum() / pairs
            overall[idx] = (row @ row - m @ m) / triples - mean_one * mean_one

            positions = idx * G + occupied
            mbar_full[positions] = mean
            sigma_hat2_full[positions] = diag
            sigma_bar2_full[idx * G:(idx + 1) * G] = epsilon * max(overall[idx], 0.0)
            sigma_bar2_full[positions] += np.maximum(diag, 0.0)
            means.append(mean)
            sums.append(S)

        h2 = None
        h2_index = None
        if covariance:
            Go = occupied.size
            h2 = np.empty((blocks * Go, blocks * Go))
            for a in range(blocks):
                for b in range(a, blocks):
                    weight = sparse.diags(np.asarray(kernels[a], dtype=float) * np.asarray(kernels[b], dtype=float))
                    correction = (Ft @ weight @ F).toarray()
                    block = (sums[a].T @ sums[b] - correction) / triples - np.outer(means[a], means[b])
                    h2[a * Go:(a + 1) * Go, b * Go:(b + 1) * Go] = block
                    if b != a:
                        h2[b * Go:(b + 1) * Go, a * Go:(a + 1) * Go] = block.T
            h2_index = np.concatenate([idx * G + occupied for idx in range(blocks)])

        return MomentStats(
            n=n,
            blocks=blocks,
            mbar=mbar_full,
            sigma_hat2=sigma_hat2_full,
            sigma_bar2=sigma_bar2_full,
            overall=overall,
            weights=np.tile(self.family.weights, blocks),
            h2=h2,
            h2_index=h2_index,
        )
