from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.special import ndtr

from app.business_logic.exceptions import DimensionError, NormalizationError, NumericError, SampleSizeError
from app.db.samples_db import SamplesDB
from app.models.observation_models import Beta, IngestionReport, Sample, TransformedSample
from app.models.run_models import ColumnSchema
from app.utils.error_handler import handle_exceptions
from app.utils.logger import LoggerManager

logger = LoggerManager.get_logger('data_bl')

# eigenvalues below this fraction of the largest are clipped when forming Sigma^{-1/2}
EIGEN_FLOOR = 1e-12


class DataBusinessLogic:
    """
    Business logic for samples: ingestion, covariate transformation and
    parameter normalization.
    """
    def __init__(self, samples_db: Optional[SamplesDB] = None):
        self.logger = logger
        self.samples_db = samples_db or SamplesDB()

    @handle_exceptions(logger=logger)
    def load_csv(self, path: str, schema: ColumnSchema) -> Tuple[Sample, IngestionReport]:
        return self.samples_db.load_csv(path, schema)

    @staticmethod
    @handle_exceptions(logger=logger)
    def transform_continuous(sample: Sample) -> TransformedSample:
        """
        Map the continuous block into (0,1) by x -> Phi(Sigma^{-1/2}(x - mean)),
        with Sigma the sample covariance (ddof=1).

        Args:
            sample: the sample to transform; n >= 2 is required when p > 0.

        Returns:
            TransformedSample holding the fitted mean and inverse square root.
        """
        p = sample.p
        if p == 0:
            return TransformedSample(sample=sample, u=np.empty((sample.n, 0)), mean=np.empty(0), inv_sqrt=np.empty((0, 0)))
        if sample.n < 2:
            raise SampleSizeError(f"transform needs n >= 2, got n={sample.n}")

        block = sample.x_continuous
        mean = block.mean(axis=0)
        cov = np.atleast_2d(np.cov(block, rowvar=False, ddof=1))
        if np.linalg.matrix_rank(cov) < p:
            names = sample.covariate_names[:p] or [f"x{i + 1}" for i in range(p)]
            raise NumericError(
                f"covariance of continuous covariates {names} is singular; "
                "remove collinear or constant covariates"
            )
        eigvals, eigvecs = np.linalg.eigh(cov)
        eigvals = np.maximum(eigvals, EIGEN_FLOOR * eigvals.max())
        inv_sqrt = (eigvecs / np.sqrt(eigvals)) @ eigvecs.T
        u = ndtr((block - mean) @ inv_sqrt.T)
        logger.debug(f"Transformed {p} continuous covariates for n={sample.n}")
        return TransformedSample(sample=sample, u=u, mean=mean, inv_sqrt=inv_sqrt)

    @staticmethod
    def validate_beta(v: Sequence[float], k: Optional[int] = None) -> Beta:
        """
        Check the scale normalization |beta_1| = 1 and return a Beta; vectors
        violating it are rejected, never rescaled.
        """
        v = [float(c) for c in v]
        if len(v) < 2:
            raise DimensionError(f"beta needs at least 2 coordinates, got {len(v)}")
        if k is not None and len(v) != k:
            raise DimensionError(f"beta has {len(v)} coordinates but the sample has k={k}")
        if v[0] not in (-1.0, 1.0):
            raise NormalizationError(f"first coordinate must be ±1, got {v[0]}")
        return Beta(sign1=int(v[0]), rest=tuple(v[1:]))
