"""
Sample builders and brute-force oracles.

The oracles loop over ordered pairs and triples with the scalar kernels, so
they are O(n^2) / O(n^3) and only meant for small samples.
"""
import itertools

import numpy as np

from app.business_logic.data_bl import DataBusinessLogic
from app.business_logic.moment_engine_bl import instrument_indicator, m_kernel
from app.models.observation_models import Sample


def make_sample(n: int, seed: int = 0, censor_share: float = 0.2, slope: float = 2.0) -> Sample:
    """One continuous and one binary covariate, durations following the index, some censoring."""
    rng = np.random.default_rng(seed)
    x1 = rng.normal(0.0, 1.0, n)
    x2 = rng.integers(0, 2, n).astype(float)
    y0 = np.exp(x1 + slope * x2 + rng.normal(0.0, 1.0, n))
    d = (rng.random(n) >= censor_share).astype(np.int8)
    return Sample(
        y0=y0,
        d=d,
        x=np.column_stack([x1, x2]),
        p=1,
        discrete_support=[(0.0,), (1.0,)],
        covariate_names=["x1", "x2"],
    )


def fully_censored(sample: Sample) -> Sample:
    return sample.model_copy(update={"d": np.zeros(sample.n, dtype=np.int8)})


def transformed_points(sample: Sample) -> np.ndarray:
    """Rows with the continuous block mapped into (0,1), as instruments see them."""
    ts = DataBusinessLogic.transform_continuous(sample)
    return np.hstack([ts.u, sample.x_discrete])


def brute_mbar(sample: Sample, beta, g) -> float:
    obs = sample.observations
    coords = transformed_points(sample)
    n = sample.n
    total = 0.0
    for i, j in itertools.permutations(range(n), 2):
        total += m_kernel(obs[i], obs[j], beta) * instrument_indicator(g, coords[i], coords[j])
    return total / (n * (n - 1))


def brute_h2hat(sample: Sample, beta, g, g_star) -> float:
    obs = sample.observations
    coords = transformed_points(sample)
    n = sample.n
    total = 0.0
    for i, j, k in itertools.permutations(range(n), 3):
        left = m_kernel(obs[i], obs[j], beta) * instrument_indicator(g, coords[i], coords[j])
        right = m_kernel(obs[i], obs[k], beta) * instrument_indicator(g_star, coords[i], coords[k])
        total += left * right
    return total / (n * (n - 1) * (n - 2)) - brute_mbar(sample, beta, g) * brute_mbar(sample, beta, g_star)
