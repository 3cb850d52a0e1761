import os

import pytest

from app.models.test_models import TuningParams
from app.workers.grid_worker import GridWorker
from tests.helpers import make_sample

STANFORD_PATH = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "data", "stanford_heart.csv")


@pytest.fixture
def small_sample():
    return make_sample(9, seed=3)


@pytest.fixture
def medium_sample():
    return make_sample(60, seed=11)


@pytest.fixture
def fast_tuning():
    return TuningParams(R=1, n_reps=200, seed=7)


@pytest.fixture
def inline_worker():
    return GridWorker(max_workers=1)


@pytest.fixture
def stanford_path():
    if not os.path.isfile(STANFORD_PATH):
        pytest.skip("data/stanford_heart.csv is absent; run `python main.py fetch-data`")
    return STANFORD_PATH
