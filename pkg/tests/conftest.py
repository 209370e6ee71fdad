import os
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from mfprog.pipeline import fit_pipeline, predict_fleet  # noqa: E402
from mfprog.synthetic import make_fleet, write_fleet  # noqa: E402


@pytest.fixture(scope="session")
def fleet():
    return make_fleet(seed=0)


@pytest.fixture(scope="session")
def fitted(fleet):
    return fit_pipeline(fleet[0])


@pytest.fixture(scope="session")
def predictions(fitted, fleet):
    return predict_fleet(fitted, fleet[1])


@pytest.fixture(scope="session")
def fleet_files(tmp_path_factory):
    d = tmp_path_factory.mktemp("fleet")
    train, test, rul = write_fleet(d)
    return d, train, test, rul


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def fd001_dir():
    return Path(os.environ.get("MFPROG_CMAPSS_DIR", "data/CMAPSSData"))
