import pytest

from smalldev.covariance import CovarianceModel
from smalldev.spectral import fgn_measure, iid_measure


@pytest.fixture(scope="session")
def iid():
    return iid_measure()


@pytest.fixture(scope="session")
def fgn07():
    return fgn_measure(0.7)


@pytest.fixture(scope="session")
def iid_model(iid):
    return CovarianceModel.from_measure(iid, 520)


@pytest.fixture(scope="session")
def fgn07_model(fgn07):
    return CovarianceModel.from_measure(fgn07, 520)
