import numpy as np
import pytest

from tiltedscore import GaussianMixture, MixtureScoreModel


@pytest.fixture(scope="session")
def harness_mixture():
    """1D two-component mixture used across the oracle-backed tests."""
    return GaussianMixture(
        weights=np.array([0.3, 0.7]),
        means=np.array([[-1.0], [2.0]]),
        covariances=np.array([[[1.0]], [[0.5]]]),
    )


@pytest.fixture(scope="session")
def harness_model(harness_mixture):
    return MixtureScoreModel(harness_mixture)


@pytest.fixture(scope="session")
def std_normal_model():
    return MixtureScoreModel(GaussianMixture.standard(1))


@pytest.fixture(scope="session")
def mixture_2d():
    return GaussianMixture(
        weights=np.array([0.4, 0.6]),
        means=np.array([[-1.0, 0.5], [1.5, -0.5]]),
        covariances=np.array(
            [
                [[1.0, 0.3], [0.3, 0.8]],
                [[0.6, -0.2], [-0.2, 1.2]],
            ]
        ),
    )
