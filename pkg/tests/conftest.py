import numpy as np
import pytest

from framelab import models

CAT = np.array([[2, 1], [1, 1]])
LAMBDA_U = (3 + np.sqrt(5)) / 2
LOG_LU = float(np.log(LAMBDA_U))


def all_systems():
    """One instance of every constructor, keyed by a readable name."""
    return {
        "cat": models.cat_map(),
        "toral-translation": models.toral_affine(np.eye(2), (0.3, 0.7)),
        "linear-parabolic-3": models.linear_parabolic(3),
        "anosov3": models.anosov3(),
        "heis-k1": models.heis_system(CAT, 1),
        "heis-k2": models.heis_system(CAT, 2),
        "heis-translated": models.heis_system(CAT, 1, translation=(0.2, 0.1, 0.3)),
        "sol": models.sol_system(CAT),
        "sol-32": models.sol_system(np.array([[3, 2], [1, 1]])),
        "suspension": models.suspension(CAT),
        "suspension-twist": models.suspension(CAT, twist=0.1),
        "suspension-identity": models.suspension(CAT, m=0),
        "circle-extension": models.circle_extension(CAT, models.sine_phase(0.2)),
        "circle-extension-eigen": models.circle_extension(CAT, models.sine_phase(0.2), "eigen"),
        "monotone-twist": models.monotone_twist(),
        "fiber-translation": models.fiber_translation(0.3),
        "fiber-flow": models.fiber_flow(),
    }


@pytest.fixture(scope="session")
def systems():
    return all_systems()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
