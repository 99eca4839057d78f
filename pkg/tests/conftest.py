import numpy as np
import pytest

from geoflow.model import CANONICAL_PRESETS, preset, random_system

RANDOM_SEED = 20240611


def random_systems(count=20, seed=RANDOM_SEED):
    """Seed-fixed sampled systems of dimension 1..3."""
    rng = np.random.default_rng(seed)
    return [random_system(rng, 1 + i % 3, label=f"random-{i}") for i in range(count)]


@pytest.fixture(params=CANONICAL_PRESETS)
def canonical(request):
    return preset(request.param)


@pytest.fixture(scope="session")
def randoms():
    return random_systems()
