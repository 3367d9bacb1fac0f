import numpy as np
import pytest

from mvtrust.data import synthesize
from mvtrust.pipeline import TrainConfig, run_experiment

# Frozen configuration for the desk-scale acceptance experiment: four
# classes, three views (the first mostly nuisance so intra-view fusion has
# something to repair), moderate latent separation.
ACCEPTANCE_DATA = dict(
    n_classes=4,
    n_views=3,
    n_samples=1000,
    view_dims=(20, 30, 25),
    separation=4.5,
    nuisance_ratio=(0.8, 0.3, 0.3),
    seed=7,
)
ACCEPTANCE_CONFIG = TrainConfig(epochs=200, seed=7)


@pytest.fixture(scope="session")
def acceptance_dataset():
    return synthesize(**ACCEPTANCE_DATA)


@pytest.fixture(scope="session")
def acceptance_run(acceptance_dataset):
    """One full training run shared by all accuracy/uncertainty criteria."""
    return run_experiment(acceptance_dataset, ACCEPTANCE_CONFIG)


@pytest.fixture()
def tiny_dataset():
    """20-sample fixture for smoke tests."""
    return synthesize(
        n_classes=2,
        n_views=2,
        n_samples=20,
        view_dims=(5, 6),
        separation=3.0,
        nuisance_ratio=0.2,
        seed=3,
    )


@pytest.fixture()
def rng():
    return np.random.default_rng(0)
