import numpy as np
import pytest

from ranklab.model import GRG, ExperimentConfig, ParetoSpec


@pytest.fixture
def fig2a_config():
    return ExperimentConfig(n=2000, model=GRG, w_plus_law=ParetoSpec(1.5, 2.0),
                            w_minus_law=ParetoSpec(2.5, 5.0), c=0.85)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
