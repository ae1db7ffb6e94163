import sys
from pathlib import Path

import pytest

# Add project root to path
sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from engine.copula import sample_pairs  # noqa: E402
from engine.estimators import AiConfig  # noqa: E402
from engine.experiments import ExperimentPlan  # noqa: E402
from engine.pseudo import pseudo_sample  # noqa: E402
from engine.streams import RandomStream  # noqa: E402

TEST_ALPHAS = (0.8, 1.7, 3.0, 5.0)


@pytest.fixture
def clayton_points():
    """Factory for seeded Clayton samples: clayton_points(alpha, m, seed=0)."""
    def _gen(alpha, m, seed=0):
        return sample_pairs(alpha, m, RandomStream(seed))

    return _gen


@pytest.fixture
def clayton_pseudo(clayton_points):
    def _gen(alpha, m, seed=0):
        return pseudo_sample(clayton_points(alpha, m, seed))

    return _gen


@pytest.fixture
def fast_config():
    """A short mean-field loop for tests that only check plumbing."""
    return AiConfig(burn_in_steps=15, tail_steps=15)


@pytest.fixture
def small_plan(fast_config):
    return ExperimentPlan(
        alphas=[0.8, 3.0],
        sizes=[12, 20],
        samples_per_cell=4,
        replicas=20,
        ai_config=fast_config,
        master_seed=11,
    )
