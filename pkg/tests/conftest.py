import sys

import pytest
from hypothesis import HealthCheck, settings

from boga.engine import CampaignConfig, SchedulePhase
from boga.objectives import ObjectiveSpec
from boga.seqcore import MutationParams, random_sequences
from boga.surrogate import SurrogateConfig

import numpy as np

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

PYTHON = sys.executable

# Small, fast surrogate for engine-level tests.
FAST_SURROGATE = SurrogateConfig(hidden_sizes=(8,), ensemble_size=2, epochs=20)


def small_config(
    n_init: int = 20,
    generations: int = 3,
    m_select: int = 4,
    k_propose: int = 12,
    seed: int = 0,
    objective: ObjectiveSpec | None = None,
    **kwargs,
) -> CampaignConfig:
    init = random_sequences(n_init, np.random.default_rng(1000 + seed))
    schedule = kwargs.pop(
        "schedule", (SchedulePhase(generations=generations, m_select=m_select, k_propose=k_propose, elite_k=5),)
    )
    return CampaignConfig(
        objective=objective or ObjectiveSpec("sheet"),
        initial_sequences=tuple(init),
        n_init=n_init,
        mutation=kwargs.pop("mutation", MutationParams.from_rate(0.05)),
        surrogate=kwargs.pop("surrogate", FAST_SURROGATE),
        schedule=schedule,
        master_seed=seed,
        **kwargs,
    )


@pytest.fixture
def make_config():
    return small_config
