import numpy as np
import pytest

from designham_sim.spinsys import SlotMap, builtin_12spin, random_system


@pytest.fixture(scope="session")
def molecule():
    return builtin_12spin()


@pytest.fixture
def small_system():
    def make(n, seed=0):
        return random_system(n, np.random.default_rng(seed)), SlotMap.one_per_qubit(n)
    return make
