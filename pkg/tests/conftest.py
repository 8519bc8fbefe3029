import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from corrwit.data_structures import StateClass  # noqa: E402
from corrwit.operators import build_A  # noqa: E402

SMALL_CLASSES = [
    StateClass.separable(2, 2),
    StateClass.bosonic(2, 2),
    StateClass.slater(4, 2),
    StateClass.gaussian(3),
]


@pytest.fixture
def np_rng():
    return np.random.default_rng(20240917)


@pytest.fixture(scope="session")
def projector():
    """Session cache so each class's A is built once."""
    cache = {}

    def get(state_class):
        if state_class not in cache:
            cache[state_class] = build_A(state_class)
        return cache[state_class]
    return get
