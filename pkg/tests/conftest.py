from __future__ import annotations

import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)


def make_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(seed)
