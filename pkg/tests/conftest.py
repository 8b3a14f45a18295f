import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from hilbert import build_space  # noqa: E402
from model import ModelParams  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def space4():
    return build_space(4)


@pytest.fixture
def space6():
    return build_space(6)


@pytest.fixture
def default_params():
    """κ = g1, γ = 0.005 g1, ω = 50, ε = 10, ω_d = 9.99."""
    return ModelParams()
