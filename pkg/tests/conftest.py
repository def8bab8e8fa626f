import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from coopsgd.objectives import QuadraticObjective, QuadraticSpec, parse_diag  # noqa: E402


@pytest.fixture
def quad10():
    """d = 10, diag linspace 0.1..1 (L = 1), sigma2 = 1, minimiser at 0."""
    return QuadraticObjective(QuadraticSpec(parse_diag("linspace:0.1:1", 10), None, 1.0))


@pytest.fixture
def rng():
    return np.random.default_rng(20261014)
