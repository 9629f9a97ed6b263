import sys
from pathlib import Path

import numpy as np
import pytest

# make `import oracles` work from any pytest invocation directory
sys.path.insert(0, str(Path(__file__).parent))

DATA = Path(__file__).parent / "data"


@pytest.fixture
def data_dir() -> Path:
    return DATA


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_symmetric_graphon(rng, max_blocks: int = 8):
    """Random valid step graphon, values in [-1, 1]."""
    from graphonctl import StepGraphon

    n = int(rng.integers(2, max_blocks + 1))
    raw = rng.uniform(-1.0, 1.0, (n, n))
    return StepGraphon(np.clip((raw + raw.T) / 2.0, -1.0, 1.0))


def random_probability_graphon(rng, max_blocks: int = 8):
    """Random valid step graphon, values in [0, 1]."""
    from graphonctl import StepGraphon

    n = int(rng.integers(2, max_blocks + 1))
    raw = rng.uniform(0.0, 1.0, (n, n))
    return StepGraphon((raw + raw.T) / 2.0)
