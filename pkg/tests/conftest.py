import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from conclab.distributions import DistSpec, SeedStream  # noqa: E402


@pytest.fixture
def rng():
    return SeedStream(20261015).generator()


@pytest.fixture(params=["rademacher", "gaussian", "uniform", "twopoint:a=3,p=0.1"])
def family(request):
    return DistSpec.parse(request.param)
