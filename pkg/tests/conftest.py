import os

import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, derandomize=True)
settings.load_profile(os.environ.get("NWHEAT_HYPOTHESIS", "default"))


@pytest.fixture
def rng():
    import random

    return random.Random(20240607)
