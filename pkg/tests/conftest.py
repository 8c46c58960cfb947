import numpy as np
import pytest


def make_step_path(rng, max_jumps=20, scale=1.0):
    """Random step path with a handful of jumps."""
    k = int(rng.integers(0, max_jumps))
    times = np.concatenate([[0.0], np.sort(rng.random(k))])
    times = np.unique(times)
    vals = np.cumsum(rng.standard_normal(times.size)) * scale
    from m1lab.paths import CadlagPath

    return CadlagPath(times, vals, "step")


@pytest.fixture
def rng():
    return np.random.default_rng(20240503)
