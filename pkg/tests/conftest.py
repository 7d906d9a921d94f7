import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from mixhom import Kernel

settings.register_profile(
    "default", deadline=None, max_examples=40,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")

ALL_KERNELS = ["logistic", "extreme", "t6", "t10", "t14", "normal"]


@pytest.fixture(params=ALL_KERNELS)
def kernel(request):
    return Kernel.parse(request.param)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def type1_runs():
    """5000-replicate size runs shared by the size checks (logistic n=100, t10 n=200)."""
    from mixhom.experiments import type1_experiment
    return {f"{name} n={n}": type1_experiment(Kernel.parse(name), n, 5000, (0.10, 0.05, 0.01),
                                              seed=seed)
            for name, n, seed in (("logistic", 100, 4100), ("t10", 200, 4200))}
