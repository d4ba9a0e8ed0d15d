import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from vmplace import PlacementProblem, ResourceVector

settings.register_profile(
    "default",
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


def make_problem(servers, vms, alpha=0.5, beta=0.5) -> PlacementProblem:
    return PlacementProblem(
        servers=tuple(ResourceVector(c, m) for c, m in servers),
        vms=tuple(ResourceVector(c, m) for c, m in vms),
        alpha=alpha,
        beta=beta,
    )


@pytest.fixture
def split_problem() -> PlacementProblem:
    """2 identical servers, 4 identical VMs; only the 2-2 splits are feasible."""
    return make_problem([(10, 10)] * 2, [(5, 5)] * 4)


@pytest.fixture
def one_server_problem() -> PlacementProblem:
    return make_problem([(10, 16)], [(2, 4), (3, 4)])


def random_problem(rng: np.random.Generator, m=None, n=None) -> PlacementProblem:
    """Small random problem; demands roughly half a server each so repair has room."""
    m = m or int(rng.integers(2, 5))
    n = n or int(rng.integers(m + 1, 2 * m + 4))
    servers = [(float(rng.uniform(8, 20)), float(rng.uniform(8, 20))) for _ in range(m)]
    vms = [(float(rng.uniform(0.5, 6)), float(rng.uniform(0.5, 6))) for _ in range(n)]
    return make_problem(servers, vms)
