import numpy as np
import pytest

from hpcond.experiment import Scenario, generate_data, get_scenario
from hpcond.forward import default_pde
from hpcond.gmrf import HyperPrior
from hpcond.rng import make_rng
from hpcond.sampler import PosteriorModel


def posterior_for(scenario, dataset):
    return PosteriorModel(
        scenario.pde, scenario.constraints, dataset, scenario.n, HyperPrior(scenario.hyper_a, scenario.hyper_b)
    )


@pytest.fixture(scope="session")
def example1():
    return get_scenario("example1")


@pytest.fixture(scope="session")
def example2():
    return get_scenario("example2")


@pytest.fixture(scope="session")
def toy_scenario():
    """n = 2 on a coarse 22 x 50 grid: cheap enough for long chains."""
    return Scenario("toy", "example1", default_pde(Nr=22, Nt=50), n=2)


@pytest.fixture(scope="session")
def toy_model(toy_scenario):
    ds = generate_data(toy_scenario, make_rng(0, 0))
    return posterior_for(toy_scenario, ds)


@pytest.fixture(scope="session")
def example1_data(example1):
    return generate_data(example1, make_rng(7, 0))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
