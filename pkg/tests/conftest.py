import pytest

from refuelopt.roadgraph import generate_city
from refuelopt.scenario import generate_scenario_dir


@pytest.fixture(scope="session")
def city():
    return generate_city(seed=5, rows=10, cols=10)


@pytest.fixture(scope="session")
def demo_scenario_config(tmp_path_factory):
    """Small cohort (3 drivers) for CLI and harness tests."""
    out = tmp_path_factory.mktemp("demo_scn")
    return generate_scenario_dir(str(out), seed=3, n_seeds_per_profile=1)
