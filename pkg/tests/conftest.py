import os

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "quadsim",
    derandomize=True,
    deadline=None,
    max_examples=int(os.environ.get("QUADSIM_HYPOTHESIS_EXAMPLES", "60")),
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("quadsim")


@pytest.fixture(scope="session")
def params():
    from quadsim.params import QuadParams

    return QuadParams()


@pytest.fixture(scope="session")
def trained_models():
    """Altitude and attitude models trained on the default teacher battery."""
    from quadsim import control_fuzzy as cf

    datasets = cf.generate_training_data()
    results = cf.train_controllers(datasets, cf.TrainConfig(epochs=30, seed=42))
    return datasets, results


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
