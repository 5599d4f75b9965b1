import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("zollcap", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("zollcap")

# acceptance lines collected by tests/test_acceptance.py
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[n])


@pytest.fixture(scope="session")
def counterexample_H():
    from zollcap.counterexamples import build_counterexample_hamiltonian
    return build_counterexample_hamiltonian()


@pytest.fixture(scope="session")
def counterexample_report(counterexample_H):
    from zollcap.counterexamples import assemble_counterexample
    return assemble_counterexample(H=counterexample_H, volume_check_at=None)


@pytest.fixture(scope="session")
def ak_run():
    """Three default stages of the conjugation scheme plus the density certificate (a few minutes)."""
    import time
    from zollcap.anosov_katok import advance_stage, epsilon_density, initial_state
    t0 = time.perf_counter()
    state = initial_state()
    for _ in range(3):
        state = advance_stage(state, 0.2)
    cert = epsilon_density(state, 0.2, grid_size=500)
    return state, cert, time.perf_counter() - t0


@pytest.fixture(scope="session")
def flattened():
    """Flattened family of the standard test Hamiltonian at r = 0.3, eps = 0.05 (a few minutes)."""
    from zollcap.genfun import flatten_near_fixed_point, flatten_test_hamiltonian
    return flatten_near_fixed_point(flatten_test_hamiltonian(), 0.3, 0.05)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
