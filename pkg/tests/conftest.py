import numpy as np
import pytest

from rackml.data import generate_synthetic
from rackml.schema import RACK_SCHEMA

ACCEPTANCE_RESULTS = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_RESULTS:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def synth261():
    return generate_synthetic(261, seed=0)


@pytest.fixture(scope="session")
def synth80():
    return generate_synthetic(80, seed=3)


@pytest.fixture
def rng():
    return np.random.default_rng(123)


def trees_equal(a, b, rtol=1e-12):
    return (np.array_equal(a.feature, b.feature)
            and np.array_equal(a.left, b.left)
            and np.array_equal(a.right, b.right)
            and np.array_equal(a.n_samples, b.n_samples)
            and np.allclose(a.threshold, b.threshold, rtol=rtol, atol=0)
            and np.allclose(a.value, b.value, rtol=rtol, atol=1e-15))


def csv_text(d):
    import io
    from rackml.data import write_csv
    buf = io.StringIO()
    write_csv(d, buf)
    return buf.getvalue()


@pytest.fixture
def schema():
    return RACK_SCHEMA
