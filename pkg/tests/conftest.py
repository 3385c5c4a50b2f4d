import numpy as np
import pytest

from bigd._backend import compiled, fallback

BACKENDS = [pytest.param(fallback, id="numpy")]
if compiled is not None:
    BACKENDS.append(pytest.param(compiled, id="cython"))


@pytest.fixture(params=BACKENDS)
def backend(request):
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def small_corpus(tmp_path_factory):
    """Four classes of 8 tiny synthetic images."""
    from bigd.synthetic import write_corpus

    return write_corpus(tmp_path_factory.mktemp("corpus"), n_per_class=8, size=40, seed=3)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
