import pytest

from mmdist import MetricSpace, MMSpace
from mmdist._kernels import warmup


@pytest.fixture(scope="session", autouse=True)
def _warm_kernels():
    """Compile the jit kernels once so test timings measure the algorithms."""
    warmup()


@pytest.fixture()
def p1():
    return MMSpace(MetricSpace([[0.0]]), [1.0])


@pytest.fixture()
def x2():
    return MMSpace(MetricSpace([[0.0, 1.0], [1.0, 0.0]]), [0.5, 0.5])


@pytest.fixture()
def x2q():
    return MMSpace(MetricSpace([[0.0, 1.0], [1.0, 0.0]]), [0.75, 0.25])


@pytest.fixture()
def x2far():
    return MMSpace(MetricSpace([[0.0, 2.0], [2.0, 0.0]]), [0.5, 0.5])


def assert_close(a, b, tol=1e-9):
    assert abs(a - b) <= tol, f"{a!r} != {b!r} (tol {tol})"
