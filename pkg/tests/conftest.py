import numpy as np
import pytest

from lucluster.model import Instance


def line_instance(clients, facilities, lower, upper, k, f=None, kind="LUkM", objective=None):
    """Instance on the integer line with scale 1 (distances are plain integers)."""
    pts = np.asarray(list(clients) + list(facilities), dtype=np.int64)
    dist = np.abs(pts[:, None] - pts[None, :])
    m = len(facilities)
    if np.isscalar(lower):
        lower = [lower] * m
    if np.isscalar(upper):
        upper = [upper] * m
    f = [0] * m if f is None else f
    return Instance(dist, len(clients), tuple(f), tuple(lower), tuple(upper), k, kind, objective, scale=1)


@pytest.fixture
def four_line():
    """Clients {0, 1, 8, 9}, facilities {1, 9}, L = U = 2, k = 2."""
    return line_instance([0, 1, 8, 9], [1, 9], 2, 2, 2)


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[num])
