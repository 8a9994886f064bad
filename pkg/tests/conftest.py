import numpy as np
import pytest

from active_search.graph import NeighborGraph
from active_search.model import KnnModel


def random_graph(rng, n, k, weighted=True):
    lists = []
    for i in range(n):
        others = np.delete(np.arange(n), i)
        nb = rng.choice(others, size=min(k, n - 1), replace=False)
        lists.append([(int(j), float(rng.uniform(0.1, 1.0)) if weighted else 1.0) for j in nb])
    return NeighborGraph.from_lists(lists)


def random_model(rng, n, k=3, n_obs=0, empty=False, weighted=True, scalar_prior=False):
    graph = NeighborGraph.empty(n) if empty else random_graph(rng, n, k, weighted)
    prior = float(rng.uniform(0.05, 0.6)) if scalar_prior else rng.uniform(0.05, 0.95, size=n)
    model = KnnModel(graph, gamma=float(rng.uniform(0.3, 2.0)), prior=prior)
    for x in rng.choice(n, size=n_obs, replace=False):
        model.observe(int(x), int(rng.integers(2)))
    return model


def brute_top_sum_after(model, x, y, m):
    """Condition for real, sort everything, sum, undo."""
    t = model.condition(x, y)
    try:
        unl = model.unlabeled()
        vals = np.sort(model.probabilities()[unl])[::-1]
        return float(vals[:m].sum())
    finally:
        model.rollback(t)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
