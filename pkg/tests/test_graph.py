import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from active_search.data import DataError, Dataset
from active_search.graph import NeighborGraph, build_knn_graph, jaccard_similarity
from active_search.harness.toy import generate_toy_instance


class TestJaccard:
    def test_identical(self):
        assert jaccard_similarity([1, 2, 7], [1, 2, 7]) == 1.0

    def test_disjoint(self):
        assert jaccard_similarity([1, 2], [3, 4]) == 0.0

    def test_partial(self):
        assert jaccard_similarity([1, 2], [2, 3]) == pytest.approx(1 / 3)

    def test_both_empty(self):
        assert jaccard_similarity([], []) == 0.0

    @given(st.sets(st.integers(0, 40)), st.sets(st.integers(0, 40)))
    def test_matches_set_definition(self, a, b):
        expect = len(a & b) / len(a | b) if a | b else 0.0
        assert jaccard_similarity(sorted(a), sorted(b)) == pytest.approx(expect)


def test_collinear_example():
    ds = Dataset(np.array([[0.0], [1.0], [3.0]]), np.array([0, 0, 1]))
    g = build_knn_graph(ds, 1)
    assert [g.forward(i)[0].tolist() for i in range(3)] == [[1], [0], [1]]
    assert g.forward(0)[1].tolist() == [1.0]


def test_tie_break_by_ascending_id():
    # points 0 and 2 are equidistant from 1
    ds = Dataset(np.array([[0.0], [1.0], [2.0], [5.0]]), np.zeros(4, dtype=int))
    g = build_knn_graph(ds, 1)
    assert g.forward(1)[0].tolist() == [0]


def test_toy_instance_k50_structure():
    ds = generate_toy_instance(np.random.default_rng(3))
    g = build_knn_graph(ds, 50)
    g.validate()
    for i in range(ds.n):
        nb, w = g.forward(i)
        assert nb.size == 50 and i not in nb and np.unique(nb).size == 50
    # exhaustive check: every neighbor is no farther than every non-neighbor
    d = np.linalg.norm(ds.features[:, None] - ds.features[None], axis=2)
    for i in range(0, ds.n, 25):
        nb = set(g.forward(i)[0].tolist())
        inside = max(d[i, j] for j in nb)
        outside = min(d[i, j] for j in range(ds.n) if j != i and j not in nb)
        assert inside <= outside


def test_jaccard_graph_matches_brute_force():
    rng = np.random.default_rng(5)
    fps = [np.unique(rng.integers(0, 30, size=rng.integers(0, 8))) for _ in range(40)]
    ds = Dataset(fps, rng.integers(0, 2, 40))
    g = build_knn_graph(ds, 5, "jaccard-weighted")
    g.validate()
    for i in range(40):
        sims = [(-jaccard_similarity(fps[i], fps[j]), j) for j in range(40) if j != i]
        want = sorted(sims)[:5]
        nb, w = g.forward(i)
        assert nb.tolist() == [j for _, j in want]
        np.testing.assert_allclose(w, [-s for s, _ in want])


def test_reverse_is_transpose():
    ds = generate_toy_instance(np.random.default_rng(9), n=120)
    g = build_knn_graph(ds, 7)
    fwd = {(i, int(j)) for i in range(g.n) for j in g.forward(i)[0]}
    rev = {(int(j), i) for i in range(g.n) for j in g.reverse(i)[0]}
    assert fwd == rev
    for i in range(g.n):
        for z, w in zip(*g.reverse(i)):
            nb, fw = g.forward(int(z))
            assert fw[list(nb).index(i)] == w


@pytest.mark.parametrize("k", [0, 5])
def test_rejects_bad_k(k):
    ds = Dataset(np.random.default_rng(0).random((5, 2)), np.zeros(5, dtype=int))
    with pytest.raises(DataError):
        build_knn_graph(ds, k)


def test_rejects_metric_mismatch():
    dense = Dataset(np.zeros((4, 2)), np.zeros(4, dtype=int))
    sparse = Dataset([np.array([1]), np.array([2]), np.array([3])], np.zeros(3, dtype=int))
    with pytest.raises(DataError):
        build_knn_graph(dense, 1, "jaccard-weighted")
    with pytest.raises(DataError):
        build_knn_graph(sparse, 1, "euclidean-unit")


def test_graph_file_round_trip(tmp_path):
    rng = np.random.default_rng(1)
    fps = [np.unique(rng.integers(0, 20, size=5)) for _ in range(25)]
    g = build_knn_graph(Dataset(fps, np.zeros(25, dtype=int)), 4, "jaccard-weighted")
    g.save(tmp_path / "g.txt")
    h = NeighborGraph.load(tmp_path / "g.txt", validate=True)
    assert np.array_equal(g.indices, h.indices) and np.array_equal(g.weights, h.weights)
    assert np.array_equal(g.rev_indices, h.rev_indices)


def test_validate_catches_self_edge():
    g = NeighborGraph.from_lists([[(0, 1.0)], [(0, 1.0)]])
    with pytest.raises(DataError):
        g.validate()


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 40), st.integers(1, 6), st.integers(0, 10_000))
def test_built_graphs_validate(n, k, seed):
    k = min(k, n - 1)
    ds = Dataset(np.random.default_rng(seed).random((n, 3)), np.zeros(n, dtype=int))
    build_knn_graph(ds, k).validate()
