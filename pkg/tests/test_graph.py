import itertools

import numpy as np
import pytest

from bass import (
    Topology,
    betweenness_centrality,
    load_topology,
    save_topology,
)


def p3():
    return Topology(3, [(0, 1), (1, 2)])


def random_connected(rng, n, extra_edges=2):
    """Random tree plus a few extra edges; connected by construction."""
    nodes = rng.permutation(n)
    edges = set()
    for i in range(1, n):
        j = int(rng.integers(0, i))
        a, b = int(nodes[i]), int(nodes[j])
        edges.add((min(a, b), max(a, b)))
    for _ in range(extra_edges):
        a, b = int(rng.integers(0, n)), int(rng.integers(0, n))
        if a != b:
            edges.add((min(a, b), max(a, b)))
    return Topology(n, edges)


def brute_force_betweenness(t):
    """Oracle: enumerate every shortest path explicitly (small n only).

    For each ordered pair (s, v) counts sigma_sv via all-pairs BFS distances,
    then credits interior nodes with sigma_s_via / sigma_st summed over all
    ordered pairs.
    """
    n = t.n
    dist = np.full((n, n), np.inf)
    for s in range(n):
        dist[s, s] = 0
        frontier = [s]
        d = 0
        while frontier:
            nxt = []
            for v in frontier:
                for w in t.neighbors[v]:
                    if dist[s, w] == np.inf:
                        dist[s, w] = d + 1
                        nxt.append(w)
            frontier = nxt
            d += 1

    def all_shortest_paths(s, targ):
        if s == targ:
            return [[s]]
        paths = []
        for prev in t.neighbors[targ]:
            if dist[s, prev] == dist[s, targ] - 1:
                paths.extend(p + [targ] for p in all_shortest_paths(s, prev))
        return paths

    raw = np.zeros(n)
    for s in range(n):
        for targ in range(n):
            if s == targ:
                continue
            paths = all_shortest_paths(s, targ)
            for p in paths:
                for interior in p[1:-1]:
                    raw[interior] += 1.0 / len(paths)
    return raw


class TestTopology:
    def test_p3_degrees(self):
        t = p3()
        assert list(t.degrees) == [1, 2, 1]
        assert t.neighbors == ((1,), (0, 2), (1,))

    def test_symmetric_pair_dedup(self):
        t = Topology(2, [(0, 1), (1, 0)])
        assert t.edges == ((0, 1),)

    def test_out_of_range_endpoint(self):
        with pytest.raises(ValueError):
            Topology(3, [(0, 3)])

    def test_self_loop_rejected(self):
        with pytest.raises(ValueError):
            Topology(3, [(1, 1)])

    def test_adjacency_is_readonly(self):
        t = p3()
        with pytest.raises(ValueError):
            t.adjacency[0, 0] = 5.0

    def test_equality_and_hash(self):
        assert p3() == Topology(3, [(2, 1), (1, 0)])
        assert hash(p3()) == hash(Topology(3, [(1, 2), (0, 1)]))


class TestLaplacian:
    def test_p3_matrix(self):
        expected = np.array([[1, -1, 0], [-1, 2, -1], [0, -1, 1]], dtype=float)
        assert np.array_equal(p3().laplacian(), expected)

    def test_single_edge(self):
        t = Topology(2, [(0, 1)])
        assert np.array_equal(t.laplacian(), np.array([[1.0, -1.0], [-1.0, 1.0]]))

    def test_p3_eigenvalues(self):
        eig = np.linalg.eigvalsh(p3().laplacian())
        assert np.allclose(eig, [0.0, 1.0, 3.0], atol=1e-12)

    def test_zero_row_sums_exact(self):
        rng = np.random.default_rng(11)
        for _ in range(10):
            t = random_connected(rng, int(rng.integers(2, 12)))
            assert np.array_equal(t.laplacian().sum(axis=1), np.zeros(t.n))


class TestConnectivity:
    def test_p3_connected(self):
        assert p3().is_connected()

    def test_isolated_node(self):
        assert not Topology(3, [(0, 1)]).is_connected()

    def test_single_node(self):
        assert Topology(1).is_connected()


class TestAuxiliaryGraph:
    def enumerate_conflicts(self, t):
        """Oracle: pairs that are adjacent or share a common neighbor."""
        pairs = set(t.edges)
        for i, j in itertools.combinations(range(t.n), 2):
            if set(t.neighbors[i]) & set(t.neighbors[j]):
                pairs.add((i, j))
        return pairs

    def test_p3_becomes_triangle(self):
        aux = p3().auxiliary_graph()
        assert set(aux.edges) == self.enumerate_conflicts(p3())
        assert aux.edges == ((0, 1), (0, 2), (1, 2))

    def test_star_becomes_complete(self):
        star = Topology(5, [(0, i) for i in range(1, 5)])
        aux = star.auxiliary_graph()
        assert set(aux.edges) == {
            (i, j) for i in range(5) for j in range(i + 1, 5)
        }

    def test_ring6_chords(self):
        ring = Topology(6, [(i, (i + 1) % 6) for i in range(6)])
        aux = ring.auxiliary_graph()
        assert set(aux.edges) == self.enumerate_conflicts(ring)
        # distance-2 chords appear, antipodal pairs stay non-adjacent
        assert (0, 2) in aux.edges
        assert (0, 3) not in aux.edges

    def test_monotone_and_disjoint_neighborhoods(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            t = random_connected(rng, int(rng.integers(3, 14)), extra_edges=3)
            aux = t.auxiliary_graph()
            assert set(aux.edges) >= set(t.edges)
            aux_set = set(aux.edges)
            for i, j in itertools.combinations(range(t.n), 2):
                if (i, j) not in aux_set:
                    assert not set(t.neighbors[i]) & set(t.neighbors[j])


class TestBetweenness:
    def test_p3(self):
        assert np.allclose(betweenness_centrality(p3()), [0.0, 1.0, 0.0])

    def test_ring6_uniform(self):
        ring = Topology(6, [(i, (i + 1) % 6) for i in range(6)])
        assert np.allclose(betweenness_centrality(ring), np.full(6, 1 / 6))

    def test_k4_uniform_fallback(self):
        k4 = Topology(4, itertools.combinations(range(4), 2))
        assert np.allclose(betweenness_centrality(k4), np.full(4, 0.25))

    def test_disconnected_raises(self):
        with pytest.raises(ValueError):
            betweenness_centrality(Topology(3, [(0, 1)]))

    def test_probability_vector(self):
        rng = np.random.default_rng(3)
        for _ in range(15):
            t = random_connected(rng, int(rng.integers(2, 16)), extra_edges=3)
            b = betweenness_centrality(t)
            assert np.all(b >= 0)
            assert abs(b.sum() - 1.0) < 1e-12

    def test_matches_path_enumeration_oracle(self):
        rng = np.random.default_rng(17)
        for _ in range(10):
            t = random_connected(rng, int(rng.integers(3, 9)), extra_edges=2)
            raw = brute_force_betweenness(t)
            expected = raw / raw.sum() if raw.sum() > 0 else np.full(t.n, 1 / t.n)
            assert np.allclose(betweenness_centrality(t), expected, atol=1e-9)

    def test_tree_raw_sum_equals_pair_traversals(self):
        rng = np.random.default_rng(23)
        for _ in range(8):
            n = int(rng.integers(3, 9))
            t = random_connected(rng, n, extra_edges=0)
            raw = brute_force_betweenness(t)
            b = betweenness_centrality(t)
            # on a tree the unique path makes credits integral
            assert np.allclose(b * raw.sum(), raw, atol=1e-9)
            # raw total = number of ordered (s, t) traversals through an
            # interior vertex, counted directly on the unique paths
            dist = np.full((n, n), np.inf)
            for s in range(n):
                dist[s, s] = 0
                frontier, d = [s], 0
                while frontier:
                    nxt = []
                    for v in frontier:
                        for w in t.neighbors[v]:
                            if dist[s, w] == np.inf:
                                dist[s, w] = d + 1
                                nxt.append(w)
                    frontier, d = nxt, d + 1
            traversals = sum(
                int(dist[s, v] + dist[v, targ] == dist[s, targ])
                for s in range(n)
                for targ in range(n)
                for v in range(n)
                if s != targ and v != s and v != targ
            )
            assert raw.sum() == pytest.approx(traversals, abs=1e-9)

    def test_permutation_equivariance(self):
        rng = np.random.default_rng(29)
        t = random_connected(rng, 9, extra_edges=3)
        perm = rng.permutation(9)
        relabeled = Topology(9, [(perm[i], perm[j]) for i, j in t.edges])
        b = betweenness_centrality(t)
        rb = betweenness_centrality(relabeled)
        assert np.allclose(rb[perm], b, atol=1e-12)


class TestFileFormat:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(31)
        t = random_connected(rng, 10, extra_edges=4)
        path = tmp_path / "graph.txt"
        save_topology(t, path)
        assert load_topology(path) == t

    def test_comments_and_blanks_ignored(self, tmp_path):
        path = tmp_path / "g.txt"
        path.write_text("# a path\n3\n\n0 1\n# middle\n1 2\n")
        assert load_topology(path) == p3()

    def test_malformed_line(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("3\n0 1 2\n")
        with pytest.raises(ValueError):
            load_topology(path)
