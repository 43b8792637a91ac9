"""Graph construction, generation, IO, and seeding."""

import numpy as np
import pytest

from conftest import graph_from_edges, random_graph
from prunesolve.graph import (
    EdgeListParseError,
    EmptyGraphError,
    Graph,
    NodeSet,
    derive_seed,
    dump_edge_list,
    generate_ba,
    load_edge_list,
    make_rng,
)


class TestGraphStructure:
    def test_neighbors_sorted_and_symmetric(self):
        g = graph_from_edges(4, [(2, 0), (3, 1), (0, 1)])
        g.validate()
        assert list(g.neighbors(0)) == [1, 2]
        assert list(g.neighbors(1)) == [0, 3]
        for u in range(4):
            for v in range(4):
                assert g.has_edge(u, v) == g.has_edge(v, u)

    def test_degrees(self, triangle, star5):
        assert list(triangle.degrees()) == [2, 2, 2]
        assert list(star5.degrees()) == [4, 1, 1, 1, 1]
        assert triangle.degrees().sum() == 2 * triangle.m

    def test_rejects_dirty_edge_arrays(self):
        with pytest.raises(ValueError):
            Graph(3, [(0, 0)])
        with pytest.raises(ValueError):
            Graph(3, [(0, 1), (1, 0)])
        with pytest.raises(ValueError):
            Graph(2, [(0, 5)])

    def test_edge_array_canonical(self, cycle5):
        e = cycle5.edge_array()
        assert e.shape == (5, 2)
        assert np.all(e[:, 0] < e[:, 1])

    def test_adjacency_csr_matches_edges(self, cycle5):
        a = cycle5.adjacency_csr()
        assert (a != a.T).nnz == 0
        assert a.nnz == 2 * cycle5.m
        assert a.sum() == 2 * cycle5.m

    def test_count_in_mask_against_naive(self):
        for seed in range(5):
            g = random_graph(12, 0.3, seed)
            rng = np.random.default_rng(seed + 100)
            mask = rng.random(g.n) < 0.5
            counts = g.count_in_mask(mask)
            for v in range(g.n):
                assert counts[v] == sum(mask[u] for u in g.neighbors(v))

    def test_empty_graph(self, edgeless6):
        edgeless6.validate()
        assert edgeless6.m == 0
        assert edgeless6.edge_array().shape == (0, 2)
        assert list(edgeless6.count_in_mask(np.ones(6, bool))) == [0] * 6


class TestNodeSet:
    def test_roundtrip(self):
        s = NodeSet.from_ids([3, 1], 5)
        assert list(s.ids()) == [1, 3]
        assert len(s) == 2 and s.universe == 5
        assert 1 in s and 0 not in s

    def test_bounds_checked(self):
        with pytest.raises(ValueError):
            NodeSet.from_ids([5], 5)

    def test_full_empty_eq(self):
        assert NodeSet.full(4).size == 4
        assert NodeSet.empty(4).size == 0
        assert NodeSet.from_ids([0, 1], 3) == NodeSet.from_ids([1, 0], 3)
        assert NodeSet.from_ids([0], 3) != NodeSet.from_ids([1], 3)


class TestGenerateBa:
    def test_small_is_complete_graph(self):
        # n=5, m=4: clique on 4 nodes plus one node attached to all of them
        g = generate_ba(5, 4, seed=123)
        assert g.m == 10
        assert all(g.degree(v) == 4 for v in range(5))

    def test_edge_count_formula(self):
        for n, m, seed in [(1000, 4, 7), (50, 3, 0), (10, 1, 2)]:
            g = generate_ba(n, m, seed)
            assert g.m == m * (m - 1) // 2 + m * (n - m)
            g.validate()

    def test_deterministic(self):
        a = generate_ba(1000, 4, seed=7)
        b = generate_ba(1000, 4, seed=7)
        assert np.array_equal(a.offsets, b.offsets)
        assert np.array_equal(a.targets, b.targets)

    def test_seed_changes_graph(self):
        a = generate_ba(200, 4, seed=1)
        b = generate_ba(200, 4, seed=2)
        assert not np.array_equal(a.targets, b.targets)

    def test_degree_sum(self):
        g = generate_ba(1000, 4, seed=7)
        assert g.degrees().sum() == 7980

    def test_rejects_bad_sizes(self):
        with pytest.raises(ValueError):
            generate_ba(4, 4, seed=0)
        with pytest.raises(ValueError):
            generate_ba(10, 0, seed=0)


class TestEdgeListIo:
    def test_duplicates_dropped(self, tmp_path):
        p = tmp_path / "tri.txt"
        p.write_text("0 1\n1 2\n2 0\n2 0\n")
        res = load_edge_list(p)
        assert res.graph.n == 3 and res.graph.m == 3
        assert res.dropped_duplicates == 1
        assert res.dropped_self_loops == 0

    def test_self_loop_dropped(self, tmp_path):
        p = tmp_path / "loop.txt"
        p.write_text("5 5\n5 6\n")
        res = load_edge_list(p)
        assert res.graph.n == 2 and res.graph.m == 1
        assert res.dropped_self_loops == 1

    def test_parse_error_names_line(self, tmp_path):
        p = tmp_path / "bad.txt"
        p.write_text("0 1\n1 2\na b\n")
        with pytest.raises(EdgeListParseError, match="line 3"):
            load_edge_list(p)

    def test_empty_file_rejected(self, tmp_path):
        p = tmp_path / "empty.txt"
        p.write_text("# only a comment\n")
        with pytest.raises(EmptyGraphError):
            load_edge_list(p)

    def test_ids_compacted_in_first_appearance_order(self, tmp_path):
        p = tmp_path / "ids.txt"
        p.write_text("10 3\n3 7\n")
        g = load_edge_list(p).graph
        # 10 -> 0, 3 -> 1, 7 -> 2
        assert g.has_edge(0, 1) and g.has_edge(1, 2) and not g.has_edge(0, 2)

    def test_comments_and_blanks_ignored(self, tmp_path):
        p = tmp_path / "c.txt"
        p.write_text("# header\n\n0 1\n")
        assert load_edge_list(p).graph.m == 1

    def test_dump_load_roundtrip(self, tmp_path):
        g = generate_ba(80, 3, seed=5)
        p = tmp_path / "ba.txt"
        dump_edge_list(g, p)
        back = load_edge_list(p).graph
        assert back.n == g.n and back.m == g.m
        assert sorted(back.degrees()) == sorted(g.degrees())


class TestSeeding:
    def test_derive_seed_stable(self):
        assert derive_seed(7, "labels") == derive_seed(7, "labels")

    def test_derive_seed_separates_streams(self):
        seen = {
            derive_seed(7, "labels"),
            derive_seed(7, "teacher"),
            derive_seed(8, "labels"),
            derive_seed(7, "labels", 0),
        }
        assert len(seen) == 4

    def test_derive_seed_in_63_bit_range(self):
        for s in [0, 1, 2**40]:
            d = derive_seed(s, "x")
            assert 0 <= d < 2**63

    def test_make_rng_reproducible(self):
        a = make_rng(42).random(4)
        b = make_rng(42).random(4)
        assert np.array_equal(a, b)
