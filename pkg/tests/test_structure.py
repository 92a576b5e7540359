import numpy as np
import pytest

from synrisk import (
    core_periphery_detect,
    core_periphery_error,
    planted_core_periphery,
)


def brute_force_minimum(adj):
    """Error of the best core over all 2^n assignments, counted from the
    block definition directly (missing core pairs + present periphery pairs)."""
    n = adj.shape[0]
    best = None
    for bits in range(1 << n):
        core = [i for i in range(n) if bits >> i & 1]
        periphery = [i for i in range(n) if not bits >> i & 1]
        missing = sum(1 for a in range(len(core)) for b in range(a + 1, len(core))
                      if adj[core[a], core[b]] == 0)
        present = sum(1 for a in range(len(periphery))
                      for b in range(a + 1, len(periphery))
                      if adj[periphery[a], periphery[b]] == 1)
        err = missing + present
        if best is None or err < best:
            best = err
    return best


def random_graph(rng, n, p):
    adj = np.triu((rng.random((n, n)) < p).astype(float), 1)
    return adj + adj.T


class TestErrorFunction:
    def test_perfect_planted_pattern_scores_zero(self):
        adj = planted_core_periphery(20, 6, 2, np.random.default_rng(0))
        assert core_periphery_error(adj, set(range(6))) == 0

    def test_complete_graph_all_core(self):
        n = 7
        adj = np.ones((n, n)) - np.eye(n)
        assert core_periphery_error(adj, set(range(n))) == 0

    def test_empty_graph_empty_core(self):
        assert core_periphery_error(np.zeros((5, 5)), set()) == 0

    def test_counts_both_block_violations(self):
        # square: 0-1, 1-2, 2-3, 3-0
        adj = np.zeros((4, 4))
        for a, b in [(0, 1), (1, 2), (2, 3), (3, 0)]:
            adj[a, b] = adj[b, a] = 1
        # core {0, 2} misses its one internal pair; periphery {1, 3} is empty
        assert core_periphery_error(adj, {0, 2}) == 1
        # core {0, 1} is complete but the periphery pair 2-3 carries an edge
        assert core_periphery_error(adj, {0, 1}) == 1

    def test_rejects_asymmetric(self):
        adj = np.zeros((3, 3))
        adj[0, 1] = 1
        with pytest.raises(ValueError, match="symmetric"):
            core_periphery_error(adj, {0})

    def test_rejects_out_of_range_core(self):
        with pytest.raises(ValueError, match="range"):
            core_periphery_error(np.zeros((3, 3)), {5})


class TestDetection:
    def test_exact_on_small_graphs(self):
        rng = np.random.default_rng(1)
        for _ in range(60):
            n = int(rng.integers(2, 13))
            adj = random_graph(rng, n, rng.uniform(0.1, 0.9))
            part = core_periphery_detect(adj)
            assert part.error == brute_force_minimum(adj)
            # reported error always matches a full recount
            assert part.error == core_periphery_error(adj, part.core)

    def test_planted_core_recovered_exactly(self):
        adj = planted_core_periphery(60, 15, 3, np.random.default_rng(2))
        part = core_periphery_detect(adj)
        assert part.core == set(range(15))
        assert part.error == 0

    def test_noisy_planted_core_recovery(self):
        hits = []
        for trial in range(20):
            adj = planted_core_periphery(60, 15, 3,
                                         np.random.default_rng(100 + trial),
                                         noise=0.05)
            part = core_periphery_detect(adj)
            truth = np.zeros(60, dtype=bool)
            truth[:15] = True
            found = np.zeros(60, dtype=bool)
            found[sorted(part.core)] = True
            hits.append((truth == found).mean())
        assert np.mean(hits) >= 0.95

    def test_dense_er_sits_at_density_floor(self):
        # at p = 1/2 every partition scores ~half its comparable pairs; the
        # exact optimum's normalized error stays within 5% of that floor
        adj = random_graph(np.random.default_rng(3), 2000, 0.5)
        part = core_periphery_detect(adj)
        assert abs(part.normalized_error - 0.5) <= 0.025
        baseline = min(core_periphery_error(adj, set(range(2000))),
                       core_periphery_error(adj, set()))
        pairs = 2000 * 1999 // 2
        assert abs(part.normalized_error - baseline / pairs) <= 0.025

    def test_two_nodes_one_edge_tiebreak(self):
        adj = np.array([[0.0, 1.0], [1.0, 0.0]])
        part = core_periphery_detect(adj)
        # {0}, {1} and {0,1} all score zero; smaller core first, then the
        # lexicographically smallest member set
        assert part.error == 0
        assert part.core == {0}

    def test_determinism(self):
        adj = random_graph(np.random.default_rng(4), 30, 0.3)
        a = core_periphery_detect(adj)
        b = core_periphery_detect(adj)
        assert a.core == b.core and a.error == b.error

    def test_needs_two_nodes(self):
        with pytest.raises(ValueError, match="two nodes"):
            core_periphery_detect(np.zeros((1, 1)))


class TestPlantedBuilder:
    def test_shape_and_blocks(self):
        adj = planted_core_periphery(10, 4, 2, np.random.default_rng(5))
        assert np.array_equal(adj, adj.T)
        assert adj[:4, :4].sum() == 4 * 3  # clique
        assert adj[4:, 4:].sum() == 0  # empty periphery block
        assert np.all(adj[4:].sum(axis=1) == 2)

    def test_parameter_validation(self):
        rng = np.random.default_rng(6)
        with pytest.raises(ValueError, match="links"):
            planted_core_periphery(10, 3, 5, rng)
        with pytest.raises(ValueError, match="noise"):
            planted_core_periphery(10, 3, 2, rng, noise=0.7)
