import numpy as np
import pytest

from synrisk import (
    DirectedGraph,
    apply_external_shock,
    build_gai_kapadia_system,
    gen_erdos_renyi_directed,
    simulate_default_cascade,
)
from synrisk.cascade import from_weighted_graph


def chain(n=5):
    return DirectedGraph(n, np.arange(n - 1), np.arange(1, n))


def star_lender():
    return DirectedGraph(5, np.zeros(4, dtype=int), np.arange(1, 5))


def brute_force_closure(W, K, seeds):
    """Scan-order stability iteration; the cascade's order-independence
    oracle (adds one violating bank at a time until stable)."""
    n = K.size
    defaulted = set(seeds)
    changed = True
    while changed:
        changed = False
        for i in range(n):
            if i in defaulted:
                continue
            if sum(W[i][j] for j in defaulted) > K[i] + 1e-12:
                defaulted.add(i)
                changed = True
    return defaulted


class TestBuildGaiKapadia:
    def test_even_split_star(self):
        system = build_gai_kapadia_system(star_lender(), 0.25, 1.0)
        assert np.allclose(system.exposures, 0.25)
        assert system.ib_assets[0] == 1.0

    def test_capital_ratio(self):
        system = build_gai_kapadia_system(star_lender(), 0.25, 1.0)
        assert np.allclose(system.capital, 0.25)

    def test_isolated_bank_holds_external(self):
        g = DirectedGraph(3, [0], [1])
        system = build_gai_kapadia_system(g, 0.25, 1.0, external_ratio=4.0)
        assert system.ib_assets[2] == 0.0
        assert system.ext_assets[2] == 5.0  # allocation moved to external
        assert system.capital[2] > 0  # cannot default contagiously
        out = simulate_default_cascade(system, seeds={1})
        assert 2 not in out.finally_defaulted

    def test_accounting_identity_holds(self):
        g = gen_erdos_renyi_directed(50, 4, np.random.default_rng(0))
        build_gai_kapadia_system(g, 0.3).validate()

    def test_nonpositive_ratio_rejected(self):
        with pytest.raises(ValueError, match="capital ratio"):
            build_gai_kapadia_system(star_lender(), 0.0)


class TestSimulateCascade:
    def test_chain_all_default_in_n_minus_1_rounds(self):
        system = build_gai_kapadia_system(chain(), 0.18)
        out = simulate_default_cascade(system, seeds={4})
        assert out.finally_defaulted == {0, 1, 2, 3, 4}
        assert out.rounds == 4
        assert out.per_round_defaults == [{4}, {3}, {2}, {1}, {0}]

    def test_strong_buffer_blocks_contagion(self):
        system = build_gai_kapadia_system(chain(), 1.2)
        out = simulate_default_cascade(system, seeds={4})
        assert out.finally_defaulted == {4}
        assert out.default_fraction == 0.2

    def test_heterogeneous_exposure_threshold(self):
        # lends 10 to bank 1 and 90 to bank 2; capital 50 (ratio 0.5)
        g = DirectedGraph(3, [0, 0], [1, 2], [10.0, 90.0])
        system = from_weighted_graph(g, capital=np.array([50.0, 1.0, 1.0]))
        assert simulate_default_cascade(system, seeds={1}).finally_defaulted == {1}
        assert simulate_default_cascade(system, seeds={2}).finally_defaulted == {0, 2}

    def test_equal_weight_reduction_to_fraction_condition(self):
        # with even exposures the weighted condition equals the counterparty
        # fraction condition exactly
        rng = np.random.default_rng(4)
        g = gen_erdos_renyi_directed(40, 5, rng)
        r_bar = 0.4
        system = build_gai_kapadia_system(g, r_bar)
        out = simulate_default_cascade(system, seeds={0, 1, 2})
        indptr, borrowers, _ = g.out_csr()
        expected = {0, 1, 2}
        changed = True
        while changed:
            changed = False
            for i in range(g.n):
                if i in expected:
                    continue
                nbrs = borrowers[indptr[i]:indptr[i + 1]]
                if nbrs.size == 0:
                    continue
                phi = sum(1 for j in nbrs if j in expected) / nbrs.size
                if phi > r_bar:
                    expected.add(i)
                    changed = True
        assert out.finally_defaulted == expected

    def test_seed_fraction_sampling(self):
        g = gen_erdos_renyi_directed(2000, 3, np.random.default_rng(1))
        system = build_gai_kapadia_system(g, 1.5)  # no contagion
        out = simulate_default_cascade(system, seed_fraction=0.1,
                                       rng=np.random.default_rng(2))
        assert 0.05 < out.default_fraction < 0.15
        assert out.finally_defaulted == out.initially_defaulted

    def test_monotone_in_seed_set(self):
        rng = np.random.default_rng(5)
        for trial in range(20):
            g = gen_erdos_renyi_directed(30, 4, rng)
            system = build_gai_kapadia_system(g, rng.uniform(0.1, 0.6))
            small = set(rng.choice(30, size=2, replace=False).tolist())
            large = small | set(rng.choice(30, size=3, replace=False).tolist())
            a = simulate_default_cascade(system, seeds=small)
            b = simulate_default_cascade(system, seeds=large)
            assert a.finally_defaulted <= b.finally_defaulted

    def test_round_bound_and_partition(self):
        rng = np.random.default_rng(6)
        g = gen_erdos_renyi_directed(50, 6, rng)
        system = build_gai_kapadia_system(g, 0.2)
        out = simulate_default_cascade(system, seeds={0})
        assert out.rounds <= g.n
        union = set()
        for s in out.per_round_defaults:
            assert not (union & s)  # rounds are disjoint
            union |= s
        assert union == out.finally_defaulted
        assert out.initially_defaulted <= out.finally_defaulted

    def test_empty_seed_set_rejected(self):
        system = build_gai_kapadia_system(chain(), 0.2)
        with pytest.raises(ValueError, match="seed"):
            simulate_default_cascade(system, seeds=set())

    def test_matches_stability_closure_on_small_graphs(self):
        # order-independence: the synchronous cascade's final set equals the
        # scan-order closure on every graph with n <= 10, all single seeds
        rng = np.random.default_rng(7)
        for trial in range(200):
            n = int(rng.integers(2, 11))
            mask = rng.random((n, n)) < rng.uniform(0.2, 0.9)
            np.fill_diagonal(mask, False)
            if not mask.any():
                continue
            W = np.where(mask, rng.uniform(0.1, 1.0, (n, n)), 0.0)
            K = rng.uniform(0.05, 1.5, n)
            g = DirectedGraph(n, *np.nonzero(mask), W[mask])
            system = from_weighted_graph(g, capital=K)
            for seed in range(n):
                got = simulate_default_cascade(system, seeds={seed})
                assert got.finally_defaulted == brute_force_closure(W, K, {seed})


class TestExternalShock:
    def test_zero_devaluation_is_identity(self):
        system = build_gai_kapadia_system(chain(), 0.2)
        shocked = apply_external_shock(system, 0, 0.0)
        assert np.array_equal(shocked.ext_assets, system.ext_assets)
        assert np.array_equal(shocked.capital, system.capital)

    def test_full_devaluation_defaults_the_bank(self):
        system = build_gai_kapadia_system(chain(), 0.2)
        shocked = apply_external_shock(system, 4, 1.0)
        assert shocked.capital[4] <= 0
        out = simulate_default_cascade(shocked, seeds=set())
        assert 4 in out.initially_defaulted
        assert out.finally_defaulted == {0, 1, 2, 3, 4}

    def test_boundary_devaluation_keeps_bank_alive(self):
        system = build_gai_kapadia_system(chain(), 0.2)
        ratio = system.capital[4] / system.ext_assets[4]
        shocked = apply_external_shock(system, 4, ratio * 0.999)
        assert shocked.capital[4] > 0
        with pytest.raises(ValueError):  # no seeds at all then
            simulate_default_cascade(shocked, seeds=set())

    def test_fraction_out_of_range(self):
        system = build_gai_kapadia_system(chain(), 0.2)
        with pytest.raises(ValueError, match="devaluation"):
            apply_external_shock(system, 0, 1.5)

    def test_purity(self):
        system = build_gai_kapadia_system(chain(), 0.2)
        before = system.capital.copy()
        apply_external_shock(system, 2, 0.7)
        assert np.array_equal(system.capital, before)
