import json

import numpy as np
import pytest

from synrisk import (
    FinancialSystem,
    add_external_sink,
    clear_eisenberg_noe,
    clear_fictitious_default,
    clear_rogers_veraart,
    relative_liabilities,
    total_obligations,
)


def fs(L, e):
    return FinancialSystem(np.array(L, dtype=float), np.array(e, dtype=float))


def random_regular_system(rng, n=20):
    """Positive cash flow everywhere; defaults still cascade."""
    L = rng.uniform(0.0, 1.0, (n, n)) * (rng.random((n, n)) < 0.5)
    np.fill_diagonal(L, 0.0)
    return FinancialSystem(L, rng.uniform(0.01, 0.8, n))


class TestObligations:
    def test_row_sums(self):
        assert total_obligations(fs([[0, 1], [2, 0]], [0, 0])).tolist() == [1, 2]

    def test_zero_matrix(self):
        assert total_obligations(fs([[0, 0], [0, 0]], [1, 1])).tolist() == [0, 0]

    def test_asymmetric(self):
        assert total_obligations(fs([[0, 2], [1, 0]], [0, 0])).tolist() == [2, 1]


class TestRelativeLiabilities:
    def test_two_banks(self):
        pi = relative_liabilities(fs([[0, 2], [1, 0]], [0, 0]))
        assert np.allclose(pi, [[0, 1], [1, 0]])

    def test_zero_row_stays_zero(self):
        pi = relative_liabilities(fs([[0, 1], [0, 0]], [0, 0]))
        assert pi[1].tolist() == [0, 0]

    def test_three_banks(self):
        pi = relative_liabilities(fs([[0, 1, 3], [0, 0, 0], [2, 2, 0]], [0, 0, 0]))
        assert np.allclose(pi[0], [0, 0.25, 0.75])
        assert np.allclose(pi[2], [0.5, 0.5, 0])

    def test_nonzero_rows_sum_to_one(self):
        rng = np.random.default_rng(0)
        pi = relative_liabilities(random_regular_system(rng))
        sums = pi.sum(axis=1)
        assert np.all((np.abs(sums - 1.0) < 1e-12) | (sums == 0.0))


class TestEisenbergNoe:
    def test_ample_cash_full_repayment(self):
        r = clear_eisenberg_noe(fs([[0, 1], [1, 0]], [1, 1]))
        assert np.allclose(r.p, [1, 1])
        assert r.defaults == set()

    def test_two_bank_default(self):
        # iterating p <- min(e + Pi^T p, pbar) from pbar settles at (1.5, 1)
        r = clear_eisenberg_noe(fs([[0, 2], [1, 0]], [0.5, 0]))
        assert np.allclose(r.p, [1.5, 1.0], atol=1e-9)
        assert r.defaults == {0}

    def test_no_external_inflow_fixed_point(self):
        rng = np.random.default_rng(3)
        L = rng.uniform(0.5, 1.0, (6, 6))
        np.fill_diagonal(L, 0.0)
        system = fs(L, np.zeros(6))
        r = clear_eisenberg_noe(system)
        pi_t = relative_liabilities(system).T
        resid = np.abs(r.p - np.minimum(pi_t @ r.p, r.p_bar))
        assert np.max(resid) < 1e-9

    def test_matches_picard_oracle(self):
        # plain-loop Picard iteration, independent of the library internals
        system = fs([[0, 2, 1], [1, 0, 0.5], [0, 3, 0]], [0.2, 0.1, 0.4])
        p_bar = system.L.sum(axis=1)
        pi = system.L / p_bar[:, None]
        p = p_bar.copy()
        for _ in range(10_000):
            p = np.minimum(system.e + pi.T @ p, p_bar)
        r = clear_eisenberg_noe(system)
        assert np.allclose(r.p, p, atol=1e-9)

    def test_net_positions_and_iterations_reported(self):
        r = clear_eisenberg_noe(fs([[0, 2], [1, 0]], [0.5, 0]))
        assert r.iterations >= 1
        assert np.allclose(r.net_positions, [0.0, 0.5], atol=1e-9)

    def test_invalid_system_rejected(self):
        with pytest.raises(ValueError, match="diagonal"):
            clear_eisenberg_noe(fs([[1, 0], [0, 0]], [1, 1]))
        with pytest.raises(ValueError, match="non-negative"):
            clear_eisenberg_noe(fs([[0, -1], [0, 0]], [1, 1]))
        with pytest.raises(ValueError, match="sink"):
            clear_eisenberg_noe(fs([[0, 1], [1, 0]], [-1, 1]))


class TestRogersVeraart:
    def test_unit_discounts_reduce_to_eisenberg_noe(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            system = random_regular_system(rng, n=12)
            en = clear_eisenberg_noe(system)
            rv = clear_rogers_veraart(system, 1.0, 1.0)
            assert np.max(np.abs(en.p - rv.p)) < 1e-12

    def test_two_bank_discounted_solution(self):
        # insolvent-regime equations p0 = 0.25 + 0.5 p1, p1 = 0.5 p0
        r = clear_rogers_veraart(fs([[0, 2], [1, 0]], [0.5, 0]), 0.5, 0.5)
        assert np.allclose(r.p, [1 / 3, 1 / 6], atol=1e-9)
        assert r.defaults == {0, 1}

    def test_total_writeoff(self):
        r = clear_rogers_veraart(fs([[0, 2], [1, 0]], [0.1, 0]), 0.0, 0.0)
        assert np.allclose(r.p, [0.0, 0.0], atol=1e-12)

    def test_discount_range_checked(self):
        with pytest.raises(ValueError, match="alpha"):
            clear_rogers_veraart(fs([[0, 1], [1, 0]], [1, 1]), 1.5, 0.5)

    def test_losses_weakly_exceed_eisenberg_noe(self):
        rng = np.random.default_rng(6)
        for _ in range(30):
            system = random_regular_system(rng, n=10)
            en = clear_eisenberg_noe(system)
            rv = clear_rogers_veraart(system, rng.uniform(0, 1), rng.uniform(0, 1))
            assert np.all(rv.p <= en.p + 1e-9)


class TestClearingInvariants:
    def test_monotone_iteration_agreement(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            system = random_regular_system(rng)
            down = clear_eisenberg_noe(system, start="above")
            up = clear_eisenberg_noe(system, start="below")
            assert np.max(np.abs(down.p - up.p)) < 1e-9

    def test_limited_liability_and_absolute_priority(self):
        rng = np.random.default_rng(8)
        for _ in range(30):
            system = random_regular_system(rng)
            r = clear_eisenberg_noe(system)
            incoming = relative_liabilities(system).T @ r.p
            for i in range(system.n):
                if i in r.defaults:
                    assert r.p[i] <= system.e[i] + incoming[i] + 1e-9
                else:
                    assert r.p[i] == r.p_bar[i]

    def test_proportional_payments(self):
        system = fs([[0, 2, 2], [1, 0, 1], [0, 0, 0]], [0.3, 0.2, 0.1])
        r = clear_eisenberg_noe(system)
        pi = relative_liabilities(system)
        payments = pi * r.p[:, None]
        assert np.allclose(payments.sum(axis=1), r.p, atol=1e-12)
        assert np.allclose(payments[0] / r.p[0], pi[0])

    def test_fictitious_default_agrees_with_picard(self):
        rng = np.random.default_rng(9)
        for _ in range(30):
            system = random_regular_system(rng, n=15)
            a = clear_eisenberg_noe(system)
            b = clear_fictitious_default(system)
            assert np.max(np.abs(a.p - b.p)) < 1e-8

    def test_fictitious_default_rogers_veraart(self):
        system = fs([[0, 2], [1, 0]], [0.5, 0])
        b = clear_fictitious_default(system, alpha=0.5, beta=0.5)
        assert np.allclose(b.p, [1 / 3, 1 / 6], atol=1e-10)

    def test_zero_equity_cycle_flagged_non_unique(self):
        # a closed zero-cash cycle admits any p in [0, pbar]; the downward
        # limit is pbar, the upward one 0, and uniqueness is flagged off
        system = fs([[0, 1], [1, 0]], [0, 0])
        r = clear_eisenberg_noe(system, verify_uniqueness=True)
        assert np.allclose(r.p, [1, 1])
        assert r.unique is False

    def test_greatest_vector_from_above(self):
        system = fs([[0, 1], [1, 0]], [0, 0])
        up = clear_eisenberg_noe(system, start="below")
        assert np.allclose(up.p, [0, 0], atol=1e-12)


class TestSinkNode:
    def test_sink_absorbs_external_debt(self):
        base = fs([[0, 1], [1, 0]], [2, 0.2])
        system = add_external_sink(base, [0.5, 0.5])
        r = clear_eisenberg_noe(system)
        assert system.n == 3
        assert system.e[2] == 0 and r.p[2] == 0  # sink owes nothing
        assert 2 not in r.defaults

    def test_external_liability_shape_checked(self):
        with pytest.raises(ValueError, match="per bank"):
            add_external_sink(fs([[0, 1], [1, 0]], [1, 1]), [1.0])


class TestSerialization:
    def test_json_roundtrip(self):
        system = fs([[0, 2], [1, 0]], [0.5, 0])
        back = FinancialSystem.from_json(system.to_json())
        assert np.array_equal(back.L, system.L)
        assert np.array_equal(back.e, system.e)

    def test_result_json_fields(self):
        r = clear_eisenberg_noe(fs([[0, 2], [1, 0]], [0.5, 0]))
        data = json.loads(r.to_json())
        assert data["defaults"] == [0]
        assert len(data["p"]) == 2
