import numpy as np
import pytest

from synrisk import (
    DegreeModel,
    ResponseFunction,
    find_cascade_window,
    first_order_cascade_condition,
    gen_erdos_renyi_undirected,
    mean_vulnerable_cluster_size,
    second_order_cascade_condition,
    solve_mean_cascade_size,
    vulnerable_generating_moments,
    watts_cascade_condition,
)

R018 = ResponseFunction.deterministic(0.18)
F_ONE = ResponseFunction.from_cdf(lambda x: np.ones_like(np.asarray(x, float)))
F_ZERO = ResponseFunction.from_cdf(lambda x: np.zeros_like(np.asarray(x, float)))


def random_model(rng):
    kind = rng.choice(["poisson", "regular", "powerlaw", "lognormal", "empirical"])
    if kind == "poisson":
        return DegreeModel.poisson(rng.uniform(0.5, 10))
    if kind == "regular":
        return DegreeModel.regular(int(rng.integers(1, 11)), k_max=20)
    if kind == "powerlaw":
        return DegreeModel.powerlaw(rng.uniform(2.1, 3.5), int(rng.integers(1, 4)))
    if kind == "lognormal":
        return DegreeModel.lognormal(rng.uniform(0.0, 1.5), rng.uniform(0.3, 1.0))
    p = rng.random(int(rng.integers(2, 15)))
    p[0] = 0.0
    return DegreeModel.empirical(p / p.sum())


class TestResponseFunction:
    def test_deterministic_is_strict(self):
        # at exact equality m/k = R the node does not activate
        f = ResponseFunction.deterministic(0.2)
        assert f(0.2) == 0.0 and f(0.2000001) == 1.0

    def test_tabulated_cdf(self):
        f = ResponseFunction.tabulated([0.0, 1.0], [0.0, 1.0])
        assert f(0.25) == 0.25

    def test_decreasing_cdf_rejected(self):
        with pytest.raises(ValueError, match="nondecreasing"):
            ResponseFunction.tabulated([0.0, 1.0], [1.0, 0.0])

    def test_range_checked(self):
        with pytest.raises(ValueError, match="\\[0, 1\\]"):
            ResponseFunction.from_cdf(lambda x: 2.0 * np.asarray(x))


class TestMeanCascadeSize:
    def test_no_seeds_no_cascade(self):
        res = solve_mean_cascade_size(DegreeModel.poisson(4.0), R018, 0.0)
        assert res.q_star == 0.0 and res.rho == 0.0

    def test_certain_activation(self):
        # with no isolated nodes everyone activates
        res = solve_mean_cascade_size(DegreeModel.regular(4), F_ONE, 0.0)
        assert res.q_star == pytest.approx(1.0, abs=1e-12)
        assert res.rho == pytest.approx(1.0, abs=1e-12)

    def test_isolated_nodes_only_activate_as_seeds(self):
        # the activation mixture runs over k >= 1, so degree-0 nodes
        # contribute only through the seed fraction
        model = DegreeModel.poisson(4.0)
        res = solve_mean_cascade_size(model, F_ONE, 0.0)
        assert res.rho == pytest.approx(1.0 - model.p[0], rel=1e-9)

    def test_fixed_point_satisfies_recursion(self):
        from synrisk.theory import _CascadeKernel
        model = DegreeModel.poisson(4.0)
        rho0 = 1e-4
        res = solve_mean_cascade_size(model, R018, rho0)
        kernel = _CascadeKernel(model, R018)
        resid = abs(rho0 + (1 - rho0) * kernel.s_value(res.q_star) - res.q_star)
        assert resid < 1e-10

    def test_rho_within_bounds(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            model = random_model(rng)
            rho0 = rng.uniform(0, 0.2)
            res = solve_mean_cascade_size(
                model, ResponseFunction.deterministic(rng.uniform(0.05, 1.2)),
                rho0)
            assert rho0 - 1e-12 <= res.rho <= 1.0
            assert 0.0 <= res.q_star <= 1.0

    def test_monotone_iteration_from_seed(self):
        # the recursion map is monotone, so q_star grows with the seed
        model = DegreeModel.poisson(3.0)
        q = [solve_mean_cascade_size(model, R018, r0).q_star
             for r0 in (1e-5, 1e-3, 1e-1)]
        assert q[0] <= q[1] <= q[2]

    def test_random_threshold_cdf_matches_simulation_direction(self):
        # uniform threshold on [0.1, 0.3]: smoother than the step response but
        # still produces a cascade at z = 4
        f = ResponseFunction.from_cdf(
            lambda x: np.clip((np.asarray(x, float) - 0.1) / 0.2, 0.0, 1.0))
        res = solve_mean_cascade_size(DegreeModel.poisson(4.0), f, 1e-3)
        assert res.rho > 0.5


class TestVulnerableMoments:
    def test_all_vulnerable_reduces_to_plain_moments(self):
        model = DegreeModel.poisson(5.0)
        g0, g1, g2 = vulnerable_generating_moments(model, F_ONE)
        k = model.degrees.astype(float)
        assert g0 == pytest.approx(1.0, abs=1e-12)
        assert g1 == pytest.approx(model.mean_degree, rel=1e-12)
        assert g2 == pytest.approx(np.dot(k * (k - 1), model.p), rel=1e-12)

    def test_threshold_018_vulnerability_cutoff(self):
        # 1/k > 0.18 iff k <= 5
        ks = np.arange(1, 10)
        mu = R018(1.0 / ks)
        assert mu.tolist() == [1, 1, 1, 1, 1, 0, 0, 0, 0]

    def test_regular3_second_moment(self):
        assert vulnerable_generating_moments(DegreeModel.regular(3), R018)[2] == 6.0


class TestClusterSize:
    def test_no_vulnerables_gives_zero(self):
        # (with no isolated nodes: degree-0 nodes always count as singleton
        # vulnerable clusters under the mu_0 = 1 convention)
        assert mean_vulnerable_cluster_size(DegreeModel.regular(3), F_ZERO) == 0.0
        model = DegreeModel.poisson(3.0)
        assert mean_vulnerable_cluster_size(model, F_ZERO) == pytest.approx(
            model.p[0], rel=1e-12)

    def test_regular3_divergent(self):
        assert np.isinf(mean_vulnerable_cluster_size(DegreeModel.regular(3), R018))

    def test_matches_percolation_oracle(self):
        # simulate the vulnerable subgraph of an undirected ER graph and
        # label its components; mean cluster size over all nodes (size 0 for
        # non-vulnerable) must match the generating-function value within 10%
        from scipy.sparse import csr_matrix
        from scipy.sparse.csgraph import connected_components

        z, n = 8.0, 100_000
        model = DegreeModel.poisson(z)
        expected = mean_vulnerable_cluster_size(model, R018)
        g = gen_erdos_renyi_undirected(n, z, np.random.default_rng(42))
        deg = g.out_degrees()
        vulnerable = (deg >= 1) & (deg <= 5)  # 1/k > 0.18
        keep = vulnerable[g.src] & vulnerable[g.dst]
        adj = csr_matrix((np.ones(keep.sum()), (g.src[keep], g.dst[keep])),
                         shape=(n, n))
        _, labels = connected_components(adj, directed=False)
        sizes = np.bincount(labels)
        per_node = np.where(vulnerable, sizes[labels], 0)
        # degree-0 nodes count as single vulnerable clusters
        per_node = np.where(deg == 0, 1, per_node)
        assert abs(per_node.mean() - expected) / expected < 0.10


class TestCascadeConditions:
    def test_above_one_threshold_never_cascades(self):
        f = ResponseFunction.deterministic(1.1)
        ok, value = first_order_cascade_condition(DegreeModel.poisson(5.0), f)
        assert not ok and value == 0.0
        ok_w, margin = watts_cascade_condition(DegreeModel.poisson(5.0), f)
        assert not ok_w and margin == -5.0

    def test_regular_margin_algebra(self):
        # all-vulnerable z-regular graphs: slope is (1-rho0)(z-1)
        for z in (2, 3, 5):
            model = DegreeModel.regular(z)
            f = ResponseFunction.deterministic(1.0 / z - 1e-9)
            ok, value = first_order_cascade_condition(model, f, 0.0)
            assert value == pytest.approx(z - 1, rel=1e-12)
            assert ok == (z > 2)

    def test_watts_examples(self):
        ok, margin = watts_cascade_condition(DegreeModel.regular(3), R018)
        assert ok and margin == 3.0

    def test_second_order_trivial_cases(self):
        model = DegreeModel.poisson(4.0)
        ok, disc = second_order_cascade_condition(model, F_ZERO, 1e-4)
        assert not ok
        # rho0 = 0 reduces the reported scalar to (C1-1)^2 - 4 C0 C2
        _, disc0 = second_order_cascade_condition(model, R018, 0.0)
        from synrisk.theory import _series_coefficients
        c0, c1, c2 = _series_coefficients(model, R018)
        assert disc0 == pytest.approx((c1 - 1) ** 2 - 4 * c0 * c2, rel=1e-12)

    def test_condition_equivalence_randomized(self):
        # deterministic R > 0 and vanishing seeds: the linearized and the
        # generating-function conditions agree on every tested distribution
        rng = np.random.default_rng(99)
        for _ in range(60):
            model = random_model(rng)
            f = ResponseFunction.deterministic(rng.uniform(0.05, 1.2))
            b1, _ = first_order_cascade_condition(model, f, 1e-8)
            b2, _ = watts_cascade_condition(model, f)
            assert b1 == b2

    def test_second_window_contains_first(self):
        w1 = find_cascade_window(DegreeModel.poisson, R018, 0.3, 12.0,
                                 criterion="first", rho0=1e-4)
        w2 = find_cascade_window(DegreeModel.poisson, R018, 0.3, 12.0,
                                 criterion="second", rho0=1e-4)
        assert len(w1) == len(w2) == 2
        assert w2[0] <= w1[0] + 1e-6 and w2[1] >= w1[1] - 1e-6

    def test_watts_window_brackets_bisection(self):
        lo, hi = find_cascade_window(DegreeModel.poisson, R018, 0.3, 12.0)
        assert 1.0 < lo < 1.1
        assert 5.7 < hi < 5.8
