"""Reproduce the threshold-cascade window on Poisson networks (desk scale).

Sweeps the mean degree, overlays the simulated mean cascade size on the
tree-recursion prediction, and locates the analytic window boundaries.
Defaults to a smaller network than the acceptance-scale run so it finishes
in about a minute; raise N and TRIALS for tighter agreement.

Run: python demos/threshold_cascades.py
"""

import numpy as np

import synrisk as sr

N = 20_000
TRIALS = 20
R_BAR = 0.18
RHO0 = 1e-4
Z_GRID = [0.5 * k for k in range(1, 21)]

response = sr.ResponseFunction.deterministic(R_BAR)

boundaries = sr.find_cascade_window(sr.DegreeModel.poisson, response,
                                    0.3, 12.0)
print(f"analytic cascade window: z in [{boundaries[0]:.3f}, {boundaries[1]:.3f}]")
second = sr.find_cascade_window(sr.DegreeModel.poisson, response, 0.3, 12.0,
                                criterion="second", rho0=RHO0)
print(f"seed-corrected (quadratic) window: [{second[0]:.3f}, {second[1]:.3f}]")

print(f"\n{'z':>5} {'theory':>8} {'simulated':>10} {'rounds':>7}")
for z in Z_GRID:
    theory = sr.solve_mean_cascade_size(sr.DegreeModel.poisson(z), response,
                                        RHO0).rho
    sims, rounds = [], []
    for trial in range(TRIALS):
        rng = sr.harness.child_rng(7, int(z * 10), trial)
        graph = sr.gen_erdos_renyi_undirected(N, z, rng)
        system = sr.build_gai_kapadia_system(graph, R_BAR)
        out = sr.simulate_default_cascade(system, seed_fraction=RHO0, rng=rng)
        sims.append(out.default_fraction)
        rounds.append(out.rounds)
    print(f"{z:>5.1f} {theory:>8.4f} {np.mean(sims):>10.4f} "
          f"{np.mean(rounds):>7.1f}")

# heterogeneous exposures concentrate risk: the same network with the same
# capital can be more fragile when loans are skewed towards one borrower
print("\nheterogeneous exposures (skewed vs even), three seed defaults:")
rng = np.random.default_rng(0)
graph = sr.gen_erdos_renyi_directed(2_000, 4.0, rng)
even = sr.build_gai_kapadia_system(graph, 0.3)
out_even = sr.simulate_default_cascade(even, seeds={0, 1, 2})
indptr, borrowers, _ = graph.out_csr()
lender = np.repeat(np.arange(graph.n), np.diff(indptr))
# same total lending per bank, split by a lopsided Dirichlet instead of evenly
weights = np.concatenate([
    rng.dirichlet(np.full(d, 0.3)) if d else np.empty(0)
    for d in np.diff(indptr)])
skewed = sr.cascade.from_weighted_graph(
    sr.DirectedGraph(graph.n, lender, borrowers, weights),
    capital=even.capital)
out_skewed = sr.simulate_default_cascade(skewed, seeds={0, 1, 2})
print(f"  even split : {out_even.default_fraction:.3f} defaulted")
print(f"  skewed     : {out_skewed.default_fraction:.3f} defaulted")
