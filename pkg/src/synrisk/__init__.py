"""Network models of financial contagion.

Subpackages map onto the model families: ``clearing`` (payment fixed
points), ``cascade`` (zero-recovery default cascades), ``theory`` (their
mean-field analysis), ``debtrank`` (pre-default distress propagation),
``firesale`` (overlapping-portfolio price contagion), ``network``
(generators and reconstruction), ``structure`` (core-periphery detection)
and ``harness`` (seeded Monte Carlo sweeps).
"""

from .cascade import (
    CascadeOutcome,
    InterbankSystem,
    apply_external_shock,
    build_gai_kapadia_system,
    simulate_default_cascade,
)
from .clearing import (
    ClearingResult,
    FinancialSystem,
    add_external_sink,
    clear_eisenberg_noe,
    clear_fictitious_default,
    clear_rogers_veraart,
    relative_liabilities,
    total_obligations,
)
from .debtrank import (
    DistressTrajectory,
    ExposureSystem,
    debtrank_iterated,
    debtrank_nonlinear,
    debtrank_original,
    leverage_spectral_radius,
    power_method_radius,
)
from .errors import ConvergenceError
from .firesale import (
    FireSaleOutcome,
    ImpactFunction,
    PortfolioSystem,
    simulate_buffered_deleveraging,
    simulate_leverage_targeting,
    simulate_threshold_firesale,
    transfer_matrix,
)
from .harness import ExperimentConfig, RunRecord, aggregate, run_experiment
from .network import (
    BipartiteGraph,
    DegreeModel,
    DirectedGraph,
    MarginVector,
    gen_bipartite_er,
    gen_configuration_model,
    gen_erdos_renyi_directed,
    gen_erdos_renyi_undirected,
    max_entropy_reconstruction,
    read_edge_list,
    sample_degree_sequence,
    undirected_adjacency,
    write_edge_list,
)
from .structure import (
    CorePeripheryPartition,
    core_periphery_detect,
    core_periphery_error,
    planted_core_periphery,
)
from .theory import (
    ResponseFunction,
    TheoryResult,
    find_cascade_window,
    first_order_cascade_condition,
    mean_vulnerable_cluster_size,
    second_order_cascade_condition,
    solve_mean_cascade_size,
    vulnerable_generating_moments,
    watts_cascade_condition,
)

__version__ = "0.1.0"
