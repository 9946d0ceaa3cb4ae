"""Graph-based population training for common-payoff games."""

from .engine import (
    ConvergenceDiagnostics,
    Engine,
    EngineConfig,
    GenerationRecord,
    Population,
    diagnostics,
    evict,
    run_generation,
    simulate_payoffs,
)
from .games import MatrixCoopGame, gen_convention_game, gen_dominant_game, payoff, pure, uniform
from .graph import (
    NoConvergence,
    OutOfRange,
    PageRankVector,
    PayoffMatrix,
    PreferenceGraph,
    SingletonGraph,
    build_preference_graph,
    centrality_history,
    preference_centrality,
    sub_preference_graph,
    weighted_pagerank,
)
from .shapley import (
    CharacteristicFunction,
    IncompatibilityDistribution,
    ShapleyVector,
    SolverConfig,
    TooLarge,
    characteristic_value,
    exact_shapley,
    incompatibility_distribution,
    mc_shapley,
    solve,
)
from .trainer import (
    Objective,
    OracleResult,
    VisitCounter,
    acceptance_test,
    objective_value,
    oracle_exact,
    oracle_local,
    sample_partners,
    sucg_weights,
)

__version__ = "0.1.0"
