# ==============================================================================
# grid/__init__.py — Numerical core
# ==============================================================================
# Purpose: DC network, microgrid game and generator-side solver
# Sections: Imports, Public exports
# ==============================================================================

from .errors import (
    GridGameError,
    NetworkValidationError,
    SingularMatrixError,
    DomainError,
    StructuralError,
    ScenarioError
)

from .network import (
    BusIndexing,
    PowerNetwork,
    InjectionState,
    load_network,
    network_from_susceptance,
    angles_from_injections,
    injections_from_angles,
    slack_injection,
    line_flows,
    validate_network
)

from .followers import (
    FollowerGame,
    FollowerReduction,
    follower_reduction,
    follower_cost,
    follower_costs,
    best_response,
    solve_followers_direct,
    iua_step,
    rua_step,
    pda_step,
    check_pda_convergence,
    run_follower_scheme
)

from .leaders import (
    LeaderSystem,
    LeaderSolution,
    build_T,
    build_W_b,
    gauss_seidel_solve,
    spectral_radius_check,
    direct_solve,
    kpp_acquire,
    kgd_acquire,
    kba_infer,
    kkt_residuals
)

# ==============================================================================
# Public exports
# ==============================================================================
__all__ = [
    # Errors
    "GridGameError",
    "NetworkValidationError",
    "SingularMatrixError",
    "DomainError",
    "StructuralError",
    "ScenarioError",

    # Network
    "BusIndexing",
    "PowerNetwork",
    "InjectionState",
    "load_network",
    "network_from_susceptance",
    "angles_from_injections",
    "injections_from_angles",
    "slack_injection",
    "line_flows",
    "validate_network",

    # Followers
    "FollowerGame",
    "FollowerReduction",
    "follower_reduction",
    "follower_cost",
    "follower_costs",
    "best_response",
    "solve_followers_direct",
    "iua_step",
    "rua_step",
    "pda_step",
    "check_pda_convergence",
    "run_follower_scheme",

    # Leaders
    "LeaderSystem",
    "LeaderSolution",
    "build_T",
    "build_W_b",
    "gauss_seidel_solve",
    "spectral_radius_check",
    "direct_solve",
    "kpp_acquire",
    "kgd_acquire",
    "kba_infer",
    "kkt_residuals"
]
