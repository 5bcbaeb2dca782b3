# ==============================================================================
# __init__.py — Service layer exports
# ==============================================================================
# Purpose: Export service classes for easy importing
# Sections: Imports, Public exports
# ==============================================================================

# ==============================================================================
# Imports
# ==============================================================================

from .config_service import config_service, ConfigService
from .equilibrium_service import EquilibriumService, run_algorithm1, check_convergence
from .verification_service import (
    verify_se,
    verify_equilibrium,
    brute_force_follower_nash,
    replay_follower_trace,
    validate_scenario,
)
from .batch_service import run_batch

# ==============================================================================
# Public exports
# ==============================================================================
__all__ = [
    "config_service",
    "ConfigService",
    "EquilibriumService",
    "run_algorithm1",
    "check_convergence",
    "verify_se",
    "verify_equilibrium",
    "brute_force_follower_nash",
    "replay_follower_trace",
    "validate_scenario",
    "run_batch",
]
