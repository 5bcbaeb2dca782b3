# ==============================================================================
# app/__init__.py — Microgrid Stackelberg Application
# ==============================================================================
# Purpose: Main application package with public API
# ==============================================================================

# Version information
__version__ = "1.0.0"

# Service layer
from .services import (
    EquilibriumService,
    run_algorithm1,
    check_convergence,
    run_batch,
    verify_se,
    validate_scenario,
    config_service,
)

# Models
from .models import (
    ScenarioConfig,
    SolverSettings,
    FollowerScheme,
    LeaderScheme,
    EquilibriumReport,
    RunStatus,
)

__all__ = [
    # Services
    'EquilibriumService',
    'run_algorithm1',
    'check_convergence',
    'run_batch',
    'verify_se',
    'validate_scenario',
    'config_service',

    # Models
    'ScenarioConfig',
    'SolverSettings',
    'FollowerScheme',
    'LeaderScheme',
    'EquilibriumReport',
    'RunStatus',

    # Metadata
    '__version__',
]
