# ==============================================================================
# __init__.py — Model layer exports
# ==============================================================================
# Purpose: Export Pydantic models for easy importing
# Sections: Imports, Public exports
# ==============================================================================

from .network_models import (
    BusRole,
    BusSpec,
    BranchSpec,
    NetworkSpec
)

from .game_models import (
    MarketParams,
    MicrogridParams,
    GeneratorParams
)

from .scenario_models import (
    FollowerScheme,
    LeaderScheme,
    SolverSettings,
    ScenarioConfig,
    RunManifest,
    ScenarioEntry,
    ScenarioRegistry,
    SchemeProfile,
    SCHEME_PROFILES
)

from .report_models import (
    RunStatus,
    FlowDirection,
    InvariantCheck,
    ValidationReport,
    PdaConditionReport,
    SpectralReport,
    ConvergenceCheck,
    LineFlow,
    FollowerStepRecord,
    LeaderSweepRecord,
    LeaderDiagnostics,
    SEViolation,
    SEVerification,
    EquilibriumReport,
    ScenarioSummary,
    RunDiagnostics,
    BatchItemResult
)

# ==============================================================================
# Public exports
# ==============================================================================
__all__ = [
    # Network Models
    "BusRole",
    "BusSpec",
    "BranchSpec",
    "NetworkSpec",

    # Game Models
    "MarketParams",
    "MicrogridParams",
    "GeneratorParams",

    # Scenario Models
    "FollowerScheme",
    "LeaderScheme",
    "SolverSettings",
    "ScenarioConfig",
    "RunManifest",
    "ScenarioEntry",
    "ScenarioRegistry",
    "SchemeProfile",
    "SCHEME_PROFILES",

    # Report Models
    "RunStatus",
    "FlowDirection",
    "InvariantCheck",
    "ValidationReport",
    "PdaConditionReport",
    "SpectralReport",
    "ConvergenceCheck",
    "LineFlow",
    "FollowerStepRecord",
    "LeaderSweepRecord",
    "LeaderDiagnostics",
    "SEViolation",
    "SEVerification",
    "EquilibriumReport",
    "ScenarioSummary",
    "RunDiagnostics",
    "BatchItemResult"
]
