# ==============================================================================
# scenario_router.py — Scenario endpoints
# ==============================================================================
# Purpose: HTTP surface over the scenario registry: run, check and validate
# Sections: Imports, Router definition, Helper Functions
# ==============================================================================

# ==============================================================================
# Imports
# ==============================================================================

# Third Party -----
from fastapi import APIRouter, HTTPException

# Grid ----
from app.grid.errors import GridGameError
from app.models.report_models import (
    ConvergenceCheck,
    EquilibriumReport,
    ScenarioSummary,
    ValidationReport,
)
from app.models.scenario_models import FollowerScheme, LeaderScheme, ScenarioConfig
from app.services.config_service import config_service
from app.services.equilibrium_service import EquilibriumService, check_convergence
from app.services.verification_service import validate_scenario

# ==============================================================================
# Router definition
# ==============================================================================

router = APIRouter(prefix="/api/v1", tags=["scenarios"])

@router.get("/scenarios", response_model=list[ScenarioSummary])
def list_scenarios():
    """List all registered scenarios from scenarios.yaml"""
    return [
        ScenarioSummary(id=scenario_id, description=entry.description, path=entry.path)
        for scenario_id, entry in config_service.all_scenarios.items()
    ]

@router.post("/run/{scenario_id}", response_model=EquilibriumReport)
def run_scenario(
    scenario_id: str,
    follower: FollowerScheme | None = None,
    leader: LeaderScheme | None = None,
    seed: int | None = None,
    emit_traces: bool = True,
):
    """Search the equilibrium of a registered scenario and write its artifacts"""
    config = _load(scenario_id).with_overrides(follower_scheme=follower, leader_scheme=leader, seed=seed)
    try:
        return EquilibriumService().run(config, emit_traces=emit_traces)
    except GridGameError as e:
        raise HTTPException(status_code=422, detail=str(e)) from e

@router.get("/check/{scenario_id}", response_model=ConvergenceCheck)
def check_scenario(scenario_id: str):
    """Evaluate both convergence conditions without solving"""
    try:
        return check_convergence(_load(scenario_id))
    except GridGameError as e:
        raise HTTPException(status_code=422, detail=str(e)) from e

@router.get("/validate/{scenario_id}", response_model=ValidationReport)
def validate(scenario_id: str):
    """Structural checks of the network and the leader system"""
    return validate_scenario(_load(scenario_id))

# ==============================================================================
# Helper Functions
# ==============================================================================

def _load(scenario_id: str) -> ScenarioConfig:
    if config_service.scenario_entry(scenario_id) is None:
        raise HTTPException(
            status_code=404,
            detail=f"Scenario {scenario_id} not found. Register it in config/scenarios.yaml.",
        )
    try:
        return config_service.load_scenario(scenario_id)
    except GridGameError as e:
        raise HTTPException(status_code=422, detail=str(e)) from e
