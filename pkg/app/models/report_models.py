from typing import Dict, List, Optional
from enum import Enum

from pydantic import BaseModel, Field

from app.models.scenario_models import FollowerScheme, LeaderScheme

class RunStatus(str, Enum):
    """Outcome of an equilibrium search"""
    CONVERGED = "converged"
    FOLLOWER_NOT_CONVERGED = "follower_not_converged"
    LEADER_NOT_CONVERGED = "leader_not_converged"

class FlowDirection(str, Enum):
    """Whether a microgrid sells to or buys from the grid"""
    SELL = "sell"
    BUY = "buy"
    BALANCED = "balanced"

class InvariantCheck(BaseModel):
    """One structural check with its measured residual"""
    name: str
    passed: bool
    residual: Optional[float] = None
    tolerance: Optional[float] = None
    detail: str = ""
    group: str = ""  # the structural property the check belongs to

class ValidationReport(BaseModel):
    """Structural checks of a scenario, run without solving it"""
    scenario_id: str
    checks: List[InvariantCheck] = Field(default_factory=list)
    errors: List[str] = Field(default_factory=list)

    @property
    def valid(self) -> bool:
        return not self.errors and all(check.passed for check in self.checks)

    def by_group(self) -> Dict[str, List[InvariantCheck]]:
        """Checks keyed by group, in the order the groups first appear"""
        groups: Dict[str, List[InvariantCheck]] = {}
        for check in self.checks:
            groups.setdefault(check.group, []).append(check)
        return groups

class PdaConditionReport(BaseModel):
    """Sufficient condition for the angle-driven update to converge"""
    lhs: float
    rhs: float
    max_ratio: float
    tau_max: float
    tau_min: float
    n_microgrids: int
    satisfied: bool
    note: str = "sufficient condition only: a failed check does not prove divergence"

class SpectralReport(BaseModel):
    """Spectral radius of the Gauss-Seidel iteration matrix"""
    rho: float
    converges: bool
    method: str  # "eigvals" or "power_iteration"

class ConvergenceCheck(BaseModel):
    """Both convergence conditions of a scenario, evaluated without solving"""
    scenario_id: str
    pda_condition: PdaConditionReport
    spectral: SpectralReport

    @property
    def satisfied(self) -> bool:
        return self.pda_condition.satisfied and self.spectral.converges

class LineFlow(BaseModel):
    from_bus: str
    to_bus: str
    flow_mw: float

class FollowerStepRecord(BaseModel):
    """Row of the follower trace; step 0 is the starting profile"""
    phase: str
    step: int
    scheme: FollowerScheme
    p_d: List[float]
    theta_d: List[float]
    updated_mask: List[bool]
    residual: Optional[float] = None

class LeaderSweepRecord(BaseModel):
    """Row of the leader trace, one per Gauss-Seidel sweep"""
    sweep: int
    p_g: List[float]
    mu: List[float]
    theta_g: List[float]
    pg_change: Optional[float] = None
    residual: float  # ||WX - b||_inf

class LeaderDiagnostics(BaseModel):
    """Leader-side numbers worth keeping next to the equilibrium"""
    scheme: LeaderScheme
    rho_m: float
    gauss_seidel_converges: bool
    cond_w: float
    t5_tilde: List[float]
    t5_tilde_true: List[float]
    method: str  # "gauss_seidel" or "direct"
    fallback: bool = False
    sweeps: int = 0
    caps_ok: List[bool]
    kkt_residual: float
    kba_flag: bool = False
    invalid_components: List[int] = Field(default_factory=list)

class SEViolation(BaseModel):
    """A sampled deviation that beat the equilibrium"""
    condition: str  # "follower" or "leader"
    player: str
    deviation_mw: float
    cost_gap: float

class SEVerification(BaseModel):
    """Sampled unilateral-deviation checks at a candidate equilibrium"""
    n_samples: int
    tolerance: float
    follower_samples: int = 0
    leader_samples: int = 0
    min_follower_gap: Optional[float] = None
    min_leader_gap: Optional[float] = None
    violations: List[SEViolation] = Field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations

class EquilibriumReport(BaseModel):
    """Everything one equilibrium search produced"""
    scenario_id: str
    follower_scheme: FollowerScheme
    leader_scheme: LeaderScheme
    seed: int
    status: RunStatus
    bus_labels: List[str]
    microgrid_buses: List[str]
    generator_buses: List[str]
    p_d_star: List[float]       # microgrid net injections, MW
    p_dg_star: List[float]      # microgrid generation, MW
    flow_direction: List[FlowDirection]
    p_g_star: List[float]       # generator outputs, MW
    initial_generation_mw: List[float]  # announcement the acquisition phase answered
    theta_star: List[float]     # all non-slack buses, rad
    slack_injection_mw: float
    line_flows: List[LineFlow] = Field(default_factory=list)
    follower_costs: List[float]
    leader_cost: float
    acquisition_steps: int
    response_steps: int
    leader_sweeps: int
    pda_condition: PdaConditionReport
    leader: LeaderDiagnostics
    non_interior: bool = False
    outside_regime: bool = False
    verification: Optional[SEVerification] = None
    warnings: List[str] = Field(default_factory=list)
    follower_trace: List[FollowerStepRecord] = Field(default_factory=list)
    leader_trace: List[LeaderSweepRecord] = Field(default_factory=list)

class ScenarioSummary(BaseModel):
    """Registry entry exposed by the HTTP surface"""
    id: str
    description: str = ""
    path: str

class RunDiagnostics(BaseModel):
    """Convergence-condition numbers written next to every run"""
    scenario_id: str
    status: RunStatus
    pda_condition: PdaConditionReport
    leader: LeaderDiagnostics
    non_interior: bool
    outside_regime: bool
    warnings: List[str] = Field(default_factory=list)

class BatchItemResult(BaseModel):
    """Outcome of one scenario inside a batch run"""
    scenario_id: str
    status: Optional[RunStatus] = None
    directory: Optional[str] = None
    error: Optional[str] = None
