from pathlib import Path
from typing import Any, Dict, List, Optional
from enum import Enum

from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.models.network_models import BusRole, NetworkSpec
from app.models.game_models import GeneratorParams, MarketParams, MicrogridParams

class FollowerScheme(str, Enum):
    """Microgrid update schemes"""
    IUA = "iua"  # synchronous best response
    RUA = "rua"  # random best response with probability tau
    PDA = "pda"  # angle-measurement driven, random activation

class LeaderScheme(str, Enum):
    """How generators learn what they need about the microgrids"""
    KPP = "kpp"  # microgrids disclose their parameters
    KGD = "kgd"  # microgrids disclose their generation decisions
    KBA = "kba"  # generators infer from bus angles only

class SolverSettings(BaseModel):
    """Tolerances, caps and randomness for one equilibrium search"""
    model_config = ConfigDict(frozen=True)

    follower_scheme: FollowerScheme = FollowerScheme.PDA
    leader_scheme: LeaderScheme = LeaderScheme.KBA
    eps1: float = Field(default=1e-3, gt=0.0)  # follower tolerance, MW
    eps2: float = Field(default=1e-3, gt=0.0)  # leader tolerance, MW
    max_follower_steps: int = Field(default=10_000, ge=1)
    max_leader_sweeps: int = Field(default=10_000, ge=1)
    seed: int = Field(default=1, ge=0)
    noise_std: float = Field(default=0.0, ge=0.0)  # PMU angle noise, rad
    initial_generation_mw: Optional[List[float]] = None  # first announcement, zeros when omitted
    se_samples: int = Field(default=100, ge=0)

class ScenarioConfig(BaseModel):
    """Complete scenario: network, players, market and solver settings"""
    model_config = ConfigDict(frozen=True)

    id: str
    description: str = ""
    network: NetworkSpec
    market: MarketParams
    microgrids: List[MicrogridParams]
    generators: List[GeneratorParams]
    solver: SolverSettings = Field(default_factory=SolverSettings)

    @model_validator(mode="after")
    def _check_players(self) -> "ScenarioConfig":
        microgrid_buses = {bus.id for bus in self.network.buses if bus.role == BusRole.MICROGRID}
        generator_buses = {bus.id for bus in self.network.buses if bus.role == BusRole.GENERATOR}

        listed = [m.bus for m in self.microgrids]
        if sorted(listed) != sorted(microgrid_buses):
            raise ValueError(
                f"microgrids {sorted(listed)} must match microgrid buses {sorted(microgrid_buses)} one to one"
            )

        listed = [g.bus for g in self.generators]
        if sorted(listed) != sorted(generator_buses):
            raise ValueError(
                f"generators {sorted(listed)} must match generator buses {sorted(generator_buses)} one to one"
            )

        for microgrid in self.microgrids:
            bus = self.network.bus(microgrid.bus)
            if microgrid.load_mw is not None and abs(microgrid.load_mw - bus.load_mw) > 1e-9:
                raise ValueError(
                    f"microgrid {microgrid.bus} load_mw {microgrid.load_mw} disagrees with bus load {bus.load_mw}"
                )

        initial = self.solver.initial_generation_mw
        if initial is not None and len(initial) != len(self.generators):
            raise ValueError(
                f"initial_generation_mw has {len(initial)} entries, expected {len(self.generators)}"
            )
        return self

    def with_overrides(self, **overrides: Any) -> "ScenarioConfig":
        """Copy of the scenario with solver fields replaced, None values ignored"""
        updates = {key: value for key, value in overrides.items() if value is not None}
        if not updates:
            return self
        solver = SolverSettings(**{**self.solver.model_dump(), **updates})
        return self.model_copy(update={"solver": solver})

class RunManifest(BaseModel):
    """One CLI or batch invocation: what to run and what to emit"""
    scenarios: List[str]
    output_dir: Path
    follower_scheme: Optional[FollowerScheme] = None
    leader_scheme: Optional[LeaderScheme] = None
    seed: Optional[int] = Field(default=None, ge=0)
    eps1: Optional[float] = Field(default=None, gt=0.0)
    eps2: Optional[float] = Field(default=None, gt=0.0)
    max_iters: Optional[int] = Field(default=None, ge=1)
    noise_std: Optional[float] = Field(default=None, ge=0.0)
    emit_traces: bool = True
    emit_diagnostics: bool = True
    emit_plot_data: bool = True
    workers: int = Field(default=1, ge=1)

    @property
    def overrides(self) -> Dict[str, Any]:
        """Solver overrides in SolverSettings field names"""
        return {
            "follower_scheme": self.follower_scheme,
            "leader_scheme": self.leader_scheme,
            "seed": self.seed,
            "eps1": self.eps1,
            "eps2": self.eps2,
            "max_follower_steps": self.max_iters,
            "max_leader_sweeps": self.max_iters,
            "noise_std": self.noise_std,
        }

class ScenarioEntry(BaseModel):
    """Registry entry pointing at a scenario file under config/"""
    path: str
    description: str = ""

class ScenarioRegistry(BaseModel):
    """Complete scenario registry"""
    scenarios: Dict[str, ScenarioEntry] = Field(default_factory=dict)

class SchemeProfile(BaseModel):
    """Qualitative trade-offs of one follower x leader scheme pairing"""
    follower_scheme: FollowerScheme
    leader_scheme: LeaderScheme
    communication_cost: str
    privacy_level: str
    update_efficiency: str

def _profile(follower: FollowerScheme, leader: LeaderScheme, cost: str, privacy: str, efficiency: str) -> SchemeProfile:
    return SchemeProfile(
        follower_scheme=follower,
        leader_scheme=leader,
        communication_cost=cost,
        privacy_level=privacy,
        update_efficiency=efficiency,
    )

# Communication cost counts links between players; privacy ranks what each
# player must disclose; efficiency is driven by the follower update fashion.
SCHEME_PROFILES: List[SchemeProfile] = [
    _profile(FollowerScheme.IUA, LeaderScheme.KPP, "high", "low", "ultra high"),
    _profile(FollowerScheme.IUA, LeaderScheme.KGD, "high", "medium", "high"),
    _profile(FollowerScheme.IUA, LeaderScheme.KBA, "medium", "medium", "high"),
    _profile(FollowerScheme.RUA, LeaderScheme.KPP, "high", "low", "medium"),
    _profile(FollowerScheme.RUA, LeaderScheme.KGD, "high", "medium", "medium"),
    _profile(FollowerScheme.RUA, LeaderScheme.KBA, "medium", "medium", "medium"),
    _profile(FollowerScheme.PDA, LeaderScheme.KPP, "low", "medium", "medium"),
    _profile(FollowerScheme.PDA, LeaderScheme.KGD, "low", "high", "medium"),
    _profile(FollowerScheme.PDA, LeaderScheme.KBA, "ultra low", "ultra high", "medium"),
]
