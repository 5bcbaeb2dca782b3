from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator

class MarketParams(BaseModel):
    """Market coefficients shared by every microgrid"""
    model_config = ConfigDict(frozen=True)

    zeta: float = Field(ge=0.0)  # unit market power price, $/MWh

class MicrogridParams(BaseModel):
    """Economic and regulation coefficients of one microgrid (follower)"""
    model_config = ConfigDict(frozen=True)

    bus: str
    psi: float                       # unit generation cost, $/MWh
    eta: float = Field(gt=0.0)       # angle-regulation weight
    gen_cap_mw: float = Field(ge=0.0)
    tau: float = Field(gt=0.0, lt=1.0)  # update probability for RUA / PDA
    load_mw: Optional[float] = Field(default=None, ge=0.0)  # filled from the bus when omitted

    @field_validator("bus", mode="before")
    @classmethod
    def _coerce_bus(cls, value):
        return str(value)

    @property
    def load(self) -> float:
        return 0.0 if self.load_mw is None else self.load_mw

    @property
    def p_max(self) -> float:
        """Largest net injection, P_max = cap - load"""
        return self.gen_cap_mw - self.load

class GeneratorParams(BaseModel):
    """Cost and regulation coefficients of one generator (leader)"""
    model_config = ConfigDict(frozen=True)

    bus: str
    a: float = Field(gt=0.0)        # quadratic cost coefficient, $/MW^2
    b: float = Field(ge=0.0)        # linear cost coefficient, $/MW
    c: float = Field(default=0.0, ge=0.0)  # fixed cost, $
    alpha: float = Field(gt=0.0)    # angle-regulation weight
    gen_cap_mw: float = Field(ge=0.0)

    @field_validator("bus", mode="before")
    @classmethod
    def _coerce_bus(cls, value):
        return str(value)
