from typing import List, Optional
from enum import Enum

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

class BusRole(str, Enum):
    """Role a bus plays in the generation game"""
    MICROGRID = "microgrid"
    GENERATOR = "generator"
    SLACK = "slack"

class BusSpec(BaseModel):
    """A single bus of the network description"""
    model_config = ConfigDict(frozen=True)

    id: str
    role: BusRole
    load_mw: float = Field(default=0.0, ge=0.0)

    @field_validator("id", mode="before")
    @classmethod
    def _coerce_id(cls, value):
        # yaml reads bare bus numbers as ints
        return str(value)

class BranchSpec(BaseModel):
    """Transmission line between two buses, per unit on the network base"""
    model_config = ConfigDict(frozen=True, populate_by_name=True)

    from_bus: str = Field(alias="from")
    to_bus: str = Field(alias="to")
    reactance_pu: float
    resistance_pu: float = 0.0
    charging_pu: float = 0.0  # recorded for provenance, unused by the DC model

    @field_validator("from_bus", "to_bus", mode="before")
    @classmethod
    def _coerce_bus(cls, value):
        return str(value)

    @field_validator("reactance_pu")
    @classmethod
    def _nonzero_reactance(cls, value: float) -> float:
        if value == 0.0:
            raise ValueError("reactance_pu must be nonzero")
        return value

class NetworkSpec(BaseModel):
    """Network description: buses, slack designation and branch list"""
    model_config = ConfigDict(frozen=True)

    name: str = "network"
    base_mva: float = Field(default=1.0, gt=0.0)
    slack_id: Optional[str] = None
    buses: List[BusSpec]
    branches: List[BranchSpec]

    @field_validator("slack_id", mode="before")
    @classmethod
    def _coerce_slack(cls, value):
        return None if value is None else str(value)

    @model_validator(mode="after")
    def _check_buses(self) -> "NetworkSpec":
        ids = [bus.id for bus in self.buses]
        duplicates = sorted({bus_id for bus_id in ids if ids.count(bus_id) > 1})
        if duplicates:
            raise ValueError(f"duplicate bus ids: {', '.join(duplicates)}")

        slack_buses = [bus.id for bus in self.buses if bus.role == BusRole.SLACK]
        if len(slack_buses) > 1:
            raise ValueError(f"more than one slack bus: {', '.join(slack_buses)}")
        if self.slack_id is not None and slack_buses and slack_buses[0] != self.slack_id:
            raise ValueError(f"slack_id {self.slack_id} disagrees with slack role on bus {slack_buses[0]}")

        known = set(ids)
        for branch in self.branches:
            for end in (branch.from_bus, branch.to_bus):
                if end not in known:
                    raise ValueError(f"branch {branch.from_bus}-{branch.to_bus} references unknown bus {end}")
            if branch.from_bus == branch.to_bus:
                raise ValueError(f"branch {branch.from_bus}-{branch.to_bus} is a self loop")
        return self

    @property
    def slack_bus(self) -> Optional[str]:
        """Slack bus id from either the explicit field or the bus roles"""
        if self.slack_id is not None:
            return self.slack_id
        for bus in self.buses:
            if bus.role == BusRole.SLACK:
                return bus.id
        return None

    def bus(self, bus_id: str) -> Optional[BusSpec]:
        """Get a specific bus by id"""
        for bus in self.buses:
            if bus.id == str(bus_id):
                return bus
        return None
