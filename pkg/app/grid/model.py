# ==============================================================================
# model.py — Scenario model
# ==============================================================================
# Purpose: Bind a parsed scenario to its network, follower game and ordered
#          generator parameters
# Sections: Imports, Public exports, Main Classes
# ==============================================================================

# ==============================================================================
# Imports
# ==============================================================================

# Standard Library -----
from dataclasses import dataclass
from functools import cached_property
from typing import Tuple

# Third Party -----
import numpy as np

# Grid ----
from app.grid.followers import FollowerGame
from app.grid.leaders import LeaderTransform, build_T, order_generators
from app.grid.network import PowerNetwork, load_network
from app.models.game_models import GeneratorParams
from app.models.scenario_models import ScenarioConfig

# ==============================================================================
# Public exports
# ==============================================================================
__all__ = ["GridModel"]

# ==============================================================================
# Main Classes
# ==============================================================================

@dataclass(frozen=True, eq=False)
class GridModel:
    """Everything derived from a scenario before any solving happens."""
    config: ScenarioConfig
    network: PowerNetwork
    game: FollowerGame
    generators: Tuple[GeneratorParams, ...]

    @classmethod
    def from_config(cls, config: ScenarioConfig, strict: bool = True) -> "GridModel":
        network = load_network(config.network, strict=strict)
        game = FollowerGame.build(network, config.microgrids, config.market)
        generators = order_generators(game, config.generators)
        return cls(config=config, network=network, game=game, generators=generators)

    @cached_property
    def transform(self) -> LeaderTransform:
        return build_T(self.game)

    def injections(self, P_d: np.ndarray, P_g: np.ndarray) -> np.ndarray:
        """Non-slack injections in internal order."""
        return np.concatenate([np.asarray(P_d, dtype=float), np.asarray(P_g, dtype=float)])

    def angles(self, P_d: np.ndarray, P_g: np.ndarray) -> np.ndarray:
        return self.network.S @ self.injections(P_d, P_g)

    def generator_angles(self, P_d: np.ndarray, P_g: np.ndarray) -> np.ndarray:
        return self.angles(P_d, P_g)[self.network.n_d:]
