# ==============================================================================
# conftest.py — Shared test fixtures
# ==============================================================================
# Purpose: Bundled scenarios, small hand-checkable networks and seeded random
#          networks for the property tests
# Sections: Imports, Scenario fixtures, Network builders
# ==============================================================================

# ==============================================================================
# Imports
# ==============================================================================

# Standard Library -----
import sys
from pathlib import Path
from typing import Dict, List, Optional

# Third Party -----
import numpy as np
import pytest

# Add project root to path for imports
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

# Grid ----
from app.grid.followers import FollowerGame
from app.grid.model import GridModel
from app.grid.network import load_network
from app.models.game_models import GeneratorParams, MarketParams, MicrogridParams
from app.models.network_models import BranchSpec, BusSpec, NetworkSpec
from app.models.scenario_models import ScenarioConfig
from app.services.config_service import config_service

# ==============================================================================
# Scenario fixtures
# ==============================================================================

@pytest.fixture
def interior6() -> ScenarioConfig:
    return config_service.load_scenario("interior6")


@pytest.fixture
def sixbus() -> ScenarioConfig:
    return config_service.load_scenario("sixbus")


@pytest.fixture
def interior6_model(interior6) -> GridModel:
    return GridModel.from_config(interior6)


@pytest.fixture
def sixbus_model(sixbus) -> GridModel:
    return GridModel.from_config(sixbus)


@pytest.fixture
def output_dir(tmp_path, monkeypatch) -> Path:
    """Route every artifact of the test into tmp_path."""
    monkeypatch.setenv("OUTPUT_DIR", str(tmp_path))
    return tmp_path


@pytest.fixture
def scenario_dict(interior6) -> Dict:
    """interior6 as plain data, for tests that break one field at a time."""
    data = interior6.model_dump(mode="json", by_alias=True)
    data["id"] = "edited"
    return data

# ==============================================================================
# Network builders
# ==============================================================================

def random_network_spec(
    seed: int, min_buses: int = 5, max_buses: int = 30, n_microgrids: Optional[int] = None
) -> NetworkSpec:
    """
    Connected network with random reactances and a random role partition.

    A random spanning tree guarantees connectivity; extra branches add meshes.
    The last bus is the slack.
    """
    rng = np.random.default_rng(seed)
    n_buses = int(rng.integers(min_buses, max_buses + 1))
    n_d = int(rng.integers(1, n_buses - 1)) if n_microgrids is None else n_microgrids
    roles = ["microgrid"] * n_d + ["generator"] * (n_buses - 1 - n_d)
    rng.shuffle(roles)
    roles.append("slack")
    labels = [str(i + 1) for i in range(n_buses)]

    edges = [(k, int(rng.integers(0, k))) for k in range(1, n_buses)]
    for _ in range(int(rng.integers(0, n_buses))):
        i, j = rng.choice(n_buses, size=2, replace=False)
        edges.append((int(i), int(j)))

    return NetworkSpec(
        name=f"random-{seed}",
        base_mva=100.0,
        slack_id=labels[-1],
        buses=[BusSpec(id=label, role=role) for label, role in zip(labels, roles)],
        branches=[
            BranchSpec(from_bus=labels[i], to_bus=labels[j], reactance_pu=float(rng.uniform(0.05, 0.5)))
            for i, j in edges
        ],
    )


def random_players(
    spec: NetworkSpec, seed: int, load_mw: float = 0.0, gen_cap_mw: float = 400.0, tau: Optional[float] = None
):
    """Microgrid and generator parameters for every bus of a random network."""
    rng = np.random.default_rng(seed + 10_000)
    microgrids: List[MicrogridParams] = []
    generators: List[GeneratorParams] = []
    for bus in spec.buses:
        if bus.role.value == "microgrid":
            microgrids.append(MicrogridParams(
                bus=bus.id, psi=float(rng.uniform(80, 220)), eta=1000.0,
                gen_cap_mw=gen_cap_mw, tau=float(rng.uniform(0.3, 0.9)) if tau is None else tau, load_mw=load_mw,
            ))
        elif bus.role.value == "generator":
            generators.append(GeneratorParams(
                bus=bus.id, a=float(rng.uniform(0.01, 0.1)), b=float(rng.uniform(0, 10)),
                c=100.0, alpha=float(rng.uniform(1e3, 1e5)), gen_cap_mw=800.0,
            ))
    return microgrids, generators


def random_game(seed: int, **players):
    spec = random_network_spec(seed)
    microgrids, generators = random_players(spec, seed, **players)
    network = load_network(spec)
    game = FollowerGame.build(network, microgrids, MarketParams(zeta=140.0))
    return game, generators


def line_spec(reactances: Dict[tuple, float], roles: Dict[str, str], slack: str = "s") -> NetworkSpec:
    """Small hand-written network on a 1 MVA base."""
    return NetworkSpec(
        name="hand",
        slack_id=slack,
        buses=[BusSpec(id=bus, role=role) for bus, role in roles.items()],
        branches=[BranchSpec(from_bus=i, to_bus=j, reactance_pu=x) for (i, j), x in reactances.items()],
    )
