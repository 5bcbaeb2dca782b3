# ==============================================================================
# test_config.py — Scenario loading and environment settings
# ==============================================================================
# Purpose: Registry lookups, schema errors, solver overrides, environment
#          properties and seeded random streams
# Sections: Imports, Scenario loading, Overrides, Environment, Random streams
# ==============================================================================

# ==============================================================================
# Imports
# ==============================================================================

# Standard Library -----
from pathlib import Path

# Third Party -----
import numpy as np
import pytest
import yaml

# Grid ----
from app.grid.errors import ScenarioError
from app.models.scenario_models import (
    SCHEME_PROFILES,
    FollowerScheme,
    LeaderScheme,
    RunManifest,
    ScenarioConfig,
)
from app.services.config_service import ConfigService, config_service
from app.utils.rng import SeededRNG

# ==============================================================================
# Scenario loading
# ==============================================================================

def test_registry_lists_bundled_scenarios():
    assert {"sixbus", "interior6"} <= set(config_service.all_scenarios)
    assert config_service.scenario_entry("missing") is None


def test_load_sixbus_values(sixbus):
    assert sixbus.id == "sixbus"
    assert sixbus.description.startswith("Wood & Wollenberg")
    assert sixbus.network.base_mva == 100.0
    assert sixbus.network.slack_id == "5"
    assert [m.psi for m in sixbus.microgrids] == [110.0, 150.0, 80.0]
    assert [g.alpha for g in sixbus.generators] == [5.0e5, 3.0e5]
    assert sixbus.solver.follower_scheme == FollowerScheme.PDA
    assert sixbus.solver.leader_scheme == LeaderScheme.KBA
    assert sixbus.solver.seed == 1


def test_microgrid_load_comes_from_the_bus(interior6_model):
    np.testing.assert_allclose(interior6_model.game.load, [220.0, 350.0, 170.0])


def test_load_by_path_uses_the_file_stem(tmp_path, scenario_dict):
    del scenario_dict["id"]
    path = tmp_path / "custom.yaml"
    path.write_text(yaml.safe_dump(scenario_dict))

    assert config_service.load_scenario(path).id == "custom"


def test_unknown_scenario_is_a_scenario_error():
    with pytest.raises(ScenarioError, match="neither a registered id nor an existing file"):
        config_service.load_scenario("no-such-scenario")


def test_yaml_syntax_error_reports_the_line(tmp_path):
    path = tmp_path / "broken.yaml"
    path.write_text("network:\n  buses: [1, 2\nmarket: {zeta: 1}\n")

    with pytest.raises(ScenarioError, match="at line"):
        config_service.load_scenario(path)


def test_non_mapping_yaml_is_rejected(tmp_path):
    path = tmp_path / "list.yaml"
    path.write_text("- 1\n- 2\n")
    with pytest.raises(ScenarioError, match="expected a mapping"):
        config_service.load_scenario(path)


def test_schema_errors_are_listed(tmp_path, scenario_dict):
    scenario_dict["network"]["buses"].append(dict(scenario_dict["network"]["buses"][0]))
    scenario_dict["microgrids"][0]["tau"] = 1.5
    path = tmp_path / "bad.yaml"
    path.write_text(yaml.safe_dump(scenario_dict))

    with pytest.raises(ScenarioError) as excinfo:
        config_service.load_scenario(path)
    issues = "\n".join(excinfo.value.issues)
    assert "duplicate bus ids: 1" in issues
    assert "tau" in issues


def test_players_must_match_bus_roles(scenario_dict):
    scenario_dict["generators"] = scenario_dict["generators"][:1]
    with pytest.raises(ValueError, match="must match generator buses"):
        ScenarioConfig(**scenario_dict)


def test_initial_generation_length_is_checked(scenario_dict):
    scenario_dict["solver"]["initial_generation_mw"] = [1.0, 2.0, 3.0]
    with pytest.raises(ValueError, match="initial_generation_mw has 3 entries"):
        ScenarioConfig(**scenario_dict)

# ==============================================================================
# Overrides
# ==============================================================================

def test_overrides_ignore_none(interior6):
    assert interior6.with_overrides(seed=None, eps1=None) is interior6

    changed = interior6.with_overrides(seed=9, follower_scheme=FollowerScheme.IUA, eps2=None)
    assert changed.solver.seed == 9
    assert changed.solver.follower_scheme == FollowerScheme.IUA
    assert changed.solver.eps2 == interior6.solver.eps2
    assert interior6.solver.seed == 1


def test_manifest_maps_max_iters_to_both_caps():
    manifest = RunManifest(scenarios=["interior6"], output_dir=Path("out"), max_iters=50)
    assert manifest.overrides["max_follower_steps"] == 50
    assert manifest.overrides["max_leader_sweeps"] == 50
    assert manifest.overrides["seed"] is None


def test_scheme_profiles_cover_every_pairing():
    pairs = {(profile.follower_scheme, profile.leader_scheme) for profile in SCHEME_PROFILES}
    assert len(pairs) == 9
    pda_kba = next(
        profile for profile in SCHEME_PROFILES
        if profile.follower_scheme == FollowerScheme.PDA and profile.leader_scheme == LeaderScheme.KBA
    )
    assert pda_kba.communication_cost == "ultra low"
    assert pda_kba.privacy_level == "ultra high"

# ==============================================================================
# Environment
# ==============================================================================

def test_environment_properties(monkeypatch, tmp_path):
    monkeypatch.setenv("LOG_LEVEL", "debug")
    monkeypatch.setenv("OUTPUT_DIR", str(tmp_path))
    monkeypatch.setenv("DEFAULT_SEED", "17")
    monkeypatch.setenv("BATCH_WORKERS", "0")
    service = ConfigService()

    assert service.log_level == "DEBUG"
    assert service.output_dir == tmp_path
    assert service.default_seed == 17
    assert service.batch_workers == 1


def test_relative_output_dir_hangs_off_the_project_root(monkeypatch):
    monkeypatch.setenv("OUTPUT_DIR", "runs")
    assert config_service.output_dir == config_service.config_dir.parent / "runs"


def test_required_env_var(monkeypatch):
    monkeypatch.delenv("MICROGRID_TEST_VAR", raising=False)
    with pytest.raises(ValueError, match="MICROGRID_TEST_VAR"):
        config_service.env_var("MICROGRID_TEST_VAR", required=True)

# ==============================================================================
# Random streams
# ==============================================================================

def test_same_seed_same_draws():
    first, second = SeededRNG(5), SeededRNG(5)
    np.testing.assert_array_equal(first.uniform(np.zeros(4), np.ones(4)), second.uniform(np.zeros(4), np.ones(4)))
    np.testing.assert_array_equal(first.bernoulli(np.full(4, 0.5)), second.bernoulli(np.full(4, 0.5)))


def test_forks_do_not_disturb_the_parent():
    parent, reference = SeededRNG(5), SeededRNG(5)
    child = parent.fork(0)
    child.uniform(np.zeros(10), np.ones(10))

    np.testing.assert_array_equal(parent.uniform(np.zeros(3), np.ones(3)), reference.uniform(np.zeros(3), np.ones(3)))
    assert not np.array_equal(
        SeededRNG(5).fork(0).uniform(np.zeros(3), np.ones(3)),
        SeededRNG(5).fork(1).uniform(np.zeros(3), np.ones(3)),
    )


def test_reset_replays_the_stream():
    rng = SeededRNG(3)
    first = rng.normal(1.0, 5)
    rng.reset()
    np.testing.assert_array_equal(rng.normal(1.0, 5), first)
    assert not rng.normal(0.0, 3).any()
