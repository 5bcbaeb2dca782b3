# ==============================================================================
# test_network.py — DC network tests
# ==============================================================================
# Purpose: Susceptance assembly, angle map, flows and structural properties
#          of S on hand-checked and random networks
# Sections: Imports, Small networks, Structural failures, Random networks
# ==============================================================================

# ==============================================================================
# Imports
# ==============================================================================

# Third Party -----
import numpy as np
import pytest
from pydantic import ValidationError

# Grid ----
from app.grid.errors import DomainError, NetworkValidationError, SingularMatrixError
from app.grid.network import (
    angles_from_injections,
    evaluate_flow,
    injections_from_angles,
    line_flows,
    load_network,
    network_from_susceptance,
    slack_injection,
    validate_network,
)
from app.models.network_models import BranchSpec, BusSpec, NetworkSpec

from tests.conftest import line_spec, random_network_spec

THREE_BUS = {("1", "2"): 1.0, ("1", "s"): 0.5, ("2", "s"): 1.0}
THREE_BUS_ROLES = {"1": "microgrid", "2": "generator", "s": "slack"}

# ==============================================================================
# Small networks
# ==============================================================================

def test_three_bus_susceptance_and_angle_map():
    net = load_network(line_spec(THREE_BUS, THREE_BUS_ROLES))

    np.testing.assert_allclose(net.B, [[-3.0, 1.0], [1.0, -2.0]])
    np.testing.assert_allclose(net.S, [[0.4, 0.2], [0.2, 0.6]])
    np.testing.assert_allclose(net.S, -np.linalg.inv(net.B), atol=1e-12)
    assert net.indexing.labels == ("1", "2")
    assert net.indexing.slack_label == "s"


def test_microgrids_come_first_regardless_of_file_order():
    roles = {"g": "generator", "s": "slack", "m": "microgrid"}
    net = load_network(line_spec({("g", "m"): 0.2, ("m", "s"): 0.1, ("g", "s"): 0.3}, roles))

    assert net.indexing.microgrid_labels == ("m",)
    assert net.indexing.generator_labels == ("g",)
    assert net.indexing.position("g") == 1


def test_base_mva_scales_susceptance():
    spec = line_spec(THREE_BUS, THREE_BUS_ROLES)
    scaled = load_network(spec.model_copy(update={"base_mva": 100.0}))

    np.testing.assert_allclose(scaled.B, 100.0 * load_network(spec).B)
    np.testing.assert_allclose(scaled.S, load_network(spec).S / 100.0)


def test_angle_round_trip_and_slack_balance():
    net = load_network(line_spec(THREE_BUS, THREE_BUS_ROLES))
    P = np.array([-30.0, 50.0])

    theta = angles_from_injections(net, P)
    np.testing.assert_allclose(theta, [-2.0, 24.0])
    np.testing.assert_allclose(injections_from_angles(net, theta), P)
    assert slack_injection(net, P) == pytest.approx(-20.0)

    state = evaluate_flow(net, P)
    np.testing.assert_array_equal(state.theta, theta)


def test_line_flows_balance_at_every_bus():
    net = load_network(line_spec(THREE_BUS, THREE_BUS_ROLES))
    P = np.array([-30.0, 50.0])
    flows = line_flows(net, angles_from_injections(net, P))

    # outflow of bus 1 equals its injection
    assert flows[("1", "2")] + flows[("1", "s")] == pytest.approx(-30.0)
    assert -flows[("1", "2")] + flows[("2", "s")] == pytest.approx(50.0)
    # the slack takes the rest
    assert flows[("1", "s")] + flows[("2", "s")] == pytest.approx(20.0)


def test_interior6_angle_map(interior6_model):
    S = interior6_model.network.S
    np.testing.assert_allclose(
        S[0], [6.99792e-4, 1.50799e-4, 2.15427e-5, 3.18972e-4, 6.46282e-5], rtol=1e-5
    )


def test_network_from_susceptance_matches_loaded():
    loaded = load_network(line_spec(THREE_BUS, THREE_BUS_ROLES))
    wrapped = network_from_susceptance(loaded.B, n_d=1, n_g=1, labels=["1", "2"])
    np.testing.assert_allclose(wrapped.S, loaded.S)


def test_arrays_are_read_only():
    net = load_network(line_spec(THREE_BUS, THREE_BUS_ROLES))
    with pytest.raises(ValueError):
        net.S[0, 0] = 1.0

# ==============================================================================
# Structural failures
# ==============================================================================

def test_disconnected_network_is_singular():
    roles = {"1": "microgrid", "2": "generator", "3": "microgrid", "s": "slack"}
    spec = line_spec({("1", "s"): 0.1, ("2", "s"): 0.1, ("3", "3b"): 0.1}, {**roles, "3b": "generator"})
    with pytest.raises(SingularMatrixError, match="disconnected"):
        load_network(spec)


def test_missing_slack_is_rejected():
    spec = NetworkSpec(
        buses=[BusSpec(id=1, role="microgrid"), BusSpec(id=2, role="generator")],
        branches=[BranchSpec(from_bus=1, to_bus=2, reactance_pu=0.1)],
    )
    with pytest.raises(NetworkValidationError, match="no slack"):
        load_network(spec)


def test_generator_bus_with_load_is_rejected():
    spec = NetworkSpec(
        slack_id="s",
        buses=[
            BusSpec(id=1, role="microgrid", load_mw=10.0),
            BusSpec(id=2, role="generator", load_mw=5.0),
            BusSpec(id="s", role="slack"),
        ],
        branches=[BranchSpec(from_bus=1, to_bus="s", reactance_pu=0.1), BranchSpec(from_bus=2, to_bus="s", reactance_pu=0.1)],
    )
    with pytest.raises(NetworkValidationError, match="carries a load"):
        load_network(spec)


def test_schema_rejects_duplicates_unknown_buses_and_self_loops():
    buses = [BusSpec(id=1, role="microgrid"), BusSpec(id=2, role="generator"), BusSpec(id=3, role="slack")]

    with pytest.raises(ValidationError, match="duplicate bus ids"):
        NetworkSpec(buses=buses + [BusSpec(id=1, role="microgrid")], branches=[])
    with pytest.raises(ValidationError, match="unknown bus"):
        NetworkSpec(buses=buses, branches=[BranchSpec(from_bus=1, to_bus=9, reactance_pu=0.1)])
    with pytest.raises(ValidationError, match="self loop"):
        NetworkSpec(buses=buses, branches=[BranchSpec(from_bus=1, to_bus=1, reactance_pu=0.1)])
    with pytest.raises(ValidationError, match="nonzero"):
        BranchSpec(from_bus=1, to_bus=2, reactance_pu=0.0)


def test_negative_reactance_fails_laplacian_check():
    reactances = {("1", "s"): 0.1, ("2", "s"): 0.1, ("1", "2"): -0.5}
    spec = line_spec(reactances, THREE_BUS_ROLES)

    with pytest.raises(NetworkValidationError, match="structural checks"):
        load_network(spec)

    checks = {check.name: check for check in validate_network(load_network(spec, strict=False))}
    assert not checks["branch susceptances positive"].passed
    assert not checks["-B is a reduced Laplacian"].passed


def test_angle_map_inverts_indefinite_susceptance(caplog):
    B = np.array([[1.0, 0.5], [0.5, -2.0]])
    net = network_from_susceptance(B, n_d=1, n_g=1, strict=False)

    np.testing.assert_allclose(net.S, -np.linalg.inv(B), atol=1e-12)
    assert "not positive definite" in caplog.text


def test_asymmetric_susceptance_is_rejected():
    with pytest.raises(NetworkValidationError, match="symmetric"):
        network_from_susceptance(np.array([[-3.0, 1.0], [0.5, -2.0]]), n_d=1, n_g=1)


def test_wrong_vector_length_is_a_domain_error():
    net = load_network(line_spec(THREE_BUS, THREE_BUS_ROLES))
    with pytest.raises(DomainError):
        angles_from_injections(net, np.zeros(3))

# ==============================================================================
# Random networks
# ==============================================================================

def test_angle_map_properties_on_random_networks():
    for seed in range(500):
        net = load_network(random_network_spec(seed))
        failed = [check.name for check in validate_network(net) if not check.passed]
        assert not failed, f"seed {seed}: {failed}"

        S = net.S
        np.testing.assert_allclose(S, S.T, atol=1e-10 * np.abs(S).max())
        assert S.min() >= -1e-12 * np.abs(S).max()
        assert np.all(np.diag(S) > 0.0)
