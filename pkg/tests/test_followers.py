# ==============================================================================
# test_followers.py — Microgrid game tests
# ==============================================================================
# Purpose: Follower costs, best responses, direct solves, the three update
#          schemes and the PDA convergence condition
# Sections: Imports, Costs, Best response, Direct solve, Update schemes,
#           Convergence condition, Random instances
# ==============================================================================

# ==============================================================================
# Imports
# ==============================================================================

# Third Party -----
import numpy as np
import pytest

# Grid ----
from app.grid.errors import DomainError
from app.grid.followers import (
    FollowerGame,
    apply_step,
    best_response,
    best_responses,
    check_pda_convergence,
    flow_directions,
    follower_cost,
    follower_costs,
    follower_reduction,
    initial_follower_profile,
    iua_step,
    measure_angles,
    pda_step,
    rua_step,
    run_follower_scheme,
    solve_followers_direct,
)
from app.grid.network import load_network
from app.models.game_models import MarketParams, MicrogridParams
from app.models.report_models import FlowDirection
from app.models.scenario_models import FollowerScheme
from app.utils.rng import SeededRNG

from tests.conftest import random_network_spec, random_players

P_G_STAR = np.array([33.4979, 7.1422])
P_D_STAR = np.array([-89.5761, -217.9470, -61.9902])

# ==============================================================================
# Costs
# ==============================================================================

def test_follower_cost_example():
    params = MicrogridParams(bus="1", psi=110.0, eta=1000.0, gen_cap_mw=100.0, tau=0.7, load_mw=220.0)
    market = MarketParams(zeta=140.0)

    # 110*50 + 140*(220-50) + 0.5*1e6*0.01^2
    assert follower_cost(params, market, 50.0, 0.01) == pytest.approx(29350.0)
    assert follower_cost(params, market, 0.0, 0.0) == pytest.approx(140.0 * 220.0)


def test_follower_cost_rejects_generation_outside_cap():
    params = MicrogridParams(bus="1", psi=110.0, eta=1000.0, gen_cap_mw=100.0, tau=0.7, load_mw=220.0)
    with pytest.raises(DomainError):
        follower_cost(params, MarketParams(zeta=140.0), 100.5, 0.0)
    with pytest.raises(DomainError):
        follower_cost(params, MarketParams(zeta=140.0), -1.0, 0.0)


def test_vector_costs_match_scalar_costs(interior6_model):
    game = interior6_model.game
    theta_d = measure_angles(game, P_D_STAR, P_G_STAR)
    costs = follower_costs(game, P_D_STAR, theta_d)
    for i, params in enumerate(game.microgrids):
        assert costs[i] == pytest.approx(follower_cost(params, game.market, P_D_STAR[i] + params.load, theta_d[i]))

# ==============================================================================
# Best response
# ==============================================================================

def test_best_response_clamps_to_the_box():
    assert best_response(0.1, 0.02, 0.001, load=100.0, p_max=50.0) == 50.0
    assert best_response(-1.0, 0.0, 0.001, load=100.0, p_max=50.0) == -100.0
    assert best_response(0.01, 0.0, 0.001, load=100.0, p_max=50.0) == pytest.approx(10.0)


def test_best_response_minimises_cost_on_a_fine_grid(interior6_model):
    game = interior6_model.game
    net = game.network
    P_d = np.array([-80.0, -200.0, -60.0])
    responses = best_responses(game, P_d, P_G_STAR)

    for i, params in enumerate(game.microgrids):
        generation = np.linspace(0.0, params.gen_cap_mw, 400_001)
        others = net.S[i] @ np.concatenate([P_d, P_G_STAR]) - game.s_dd[i] * P_d[i]
        theta = others + game.s_dd[i] * (generation - params.load)
        costs = params.psi * generation + game.market.zeta * (params.load - generation) + 0.5 * params.eta ** 2 * theta ** 2
        best = generation[np.argmin(costs)] - params.load
        assert responses[i] == pytest.approx(best, abs=2e-3)


def test_reduction_matches_angle_condition(interior6_model):
    game = interior6_model.game
    reduction = follower_reduction(game, P_G_STAR)
    np.testing.assert_allclose(np.diag(reduction.H), 1.0)
    np.testing.assert_allclose(game.gamma, [-0.0857398, -0.135915, -0.0646064], rtol=1e-5)

# ==============================================================================
# Direct solve
# ==============================================================================

def test_interior_equilibrium_puts_angles_at_gamma(interior6_model):
    game = interior6_model.game
    solution = solve_followers_direct(game, P_G_STAR)

    assert solution.interior
    np.testing.assert_allclose(solution.P_d, P_D_STAR, atol=1e-3)
    np.testing.assert_allclose(measure_angles(game, solution.P_d, P_G_STAR), game.gamma, rtol=1e-9)
    np.testing.assert_allclose(best_responses(game, solution.P_d, P_G_STAR), solution.P_d, atol=1e-9)


def test_bound_equilibrium_is_a_clamped_fixed_point(sixbus_model):
    game = sixbus_model.game
    solution = solve_followers_direct(game, np.zeros(2))

    assert not solution.interior
    np.testing.assert_allclose(solution.P_d, [-120.0, -250.0, -70.0])
    np.testing.assert_allclose(best_responses(game, solution.P_d, np.zeros(2)), solution.P_d)

# ==============================================================================
# Update schemes
# ==============================================================================

@pytest.mark.parametrize("scheme", list(FollowerScheme))
def test_every_scheme_reaches_the_direct_solution(interior6_model, scheme):
    game = interior6_model.game
    run = run_follower_scheme(game, P_G_STAR, scheme, SeededRNG(7), eps1=1e-6)

    assert run.converged
    np.testing.assert_allclose(run.P_d, solve_followers_direct(game, P_G_STAR).P_d, atol=1e-4)
    assert len(run.trace) == run.steps + 1


def test_iua_from_zero_converges_in_a_handful_of_steps(interior6_model):
    run = run_follower_scheme(
        interior6_model.game, P_G_STAR, FollowerScheme.IUA, SeededRNG(1), P0=np.zeros(3), eps1=1e-3
    )
    assert run.converged
    assert run.steps <= 15


def test_step_cap_reports_non_convergence(interior6_model):
    run = run_follower_scheme(
        interior6_model.game, P_G_STAR, FollowerScheme.PDA, SeededRNG(1), P0=np.zeros(3), max_steps=2
    )
    assert not run.converged
    assert run.steps == 2


def test_pda_with_true_angles_equals_best_response(interior6_model):
    game = interior6_model.game
    P_d = np.array([-80.0, -200.0, -60.0])
    theta = measure_angles(game, P_d, P_G_STAR)
    updated, mask = pda_step(game, P_d, theta, mask=np.ones(3, dtype=bool))

    assert mask.all()
    # theta_i - s_ii P_i and the direct sum round differently, a few ulps apart
    np.testing.assert_allclose(updated, iua_step(game, P_d, P_G_STAR), rtol=1e-12, atol=0.0)


def test_pda_and_rua_follow_the_same_trajectory_under_the_same_draws(interior6_model):
    game = interior6_model.game
    start = np.array([-80.0, -200.0, -60.0])
    pda = run_follower_scheme(game, P_G_STAR, FollowerScheme.PDA, SeededRNG(4), P0=start, eps1=1e-9)
    rua = run_follower_scheme(game, P_G_STAR, FollowerScheme.RUA, SeededRNG(4), P0=start, eps1=1e-9)

    assert pda.converged and rua.converged
    assert pda.steps == rua.steps
    for by_angle, by_sum in zip(pda.trace, rua.trace):
        assert by_angle.updated_mask == by_sum.updated_mask
        np.testing.assert_allclose(by_angle.p_d, by_sum.p_d, rtol=1e-12, atol=1e-9)


def test_masked_microgrids_hold_their_injection(interior6_model):
    game = interior6_model.game
    P_d = np.array([-80.0, -200.0, -60.0])
    mask = np.array([True, False, False])

    updated, _ = rua_step(game, P_d, P_G_STAR, mask=mask)
    assert updated[1:].tolist() == P_d[1:].tolist()
    assert updated[0] != P_d[0]

    theta = measure_angles(game, P_d, P_G_STAR)
    np.testing.assert_array_equal(
        apply_step(game, FollowerScheme.PDA, P_d, P_G_STAR, theta, np.zeros(3, dtype=bool)), P_d
    )


def test_random_update_needs_rng_or_mask(interior6_model):
    with pytest.raises(DomainError):
        rua_step(interior6_model.game, np.zeros(3), P_G_STAR)


def test_same_seed_same_trace(interior6_model):
    game = interior6_model.game
    first = run_follower_scheme(game, P_G_STAR, FollowerScheme.RUA, SeededRNG(42))
    second = run_follower_scheme(game, P_G_STAR, FollowerScheme.RUA, SeededRNG(42))
    assert first.trace == second.trace


def test_random_convergence_waits_for_every_microgrid(interior6_model):
    game = interior6_model.game
    run = run_follower_scheme(game, P_G_STAR, FollowerScheme.RUA, SeededRNG(3), eps1=1e-3)

    # every microgrid updated since the last large move
    last_large = max(row.step for row in run.trace if row.residual is None or row.residual > 1e-3)
    updated = np.zeros(3, dtype=bool)
    for row in run.trace[last_large + 1:]:
        updated |= np.array(row.updated_mask)
    assert updated.all()


def test_initial_profile_is_feasible(interior6_model):
    game = interior6_model.game
    P0 = initial_follower_profile(SeededRNG(5), game)
    assert np.all(P0 >= -game.load)
    assert np.all(P0 <= game.p_max)


def test_pmu_noise_changes_the_pda_path(interior6_model):
    game = interior6_model.game
    clean = run_follower_scheme(game, P_G_STAR, FollowerScheme.PDA, SeededRNG(1), P0=np.zeros(3))
    noisy = run_follower_scheme(
        game, P_G_STAR, FollowerScheme.PDA, SeededRNG(1), P0=np.zeros(3), noise_std=1e-6, max_steps=50
    )
    assert noisy.trace[0].theta_d != clean.trace[0].theta_d
    assert np.all(np.isfinite(noisy.P_d))

# ==============================================================================
# Convergence condition
# ==============================================================================

def test_pda_condition_holds_on_interior6(interior6_model):
    report = check_pda_convergence(interior6_model.game)
    assert report.max_ratio == pytest.approx(0.2562, abs=1e-4)
    assert report.lhs == pytest.approx(0.3843, abs=1e-4)
    assert report.rhs == pytest.approx(0.7)
    assert report.satisfied


def test_pda_condition_fails_on_sixbus(sixbus_model):
    report = check_pda_convergence(sixbus_model.game)
    assert report.max_ratio == pytest.approx(0.6600, abs=1e-4)
    assert report.lhs == pytest.approx(0.99, abs=1e-3)
    assert not report.satisfied


def test_flow_directions():
    assert flow_directions(np.array([5.0, -3.0, 0.0])) == [
        FlowDirection.SELL, FlowDirection.BUY, FlowDirection.BALANCED,
    ]

# ==============================================================================
# Random instances
# ==============================================================================

def _small_game(seed: int, n_microgrids: int, **players) -> FollowerGame:
    spec = random_network_spec(seed, min_buses=n_microgrids + 2, max_buses=8, n_microgrids=n_microgrids)
    microgrids, _ = random_players(spec, seed, **players)
    return FollowerGame.build(load_network(spec), microgrids, MarketParams(zeta=140.0))


def test_best_response_matches_grid_search_on_random_instances():
    step = 0.01
    for seed in range(200):
        game = _small_game(seed, 2 + seed % 2, load_mw=100.0, gen_cap_mw=200.0)
        rng = np.random.default_rng(seed)
        P_d = rng.uniform(-game.load, game.p_max)
        P_g = rng.uniform(0.0, 100.0, game.network.n_g)
        responses = best_responses(game, P_d, P_g)

        for i, params in enumerate(game.microgrids):
            generation = np.linspace(0.0, params.gen_cap_mw, int(round(params.gen_cap_mw / step)) + 1)
            others = game.network.S[i] @ np.concatenate([P_d, P_g]) - game.s_dd[i] * P_d[i]
            theta = others + game.s_dd[i] * (generation - params.load)
            costs = params.psi * generation + game.market.zeta * (params.load - generation) + 0.5 * params.eta ** 2 * theta ** 2
            best = generation[np.argmin(costs)] - params.load
            assert responses[i] == pytest.approx(best, abs=2 * step), f"seed {seed} microgrid {i}"


def test_schemes_and_direct_solve_agree_on_random_interior_instances():
    checked = 0
    for seed in range(1000):
        game = _small_game(seed, 2, load_mw=1000.0, gen_cap_mw=2000.0, tau=0.7)
        P_g = np.full(game.network.n_g, 50.0)
        condition = check_pda_convergence(game)
        direct = solve_followers_direct(game, P_g)
        if not (condition.satisfied and condition.lhs < 0.9 and direct.interior):
            continue

        for scheme in FollowerScheme:
            run = run_follower_scheme(game, P_g, scheme, SeededRNG(seed), eps1=1e-10, max_steps=20_000)
            assert run.converged, f"seed {seed} {scheme.value}"
            np.testing.assert_allclose(run.P_d, direct.P_d, atol=1e-6, err_msg=f"seed {seed} {scheme.value}")

        checked += 1
        if checked == 100:
            break
    assert checked == 100
