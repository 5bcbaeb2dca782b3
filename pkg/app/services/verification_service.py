# ==============================================================================
# verification_service.py — Independent equilibrium checks
# ==============================================================================
# Purpose: Sampled unilateral-deviation checks, a brute-force follower Nash
#          oracle, follower trace replay and structural scenario validation
# Sections: Imports, Public exports, Public API, Helper Functions
# ==============================================================================

# ==============================================================================
# Imports
# ==============================================================================

# Standard Library -----
import logging
from typing import Dict, List, Optional, Sequence, Tuple

# Third Party -----
import numpy as np

# Grid ----
from app.grid.errors import DomainError, GridGameError
from app.grid.followers import apply_step, exact_follower_response, follower_cost
from app.grid.leaders import build_W_b, leader_cost
from app.grid.model import GridModel
from app.grid.network import MAX_CONDITION, angles_from_injections, condition_number, validate_network
from app.models.report_models import (
    EquilibriumReport,
    FollowerStepRecord,
    InvariantCheck,
    SEVerification,
    SEViolation,
    ValidationReport,
)
from app.models.scenario_models import FollowerScheme, ScenarioConfig
from app.utils.rng import SeededRNG

logger = logging.getLogger(__name__)

# ==============================================================================
# Public exports
# ==============================================================================
__all__ = [
    "SE_TOLERANCE",
    "LOCAL_PROBES_MW",
    "BRUTE_FORCE_MAX_MICROGRIDS",
    "VALIDATION_GROUPS",
    "verify_se",
    "verify_equilibrium",
    "brute_force_follower_nash",
    "replay_follower_trace",
    "validate_scenario",
]

SE_TOLERANCE = 1e-6
LOCAL_PROBES_MW = (0.01, 0.1, 1.0, 10.0, 100.0)
BRUTE_FORCE_MAX_MICROGRIDS = 4

# structural properties checked by validate_scenario, in report order
VALIDATION_GROUPS = (
    "angle map S",
    "follower matrix H",
    "reduction T1",
    "KKT matrix W",
    "splitting D",
)

VERIFY_STREAM = 2

# ==============================================================================
# Public API
# ==============================================================================

def verify_se(
    report: EquilibriumReport,
    config: ScenarioConfig,
    n_samples: Optional[int] = None,
    rng: Optional[SeededRNG] = None,
) -> SEVerification:
    """Check both equilibrium conditions at the strategies a report returned."""
    model = GridModel.from_config(config)
    n_samples = config.solver.se_samples if n_samples is None else n_samples
    rng = rng or SeededRNG(report.seed).fork(VERIFY_STREAM)
    return verify_equilibrium(model, np.array(report.p_d_star), np.array(report.p_g_star), n_samples, rng)


def verify_equilibrium(
    model: GridModel,
    P_d: np.ndarray,
    P_g: np.ndarray,
    n_samples: int,
    rng: SeededRNG,
    tolerance: float = SE_TOLERANCE,
) -> SEVerification:
    """
    Sample unilateral deviations of every player.

    Followers deviate in own generation over [0, cap] with everyone else
    fixed. Generators deviate over [0, cap] and the followers re-solve their
    equilibrium each time; the baseline uses the followers' exact response to P_g.
    """
    game = model.game
    P_d = np.asarray(P_d, dtype=float)
    P_g = np.asarray(P_g, dtype=float)
    verification = SEVerification(n_samples=n_samples, tolerance=tolerance)

    # followers -----
    theta_d = model.angles(P_d, P_g)[: game.n_d]
    follower_gaps: List[float] = []
    for i, params in enumerate(game.microgrids):
        generation = P_d[i] + params.load
        baseline = follower_cost(params, game.market, generation, theta_d[i])
        for candidate in _deviation_samples(generation, 0.0, params.gen_cap_mw, n_samples, rng):
            theta_i = theta_d[i] + game.s_dd[i] * (candidate - generation)
            gap = follower_cost(params, game.market, candidate, theta_i) - baseline
            follower_gaps.append(gap)
            if gap < -tolerance:
                verification.violations.append(SEViolation(
                    condition="follower", player=params.bus, deviation_mw=float(candidate - generation), cost_gap=gap,
                ))

    # leaders -----
    response = exact_follower_response(game, P_g)
    baseline = leader_cost(model.generators, P_g, model.generator_angles(response, P_g))
    leader_gaps: List[float] = []
    for j, params in enumerate(model.generators):
        for candidate in _deviation_samples(P_g[j], 0.0, params.gen_cap_mw, n_samples, rng):
            deviated = P_g.copy()
            deviated[j] = candidate
            answer = exact_follower_response(game, deviated)
            gap = leader_cost(model.generators, deviated, model.generator_angles(answer, deviated)) - baseline
            leader_gaps.append(gap)
            if gap < -tolerance:
                verification.violations.append(SEViolation(
                    condition="leader", player=params.bus, deviation_mw=float(candidate - P_g[j]), cost_gap=gap,
                ))

    verification.follower_samples = len(follower_gaps)
    verification.leader_samples = len(leader_gaps)
    verification.min_follower_gap = min(follower_gaps) if follower_gaps else None
    verification.min_leader_gap = min(leader_gaps) if leader_gaps else None

    if verification.violations:
        logger.warning("SE verification found %d violating samples", len(verification.violations))
    return verification


def brute_force_follower_nash(
    model: GridModel,
    P_g: np.ndarray,
    grid_step: float = 0.01,
    max_rounds: int = 500,
    P0: Optional[np.ndarray] = None,
) -> Tuple[np.ndarray, bool]:
    """
    Follower equilibrium by exhaustive search instead of the closed-form response.

    Each microgrid in turn scans its generation over [0, cap] in steps of
    grid_step, recomputes every bus angle from the network and keeps the
    cheapest point. Rounds repeat until nobody moves.

    Returns:
        (net injections, converged)

    Raises:
        DomainError: more than BRUTE_FORCE_MAX_MICROGRIDS microgrids
    """
    game = model.game
    net = model.network
    if game.n_d > BRUTE_FORCE_MAX_MICROGRIDS:
        raise DomainError(
            f"brute-force search supports at most {BRUTE_FORCE_MAX_MICROGRIDS} microgrids, got {game.n_d}"
        )
    P_g = np.asarray(P_g, dtype=float)
    P_d = np.clip(np.zeros(game.n_d), -game.load, game.p_max) if P0 is None else np.array(P0, dtype=float)

    grids = [_generation_grid(params.gen_cap_mw, grid_step) for params in game.microgrids]
    for round_index in range(1, max_rounds + 1):
        moved = False
        for i, params in enumerate(game.microgrids):
            # own angle is affine in own injection with slope s_ii
            theta = angles_from_injections(net, model.injections(P_d, P_g))
            theta_i = theta[i] + net.S[i, i] * (grids[i] - params.load - P_d[i])
            costs = (
                params.psi * grids[i]
                + game.market.zeta * (params.load - grids[i])
                + 0.5 * params.eta ** 2 * theta_i ** 2
            )
            best = float(grids[i][int(np.argmin(costs))] - params.load)
            if best != P_d[i]:
                moved = True
                P_d[i] = best
        if not moved:
            return P_d, True

    logger.warning("Brute-force follower search did not settle within %d rounds", max_rounds)
    return P_d, False


def replay_follower_trace(
    trace: Sequence[FollowerStepRecord],
    config: ScenarioConfig,
    announcements: Dict[str, Sequence[float]],
) -> List[str]:
    """
    Re-execute every recorded step from the row before it and compare bit for bit.

    Args:
        trace: Follower trace rows, any number of phases
        config: Scenario the trace came from
        announcements: Generator outputs each phase answered, keyed by phase

    Returns:
        One message per mismatching step; empty when the trace replays exactly
    """
    model = GridModel.from_config(config)
    mismatches: List[str] = []
    previous: Optional[FollowerStepRecord] = None

    for record in trace:
        if record.step == 0 or previous is None or previous.phase != record.phase:
            previous = record
            continue

        if record.phase not in announcements:
            mismatches.append(f"{record.phase} step {record.step}: no announcement recorded for this phase")
            previous = record
            continue

        recomputed = apply_step(
            model.game,
            FollowerScheme(record.scheme),
            np.array(previous.p_d),
            np.array(announcements[record.phase], dtype=float),
            np.array(previous.theta_d),
            np.array(record.updated_mask, dtype=bool),
        )
        recorded = np.array(record.p_d)
        if not np.array_equal(recomputed, recorded):
            gap = float(np.abs(recomputed - recorded).max())
            mismatches.append(f"{record.phase} step {record.step}: replay differs by {gap:.3g} MW")
        previous = record

    return mismatches


def validate_scenario(config: ScenarioConfig) -> ValidationReport:
    """Run every structural check of the network and the leader system without solving."""
    report = ValidationReport(scenario_id=config.id)
    try:
        model = GridModel.from_config(config, strict=False)
    except GridGameError as e:
        report.errors.append(str(e))
        return report

    report.checks.extend(
        check.model_copy(update={"group": VALIDATION_GROUPS[0]}) for check in validate_network(model.network)
    )
    report.checks.extend(_follower_checks(model))

    try:
        transform = model.transform
    except GridGameError as e:
        report.errors.append(str(e))
        return report
    report.checks.extend(_transform_checks(model, transform))

    try:
        system = build_W_b(model.game, model.generators, transform)
    except GridGameError as e:
        report.errors.append(str(e))
        return report

    report.checks.append(InvariantCheck(
        name="W invertible",
        group=VALIDATION_GROUPS[3],
        passed=system.cond_w <= MAX_CONDITION,
        residual=system.cond_w,
        tolerance=MAX_CONDITION,
        detail="row-scaled condition number",
    ))
    min_pivot = float(np.abs(np.diag(system.D)).min())
    report.checks.append(InvariantCheck(
        name="D invertible",
        group=VALIDATION_GROUPS[4],
        passed=min_pivot > 0.0 and bool(np.all(np.diag(system.A1) > 0.0)),
        residual=min_pivot,
        detail="smallest |diagonal| of the lower-triangular part of W",
    ))
    return report

# ==============================================================================
# Helper Functions
# ==============================================================================

def _deviation_samples(current: float, low: float, high: float, n_samples: int, rng: SeededRNG) -> np.ndarray:
    """Uniform draws, both endpoints, the current value and local probes around it."""
    uniform = rng.uniform(np.full(n_samples, low), np.full(n_samples, high))
    probes = [current + sign * step for step in LOCAL_PROBES_MW for sign in (-1.0, 1.0)]
    probes = np.clip(np.array(probes), low, high)
    return np.concatenate([uniform, [low, high, current], probes])


def _generation_grid(cap: float, step: float) -> np.ndarray:
    grid = np.arange(0.0, cap, step)
    return np.append(grid, cap)


def _follower_checks(model: GridModel) -> List[InvariantCheck]:
    game = model.game
    cond = condition_number(game.H)
    S1 = model.network.S_dd
    det_gap = abs(np.linalg.det(S1) - np.linalg.det(game.H) * np.prod(game.s_dd))
    det_scale = max(abs(np.linalg.det(S1)), 1e-300)
    return [
        InvariantCheck(
            name="H invertible",
            group=VALIDATION_GROUPS[1],
            passed=cond <= MAX_CONDITION,
            residual=cond,
            tolerance=MAX_CONDITION,
            detail="condition number of [s_ij / s_ii]",
        ),
        InvariantCheck(
            name="det(S_dd) = det(H) prod s_ii",
            group=VALIDATION_GROUPS[1],
            passed=det_gap / det_scale <= 1e-9,
            residual=det_gap / det_scale,
            tolerance=1e-9,
        ),
    ]


def _transform_checks(model: GridModel, transform) -> List[InvariantCheck]:
    T1 = transform.T1
    schur_gap = float(np.abs(T1 @ model.network.S_gg - np.eye(model.network.n_g)).max())
    return [
        InvariantCheck(
            name="T1 positive diagonal",
            group=VALIDATION_GROUPS[2],
            passed=bool(np.all(np.diag(T1) > 0.0)),
            residual=float(np.diag(T1).min()),
        ),
        InvariantCheck(
            name="T1 is the Schur complement",
            group=VALIDATION_GROUPS[2],
            passed=schur_gap <= 1e-10,
            residual=schur_gap,
            tolerance=1e-10,
            detail="T1 S_gg = I",
        ),
    ]
