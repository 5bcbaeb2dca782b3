# ==============================================================================
# followers.py — Microgrid Nash game
# ==============================================================================
# Purpose: Follower costs, the clamped best response, direct and exact
#          equilibrium solves, the IUA / RUA / PDA update schemes and the
#          sufficient condition for PDA convergence
# Sections: Imports, Public exports, Main Classes, Costs, Best Response,
#           Update Schemes, Scheme Driver, Helper Functions
# ==============================================================================

# ==============================================================================
# Imports
# ==============================================================================

# Standard Library -----
import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import List, Optional, Sequence, Tuple

# Third Party -----
import numpy as np
import scipy.linalg as la

# Grid ----
from app.grid.errors import DomainError, SingularMatrixError
from app.grid.network import MAX_CONDITION, PowerNetwork, condition_number
from app.models.game_models import MarketParams, MicrogridParams
from app.models.report_models import FlowDirection, FollowerStepRecord, PdaConditionReport
from app.models.scenario_models import FollowerScheme
from app.utils.rng import SeededRNG

logger = logging.getLogger(__name__)

# ==============================================================================
# Public exports
# ==============================================================================
__all__ = [
    "FollowerGame",
    "FollowerReduction",
    "FollowerSolution",
    "FollowerRun",
    "follower_reduction",
    "follower_cost",
    "follower_costs",
    "best_response",
    "best_responses",
    "solve_followers_direct",
    "exact_follower_response",
    "measure_angles",
    "iua_step",
    "rua_step",
    "pda_step",
    "apply_step",
    "check_pda_convergence",
    "initial_follower_profile",
    "run_follower_scheme",
    "flow_directions",
]

BOUND_TOL = 1e-9

# ==============================================================================
# Main Classes
# ==============================================================================

@dataclass(frozen=True, eq=False)
class FollowerGame:
    """
    Microgrids of one network with everything their best responses need.

    `microgrids` is in internal bus order and every entry has its load filled in.
    """
    network: PowerNetwork
    microgrids: Tuple[MicrogridParams, ...]
    market: MarketParams

    @classmethod
    def build(
        cls, network: PowerNetwork, microgrids: Sequence[MicrogridParams], market: MarketParams
    ) -> "FollowerGame":
        """Order microgrids like the network and take missing loads from the buses."""
        by_bus = {m.bus: m for m in microgrids}
        labels = network.indexing.microgrid_labels
        if len(by_bus) != len(microgrids) or set(by_bus) != set(labels):
            raise DomainError(
                f"microgrid parameters for buses {sorted(by_bus)} do not match microgrid buses {sorted(labels)}"
            )

        ordered = []
        for position, label in enumerate(labels):
            params = by_bus[label]
            if params.load_mw is None:
                params = params.model_copy(update={"load_mw": float(network.loads_mw[position])})
            ordered.append(params)
        return cls(network=network, microgrids=tuple(ordered), market=market)

    @property
    def n_d(self) -> int:
        return self.network.n_d

    @cached_property
    def psi(self) -> np.ndarray:
        return np.array([m.psi for m in self.microgrids])

    @cached_property
    def eta(self) -> np.ndarray:
        return np.array([m.eta for m in self.microgrids])

    @cached_property
    def tau(self) -> np.ndarray:
        return np.array([m.tau for m in self.microgrids])

    @cached_property
    def load(self) -> np.ndarray:
        return np.array([m.load for m in self.microgrids])

    @cached_property
    def cap(self) -> np.ndarray:
        return np.array([m.gen_cap_mw for m in self.microgrids])

    @cached_property
    def p_max(self) -> np.ndarray:
        return self.cap - self.load

    @cached_property
    def s_dd(self) -> np.ndarray:
        return np.diag(self.network.S)[: self.n_d].copy()

    @cached_property
    def H(self) -> np.ndarray:
        """[s_ij / s_ii] over microgrid pairs; unit diagonal."""
        return self.network.S_dd / self.s_dd[:, None]

    @cached_property
    def G(self) -> np.ndarray:
        """[s_{i,g} / s_ii]: generator weights in each microgrid's response."""
        return self.network.S_dg / self.s_dd[:, None]

    @cached_property
    def gamma(self) -> np.ndarray:
        """(zeta - psi_i) / (eta_i^2 s_ii): the angle each microgrid wants at its bus."""
        return (self.market.zeta - self.psi) / (self.eta ** 2 * self.s_dd)


@dataclass(frozen=True, eq=False)
class FollowerReduction:
    """Linear system H P_d = q of an interior follower equilibrium."""
    gamma: np.ndarray
    H: np.ndarray
    q: np.ndarray
    p_max: np.ndarray


@dataclass(frozen=True, eq=False)
class FollowerSolution:
    P_d: np.ndarray
    interior: bool
    sweeps: int = 0


@dataclass(eq=False)
class FollowerRun:
    """Outcome of driving one update scheme to convergence."""
    scheme: FollowerScheme
    P_d: np.ndarray
    steps: int
    converged: bool
    trace: List[FollowerStepRecord] = field(default_factory=list)


def follower_reduction(game: FollowerGame, P_g: np.ndarray) -> FollowerReduction:
    P_g = _vector(P_g, game.network.n_g, "generation")
    q = game.gamma / game.s_dd - game.G @ P_g
    return FollowerReduction(gamma=game.gamma, H=game.H, q=q, p_max=game.p_max)

# ==============================================================================
# Costs
# ==============================================================================

def follower_cost(params: MicrogridParams, market: MarketParams, generation_mw: float, theta: float) -> float:
    """
    Cost of one microgrid: generation cost minus sale revenue plus angle regulation.

    Args:
        params: Microgrid coefficients, load filled in
        market: Market price
        generation_mw: Own generation, must lie in [0, gen_cap_mw]
        theta: Voltage angle at the microgrid bus (rad)

    Raises:
        DomainError: generation outside [0, gen_cap_mw]
    """
    tol = BOUND_TOL * max(1.0, params.gen_cap_mw)
    if generation_mw < -tol or generation_mw > params.gen_cap_mw + tol:
        raise DomainError(
            f"microgrid {params.bus} generation {generation_mw} MW outside [0, {params.gen_cap_mw}]"
        )
    return (
        params.psi * generation_mw
        + market.zeta * (params.load - generation_mw)
        + 0.5 * params.eta ** 2 * theta ** 2
    )


def follower_costs(game: FollowerGame, P_d: np.ndarray, theta_d: np.ndarray) -> np.ndarray:
    """Vector of follower costs at net injections P_d and microgrid angles theta_d."""
    P_d = _vector(P_d, game.n_d, "injection")
    theta_d = _vector(theta_d, game.n_d, "angle")
    generation = P_d + game.load
    tol = BOUND_TOL * np.maximum(1.0, game.cap)
    if np.any(generation < -tol) or np.any(generation > game.cap + tol):
        raise DomainError(f"generation {generation.tolist()} outside [0, {game.cap.tolist()}]")
    zeta = game.market.zeta
    return game.psi * generation + zeta * (game.load - generation) + 0.5 * game.eta ** 2 * theta_d ** 2

# ==============================================================================
# Best Response
# ==============================================================================

def best_response(gamma_i: float, gbar_minus_i: float, s_ii: float, load: float, p_max: float) -> float:
    """
    Net injection minimising a microgrid's cost given everyone else.

    The unconstrained optimum puts the bus angle at gamma_i; the box
    [-load, p_max] clamps it.
    """
    return float(np.clip((gamma_i - gbar_minus_i) / s_ii, -load, p_max))


def best_responses(game: FollowerGame, P_d: np.ndarray, P_g: np.ndarray) -> np.ndarray:
    """best_response of every microgrid against the same profile."""
    gbar = _others_aggregate(game, P_d, P_g)
    return np.clip((game.gamma - gbar) / game.s_dd, -game.load, game.p_max)


def solve_followers_direct(game: FollowerGame, P_g: np.ndarray) -> FollowerSolution:
    """
    Interior follower equilibrium H^-1 q.

    A component outside its box means the equilibrium is not interior; the
    exact clamped fixed point is returned instead and flagged.

    Raises:
        SingularMatrixError: H ill-conditioned, which only bad network data produces
    """
    reduction = follower_reduction(game, P_g)
    cond = condition_number(reduction.H)
    if cond > MAX_CONDITION:
        raise SingularMatrixError(
            f"microgrid coupling matrix H is singular (condition {cond:.3g}); check the network data",
            matrix="H",
            condition=cond,
        )

    P_d = la.solve(reduction.H, reduction.q)
    if _within_box(game, P_d):
        return FollowerSolution(P_d=P_d, interior=True)

    logger.debug("Follower equilibrium is not interior; solving the clamped fixed point")
    P_d, sweeps = _projected_sweeps(game, P_g, np.clip(P_d, -game.load, game.p_max))
    return FollowerSolution(P_d=P_d, interior=False, sweeps=sweeps)


def exact_follower_response(game: FollowerGame, P_g: np.ndarray) -> np.ndarray:
    """Followers' equilibrium response to P_g, interior or not."""
    return solve_followers_direct(game, P_g).P_d


def measure_angles(game: FollowerGame, P_d: np.ndarray, P_g: np.ndarray) -> np.ndarray:
    """True microgrid bus angles, i.e. what a PMU reads."""
    net = game.network
    return net.S_dd @ P_d + net.S_dg @ P_g

# ==============================================================================
# Update Schemes
# ==============================================================================

def iua_step(game: FollowerGame, P_d: np.ndarray, P_g: np.ndarray) -> np.ndarray:
    """Every microgrid best-responds to the current profile at once."""
    return best_responses(game, _vector(P_d, game.n_d, "injection"), P_g)


def rua_step(
    game: FollowerGame,
    P_d: np.ndarray,
    P_g: np.ndarray,
    rng: Optional[SeededRNG] = None,
    mask: Optional[np.ndarray] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """Each microgrid best-responds with probability tau_i, otherwise holds."""
    mask = _draw_mask(game, rng, mask)
    P_d = _vector(P_d, game.n_d, "injection")
    return np.where(mask, best_responses(game, P_d, P_g), P_d), mask


def pda_step(
    game: FollowerGame,
    P_d: np.ndarray,
    theta_d: np.ndarray,
    rng: Optional[SeededRNG] = None,
    mask: Optional[np.ndarray] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Random-activation update that only uses the own bus angle.

    theta_i - s_ii P_i equals the weighted injections of everyone else, so the
    measured angle replaces any knowledge of other players.
    """
    mask = _draw_mask(game, rng, mask)
    P_d = _vector(P_d, game.n_d, "injection")
    theta_d = _vector(theta_d, game.n_d, "angle")
    response = np.clip((game.gamma - theta_d + game.s_dd * P_d) / game.s_dd, -game.load, game.p_max)
    return np.where(mask, response, P_d), mask


def apply_step(
    game: FollowerGame,
    scheme: FollowerScheme,
    P_d: np.ndarray,
    P_g: np.ndarray,
    theta_d: np.ndarray,
    mask: np.ndarray,
) -> np.ndarray:
    """One step of `scheme` with the activation mask already drawn."""
    if scheme == FollowerScheme.IUA:
        return iua_step(game, P_d, P_g)
    if scheme == FollowerScheme.RUA:
        return rua_step(game, P_d, P_g, mask=mask)[0]
    return pda_step(game, P_d, theta_d, mask=mask)[0]


def check_pda_convergence(game: FollowerGame) -> PdaConditionReport:
    """tau_max * max_{i!=j} s_ij/s_ii * (N_d - 1) < tau_min guarantees PDA converges."""
    n_d = game.n_d
    if n_d == 1:
        max_ratio = 0.0
    else:
        ratios = game.H - np.eye(n_d)
        max_ratio = float(ratios.max())

    tau_max = float(game.tau.max())
    tau_min = float(game.tau.min())
    lhs = tau_max * max_ratio * (n_d - 1)
    report = PdaConditionReport(
        lhs=lhs,
        rhs=tau_min,
        max_ratio=max_ratio,
        tau_max=tau_max,
        tau_min=tau_min,
        n_microgrids=n_d,
        satisfied=lhs < tau_min,
    )
    logger.info(
        "PDA condition: %.4f %s %.4f (%s)",
        lhs, "<" if report.satisfied else ">=", tau_min, "satisfied" if report.satisfied else "not satisfied",
    )
    return report


def initial_follower_profile(rng: SeededRNG, game: FollowerGame) -> np.ndarray:
    """Feasible uniform start in [-load, p_max]."""
    return rng.uniform(-game.load, game.p_max)

# ==============================================================================
# Scheme Driver
# ==============================================================================

def run_follower_scheme(
    game: FollowerGame,
    P_g: np.ndarray,
    scheme: FollowerScheme,
    rng: SeededRNG,
    P0: Optional[np.ndarray] = None,
    eps1: float = 1e-3,
    max_steps: int = 10_000,
    noise_std: float = 0.0,
    noise_rng: Optional[SeededRNG] = None,
    phase: str = "response",
) -> FollowerRun:
    """
    Run an update scheme until ||P_d(n+1) - P_d(n)||_inf <= eps1.

    Under random activation the quiet step must also come after every
    microgrid has updated at least once since the last step that moved the
    profile by more than eps1.

    Args:
        game: Follower game
        P_g: Announced generator outputs (MW)
        scheme: IUA, RUA or PDA
        rng: Stream for activation draws (and the start when P0 is None)
        P0: Starting net injections
        eps1: Convergence tolerance (MW)
        max_steps: Step cap; hitting it returns converged=False
        noise_std: PMU noise std (rad), PDA only
        noise_rng: Stream for PMU noise, forked from rng when omitted
        phase: Label stored in every trace row

    Returns:
        FollowerRun with the final profile and the step trace (row 0 is P0)
    """
    P_g = _vector(P_g, game.network.n_g, "generation")
    P = initial_follower_profile(rng, game) if P0 is None else _vector(P0, game.n_d, "injection").copy()
    if noise_std > 0.0 and noise_rng is None:
        noise_rng = rng.fork(1)

    def measure(profile: np.ndarray) -> np.ndarray:
        theta = measure_angles(game, profile, P_g)
        if scheme == FollowerScheme.PDA and noise_std > 0.0:
            theta = theta + noise_rng.normal(noise_std, game.n_d)
        return theta

    theta = measure(P)
    trace = [_record(phase, 0, scheme, P, theta, np.zeros(game.n_d, dtype=bool), None)]
    quiet = np.zeros(game.n_d, dtype=bool)
    all_update = np.ones(game.n_d, dtype=bool)

    for step in range(1, max_steps + 1):
        mask = all_update if scheme == FollowerScheme.IUA else rng.bernoulli(game.tau)
        P_next = apply_step(game, scheme, P, P_g, theta, mask)
        residual = float(np.abs(P_next - P).max())

        if residual > eps1:
            quiet[:] = False
        else:
            quiet |= mask

        P = P_next
        theta = measure(P)
        trace.append(_record(phase, step, scheme, P, theta, mask, residual))
        logger.debug("%s step %d residual %.3g", scheme.value, step, residual)

        if residual <= eps1 and quiet.all():
            return FollowerRun(scheme=scheme, P_d=P, steps=step, converged=True, trace=trace)

    logger.warning("%s did not converge within %d steps", scheme.value.upper(), max_steps)
    return FollowerRun(scheme=scheme, P_d=P, steps=max_steps, converged=False, trace=trace)


def flow_directions(P_d: np.ndarray, tol: float = 1e-6) -> List[FlowDirection]:
    """Positive net injection sells to the grid, negative buys from it."""
    labels = []
    for value in np.asarray(P_d, dtype=float):
        if value > tol:
            labels.append(FlowDirection.SELL)
        elif value < -tol:
            labels.append(FlowDirection.BUY)
        else:
            labels.append(FlowDirection.BALANCED)
    return labels

# ==============================================================================
# Helper Functions
# ==============================================================================

def _others_aggregate(game: FollowerGame, P_d: np.ndarray, P_g: np.ndarray) -> np.ndarray:
    """sum_{j != i} s_ij P_j over every non-slack bus, generators included."""
    net = game.network
    return net.S_dd @ P_d - game.s_dd * P_d + net.S_dg @ P_g


def _projected_sweeps(
    game: FollowerGame, P_g: np.ndarray, P0: np.ndarray, tol: float = 1e-11, max_sweeps: int = 200_000
) -> Tuple[np.ndarray, int]:
    """
    Sequential best responses until nothing moves.

    The follower game has the strictly convex potential
    0.5 P'S_dd P + P'(S_dg P_g - gamma), so this is coordinate descent and
    always converges.
    """
    net = game.network
    P = P0.astype(float).copy()
    base = net.S_dg @ P_g
    for sweep in range(1, max_sweeps + 1):
        change = 0.0
        for i in range(game.n_d):
            gbar = net.S_dd[i] @ P - game.s_dd[i] * P[i] + base[i]
            updated = best_response(game.gamma[i], gbar, game.s_dd[i], game.load[i], game.p_max[i])
            change = max(change, abs(updated - P[i]))
            P[i] = updated
        if change <= tol * max(1.0, float(np.abs(P).max())):
            return P, sweep
    logger.warning("Sequential best response stopped after %d sweeps", max_sweeps)
    return P, max_sweeps


def _within_box(game: FollowerGame, P_d: np.ndarray) -> bool:
    tol = BOUND_TOL * np.maximum(1.0, game.cap)
    return bool(np.all(P_d >= -game.load - tol) and np.all(P_d <= game.p_max + tol))


def _draw_mask(game: FollowerGame, rng: Optional[SeededRNG], mask: Optional[np.ndarray]) -> np.ndarray:
    if mask is not None:
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != (game.n_d,):
            raise DomainError(f"update mask must have length {game.n_d}, got shape {mask.shape}")
        return mask
    if rng is None:
        raise DomainError("random update needs an rng or an explicit mask")
    return rng.bernoulli(game.tau)


def _record(
    phase: str,
    step: int,
    scheme: FollowerScheme,
    P_d: np.ndarray,
    theta_d: np.ndarray,
    mask: np.ndarray,
    residual: Optional[float],
) -> FollowerStepRecord:
    return FollowerStepRecord(
        phase=phase,
        step=step,
        scheme=scheme,
        p_d=P_d.tolist(),
        theta_d=theta_d.tolist(),
        updated_mask=[bool(value) for value in mask],
        residual=residual,
    )


def _vector(values: np.ndarray, n: int, what: str) -> np.ndarray:
    vector = np.asarray(values, dtype=float)
    if vector.shape != (n,):
        raise DomainError(f"{what} vector must have length {n}, got shape {vector.shape}")
    return vector
