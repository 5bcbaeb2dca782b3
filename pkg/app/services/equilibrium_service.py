# ==============================================================================
# equilibrium_service.py — Equilibrium search orchestration
# ==============================================================================
# Purpose: Nested follower / leader search for the Stackelberg equilibrium:
#          followers converge, generators acquire information once, solve
#          their KKT system, announce, followers re-converge
# Sections: Imports, Public exports, Main Classes, Public API, Helper Functions
# ==============================================================================

# ==============================================================================
# Imports
# ==============================================================================

# Standard Library -----
import logging
from pathlib import Path
from typing import List, Optional

# Third Party -----
import numpy as np

# Grid ----
from app.grid.followers import (
    check_pda_convergence,
    flow_directions,
    follower_costs,
    initial_follower_profile,
    run_follower_scheme,
    solve_followers_direct,
)
from app.grid.leaders import (
    acquire_leader_information,
    build_W_b,
    kkt_residuals,
    leader_cost,
    solve_leader,
    spectral_radius_check,
    true_t5_tilde,
)
from app.grid.model import GridModel
from app.grid.network import line_flows, slack_injection
from app.models.report_models import (
    ConvergenceCheck,
    EquilibriumReport,
    LeaderDiagnostics,
    LineFlow,
    RunStatus,
)
from app.models.scenario_models import FollowerScheme, LeaderScheme, ScenarioConfig
from app.services.config_service import config_service
from app.services.verification_service import VERIFY_STREAM, verify_equilibrium
from app.utils.report_writer import ReportWriter
from app.utils.rng import SeededRNG

logger = logging.getLogger(__name__)

# ==============================================================================
# Public exports
# ==============================================================================
__all__ = ["EquilibriumService", "run_algorithm1", "check_convergence", "START_STREAM", "NOISE_STREAM"]

START_STREAM = 0
NOISE_STREAM = 1

# ==============================================================================
# Main Classes
# ==============================================================================

class EquilibriumService:
    """Runs scenarios and writes their artifacts."""

    def __init__(self, output_base_dir: Optional[Path] = None):
        self.writer = ReportWriter(output_base_dir or config_service.output_dir)

    def run(
        self,
        config: ScenarioConfig,
        emit_traces: bool = True,
        emit_diagnostics: bool = True,
        emit_plot_data: bool = True,
    ) -> EquilibriumReport:
        """Search the equilibrium of one scenario and write its run directory."""
        report = run_algorithm1(config)
        directory = self.writer.write_run(
            report, emit_traces=emit_traces, emit_diagnostics=emit_diagnostics, emit_plot_data=emit_plot_data
        )
        logger.info("Run %s written to %s", config.id, directory)
        return report

# ==============================================================================
# Public API
# ==============================================================================

def run_algorithm1(config: ScenarioConfig) -> EquilibriumReport:
    """
    Search the Stackelberg equilibrium of a scenario.

    1. Generators announce the initial generation (zeros unless configured).
    2. Followers run their update scheme from a random feasible start.
    3. Generators acquire gamma or its weighted aggregate once (KPP/KGD/KBA).
    4. Generators solve W X = b: Gauss-Seidel when rho(M) < 1, otherwise directly.
    5. Generators announce P_g*; followers re-converge from where they stopped.
    6. Both equilibrium conditions are sampled when the run converged in regime.

    Non-convergence and cap violations come back as status and flags, not exceptions.
    """
    settings = config.solver
    model = GridModel.from_config(config)
    game = model.game
    net = model.network
    warnings: List[str] = []

    rng = SeededRNG(settings.seed)
    noise_rng = rng.fork(NOISE_STREAM)
    pda_condition = check_pda_convergence(game)
    if settings.follower_scheme == FollowerScheme.PDA and not pda_condition.satisfied:
        warnings.append(
            f"PDA sufficient condition not met: {pda_condition.lhs:.4f} >= {pda_condition.rhs:.4f}"
        )

    # followers answer the first announcement -----
    P_g0 = np.zeros(net.n_g) if settings.initial_generation_mw is None else np.array(settings.initial_generation_mw)
    acquisition = run_follower_scheme(
        game,
        P_g0,
        settings.follower_scheme,
        rng,
        P0=initial_follower_profile(rng.fork(START_STREAM), game),
        eps1=settings.eps1,
        max_steps=settings.max_follower_steps,
        noise_std=settings.noise_std,
        noise_rng=noise_rng,
        phase="acquisition",
    )

    # generators learn what they need, once -----
    transform = model.transform
    theta_g = model.generator_angles(acquisition.P_d, P_g0)
    if settings.noise_std > 0.0:
        theta_g = theta_g + noise_rng.normal(settings.noise_std, net.n_g)
    information = acquire_leader_information(
        settings.leader_scheme,
        game,
        transform,
        P_g0,
        acquisition.P_d,
        theta_g,
        tolerance=1e-6 + 10.0 * settings.eps1,
    )
    warnings.extend(information.warnings)

    # generators solve their KKT system -----
    system = build_W_b(game, model.generators, transform, T5_tilde=information.T5_tilde)
    outcome = solve_leader(system, eps2=settings.eps2, max_iters=settings.max_leader_sweeps)
    solution = outcome.solution
    if outcome.fallback:
        warnings.append(f"rho(M) = {outcome.spectral.rho:.4f} >= 1: solved W X = b directly")
    outside_regime = not solution.caps_ok
    if outside_regime:
        warnings.append(f"generator outputs {solution.P_g.tolist()} outside [0, cap]: outside the interior regime")

    # followers answer P_g* -----
    response = run_follower_scheme(
        game,
        solution.P_g,
        settings.follower_scheme,
        rng,
        P0=acquisition.P_d,
        eps1=settings.eps1,
        max_steps=settings.max_follower_steps,
        noise_std=settings.noise_std,
        noise_rng=noise_rng,
        phase="response",
    )
    non_interior = not solve_followers_direct(game, solution.P_g).interior
    if non_interior:
        warnings.append("follower equilibrium at P_g* has microgrids on their bounds")
        logger.warning("Follower equilibrium at P_g* is not interior")

    status = _status(acquisition.converged, response.converged, outcome)
    P_d = response.P_d
    P_g = solution.P_g
    theta = model.angles(P_d, P_g)
    kkt = kkt_residuals(game, model.generators, transform, solution.X, information.T5_tilde)

    report = EquilibriumReport(
        scenario_id=config.id,
        follower_scheme=settings.follower_scheme,
        leader_scheme=settings.leader_scheme,
        seed=settings.seed,
        status=status,
        bus_labels=list(net.indexing.labels),
        microgrid_buses=list(net.indexing.microgrid_labels),
        generator_buses=list(net.indexing.generator_labels),
        p_d_star=P_d.tolist(),
        p_dg_star=(P_d + game.load).tolist(),
        flow_direction=flow_directions(P_d),
        p_g_star=P_g.tolist(),
        initial_generation_mw=P_g0.tolist(),
        theta_star=theta.tolist(),
        slack_injection_mw=slack_injection(net, model.injections(P_d, P_g)),
        line_flows=[
            LineFlow(from_bus=ends[0], to_bus=ends[1], flow_mw=flow)
            for ends, flow in line_flows(net, theta).items()
        ],
        follower_costs=follower_costs(game, P_d, theta[: net.n_d]).tolist(),
        leader_cost=leader_cost(model.generators, P_g, theta[net.n_d:]),
        acquisition_steps=acquisition.steps,
        response_steps=response.steps,
        leader_sweeps=solution.sweeps,
        pda_condition=pda_condition,
        leader=LeaderDiagnostics(
            scheme=settings.leader_scheme,
            rho_m=outcome.spectral.rho,
            gauss_seidel_converges=outcome.spectral.converges,
            cond_w=system.cond_w,
            t5_tilde=information.T5_tilde.tolist(),
            t5_tilde_true=true_t5_tilde(game, transform).tolist(),
            method=solution.method,
            fallback=outcome.fallback,
            sweeps=solution.sweeps,
            caps_ok=solution.within_caps.tolist(),
            kkt_residual=kkt.max,
            kba_flag=information.flagged and settings.leader_scheme == LeaderScheme.KBA,
            invalid_components=list(information.invalid_components),
        ),
        non_interior=non_interior,
        outside_regime=outside_regime,
        warnings=warnings,
        follower_trace=acquisition.trace + response.trace,
        leader_trace=outcome.gauss_seidel.trace if outcome.gauss_seidel else [],
    )

    if status == RunStatus.CONVERGED and settings.se_samples > 0:
        if outside_regime:
            report.warnings.append("equilibrium verification skipped: leader solution outside the interior regime")
        else:
            report.verification = verify_equilibrium(
                model, P_d, P_g, settings.se_samples, SeededRNG(settings.seed).fork(VERIFY_STREAM)
            )
            if not report.verification.passed:
                report.warnings.append(
                    f"equilibrium verification found {len(report.verification.violations)} violating samples"
                )

    logger.info(
        "%s %s+%s: status=%s P_g*=%s P_d*=%s",
        config.id, settings.follower_scheme.value, settings.leader_scheme.value, status.value,
        np.round(P_g, 3).tolist(), np.round(P_d, 3).tolist(),
    )
    return report

def check_convergence(config: ScenarioConfig) -> ConvergenceCheck:
    """Evaluate the follower and leader convergence conditions without running the search."""
    model = GridModel.from_config(config)
    system = build_W_b(model.game, model.generators, model.transform)
    return ConvergenceCheck(
        scenario_id=config.id,
        pda_condition=check_pda_convergence(model.game),
        spectral=spectral_radius_check(system),
    )

# ==============================================================================
# Helper Functions
# ==============================================================================

def _status(acquisition_converged: bool, response_converged: bool, outcome) -> RunStatus:
    if not (acquisition_converged and response_converged):
        return RunStatus.FOLLOWER_NOT_CONVERGED
    if outcome.gauss_seidel is not None and not outcome.gauss_seidel.converged:
        return RunStatus.LEADER_NOT_CONVERGED
    return RunStatus.CONVERGED
