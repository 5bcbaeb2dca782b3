# ==============================================================================
# cli.py — Command-line harness
# ==============================================================================
# Purpose: Run, check, validate and cross-check equilibrium scenarios from
#          the shell; exit codes are stable for scripting
# Sections: Imports, Public exports, Constants, Public API, Commands,
#           Helper Functions
# ==============================================================================

# ==============================================================================
# Imports
# ==============================================================================

# Standard Library -----
import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional, Sequence

# Third Party -----
import numpy as np
from pydantic import ValidationError

# Grid ----
from app.grid.errors import GridGameError, ScenarioError
from app.grid.followers import solve_followers_direct
from app.grid.model import GridModel
from app.models.report_models import RunStatus
from app.models.scenario_models import (
    SCHEME_PROFILES,
    FollowerScheme,
    LeaderScheme,
    RunManifest,
    ScenarioConfig,
)
from app.services.batch_service import run_batch
from app.services.config_service import config_service
from app.services.equilibrium_service import check_convergence
from app.services.verification_service import (
    brute_force_follower_nash,
    replay_follower_trace,
    validate_scenario,
)
from app.utils.report_writer import REPORT_FILE, read_follower_trace, read_report

logger = logging.getLogger(__name__)

# ==============================================================================
# Public exports
# ==============================================================================
__all__ = ["main", "build_parser", "EXIT_OK", "EXIT_NOT_CONVERGED", "EXIT_INVALID_INPUT"]

# ==============================================================================
# Constants
# ==============================================================================

EXIT_OK = 0
EXIT_NOT_CONVERGED = 2
EXIT_INVALID_INPUT = 3

# ==============================================================================
# Public API
# ==============================================================================

def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    config_service.configure_logging(args.log_level)

    try:
        return args.handler(args)
    except ScenarioError as e:
        print(f"❌ {e}")
        return EXIT_INVALID_INPUT
    except ValidationError as e:
        print(f"❌ Invalid arguments: {e}")
        return EXIT_INVALID_INPUT
    except (GridGameError, FileNotFoundError) as e:
        print(f"❌ {type(e).__name__}: {e}")
        return EXIT_INVALID_INPUT


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="microgrid-stackelberg",
        description="Stackelberg equilibrium between grid generators and microgrids under DC power flow.",
        epilog=_schemes_table(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--log-level", default=None, help="Overrides LOG_LEVEL (DEBUG, INFO, WARNING, ...)")
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser("run", help="Search the equilibrium and write report, diagnostics and traces")
    _add_scenario_argument(run, multiple=True)
    _add_solver_arguments(run)
    run.add_argument("--out", type=Path, default=None, help="Output directory (default: OUTPUT_DIR)")
    run.add_argument("--workers", type=int, default=None, help="Worker processes for several scenarios")
    run.add_argument("--no-traces", action="store_true", help="Skip the follower/leader trace CSVs")
    run.add_argument("--no-diagnostics", action="store_true", help="Skip diagnostics.json")
    run.add_argument("--no-plot-data", action="store_true", help="Skip the per-bus summary CSV")
    run.set_defaults(handler=_cmd_run)

    check = commands.add_parser("check", help="Evaluate both convergence conditions without solving")
    _add_scenario_argument(check, multiple=True)
    check.set_defaults(handler=_cmd_check)

    validate = commands.add_parser("validate", help="Run the structural network and leader-system checks")
    _add_scenario_argument(validate, multiple=True)
    validate.set_defaults(handler=_cmd_validate)

    oracle = commands.add_parser("oracle", help="Compare the follower equilibrium with a brute-force search")
    _add_scenario_argument(oracle)
    oracle.add_argument("--pg", type=float, nargs="+", default=None, help="Generator outputs in MW (default: initial generation)")
    oracle.add_argument("--grid-step", type=float, default=0.01, help="Brute-force generation step in MW")
    oracle.add_argument("--tolerance", type=float, default=0.05, help="Accepted gap in MW")
    oracle.set_defaults(handler=_cmd_oracle)

    replay = commands.add_parser("replay", help="Re-execute a follower trace and compare it bit for bit")
    _add_scenario_argument(replay)
    replay.add_argument("--trace", type=Path, required=True, help="follower_trace.csv of a previous run")
    replay.set_defaults(handler=_cmd_replay)

    schemes = commands.add_parser("schemes", help="Print the trade-offs of each scheme pairing")
    schemes.set_defaults(handler=_cmd_schemes)

    return parser

# ==============================================================================
# Commands
# ==============================================================================

def _cmd_run(args: argparse.Namespace) -> int:
    manifest = RunManifest(
        scenarios=args.scenario,
        output_dir=args.out or config_service.output_dir,
        follower_scheme=args.follower,
        leader_scheme=args.leader,
        seed=args.seed,
        eps1=args.eps1,
        eps2=args.eps2,
        max_iters=args.max_iters,
        noise_std=args.noise_std,
        emit_traces=not args.no_traces,
        emit_diagnostics=not args.no_diagnostics,
        emit_plot_data=not args.no_plot_data,
        workers=args.workers or config_service.batch_workers,
    )
    configs = [_load_config(scenario, manifest) for scenario in manifest.scenarios]

    print(f"🚀 Running {len(configs)} scenario(s) into {manifest.output_dir}")
    results = run_batch(
        configs,
        manifest.output_dir,
        workers=manifest.workers,
        emit_traces=manifest.emit_traces,
        emit_diagnostics=manifest.emit_diagnostics,
        emit_plot_data=manifest.emit_plot_data,
    )

    exit_code = EXIT_OK
    for result in results:
        if result.error is not None:
            print(f"❌ {result.scenario_id}: {result.error}")
            exit_code = EXIT_INVALID_INPUT
            continue

        report = read_report(Path(result.directory) / REPORT_FILE)
        marker = "✅" if result.status == RunStatus.CONVERGED else "❌"
        print(
            f"{marker} {report.scenario_id} [{report.follower_scheme.value}+{report.leader_scheme.value}] "
            f"{report.status.value}: P_g*={_fmt(report.p_g_star)} P_d*={_fmt(report.p_d_star)} "
            f"({report.acquisition_steps}+{report.response_steps} follower steps, {report.leader_sweeps} sweeps)"
        )
        for warning in report.warnings:
            print(f"   ⚠️  {warning}")
        if result.status != RunStatus.CONVERGED and exit_code == EXIT_OK:
            exit_code = EXIT_NOT_CONVERGED

    return exit_code


def _cmd_check(args: argparse.Namespace) -> int:
    exit_code = EXIT_OK
    for scenario in args.scenario:
        check = check_convergence(config_service.load_scenario(scenario))
        pda = check.pda_condition
        spectral = check.spectral
        pda_text = (
            f"{pda.lhs:.3f} < {pda.rhs:.3f}: PDA condition satisfied"
            if pda.satisfied
            else f"{pda.lhs:.3f} >= {pda.rhs:.3f}: PDA condition not satisfied"
        )
        rho_text = f"rho(M)={spectral.rho:.3f} {'<' if spectral.converges else '>='} 1"
        marker = "✅" if check.satisfied else "❌"
        print(f"{marker} {check.scenario_id}: {pda_text}; {rho_text}")
        if not check.satisfied:
            exit_code = EXIT_NOT_CONVERGED
    return exit_code


def _cmd_validate(args: argparse.Namespace) -> int:
    exit_code = EXIT_OK
    for scenario in args.scenario:
        report = validate_scenario(config_service.load_scenario(scenario))
        print(f"{'✅' if report.valid else '❌'} {report.scenario_id}")
        for group, checks in report.by_group().items():
            passed = all(check.passed for check in checks)
            print(f"   {'✅' if passed else '❌'} {group}: {'pass' if passed else 'fail'}")
            for check in checks:
                residual = "" if check.residual is None else f" (residual {check.residual:.3g})"
                print(f"      {'✅' if check.passed else '❌'} {check.name}{residual}")
        for error in report.errors:
            print(f"   ❌ {error}")
        if not report.valid:
            exit_code = EXIT_INVALID_INPUT
    return exit_code


def _cmd_oracle(args: argparse.Namespace) -> int:
    config = config_service.load_scenario(args.scenario)
    model = GridModel.from_config(config)
    P_g = _announcement(config, model, args.pg)

    direct = solve_followers_direct(model.game, P_g).P_d
    brute, settled = brute_force_follower_nash(model, P_g, grid_step=args.grid_step)
    gap = float(np.abs(direct - brute).max())

    print(f"P_g = {_fmt(P_g)}")
    print(f"closed form  P_d = {_fmt(direct)}")
    print(f"brute force  P_d = {_fmt(brute)}{'' if settled else ' (not settled)'}")
    if settled and gap <= args.tolerance:
        print(f"✅ max gap {gap:.4g} MW <= {args.tolerance} MW")
        return EXIT_OK
    print(f"❌ max gap {gap:.4g} MW > {args.tolerance} MW")
    return EXIT_NOT_CONVERGED


def _cmd_replay(args: argparse.Namespace) -> int:
    config = config_service.load_scenario(args.scenario)
    report_path = args.trace.parent / REPORT_FILE
    if not args.trace.exists():
        raise FileNotFoundError(f"Trace not found at {args.trace}")
    if not report_path.exists():
        raise FileNotFoundError(f"{REPORT_FILE} not found next to {args.trace}")

    report = read_report(report_path)
    trace = read_follower_trace(args.trace, report.microgrid_buses)
    announcements = {"acquisition": report.initial_generation_mw, "response": report.p_g_star}
    mismatches = replay_follower_trace(trace, config, announcements)

    if not mismatches:
        print(f"✅ {len(trace)} trace rows replay exactly")
        return EXIT_OK
    for mismatch in mismatches:
        print(f"❌ {mismatch}")
    return EXIT_NOT_CONVERGED


def _cmd_schemes(args: argparse.Namespace) -> int:
    print(_schemes_table())
    return EXIT_OK

# ==============================================================================
# Helper Functions
# ==============================================================================

def _add_scenario_argument(parser: argparse.ArgumentParser, multiple: bool = False) -> None:
    parser.add_argument(
        "--scenario",
        required=True,
        action="append" if multiple else "store",
        help="Registered scenario id or path to a scenario YAML" + (" (repeatable)" if multiple else ""),
    )


def _add_solver_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--follower", type=FollowerScheme, choices=list(FollowerScheme), default=None, metavar="{iua,rua,pda}")
    parser.add_argument("--leader", type=LeaderScheme, choices=list(LeaderScheme), default=None, metavar="{kpp,kgd,kba}")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--eps1", type=float, default=None, help="Follower tolerance in MW")
    parser.add_argument("--eps2", type=float, default=None, help="Leader tolerance in MW")
    parser.add_argument("--max-iters", type=int, default=None, help="Cap on follower steps and leader sweeps")
    parser.add_argument("--noise-std", type=float, default=None, help="Angle measurement noise, rad")


def _load_config(scenario: str, manifest: RunManifest) -> ScenarioConfig:
    config = config_service.load_scenario(scenario)
    if manifest.seed is None and "seed" not in config.solver.model_fields_set:
        config = config.with_overrides(seed=config_service.default_seed)
    return config.with_overrides(**manifest.overrides)


def _announcement(config: ScenarioConfig, model: GridModel, values: Optional[List[float]]) -> np.ndarray:
    if values is None:
        values = config.solver.initial_generation_mw
    if values is None:
        return np.zeros(model.network.n_g)
    if len(values) != model.network.n_g:
        raise ScenarioError(f"--pg expects {model.network.n_g} values, got {len(values)}")
    return np.array(values, dtype=float)


def _schemes_table() -> str:
    header = f"{'follower & leader':<20}{'communication':<16}{'privacy':<14}{'efficiency':<12}"
    rows = [
        f"{profile.follower_scheme.value.upper() + ' & ' + profile.leader_scheme.value.upper():<20}"
        f"{profile.communication_cost:<16}{profile.privacy_level:<14}{profile.update_efficiency:<12}"
        for profile in SCHEME_PROFILES
    ]
    return "\n".join(["scheme pairings:", header] + rows)


def _fmt(values) -> str:
    return "[" + ", ".join(f"{float(v):.3f}" for v in values) + "]"


if __name__ == "__main__":
    sys.exit(main())
