# ==============================================================================
# batch_service.py — Batch scenario runner
# ==============================================================================
# Purpose: Run independent scenarios in worker processes, one output
#          directory per scenario
# Sections: Imports, Public exports, Public API, Helper Functions
# ==============================================================================

# ==============================================================================
# Imports
# ==============================================================================

# Standard Library -----
import logging
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import List, Sequence

# Grid ----
from app.grid.errors import GridGameError
from app.models.report_models import BatchItemResult
from app.models.scenario_models import ScenarioConfig
from app.services.equilibrium_service import EquilibriumService

logger = logging.getLogger(__name__)

# ==============================================================================
# Public exports
# ==============================================================================
__all__ = ["run_batch"]

# ==============================================================================
# Public API
# ==============================================================================

def run_batch(
    configs: Sequence[ScenarioConfig],
    output_dir: Path,
    workers: int = 1,
    emit_traces: bool = True,
    emit_diagnostics: bool = True,
    emit_plot_data: bool = True,
) -> List[BatchItemResult]:
    """
    Run every scenario and write its artifacts; results keep the input order.

    Scenarios share nothing mutable, so with workers > 1 they run in separate
    processes.
    """
    flags = (emit_traces, emit_diagnostics, emit_plot_data)
    if workers <= 1 or len(configs) <= 1:
        return [_run_one(config, output_dir, flags) for config in configs]

    logger.info("Running %d scenarios on %d workers", len(configs), workers)
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(_run_one, config, output_dir, flags) for config in configs]
        return [future.result() for future in futures]

# ==============================================================================
# Helper Functions
# ==============================================================================

def _run_one(config: ScenarioConfig, output_dir: Path, flags) -> BatchItemResult:
    emit_traces, emit_diagnostics, emit_plot_data = flags
    service = EquilibriumService(output_dir)
    try:
        report = service.run(
            config, emit_traces=emit_traces, emit_diagnostics=emit_diagnostics, emit_plot_data=emit_plot_data
        )
    except GridGameError as e:
        logger.error("Scenario %s failed: %s", config.id, e)
        return BatchItemResult(scenario_id=config.id, error=str(e))

    return BatchItemResult(
        scenario_id=config.id,
        status=report.status,
        directory=str(service.writer.run_directory(report)),
    )
