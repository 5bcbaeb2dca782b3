# ==============================================================================
# report_writer.py — Run artifact writer
# ==============================================================================
# Purpose: Writes reports, diagnostics and CSV traces to output/ in one
#          deterministic directory per scenario run
# Sections: Imports, Public exports, Public API, Main Classes, Helper Functions
# ==============================================================================

# ==============================================================================
# Imports
# ==============================================================================

# Standard Library -----
from pathlib import Path
from typing import List, Optional, Sequence

# Third Party -----
import pandas as pd

# Grid ----
from app.models.report_models import (
    EquilibriumReport,
    FollowerStepRecord,
    LeaderSweepRecord,
    RunDiagnostics,
)

# ==============================================================================
# Public exports
# ==============================================================================
__all__ = [
    "ReportWriter",
    "run_directory_name",
    "follower_trace_frame",
    "leader_trace_frame",
    "read_follower_trace",
    "read_report",
    "REPORT_FILE",
    "DIAGNOSTICS_FILE",
    "FOLLOWER_TRACE_FILE",
    "LEADER_TRACE_FILE",
    "BUS_SUMMARY_FILE",
]

REPORT_FILE = "report.json"
DIAGNOSTICS_FILE = "diagnostics.json"
FOLLOWER_TRACE_FILE = "follower_trace.csv"
LEADER_TRACE_FILE = "leader_trace.csv"
BUS_SUMMARY_FILE = "buses.csv"

TRACE_EXCLUDE = {"follower_trace", "leader_trace"}

# ==============================================================================
# Public API
# ==============================================================================

def run_directory_name(report: EquilibriumReport) -> str:
    """<scenario>_<follower>_<leader>_seed<seed>: identical runs overwrite identical files."""
    return f"{report.scenario_id}_{report.follower_scheme.value}_{report.leader_scheme.value}_seed{report.seed}"


def follower_trace_frame(trace: Sequence[FollowerStepRecord], buses: Sequence[str]) -> pd.DataFrame:
    """One row per follower step: P_d, measured theta_d and the activation mask per microgrid."""
    rows = []
    for record in trace:
        row = {"phase": record.phase, "step": record.step, "scheme": record.scheme.value}
        row.update({f"p_d_{bus}": value for bus, value in zip(buses, record.p_d)})
        row.update({f"theta_d_{bus}": value for bus, value in zip(buses, record.theta_d)})
        row.update({f"updated_{bus}": flag for bus, flag in zip(buses, record.updated_mask)})
        row["residual"] = record.residual
        rows.append(row)
    return pd.DataFrame(rows, columns=_follower_columns(buses))


def leader_trace_frame(trace: Sequence[LeaderSweepRecord], buses: Sequence[str]) -> pd.DataFrame:
    """One row per Gauss-Seidel sweep: P_g, mu, theta_g per generator."""
    rows = []
    for record in trace:
        row = {"sweep": record.sweep}
        row.update({f"p_g_{bus}": value for bus, value in zip(buses, record.p_g)})
        row.update({f"mu_{bus}": value for bus, value in zip(buses, record.mu)})
        row.update({f"theta_g_{bus}": value for bus, value in zip(buses, record.theta_g)})
        row["pg_change"] = record.pg_change
        row["residual"] = record.residual
        rows.append(row)
    return pd.DataFrame(rows, columns=_leader_columns(buses))


def read_follower_trace(path: Path, buses: Sequence[str]) -> List[FollowerStepRecord]:
    """Read a follower trace CSV back into records with exact floats."""
    frame = pd.read_csv(path, float_precision="round_trip", dtype={"phase": str, "scheme": str})
    records = []
    for row in frame.to_dict(orient="records"):
        residual = row["residual"]
        records.append(FollowerStepRecord(
            phase=row["phase"],
            step=int(row["step"]),
            scheme=row["scheme"],
            p_d=[float(row[f"p_d_{bus}"]) for bus in buses],
            theta_d=[float(row[f"theta_d_{bus}"]) for bus in buses],
            updated_mask=[_as_bool(row[f"updated_{bus}"]) for bus in buses],
            residual=None if pd.isna(residual) else float(residual),
        ))
    return records


def read_report(path: Path) -> EquilibriumReport:
    with open(path, "r", encoding="utf-8") as file:
        return EquilibriumReport.model_validate_json(file.read())

# ==============================================================================
# Main Classes
# ==============================================================================

class ReportWriter:
    """Handles file writing for equilibrium runs."""

    def __init__(self, output_base_dir: Optional[Path] = None):
        """Initialize ReportWriter with optional custom output directory."""
        if output_base_dir is None:
            self.output_base_dir = _get_project_root() / "output"
        else:
            self.output_base_dir = Path(output_base_dir)

        self._ensure_directory_exists(self.output_base_dir)

    def run_directory(self, report: EquilibriumReport) -> Path:
        """Create the deterministic directory of one run."""
        directory = self.output_base_dir / run_directory_name(report)
        self._ensure_directory_exists(directory)
        return directory

    def write_run(
        self,
        report: EquilibriumReport,
        emit_traces: bool = True,
        emit_diagnostics: bool = True,
        emit_plot_data: bool = True,
    ) -> Path:
        """Write report.json plus the optional diagnostics, traces and bus summary."""
        directory = self.run_directory(report)
        self.write_report(directory, report)
        if emit_diagnostics:
            self.write_diagnostics(directory, report)
        if emit_traces:
            self.write_follower_trace(directory, report)
            self.write_leader_trace(directory, report)
        if emit_plot_data:
            self.write_bus_summary(directory, report)
        return directory

    def write_report(self, directory: Path, report: EquilibriumReport, filename: str = REPORT_FILE) -> Path:
        """Equilibrium report without the traces, which go to CSV."""
        file_path = directory / filename

        with open(file_path, "w", encoding="utf-8") as file:
            file.write(report.model_dump_json(indent=2, exclude=TRACE_EXCLUDE))

        return file_path

    def write_diagnostics(self, directory: Path, report: EquilibriumReport, filename: str = DIAGNOSTICS_FILE) -> Path:
        """Convergence conditions, rho(M), cond(W) and T5_tilde."""
        file_path = directory / filename
        diagnostics = RunDiagnostics(
            scenario_id=report.scenario_id,
            status=report.status,
            pda_condition=report.pda_condition,
            leader=report.leader,
            non_interior=report.non_interior,
            outside_regime=report.outside_regime,
            warnings=report.warnings,
        )

        with open(file_path, "w", encoding="utf-8") as file:
            file.write(diagnostics.model_dump_json(indent=2))

        return file_path

    def write_follower_trace(self, directory: Path, report: EquilibriumReport, filename: str = FOLLOWER_TRACE_FILE) -> Path:
        file_path = directory / filename
        frame = follower_trace_frame(report.follower_trace, report.microgrid_buses)
        frame.to_csv(file_path, index=False)
        return file_path

    def write_leader_trace(self, directory: Path, report: EquilibriumReport, filename: str = LEADER_TRACE_FILE) -> Path:
        file_path = directory / filename
        frame = leader_trace_frame(report.leader_trace, report.generator_buses)
        frame.to_csv(file_path, index=False)
        return file_path

    def write_bus_summary(self, directory: Path, report: EquilibriumReport, filename: str = BUS_SUMMARY_FILE) -> Path:
        """Per-bus injection and angle at the equilibrium, for plotting."""
        file_path = directory / filename
        n_d = len(report.microgrid_buses)
        injections = report.p_d_star + report.p_g_star
        frame = pd.DataFrame({
            "bus": report.bus_labels,
            "role": ["microgrid"] * n_d + ["generator"] * len(report.generator_buses),
            "injection_mw": injections,
            "theta_rad": report.theta_star,
            "direction": [d.value for d in report.flow_direction] + ["sell"] * len(report.generator_buses),
        })
        frame.to_csv(file_path, index=False)
        return file_path

    def _ensure_directory_exists(self, directory: Path) -> None:
        """Ensure directory exists, create if necessary."""
        directory.mkdir(parents=True, exist_ok=True)

# ==============================================================================
# Helper Functions
# ==============================================================================

def _follower_columns(buses: Sequence[str]) -> List[str]:
    return (
        ["phase", "step", "scheme"]
        + [f"p_d_{bus}" for bus in buses]
        + [f"theta_d_{bus}" for bus in buses]
        + [f"updated_{bus}" for bus in buses]
        + ["residual"]
    )


def _leader_columns(buses: Sequence[str]) -> List[str]:
    return (
        ["sweep"]
        + [f"p_g_{bus}" for bus in buses]
        + [f"mu_{bus}" for bus in buses]
        + [f"theta_g_{bus}" for bus in buses]
        + ["pg_change", "residual"]
    )


def _as_bool(value) -> bool:
    if isinstance(value, str):
        return value.strip().lower() == "true"
    return bool(value)


def _get_project_root() -> Path:
    return Path(__file__).parent.parent.parent
