# ==============================================================================
# network.py — DC power-flow network
# ==============================================================================
# Purpose: Reduced susceptance matrix, its angle map S = -B^-1, bus bookkeeping
#          and the P <-> theta maps of the lossless DC model
# Sections: Imports, Public exports, Main Classes, Public API, Helper Functions
# ==============================================================================

# ==============================================================================
# Imports
# ==============================================================================

# Standard Library -----
import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

# Third Party -----
import numpy as np
import scipy.linalg as la
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

# Grid ----
from app.grid.errors import NetworkValidationError, SingularMatrixError, DomainError
from app.models.network_models import BusRole, NetworkSpec
from app.models.report_models import InvariantCheck

logger = logging.getLogger(__name__)

# ==============================================================================
# Public exports
# ==============================================================================
__all__ = [
    "Branch",
    "BusIndexing",
    "PowerNetwork",
    "InjectionState",
    "MAX_CONDITION",
    "load_network",
    "network_from_susceptance",
    "angles_from_injections",
    "injections_from_angles",
    "evaluate_flow",
    "slack_injection",
    "line_flows",
    "validate_network",
    "condition_number",
]

MAX_CONDITION = 1e12

# ==============================================================================
# Main Classes
# ==============================================================================

@dataclass(frozen=True)
class Branch:
    """Line between two buses with its series susceptance in p.u."""
    from_bus: str
    to_bus: str
    susceptance_pu: float


@dataclass(frozen=True)
class BusIndexing:
    """
    Internal bus order: microgrids occupy 0..n_d-1, generators n_d..n-1.

    The slack bus is excluded from every matrix; `labels` keeps the original
    bus ids in internal order.
    """
    n_d: int
    n_g: int
    labels: Tuple[str, ...]
    slack_label: str = "slack"

    def __post_init__(self) -> None:
        if self.n_d < 1 or self.n_g < 1:
            raise NetworkValidationError(
                f"need at least one microgrid and one generator bus, got n_d={self.n_d}, n_g={self.n_g}"
            )
        if len(self.labels) != self.n:
            raise NetworkValidationError(f"expected {self.n} bus labels, got {len(self.labels)}")
        if len(set(self.labels)) != len(self.labels) or self.slack_label in self.labels:
            raise NetworkValidationError("bus labels must be unique and exclude the slack bus")

    @property
    def n(self) -> int:
        return self.n_d + self.n_g

    @property
    def microgrids(self) -> slice:
        return slice(0, self.n_d)

    @property
    def generators(self) -> slice:
        return slice(self.n_d, self.n)

    @property
    def microgrid_labels(self) -> Tuple[str, ...]:
        return self.labels[: self.n_d]

    @property
    def generator_labels(self) -> Tuple[str, ...]:
        return self.labels[self.n_d:]

    def position(self, label: str) -> int:
        """Internal index of a bus id; the slack has none."""
        try:
            return self.labels.index(str(label))
        except ValueError:
            raise KeyError(f"bus {label} is not a non-slack bus of this network") from None


@dataclass(frozen=True, eq=False)
class PowerNetwork:
    """
    Immutable DC network in internal bus order.

    Units
    -----
    - B: MW/rad, the p.u. reduced susceptance scaled by base_mva
    - S = -B^-1: rad/MW
    - loads_mw: MW per non-slack bus
    """
    name: str
    indexing: BusIndexing
    B: np.ndarray
    S: np.ndarray
    loads_mw: np.ndarray
    branches: Tuple[Branch, ...] = ()
    base_mva: float = 1.0

    @property
    def n(self) -> int:
        return self.indexing.n

    @property
    def n_d(self) -> int:
        return self.indexing.n_d

    @property
    def n_g(self) -> int:
        return self.indexing.n_g

    # block views of B -----
    @property
    def B1(self) -> np.ndarray:
        return self.B[: self.n_d, : self.n_d]

    @property
    def B2(self) -> np.ndarray:
        return self.B[: self.n_d, self.n_d:]

    @property
    def B3(self) -> np.ndarray:
        return self.B[self.n_d:, : self.n_d]

    @property
    def B4(self) -> np.ndarray:
        return self.B[self.n_d:, self.n_d:]

    # block views of S -----
    @property
    def S_dd(self) -> np.ndarray:
        return self.S[: self.n_d, : self.n_d]

    @property
    def S_dg(self) -> np.ndarray:
        return self.S[: self.n_d, self.n_d:]

    @property
    def S_gd(self) -> np.ndarray:
        return self.S[self.n_d:, : self.n_d]

    @property
    def S_gg(self) -> np.ndarray:
        return self.S[self.n_d:, self.n_d:]


@dataclass(frozen=True, eq=False)
class InjectionState:
    """Net injections P (MW) with the angles theta = S P (rad) they produce."""
    P: np.ndarray
    theta: np.ndarray

# ==============================================================================
# Public API
# ==============================================================================

def load_network(spec: NetworkSpec, strict: bool = True) -> PowerNetwork:
    """
    Build the reduced DC network from a parsed network description.

    Args:
        spec: Buses, slack designation and branch reactances
        strict: Raise when a structural check of S fails instead of leaving it
            for validate_network to report

    Returns:
        PowerNetwork with microgrid buses first, then generator buses

    Raises:
        NetworkValidationError: missing slack, wrong bus roles, loads on generator buses
        SingularMatrixError: disconnected graph or ill-conditioned B
    """
    slack = spec.slack_bus
    if slack is None:
        raise NetworkValidationError("network has no slack bus")
    slack_bus = spec.bus(slack)
    if slack_bus is None:
        raise NetworkValidationError(f"slack bus {slack} is not a listed bus")
    if slack_bus.role != BusRole.SLACK:
        raise NetworkValidationError(f"slack bus {slack} has role {slack_bus.role.value}")

    microgrids = [bus for bus in spec.buses if bus.role == BusRole.MICROGRID]
    generators = [bus for bus in spec.buses if bus.role == BusRole.GENERATOR]
    for bus in generators:
        if bus.load_mw != 0.0:
            raise NetworkValidationError(f"generator bus {bus.id} carries a load of {bus.load_mw} MW")

    indexing = BusIndexing(
        n_d=len(microgrids),
        n_g=len(generators),
        labels=tuple(bus.id for bus in microgrids + generators),
        slack_label=slack,
    )
    branches = tuple(
        Branch(branch.from_bus, branch.to_bus, 1.0 / branch.reactance_pu) for branch in spec.branches
    )

    _check_connected(indexing, branches)

    laplacian = _full_laplacian(indexing, branches)
    B = -laplacian[: indexing.n, : indexing.n] * spec.base_mva
    loads = np.array([bus.load_mw for bus in microgrids + generators], dtype=float)

    net = _assemble(spec.name, indexing, B, loads, branches, spec.base_mva)
    if strict:
        _raise_on_failed_checks(net)

    logger.debug("Loaded network %s: n_d=%d n_g=%d slack=%s", spec.name, net.n_d, net.n_g, slack)
    return net


def network_from_susceptance(
    B: np.ndarray,
    n_d: int,
    n_g: int,
    labels: Optional[Sequence[str]] = None,
    loads_mw: Optional[Sequence[float]] = None,
    name: str = "network",
    strict: bool = True,
) -> PowerNetwork:
    """Wrap an already reduced susceptance matrix (MW/rad, microgrids first)."""
    B = np.array(B, dtype=float)
    if B.ndim != 2 or B.shape[0] != B.shape[1]:
        raise NetworkValidationError(f"susceptance matrix must be square, got shape {B.shape}")
    if B.shape[0] != n_d + n_g:
        raise NetworkValidationError(f"susceptance matrix is {B.shape[0]}x{B.shape[0]}, expected n_d + n_g = {n_d + n_g}")
    scale = max(1.0, float(np.abs(B).max()))
    if np.abs(B - B.T).max() > 1e-10 * scale:
        raise NetworkValidationError("susceptance matrix is not symmetric")

    if labels is None:
        labels = [str(i + 1) for i in range(n_d + n_g)]
    indexing = BusIndexing(n_d=n_d, n_g=n_g, labels=tuple(str(label) for label in labels))
    loads = np.zeros(n_d + n_g) if loads_mw is None else np.array(loads_mw, dtype=float)
    if loads.shape != (n_d + n_g,):
        raise DomainError(f"loads must have length {n_d + n_g}, got {loads.shape}")

    net = _assemble(name, indexing, B, loads, (), 1.0)
    if strict:
        _raise_on_failed_checks(net)
    return net


def angles_from_injections(net: PowerNetwork, P: np.ndarray) -> np.ndarray:
    """theta = S P for non-slack injections P (MW)."""
    P = _as_vector(P, net.n, "injection")
    return net.S @ P


def injections_from_angles(net: PowerNetwork, theta: np.ndarray) -> np.ndarray:
    """P = -B theta for non-slack angles theta (rad)."""
    theta = _as_vector(theta, net.n, "angle")
    return -net.B @ theta


def evaluate_flow(net: PowerNetwork, P: np.ndarray) -> InjectionState:
    P = _as_vector(P, net.n, "injection")
    return InjectionState(P=P, theta=net.S @ P)


def slack_injection(net: PowerNetwork, P: np.ndarray) -> float:
    """The slack absorbs the system imbalance of the lossless model."""
    P = _as_vector(P, net.n, "injection")
    return float(-P.sum())


def line_flows(net: PowerNetwork, theta: np.ndarray) -> Dict[Tuple[str, str], float]:
    """Branch flows in MW from `from_bus` to `to_bus`, slack angle fixed at 0."""
    theta = _as_vector(theta, net.n, "angle")
    angle = dict(zip(net.indexing.labels, theta.tolist()))
    angle[net.indexing.slack_label] = 0.0

    flows: Dict[Tuple[str, str], float] = {}
    for branch in net.branches:
        delta = angle[branch.from_bus] - angle[branch.to_bus]
        flows[(branch.from_bus, branch.to_bus)] = branch.susceptance_pu * net.base_mva * delta
    return flows


def validate_network(net: PowerNetwork) -> List[InvariantCheck]:
    """Structural checks of B and S with their residuals."""
    checks: List[InvariantCheck] = []
    laplacian = -net.B
    scale_b = max(1.0, float(np.abs(laplacian).max()))
    scale_s = max(1e-300, float(np.abs(net.S).max()))

    if net.branches:
        min_b = min(branch.susceptance_pu for branch in net.branches)
        checks.append(InvariantCheck(
            name="branch susceptances positive",
            passed=min_b > 0.0,
            residual=min_b,
            detail="every line needs a positive reactance",
        ))

    off_diag = laplacian - np.diag(np.diag(laplacian))
    row_sums = laplacian.sum(axis=1)
    violation = max(
        float(np.abs(laplacian - laplacian.T).max()) / scale_b,
        float(max(off_diag.max(), 0.0)) / scale_b,
        float(max(-row_sums.min(), 0.0)) / scale_b,
        float(max(-np.diag(laplacian).min(), 0.0)) / scale_b,
    )
    checks.append(InvariantCheck(
        name="-B is a reduced Laplacian",
        passed=violation <= 1e-10,
        residual=violation,
        tolerance=1e-10,
        detail="symmetric, nonpositive off-diagonals, nonnegative row sums",
    ))

    asym = float(np.abs(net.S - net.S.T).max()) / scale_s
    checks.append(InvariantCheck(name="S symmetric", passed=asym <= 1e-10, residual=asym, tolerance=1e-10))

    min_entry = float(net.S.min()) / scale_s
    checks.append(InvariantCheck(
        name="S nonnegative", passed=min_entry >= -1e-12, residual=min_entry, tolerance=1e-12,
    ))

    min_diag = float(np.diag(net.S).min())
    checks.append(InvariantCheck(name="S positive diagonal", passed=min_diag > 0.0, residual=min_diag))

    round_trip = float(np.abs(laplacian @ net.S - np.eye(net.n)).max())
    checks.append(InvariantCheck(
        name="angle round trip", passed=round_trip <= 1e-9, residual=round_trip, tolerance=1e-9,
    ))
    return checks


def condition_number(matrix: np.ndarray) -> float:
    """2-norm condition number, inf for singular input."""
    with np.errstate(all="ignore"):
        value = float(np.linalg.cond(matrix))
    return value if np.isfinite(value) else float("inf")

# ==============================================================================
# Helper Functions
# ==============================================================================

def _assemble(
    name: str,
    indexing: BusIndexing,
    B: np.ndarray,
    loads: np.ndarray,
    branches: Tuple[Branch, ...],
    base_mva: float,
) -> PowerNetwork:
    cond = condition_number(B)
    if cond > MAX_CONDITION:
        raise SingularMatrixError(
            f"reduced susceptance matrix is singular (condition {cond:.3g})", matrix="B", condition=cond
        )
    try:
        # -B is positive definite whenever every branch susceptance is positive
        S = la.cho_solve(la.cho_factor(-B), np.eye(B.shape[0]))
    except la.LinAlgError:
        logger.warning("%s: -B is not positive definite; inverting with LU", name)
        try:
            S = -la.inv(B)
        except la.LinAlgError as e:
            raise SingularMatrixError(f"reduced susceptance matrix is singular: {e}", matrix="B") from e

    # symmetrise away round-off so S is exactly symmetric
    S = 0.5 * (S + S.T)
    for array in (B, S, loads):
        array.setflags(write=False)
    return PowerNetwork(
        name=name, indexing=indexing, B=B, S=S, loads_mw=loads, branches=branches, base_mva=base_mva,
    )


def _full_laplacian(indexing: BusIndexing, branches: Tuple[Branch, ...]) -> np.ndarray:
    """Laplacian over every bus, slack in the last row and column."""
    position = {label: i for i, label in enumerate(indexing.labels)}
    position[indexing.slack_label] = indexing.n

    laplacian = np.zeros((indexing.n + 1, indexing.n + 1))
    for branch in branches:
        i, j = position[branch.from_bus], position[branch.to_bus]
        laplacian[i, i] += branch.susceptance_pu
        laplacian[j, j] += branch.susceptance_pu
        laplacian[i, j] -= branch.susceptance_pu
        laplacian[j, i] -= branch.susceptance_pu
    return laplacian


def _check_connected(indexing: BusIndexing, branches: Tuple[Branch, ...]) -> None:
    labels = list(indexing.labels) + [indexing.slack_label]
    position = {label: i for i, label in enumerate(labels)}
    rows = [position[branch.from_bus] for branch in branches]
    cols = [position[branch.to_bus] for branch in branches]
    adjacency = coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(len(labels), len(labels)))

    n_components, component = connected_components(adjacency, directed=False)
    if n_components > 1:
        slack_component = component[-1]
        stranded = [label for label, c in zip(labels, component) if c != slack_component]
        raise SingularMatrixError(
            f"network is disconnected: buses {', '.join(stranded)} cannot reach slack {indexing.slack_label}",
            matrix="B",
        )


def _raise_on_failed_checks(net: PowerNetwork) -> None:
    failed = [check for check in validate_network(net) if not check.passed]
    if failed:
        details = "; ".join(f"{check.name} (residual {check.residual:.3g})" for check in failed)
        raise NetworkValidationError(f"network {net.name} fails structural checks: {details}")


def _as_vector(values: np.ndarray, n: int, what: str) -> np.ndarray:
    vector = np.asarray(values, dtype=float)
    if vector.shape != (n,):
        raise DomainError(f"{what} vector must have length {n}, got shape {vector.shape}")
    return vector
