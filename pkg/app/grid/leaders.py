# ==============================================================================
# leaders.py — Generator-side equilibrium-constrained problem
# ==============================================================================
# Purpose: Reduce the leaders' problem to the linear KKT system W X = b with
#          X = [P_g, mu, theta_g], solve it by Gauss-Seidel or directly, and
#          acquire the microgrid information the system needs (KPP/KGD/KBA)
# Sections: Imports, Public exports, Main Classes, Assembly, Solvers,
#           Information Schemes, Costs and Residuals, Helper Functions
# ==============================================================================

# ==============================================================================
# Imports
# ==============================================================================

# Standard Library -----
import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

# Third Party -----
import numpy as np
import scipy.linalg as la

# Grid ----
from app.grid.errors import DomainError, SingularMatrixError, StructuralError
from app.grid.followers import BOUND_TOL, FollowerGame
from app.grid.network import MAX_CONDITION, condition_number
from app.models.game_models import GeneratorParams
from app.models.report_models import LeaderSweepRecord, SpectralReport
from app.models.scenario_models import LeaderScheme

logger = logging.getLogger(__name__)

# ==============================================================================
# Public exports
# ==============================================================================
__all__ = [
    "LeaderTransform",
    "LeaderSystem",
    "LeaderSolution",
    "GaussSeidelResult",
    "LeaderInformation",
    "LeaderOutcome",
    "KKTResiduals",
    "order_generators",
    "build_T",
    "build_W_b",
    "gauss_seidel_sweep",
    "gauss_seidel_solve",
    "spectral_radius",
    "spectral_radius_check",
    "direct_solve",
    "solve_leader",
    "kpp_acquire",
    "kgd_acquire",
    "kba_infer",
    "true_t5_tilde",
    "acquire_leader_information",
    "generator_cost",
    "leader_cost",
    "kkt_residuals",
    "row_scaled_condition",
]

EIGVALS_MAX_DIM = 300

# ==============================================================================
# Main Classes
# ==============================================================================

@dataclass(frozen=True, eq=False)
class LeaderTransform:
    """
    Generator injections as seen through the network with followers at an
    interior equilibrium:  P_g = T1 theta_g + T2 q.

    T1 = B3 B1^-1 B2 - B4 is the Schur complement of the microgrid block of -B;
    T2 = B3 B1^-1 H^-1.
    """
    T1: np.ndarray
    T2: np.ndarray


@dataclass(frozen=True, eq=False)
class LeaderSystem:
    """
    Block KKT system  W X = b,  X = [P_g, mu, theta_g].

        W = [[A1,     T3 - I, 0 ],
             [0,      T1',    A2],
             [T4 - I, 0,      T1]]
        b = [-b_coef, 0, T5]

    T4 = -T2 G, T3 = T4', and T5 = -T2 (gamma / s_dd) = -T5_tilde.
    """
    n_g: int
    T1: np.ndarray
    T2: np.ndarray
    T3: np.ndarray
    T4: np.ndarray
    T5: np.ndarray
    A1: np.ndarray
    A2: np.ndarray
    W: np.ndarray
    b_vec: np.ndarray
    D: np.ndarray
    M: np.ndarray
    b_coef: np.ndarray
    caps: np.ndarray
    cond_w: float

    @property
    def T5_tilde(self) -> np.ndarray:
        return -self.T5

    def split(self, X: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """X -> (P_g, mu, theta_g)"""
        n = self.n_g
        return X[:n], X[n: 2 * n], X[2 * n:]


@dataclass(frozen=True, eq=False)
class LeaderSolution:
    P_g: np.ndarray
    mu: np.ndarray
    theta_g: np.ndarray
    within_caps: np.ndarray
    method: str = "direct"
    sweeps: int = 0

    @property
    def X(self) -> np.ndarray:
        return np.concatenate([self.P_g, self.mu, self.theta_g])

    @property
    def caps_ok(self) -> bool:
        return bool(self.within_caps.all())


@dataclass(eq=False)
class GaussSeidelResult:
    X: np.ndarray
    sweeps: int
    status: str  # "converged", "max_iterations" or "diverged"
    trace: List[LeaderSweepRecord] = field(default_factory=list)

    @property
    def converged(self) -> bool:
        return self.status == "converged"


@dataclass(frozen=True, eq=False)
class LeaderInformation:
    """What the generators learned about the microgrids."""
    scheme: LeaderScheme
    T5_tilde: np.ndarray
    gamma: Optional[np.ndarray] = None
    flagged: bool = False
    invalid_components: Tuple[int, ...] = ()
    warnings: Tuple[str, ...] = ()


@dataclass(eq=False)
class LeaderOutcome:
    solution: LeaderSolution
    spectral: SpectralReport
    gauss_seidel: Optional[GaussSeidelResult]
    fallback: bool


@dataclass(frozen=True)
class KKTResiduals:
    """Infinity norms of the stationarity and constraint residuals."""
    stationarity_p: float
    stationarity_theta: float
    constraint: float

    @property
    def max(self) -> float:
        return max(self.stationarity_p, self.stationarity_theta, self.constraint)

# ==============================================================================
# Assembly
# ==============================================================================

def order_generators(game: FollowerGame, generators: Sequence[GeneratorParams]) -> Tuple[GeneratorParams, ...]:
    """Generator parameters in the network's internal order."""
    by_bus = {g.bus: g for g in generators}
    labels = game.network.indexing.generator_labels
    if len(by_bus) != len(generators) or set(by_bus) != set(labels):
        raise DomainError(
            f"generator parameters for buses {sorted(by_bus)} do not match generator buses {sorted(labels)}"
        )
    return tuple(by_bus[label] for label in labels)


def build_T(game: FollowerGame) -> LeaderTransform:
    """
    Eliminate the microgrid angles from the generator power balance.

    Raises:
        SingularMatrixError: B1 or H cannot be factorised
        StructuralError: T1 has a non-positive diagonal entry
    """
    net = game.network
    for name, matrix in (("B1", net.B1), ("H", game.H)):
        cond = condition_number(matrix)
        if cond > MAX_CONDITION:
            raise SingularMatrixError(f"{name} is singular (condition {cond:.3g})", matrix=name, condition=cond)

    # K = B3 B1^-1, via B1' K' = B3'
    K = la.solve(net.B1.T, net.B3.T).T
    T1 = K @ net.B2 - net.B4
    T2 = la.solve(game.H.T, K.T).T

    if np.any(np.diag(T1) <= 0.0):
        raise StructuralError(f"T1 has a non-positive diagonal: {np.diag(T1).tolist()}")
    return LeaderTransform(T1=T1, T2=T2)


def build_W_b(
    game: FollowerGame,
    generators: Sequence[GeneratorParams],
    transform: Optional[LeaderTransform] = None,
    T5_tilde: Optional[np.ndarray] = None,
) -> LeaderSystem:
    """
    Assemble the leaders' KKT system.

    Args:
        game: Follower game (network, H, G)
        generators: Generator coefficients in any order
        transform: Precomputed build_T output
        T5_tilde: Weighted aggregate T2 (gamma / s_dd) as acquired by the
            leaders; the true value from the microgrid parameters when omitted

    Raises:
        SingularMatrixError: W or its lower-triangular part is singular
    """
    generators = order_generators(game, generators)
    transform = transform or build_T(game)
    n_g = game.network.n_g

    T1, T2 = transform.T1, transform.T2
    T4 = -T2 @ game.G
    T3 = T4.T
    if T5_tilde is None:
        T5_tilde = true_t5_tilde(game, transform)
    T5 = -np.asarray(T5_tilde, dtype=float)
    if T5.shape != (n_g,):
        raise DomainError(f"T5_tilde must have length {n_g}, got shape {T5.shape}")

    A1 = np.diag([g.a for g in generators])
    A2 = np.diag([g.alpha for g in generators])
    b_coef = np.array([g.b for g in generators])
    I = np.eye(n_g)
    Z = np.zeros((n_g, n_g))

    W = np.block([
        [A1, T3 - I, Z],
        [Z, T1.T, A2],
        [T4 - I, Z, T1],
    ])
    b_vec = np.concatenate([-b_coef, np.zeros(n_g), T5])

    cond_w = row_scaled_condition(W)
    if cond_w > MAX_CONDITION:
        raise SingularMatrixError(f"W is singular (condition {cond_w:.3g})", matrix="W", condition=cond_w)

    D = np.tril(W)
    if np.any(np.diag(D) == 0.0):
        raise SingularMatrixError("lower-triangular part D of W has a zero diagonal entry", matrix="D")
    M = np.eye(3 * n_g) - la.solve_triangular(D, W, lower=True)

    return LeaderSystem(
        n_g=n_g, T1=T1, T2=T2, T3=T3, T4=T4, T5=T5, A1=A1, A2=A2, W=W, b_vec=b_vec, D=D, M=M,
        b_coef=b_coef, caps=np.array([g.gen_cap_mw for g in generators]), cond_w=cond_w,
    )

# ==============================================================================
# Solvers
# ==============================================================================

def gauss_seidel_sweep(W: np.ndarray, b: np.ndarray, X: np.ndarray) -> np.ndarray:
    """One in-place sweep over every row; returns the updated copy."""
    X = np.array(X, dtype=float)
    for i in range(W.shape[0]):
        if W[i, i] == 0.0:
            raise StructuralError(f"zero pivot W[{i},{i}] in Gauss-Seidel sweep")
        X[i] = (b[i] - W[i, :i] @ X[:i] - W[i, i + 1:] @ X[i + 1:]) / W[i, i]
    return X


def gauss_seidel_solve(
    system: LeaderSystem,
    X0: Optional[np.ndarray] = None,
    eps2: float = 1e-3,
    max_iters: int = 10_000,
) -> GaussSeidelResult:
    """
    Gauss-Seidel sweeps on W X = b.

    A sweep counts as converged when the generation block moved by at most
    eps2 and the full residual ||W X - b||_inf is at most eps2 as well. The
    generation block alone stalls on the second sweep from X0 = 0: mu stays
    at zero until theta_g has moved once.

    Args:
        system: Assembled leader system
        X0: Starting point, zeros when omitted
        eps2: Tolerance on ||P_g(t+1) - P_g(t)||_inf (MW) and on the residual
        max_iters: Sweep cap

    Returns:
        GaussSeidelResult; status "max_iterations" or "diverged" when it stops early
    """
    n = 3 * system.n_g
    X = np.zeros(n) if X0 is None else np.array(X0, dtype=float)
    if X.shape != (n,):
        raise DomainError(f"X0 must have length {n}, got shape {X.shape}")

    trace = [_sweep_record(system, 0, X, None)]
    for sweep in range(1, max_iters + 1):
        X_next = gauss_seidel_sweep(system.W, system.b_vec, X)
        if not np.all(np.isfinite(X_next)):
            logger.warning("Gauss-Seidel diverged at sweep %d", sweep)
            return GaussSeidelResult(X=X, sweeps=sweep, status="diverged", trace=trace)

        change = float(np.abs(X_next[: system.n_g] - X[: system.n_g]).max())
        X = X_next
        record = _sweep_record(system, sweep, X, change)
        trace.append(record)
        if change <= eps2 and record.residual <= eps2:
            return GaussSeidelResult(X=X, sweeps=sweep, status="converged", trace=trace)

    logger.warning("Gauss-Seidel did not converge within %d sweeps", max_iters)
    return GaussSeidelResult(X=X, sweeps=max_iters, status="max_iterations", trace=trace)


def spectral_radius(matrix: np.ndarray, tol: float = 1e-6, max_iters: int = 10_000) -> Tuple[float, str]:
    """Largest eigenvalue modulus; full eigendecomposition for small matrices."""
    matrix = np.asarray(matrix, dtype=float)
    if matrix.shape[0] <= EIGVALS_MAX_DIM:
        return float(np.abs(la.eigvals(matrix)).max()), "eigvals"
    return _power_iteration_radius(matrix, tol, max_iters), "power_iteration"


def spectral_radius_check(system: LeaderSystem) -> SpectralReport:
    """rho(M) for M = I - D^-1 W; Gauss-Seidel converges from any start iff rho < 1."""
    rho, method = spectral_radius(system.M)
    logger.info("rho(M) = %.4f (%s)", rho, "converges" if rho < 1.0 else "does not converge")
    return SpectralReport(rho=rho, converges=rho < 1.0, method=method)


def direct_solve(system: LeaderSystem) -> LeaderSolution:
    """X = W^-1 b; caps are checked and reported, never enforced."""
    try:
        X = la.solve(system.W, system.b_vec)
    except la.LinAlgError as e:
        raise SingularMatrixError(f"W is singular: {e}", matrix="W") from e
    return _solution(system, X, method="direct")


def solve_leader(
    system: LeaderSystem,
    eps2: float = 1e-3,
    max_iters: int = 10_000,
    X0: Optional[np.ndarray] = None,
) -> LeaderOutcome:
    """Gauss-Seidel when rho(M) < 1, otherwise the direct solve."""
    spectral = spectral_radius_check(system)
    if not spectral.converges:
        logger.warning("rho(M) = %.4f >= 1: generators solve W X = b directly", spectral.rho)
        return LeaderOutcome(solution=direct_solve(system), spectral=spectral, gauss_seidel=None, fallback=True)

    result = gauss_seidel_solve(system, X0=X0, eps2=eps2, max_iters=max_iters)
    solution = _solution(system, result.X, method="gauss_seidel", sweeps=result.sweeps)
    return LeaderOutcome(solution=solution, spectral=spectral, gauss_seidel=result, fallback=False)

# ==============================================================================
# Information Schemes
# ==============================================================================

def kpp_acquire(game: FollowerGame) -> np.ndarray:
    """Microgrids disclose psi and eta, so gamma is computed directly."""
    return game.gamma.copy()


def kgd_acquire(
    game: FollowerGame, P_g_announced: np.ndarray, P_d_response: np.ndarray
) -> Tuple[np.ndarray, Tuple[int, ...]]:
    """
    Recover gamma from the followers' response to an announcement.

    q = H P_d and gamma_i = s_ii (q_i + (G P_g)_i). Components whose response
    sits on a bound are returned in the second element: their gamma is not
    identifiable.
    """
    P_g = np.asarray(P_g_announced, dtype=float)
    P_d = np.asarray(P_d_response, dtype=float)
    q = game.H @ P_d
    gamma = game.s_dd * (q + game.G @ P_g)

    tol = BOUND_TOL * np.maximum(1.0, game.cap)
    at_bound = (np.abs(P_d + game.load) <= tol) | (np.abs(P_d - game.p_max) <= tol)
    invalid = tuple(int(i) for i in np.flatnonzero(at_bound))
    if invalid:
        logger.warning("KGD: microgrids %s answered on a bound; their recovered gamma is invalid", list(invalid))
    return gamma, invalid


def kba_infer(
    transform: LeaderTransform, game: FollowerGame, P_g_announced: np.ndarray, theta_g_measured: np.ndarray
) -> np.ndarray:
    """
    Weighted aggregate of the microgrid gammas from generator-bus angles alone.

    T5_tilde = P_g - T1 theta_g + T2 (G P_g); equal to T2 (gamma / s_dd) when the
    followers answered at an interior equilibrium.
    """
    P_g = np.asarray(P_g_announced, dtype=float)
    theta_g = np.asarray(theta_g_measured, dtype=float)
    if theta_g.shape != P_g.shape:
        raise DomainError(f"theta_g shape {theta_g.shape} does not match P_g shape {P_g.shape}")
    return P_g - transform.T1 @ theta_g + transform.T2 @ (game.G @ P_g)


def true_t5_tilde(game: FollowerGame, transform: LeaderTransform, gamma: Optional[np.ndarray] = None) -> np.ndarray:
    gamma = game.gamma if gamma is None else np.asarray(gamma, dtype=float)
    return transform.T2 @ (gamma / game.s_dd)


def acquire_leader_information(
    scheme: LeaderScheme,
    game: FollowerGame,
    transform: LeaderTransform,
    P_g_announced: np.ndarray,
    P_d_response: np.ndarray,
    theta_g_measured: np.ndarray,
    tolerance: float = 1e-6,
) -> LeaderInformation:
    """Run one information scheme and flag a result that disagrees with the true aggregate."""
    warnings: List[str] = []
    gamma: Optional[np.ndarray] = None
    invalid: Tuple[int, ...] = ()

    if scheme == LeaderScheme.KPP:
        gamma = kpp_acquire(game)
        t5_tilde = true_t5_tilde(game, transform, gamma)
    elif scheme == LeaderScheme.KGD:
        gamma, invalid = kgd_acquire(game, P_g_announced, P_d_response)
        t5_tilde = true_t5_tilde(game, transform, gamma)
        if invalid:
            labels = [game.network.indexing.microgrid_labels[i] for i in invalid]
            warnings.append(f"KGD: response on a bound at microgrid buses {labels}; recovered gamma invalid there")
    else:
        t5_tilde = kba_infer(transform, game, P_g_announced, theta_g_measured)

    gap = float(np.abs(t5_tilde - true_t5_tilde(game, transform)).max())
    flagged = gap > tolerance
    if flagged:
        message = f"{scheme.value.upper()}: acquired T5_tilde differs from the true aggregate by {gap:.3g}"
        warnings.append(message)
        logger.warning(message)

    return LeaderInformation(
        scheme=scheme,
        T5_tilde=t5_tilde,
        gamma=gamma,
        flagged=flagged,
        invalid_components=invalid,
        warnings=tuple(warnings),
    )

# ==============================================================================
# Costs and Residuals
# ==============================================================================

def generator_cost(params: GeneratorParams, P: float) -> float:
    """0.5 a P^2 + b P + c"""
    return 0.5 * params.a * P ** 2 + params.b * P + params.c


def leader_cost(generators: Sequence[GeneratorParams], P_g: np.ndarray, theta_g: np.ndarray) -> float:
    """Aggregate generation cost plus angle regulation at the generator buses."""
    total = 0.0
    for params, P, theta in zip(generators, np.asarray(P_g, dtype=float), np.asarray(theta_g, dtype=float)):
        total += generator_cost(params, float(P)) + 0.5 * params.alpha * float(theta) ** 2
    return total


def kkt_residuals(
    game: FollowerGame,
    generators: Sequence[GeneratorParams],
    transform: LeaderTransform,
    X: np.ndarray,
    T5_tilde: Optional[np.ndarray] = None,
) -> KKTResiduals:
    """
    Evaluate the optimality conditions without going through W.

    Lagrangian  J_l + mu' c(P, theta)  with the network constraint
    c = T1 theta + T2 (gamma / s_dd - G P) - P = 0.
    """
    generators = order_generators(game, generators)
    n_g = game.network.n_g
    X = np.asarray(X, dtype=float)
    P, mu, theta = X[:n_g], X[n_g: 2 * n_g], X[2 * n_g:]

    a = np.array([g.a for g in generators])
    b = np.array([g.b for g in generators])
    alpha = np.array([g.alpha for g in generators])
    aggregate = true_t5_tilde(game, transform) if T5_tilde is None else np.asarray(T5_tilde, dtype=float)

    jac_p = -transform.T2 @ game.G - np.eye(n_g)
    jac_theta = transform.T1
    constraint = jac_theta @ theta + aggregate - transform.T2 @ (game.G @ P) - P

    return KKTResiduals(
        stationarity_p=float(np.abs(a * P + b + jac_p.T @ mu).max()),
        stationarity_theta=float(np.abs(alpha * theta + jac_theta.T @ mu).max()),
        constraint=float(np.abs(constraint).max()),
    )


def row_scaled_condition(matrix: np.ndarray) -> float:
    """Condition number after scaling every row to unit max-norm."""
    scale = np.abs(matrix).max(axis=1)
    if np.any(scale == 0.0):
        return float("inf")
    return condition_number(matrix / scale[:, None])

# ==============================================================================
# Helper Functions
# ==============================================================================

def _solution(system: LeaderSystem, X: np.ndarray, method: str, sweeps: int = 0) -> LeaderSolution:
    P_g, mu, theta_g = system.split(X)
    tol = BOUND_TOL * np.maximum(1.0, system.caps)
    within = (P_g >= -tol) & (P_g <= system.caps + tol)
    if not within.all():
        logger.warning("Leader solution %s outside [0, cap] for generators %s", P_g.tolist(), np.flatnonzero(~within).tolist())
    return LeaderSolution(P_g=P_g.copy(), mu=mu.copy(), theta_g=theta_g.copy(), within_caps=within, method=method, sweeps=sweeps)


def _sweep_record(system: LeaderSystem, sweep: int, X: np.ndarray, change: Optional[float]) -> LeaderSweepRecord:
    P_g, mu, theta_g = system.split(X)
    return LeaderSweepRecord(
        sweep=sweep,
        p_g=P_g.tolist(),
        mu=mu.tolist(),
        theta_g=theta_g.tolist(),
        pg_change=change,
        residual=float(np.abs(system.W @ X - system.b_vec).max()),
    )


def _power_iteration_radius(matrix: np.ndarray, tol: float, max_iters: int, window: int = 50) -> float:
    """Average log growth of ||M^k v|| over a sliding window."""
    v = np.random.default_rng(0).standard_normal(matrix.shape[0])
    v /= np.linalg.norm(v)
    growth: List[float] = []
    previous = None
    for k in range(1, max_iters + 1):
        v = matrix @ v
        norm = float(np.linalg.norm(v))
        if norm == 0.0:
            return 0.0
        growth.append(np.log(norm))
        v /= norm
        if k % window == 0:
            estimate = float(np.exp(np.mean(growth[-window:])))
            if previous is not None and abs(estimate - previous) <= tol:
                return estimate
            previous = estimate
    return float(np.exp(np.mean(growth[-window:])))
