import math
import warnings
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from mpxDT.errors import NonConvergenceWarning, ParameterError, ShapeError
from mpxDT.povm import POVMSet
from mpxDT.probes import OutcomeStats, ProbeSet, adequate_dimension, probe_matrix

GAMMA_SCALE = 1e-3  # Default smoothing weight is GAMMA_SCALE * ||P||_F^2 / M
CONTINUATION_STAGES = 6
CONTINUATION_FACTOR = 10.0
MIN_SCALE = 1e-12  # Step scale floor of columns no probe reaches, relative to the largest scale


@dataclass(frozen=True)
class ReconstructionConfig:
    """Settings of the constrained least-squares inversion.

    :param gamma: Smoothing weight γ; None selects 1e-3 ||P||²_F / M
    :param max_iter: Maximum number of iterations
    :param tol: Stop once the relative objective decrease of an accepted step is below `tol`,
        or the objective below `tol` ||P||²_F
    :param dimension: Reconstruction dimension M; None selects the truncation bound of the largest probe
    """
    gamma: Optional[float] = None
    max_iter: int = 20_000
    tol: float = 1e-10
    dimension: Optional[int] = None

    def __post_init__(self):
        if self.gamma is not None and self.gamma < 0:
            raise ParameterError(f"`gamma` must be >= 0, not {self.gamma}.")
        if self.max_iter < 1:
            raise ParameterError(f"`max_iter` must be >= 1, not {self.max_iter}.")
        if not self.tol > 0:
            raise ParameterError(f"`tol` must be > 0, not {self.tol}.")
        if self.dimension is not None and self.dimension < 2:
            raise ParameterError(f"`dimension` must be >= 2, not {self.dimension}.")


@dataclass(frozen=True, eq=False)
class ReconstructionResult:
    """Reconstructed POVM set and solver diagnostics.

    `objective` holds the value of every accepted iterate, each under the smoothing weight of its continuation stage.
    """
    povm: POVMSet
    residual: float
    iterations: int
    converged: bool
    gamma: float
    objective: np.ndarray = field(repr=False)

    def report(self) -> dict:
        return {"residual": self.residual, "iterations": self.iterations, "converged": self.converged,
                "gamma": self.gamma}


def simplex_project(v: np.ndarray) -> np.ndarray:
    """Euclidean projection of a vector onto the probability simplex {x >= 0, Σx = 1}.

    :param v: Vector of K reals
    :type  v: np.ndarray

    :return: Projected vector
    :rtype: np.ndarray
    """
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1 or v.size < 1:
        raise ShapeError(f"`v` must be a non-empty vector, not of shape {v.shape}.")

    return simplex_project_columns(v[:, None])[:, 0]


def simplex_project_columns(A: np.ndarray) -> np.ndarray:
    """Projects every column of `A` onto the probability simplex with the sort-and-threshold algorithm."""
    K, cols = A.shape
    u = -np.sort(-A, axis=0)  # Descending per column
    css = np.cumsum(u, axis=0) - 1
    index = np.arange(1, K + 1)[:, None]
    active = u - css / index > 0
    rho = K - 1 - np.argmax(active[::-1], axis=0)  # Last active row, row 0 is always active
    threshold = css[rho, np.arange(cols)] / (rho + 1)
    return np.maximum(A - threshold, 0)


def _smoothness(W: np.ndarray) -> float:
    return float(np.sum(np.diff(W, axis=1) ** 2))


def _objective(W: np.ndarray, P: np.ndarray, F: np.ndarray, gamma: float) -> float:
    return float(np.sum((F @ W.T - P) ** 2)) + gamma * _smoothness(W)


def _gradient(W: np.ndarray, P: np.ndarray, F: np.ndarray, gamma: float) -> np.ndarray:
    grad = 2 * (F @ W.T - P).T @ F
    if gamma:
        d = np.diff(W, axis=1)
        grad[:, :-1] -= 2 * gamma * d
        grad[:, 1:] += 2 * gamma * d
    return grad


def column_lipschitz(F: np.ndarray, gamma: float) -> np.ndarray:
    """
    Per-column curvature bounds L_i = 2 (Σ_k (FᵀF)_ik + 4γ) of the objective.
    F is nonnegative, so L_i is at least the absolute row sum of the Hessian 2 (FᵀF + γ DᵀD) and diag(L) dominates it.
    Columns no probe reaches are floored at MIN_SCALE times the largest bound.

    :param F: Probe matrix, shape P x M
    :type  F: np.ndarray
    :param gamma: Smoothing weight
    :type  gamma: float

    :return: Vector of M bounds
    :rtype: np.ndarray
    """
    L = 2 * (F.T @ F.sum(axis=1) + 4 * gamma)
    return np.maximum(L, MIN_SCALE * L.max())


def gamma_schedule(gamma: float, start_gamma: Optional[float] = None) -> List[float]:
    """Smoothing weights of the continuation stages: `start_gamma` lowered tenfold per stage while above `gamma`
    (at most CONTINUATION_STAGES of them), then `gamma` itself."""
    if start_gamma is None:
        return [gamma]
    stages = start_gamma / CONTINUATION_FACTOR ** np.arange(CONTINUATION_STAGES)
    return [float(g) for g in stages if g > gamma] + [gamma]


def _descend(W: np.ndarray, P: np.ndarray, F: np.ndarray, gamma: float, max_iter: int, tol: float,
             floor: float) -> Tuple[np.ndarray, int, bool, List[float]]:
    """Accelerated projected gradient from `W` for one smoothing weight, steps scaled per column."""
    L = column_lipschitz(F, gamma)
    x = W
    fx = _objective(x, P, F, gamma)
    history = [fx]
    if fx <= floor:
        return x, 0, True, history

    y, t = x, 1.0
    iteration = 0
    for iteration in range(1, max_iter + 1):
        fy = _objective(y, P, F, gamma)
        grad = _gradient(y, P, F, gamma)
        while True:  # Backtracking: halve the steps while the quadratic upper bound fails
            z = simplex_project_columns(y - grad / L)
            d = z - y
            fz = _objective(z, P, F, gamma)
            if fz <= fy + np.sum(grad * d) + np.sum(L * d * d) / 2 + 1e-15 * max(fy, 1.0):
                break
            L = 2 * L

        if fz > fx:
            if y is x:  # No descent from the accepted iterate itself
                return x, iteration, True, history
            y, t = x, 1.0  # Restart momentum
            continue

        t_next = (1 + math.sqrt(1 + 4 * t * t)) / 2
        y = z + ((t - 1) / t_next) * (z - x)
        decrease = fx - fz
        x, fx, t = z, fz, t_next
        history.append(fx)

        if decrease <= tol * history[-2] or fx <= floor:
            return x, iteration, True, history

    return x, iteration, False, history


def solve_povm(P: np.ndarray, F: np.ndarray, K: int, gamma: float, max_iter: int = 20_000,
               tol: float = 1e-10, start_gamma: Optional[float] = None) -> Tuple[np.ndarray, int, bool, np.ndarray]:
    """
    Minimizes ||P - F Wᵀ||²_F + γ Σ_n Σ_i (W[n, i+1] - W[n, i])² over K x M matrices W
    whose columns lie on the probability simplex, starting from the uniform POVM W = 1/K.

    Accelerated projected gradient with backtracking. Column i steps by 1/L_i (`column_lipschitz`), the same for all
    K entries of the column, so the step stays an exact simplex projection. Momentum restarts whenever a step would
    increase the objective. A stage stops once the relative objective decrease falls below `tol` or the objective
    below `tol` ||P||²_F.

    With `start_gamma` above `gamma` the smoothing weight is lowered stage by stage (`gamma_schedule`), each stage
    starting from the result of the last. Photon numbers the probes leave undetermined then carry the smooth
    continuation of their neighbours, not the starting point. The objective of accepted iterates never increases,
    across stages too.

    :param P: Outcome frequencies, shape P x K
    :type  P: np.ndarray
    :param F: Probe matrix, shape P x M
    :type  F: np.ndarray
    :param K: Number of outcomes
    :type  K: int
    :param gamma: Smoothing weight
    :type  gamma: float
    :param max_iter: Maximum number of iterations over all stages
    :type  max_iter: int
    :param tol: Relative objective decrease below which a stage stops
    :type  tol: float
    :param start_gamma: Smoothing weight of the first stage; None solves for `gamma` only
    :type  start_gamma: float

    :return: Tuple of (W, iterations, converged, objective of every accepted iterate)
    :rtype: tuple
    """
    if P.ndim != 2 or F.ndim != 2 or P.shape != (F.shape[0], K):
        raise ShapeError(f"Inconsistent shapes: P {P.shape}, F {F.shape}, {K=}.")
    if K < 2:
        raise ShapeError(f"`K` must be >= 2, not {K}.")
    if start_gamma is not None and start_gamma < 0:
        raise ParameterError(f"`start_gamma` must be >= 0, not {start_gamma}.")

    W = np.full((K, F.shape[1]), 1 / K)
    floor = tol * float(np.sum(P ** 2))
    history: List[float] = []
    iterations, converged = 0, False
    for stage_gamma in gamma_schedule(gamma, start_gamma):
        if iterations == max_iter:
            converged = False
            break
        W, used, converged, values = _descend(W, P, F, stage_gamma, max_iter - iterations, tol, floor)
        iterations += used
        history.extend(values)
        if not converged:
            break

    return W, iterations, converged, np.array(history)


def residual(stats: OutcomeStats, probes: ProbeSet, povm: POVMSet) -> float:
    """Frobenius norm of P - F Πᵀ.

    :param stats: Observed outcome frequencies
    :type  stats: OutcomeStats
    :param probes: The probes used for `stats`
    :type  probes: ProbeSet
    :param povm: POVM set to compare to
    :type  povm: POVMSet

    :return: ||P - F Πᵀ||_F
    :rtype: float
    """
    if stats.frequencies.shape != (len(probes), povm.n_outcomes):
        raise ShapeError(f"Statistics of shape {stats.frequencies.shape} do not match "
                         f"{len(probes)} probes and {povm.n_outcomes} outcomes.")

    F = probe_matrix(probes, povm.dimension)
    return float(np.linalg.norm(stats.frequencies - F @ povm.weights.T))


def default_gamma(P: np.ndarray, M: int) -> float:
    return GAMMA_SCALE * float(np.sum(P ** 2)) / M


def reconstruct(stats: OutcomeStats, probes: ProbeSet, K: int,
                config: ReconstructionConfig = ReconstructionConfig()) -> ReconstructionResult:
    """
    Reconstructs the diagonal POVM set from coherent-probe statistics by inverting P = F Πᵀ.
    Smoothing weights below the default start from the default weight and are lowered in stages, see `solve_povm`.
    Warns with `NonConvergenceWarning` if `max_iter` is reached; the result is returned anyway.

    :param stats: Observed outcome frequencies, one row per probe
    :type  stats: OutcomeStats
    :param probes: The probes, used to build F (may differ from `stats.means`, e.g. rescaled)
    :type  probes: ProbeSet
    :param K: Number of outcomes
    :type  K: int
    :param config: Solver settings
    :type  config: ReconstructionConfig

    :return: Reconstruction result
    :rtype: ReconstructionResult
    """
    if stats.frequencies.shape[0] != len(probes):
        raise ShapeError(f"{stats.frequencies.shape[0]} rows of statistics for {len(probes)} probes.")
    if stats.n_outcomes != K:
        raise ShapeError(f"Statistics have {stats.n_outcomes} outcomes, expected {K=}.")
    if K < 2:
        raise ShapeError(f"`K` must be >= 2, not {K}.")

    M = config.dimension or adequate_dimension(probes.means[-1])
    F = probe_matrix(probes, M)
    P = stats.frequencies
    gamma = default_gamma(P, M) if config.gamma is None else config.gamma

    W, iterations, converged, history = solve_povm(P, F, K, gamma, config.max_iter, config.tol,
                                                   start_gamma=default_gamma(P, M))
    if not converged:
        warnings.warn(f"Reconstruction stopped after {iterations} iterations, "
                      f"relative decrease still above {config.tol}.", NonConvergenceWarning)

    povm = POVMSet(W)
    return ReconstructionResult(povm, residual(stats, probes, povm), iterations, converged, gamma, history)
