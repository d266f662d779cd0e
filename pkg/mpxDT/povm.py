from dataclasses import dataclass
from typing import List, Sequence

import numpy as np

from mpxDT.errors import DimensionError, SaturationError, ShapeError

SATURATION_EPS = 0.01  # Largest outcome counts as saturated above 1 - SATURATION_EPS


@dataclass(frozen=True, eq=False)
class DiagonalPOVM:
    """Diagonal of one POVM element in the photon-number basis.

    `weights[i]` is the probability θ_n(i) of observing outcome `outcome_index` given `i` incident photons.
    """
    outcome_index: int
    weights: np.ndarray

    def __post_init__(self):
        weights = np.array(self.weights, dtype=np.float64)
        if weights.ndim != 1:
            raise ShapeError(f"`weights` must be one-dimensional, not of shape {weights.shape}.")
        if not np.all(np.isfinite(weights)):
            raise ValueError(f"`weights` of outcome {self.outcome_index} contain NaN or infinite entries.")
        if self.outcome_index < 0:
            raise ValueError(f"`outcome_index` must be >= 0, not {self.outcome_index}.")

        weights.flags.writeable = False
        object.__setattr__(self, "weights", weights)

    @property
    def dimension(self) -> int:
        return self.weights.shape[0]

    @property
    def trace(self) -> float:
        return float(self.weights.sum())


@dataclass(frozen=True, eq=False)
class POVMSet:
    """Full diagonal detector description: K outcomes times M photon numbers.

    Stored as a dense, read-only K x M matrix; row `n` is θ_n, column `i` holds the outcome distribution for `i` photons.
    """
    weights: np.ndarray

    def __post_init__(self):
        weights = np.array(self.weights, dtype=np.float64)
        if weights.ndim != 2:
            raise ShapeError(f"`weights` must be a K x M matrix, not of shape {weights.shape}.")
        if weights.shape[0] < 1 or weights.shape[1] < 1:
            raise ShapeError(f"`weights` of shape {weights.shape} is empty.")
        if not np.all(np.isfinite(weights)):
            raise ValueError("`weights` contain NaN or infinite entries.")

        weights.flags.writeable = False
        object.__setattr__(self, "weights", weights)

    @classmethod
    def from_outcomes(cls, outcomes: Sequence[DiagonalPOVM]) -> "POVMSet":
        """Stacks diagonals ordered by `outcome_index` into a POVMSet."""
        if not outcomes:
            raise ShapeError("`outcomes` must contain at least one DiagonalPOVM.")
        if len({o.dimension for o in outcomes}) != 1:
            raise ShapeError("All outcomes must have the same dimension.")
        if sorted(o.outcome_index for o in outcomes) != list(range(len(outcomes))):
            raise ShapeError("`outcome_index` values must be 0..K-1 without gaps.")

        ordered = sorted(outcomes, key=lambda o: o.outcome_index)
        return cls(np.stack([o.weights for o in ordered]))

    @property
    def n_outcomes(self) -> int:
        """Number of outcomes K."""
        return self.weights.shape[0]

    @property
    def dimension(self) -> int:
        """Hilbert-space truncation M."""
        return self.weights.shape[1]

    @property
    def outcomes(self) -> List[DiagonalPOVM]:
        return [DiagonalPOVM(n, row) for n, row in enumerate(self.weights)]

    def __getitem__(self, n: int) -> DiagonalPOVM:
        if not 0 <= n < self.n_outcomes:
            raise IndexError(f"Outcome {n} not in range 0..{self.n_outcomes - 1}.")
        return DiagonalPOVM(n, self.weights[n])

    def __len__(self) -> int:
        return self.n_outcomes


def validate(povm_set: POVMSet, tol: float = 1e-9) -> List[str]:
    """Checks nonnegativity, upper bound and completeness of a POVM set.

    :param povm_set: The POVM set to check
    :type  povm_set: POVMSet
    :param tol: Absolute tolerance on every check
    :type  tol: float

    :return: List of violated invariants, empty if the set is a valid POVM
    :rtype: list
    """
    report = []
    W = povm_set.weights

    if povm_set.n_outcomes < 2:
        report.append(f"fewer than 2 outcomes: K={povm_set.n_outcomes}")

    if (negative := np.argwhere(W < -tol)).size:
        n, i = negative[0]
        report.append(f"nonnegativity violated in {len(negative)} entries, first at outcome {n}, i={i}: {float(W[n, i])!r}")

    if (above := np.argwhere(W > 1 + tol)).size:
        n, i = above[0]
        report.append(f"upper bound violated in {len(above)} entries, first at outcome {n}, i={i}: {float(W[n, i])!r}")

    sums = W.sum(axis=0)
    if (incomplete := np.flatnonzero(np.abs(sums - 1) > tol)).size:
        i = incomplete[0]
        report.append(f"completeness violated at {len(incomplete)} photon numbers, first at i={i}: sum={float(sums[i])!r}")

    return report


def is_saturated(povm_set: POVMSet, eps: float = SATURATION_EPS) -> bool:
    """Does the largest outcome occur with probability >= 1 - `eps` at the truncation edge?"""
    return bool(povm_set.weights[-1, -1] >= 1 - eps)


def dynamic_range(povm_set: POVMSet, eps: float = SATURATION_EPS) -> int:
    """Smallest photon number at which the largest outcome is saturated, `M` if it never is."""
    saturated = np.flatnonzero(povm_set.weights[-1] >= 1 - eps)
    return int(saturated[0]) if saturated.size else povm_set.dimension


def extend_to(povm_set: POVMSet, M_target: int, eps: float = SATURATION_EPS) -> POVMSet:
    """
    Extends a saturated POVM set to a larger Hilbert-space dimension.
    Above the truncation edge every photon number produces the largest outcome with certainty.

    :param povm_set: POVM set whose largest outcome saturates at the truncation edge
    :type  povm_set: POVMSet
    :param M_target: New dimension, at least the current one
    :type  M_target: int
    :param eps: Saturation threshold: θ_{K-1}(M-1) >= 1 - eps is required
    :type  eps: float

    :return: POVM set of dimension `M_target`, identical below the current dimension
    :rtype: POVMSet
    """
    K, M = povm_set.weights.shape
    if M_target < M:
        raise DimensionError(f"`M_target` {M_target} is smaller than the current dimension {M}.")
    if not 0 <= eps < 1:
        raise ValueError(f"`eps` {eps} is not in interval 0 <= x < 1.")
    if not is_saturated(povm_set, eps):
        raise SaturationError(f"Largest outcome is not saturated at i={M - 1}: "
                              f"θ={float(povm_set.weights[-1, -1])!r} < 1 - {eps}.")

    padding = np.zeros((K, M_target - M))
    padding[-1] = 1.0
    return POVMSet(np.hstack((povm_set.weights, padding)))


def truncate_to(povm_set: POVMSet, M_target: int) -> POVMSet:
    """Drops all photon numbers >= `M_target`.

    :param povm_set: POVM set to truncate
    :type  povm_set: POVMSet
    :param M_target: New dimension, 2 <= M_target <= M
    :type  M_target: int

    :return: POVM set of dimension `M_target`
    :rtype: POVMSet
    """
    if M_target < 2:
        raise DimensionError(f"`M_target` must be >= 2, not {M_target}.")
    if M_target > povm_set.dimension:
        raise DimensionError(f"`M_target` {M_target} exceeds the current dimension {povm_set.dimension}, use `extend_to`.")

    return POVMSet(povm_set.weights[:, :M_target])
