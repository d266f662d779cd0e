import numpy as np
from scipy.stats import binom

from mpxDT.errors import ParameterError
from mpxDT.povm import POVMSet


def _check_bins(povm_set: POVMSet, bins: int) -> None:
    if not isinstance(bins, (int, np.integer)) or bins < 1:
        raise ParameterError(f"`bins` must be a positive integer, not {bins!r}.")
    if bins < povm_set.n_outcomes - 1:
        raise ParameterError(f"`bins` {bins} cannot produce {povm_set.n_outcomes - 1} clicks.")


def dark_count_matrix(K: int, p_d: float, bins: int) -> np.ndarray:
    """Transition matrix D[k_true, k_out] for independent dark firing of the idle bins."""
    D = np.zeros((K, K))
    for k in range(K):
        idle = bins - k
        extra = binom.pmf(np.arange(idle + 1), idle, p_d)
        np.add.at(D[k], np.minimum(k + np.arange(idle + 1), K - 1), extra)
    return D


def crosstalk_matrix(K: int, p_x: float, bins: int) -> np.ndarray:
    """Transition matrix X[k_true, k_out]: k true clicks gain one extra click with probability 1 - (1 - p_x)^k."""
    X = np.eye(K)
    for k in range(1, min(bins, K - 1)):
        extra = 1 - (1 - p_x) ** k
        X[k, k] = 1 - extra
        X[k, k + 1] = extra
    return X


def apply_dark_counts(povm_set: POVMSet, p_d: float, bins: int) -> POVMSet:
    """
    Adds dark counts to a click-counting POVM set.
    Each idle bin fires independently with probability `p_d`, the observed outcome is capped at K - 1.

    :param povm_set: Noise-free POVM set
    :type  povm_set: POVMSet
    :param p_d: Per-bin, per-shot dark-count probability
    :type  p_d: float
    :param bins: Number of click detectors (bins) of the device
    :type  bins: int

    :return: POVM set including dark counts
    :rtype: POVMSet
    """
    if not 0 <= p_d < 1:
        raise ParameterError(f"`p_d` {p_d} is not in interval 0 <= x < 1.")
    _check_bins(povm_set, bins)
    if p_d == 0:
        return povm_set

    D = dark_count_matrix(povm_set.n_outcomes, p_d, bins)
    return POVMSet(D.T @ povm_set.weights)


def apply_crosstalk(povm_set: POVMSet, p_x: float, bins: int) -> POVMSet:
    """
    Adds cross-talk to a click-counting POVM set.
    A shot with k true clicks triggers at most one extra click in an idle bin.

    :param povm_set: POVM set before cross-talk
    :type  povm_set: POVMSet
    :param p_x: Probability that a single real click induces a click in an idle bin
    :type  p_x: float
    :param bins: Number of click detectors (bins) of the device
    :type  bins: int

    :return: POVM set including cross-talk
    :rtype: POVMSet
    """
    if not 0 <= p_x < 1:
        raise ParameterError(f"`p_x` {p_x} is not in interval 0 <= x < 1.")
    _check_bins(povm_set, bins)
    if p_x == 0:
        return povm_set

    X = crosstalk_matrix(povm_set.n_outcomes, p_x, bins)
    return POVMSet(X.T @ povm_set.weights)
