import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, xlogy

from mpxDT.errors import (DimensionError, ParameterError, ShapeError,
                          TruncationError, TruncationWarning)
from mpxDT.povm import POVMSet

ProbeMatrix = np.ndarray  # F[m][i]: Poisson probability of i photons for probe m, shape P x M
TRUNCATION_TOL = 1e-6
DEFAULT_PROBE_COUNT = 30
DEFAULT_SHOTS = 1_000_000


@dataclass(frozen=True, eq=False)
class ProbeSet:
    """Mean photon numbers μ_m = |α_m|² of the coherent probe states, strictly increasing."""
    means: np.ndarray

    def __post_init__(self):
        means = np.array(self.means, dtype=np.float64)
        if means.ndim != 1 or means.size < 1:
            raise ShapeError(f"`means` must be a non-empty vector, not of shape {means.shape}.")
        if not np.all(np.isfinite(means)) or means[0] < 0:
            raise ParameterError("`means` must be finite and >= 0.")
        if np.any(np.diff(means) <= 0):
            raise ParameterError("`means` must be strictly increasing.")

        means.flags.writeable = False
        object.__setattr__(self, "means", means)

    def __len__(self) -> int:
        return self.means.shape[0]

    def scaled(self, factor: float) -> "ProbeSet":
        """Probe set with every mean photon number multiplied by `factor`."""
        if factor <= 0:
            raise ParameterError(f"`factor` must be > 0, not {factor}.")
        return ProbeSet(self.means * factor)


@dataclass(frozen=True, eq=False)
class OutcomeStats:
    """Observed outcome frequencies P[m][n] for every probe m; `shots` = 0 marks exact probabilities."""
    means: np.ndarray
    frequencies: np.ndarray
    shots: int

    def __post_init__(self):
        means = np.array(self.means, dtype=np.float64)
        frequencies = np.array(self.frequencies, dtype=np.float64)
        if frequencies.ndim != 2 or frequencies.shape[0] != means.shape[0]:
            raise ShapeError(f"`frequencies` of shape {frequencies.shape} do not match {means.shape[0]} probes.")
        if not isinstance(self.shots, (int, np.integer)) or self.shots < 0:
            raise ParameterError(f"`shots` must be an integer >= 0, not {self.shots!r}.")

        means.flags.writeable = False
        frequencies.flags.writeable = False
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "frequencies", frequencies)

    @property
    def n_outcomes(self) -> int:
        return self.frequencies.shape[1]

    @property
    def probes(self) -> ProbeSet:
        return ProbeSet(self.means)


def quadratic_probe_set(mu_max: float, count: int = DEFAULT_PROBE_COUNT) -> ProbeSet:
    """Probe set μ_m = mu_max (m / (count - 1))², starting with the vacuum.

    :param mu_max: Largest mean photon number
    :type  mu_max: float
    :param count: Number of probes, at least 3
    :type  count: int

    :return: ProbeSet with `count` means
    :rtype: ProbeSet
    """
    if not mu_max > 0:
        raise ParameterError(f"`mu_max` must be > 0, not {mu_max}.")
    if count < 3:
        raise ParameterError(f"`count` must be >= 3, not {count}.")

    return ProbeSet(mu_max * (np.arange(count) / (count - 1)) ** 2)


def adequate_dimension(mu: float) -> int:
    """Smallest dimension M >= μ + 10√μ + 20, for which the Poisson tail beyond M is below 1e-6."""
    return int(math.ceil(mu + 10 * math.sqrt(mu) + 20))


def _poisson_rows(probes: ProbeSet, M: int) -> ProbeMatrix:
    if M < 2:
        raise DimensionError(f"`M` must be >= 2, not {M}.")

    mu = probes.means[:, None]
    i = np.arange(M)[None, :]
    return np.exp(xlogy(i, mu) - mu - gammaln(i + 1))  # xlogy(0, 0) = 0 keeps the vacuum row exact


def probe_matrix(probes: ProbeSet, M: int) -> ProbeMatrix:
    """
    Poissonian photon-number distributions of the coherent probes, computed in log-space.
    Warns with `TruncationWarning` if a row loses more than 1e-6 probability to the truncation.

    :param probes: The coherent probe states
    :type  probes: ProbeSet
    :param M: Dimension: photon numbers 0..M-1
    :type  M: int

    :return: Matrix F of shape P x M
    :rtype: np.ndarray
    """
    F = _poisson_rows(probes, M)
    if np.any(short := F.sum(axis=1) < 1 - TRUNCATION_TOL):
        warnings.warn(f"{short.sum()} probe(s) lose more than {TRUNCATION_TOL} probability at {M=}, "
                      f"largest mean {probes.means[-1]} needs M >= {adequate_dimension(probes.means[-1])}.",
                      TruncationWarning)
    return F


def probed_range(probes: ProbeSet) -> int:
    """Largest photon number whose POVM elements the probes pin down: the largest probe mean, rounded down."""
    return int(math.floor(probes.means[-1]))


def outcome_probabilities(povm_set: POVMSet, probes: ProbeSet) -> np.ndarray:
    """Born-rule outcome probabilities p(n|μ_m) = Σ_i F[m][i] θ_n(i), rows not renormalized and never warned about."""
    return _poisson_rows(probes, povm_set.dimension) @ povm_set.weights.T


def _check_truncation(probes: ProbeSet, M: int) -> np.ndarray:
    F = _poisson_rows(probes, M)
    if np.any(short := F.sum(axis=1) < 1 - TRUNCATION_TOL):
        worst = probes.means[short][-1]
        raise TruncationError(f"POVM dimension {M} is too small for probe mean {worst}, "
                              f"need M >= {adequate_dimension(worst)}.")
    return F


def exact_outcomes(povm_set: POVMSet, probes: ProbeSet) -> OutcomeStats:
    """Infinite-shot outcome statistics P = F Πᵀ with rows renormalized to 1.

    :param povm_set: The detector
    :type  povm_set: POVMSet
    :param probes: The coherent probe states
    :type  probes: ProbeSet

    :return: Exact OutcomeStats, `shots` = 0
    :rtype: OutcomeStats
    """
    F = _check_truncation(probes, povm_set.dimension)
    P = F @ povm_set.weights.T
    return OutcomeStats(probes.means, P / P.sum(axis=1, keepdims=True), 0)


def simulate_outcomes(povm_set: POVMSet, probes: ProbeSet, shots: int = DEFAULT_SHOTS, seed: int = 0) -> OutcomeStats:
    """
    Simulates `shots` detector shots per probe and records the outcome frequencies.
    Probe m is drawn from its own stream `np.random.default_rng(seed + m)`.

    :param povm_set: The detector under test
    :type  povm_set: POVMSet
    :param probes: The coherent probe states
    :type  probes: ProbeSet
    :param shots: Number of shots per probe
    :type  shots: int
    :param seed: Seed of the first probe's random stream
    :type  seed: int

    :return: Empirical OutcomeStats
    :rtype: OutcomeStats
    """
    if shots < 1:
        raise ParameterError(f"`shots` must be >= 1, not {shots}.")

    P = exact_outcomes(povm_set, probes).frequencies
    counts = np.empty(P.shape, dtype=np.int64)
    for m, p in enumerate(P):
        p = np.clip(p, 0, None)
        counts[m] = np.random.default_rng(seed + m).multinomial(shots, p / p.sum())

    return OutcomeStats(probes.means, counts / shots, int(shots))
