import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import gammaln

from mpxDT.errors import DimensionError, ParameterError
from mpxDT.models.base import DetectorModel
from mpxDT.povm import POVMSet

MAX_BINS = 64


@dataclass(frozen=True)
class EqualSplitModel(DetectorModel):
    """Light split evenly over `bins` click detectors: spatial or temporal multiplexing trees and pixel arrays.

    :param bins: Number of click detectors N
    :param efficiency: Per-photon detection probability η
    :param dark_prob: Per-bin, per-shot dark-count probability
    :param crosstalk_prob: Probability that a real click induces one extra click in an idle bin
    """
    bins: int
    efficiency: float
    dark_prob: float = 0.0
    crosstalk_prob: float = 0.0

    kind = "equal_split"

    def __post_init__(self):
        if not isinstance(self.bins, (int, np.integer)) or not 1 <= self.bins <= MAX_BINS:
            raise ParameterError(f"`bins` {self.bins!r} is not an integer in interval 1 <= x <= {MAX_BINS}.")
        if not 0 <= self.efficiency <= 1:
            raise ParameterError(f"`efficiency` {self.efficiency} is not in interval 0 <= x <= 1.")
        self._check_noise(self.dark_prob, self.crosstalk_prob)

    @property
    def single_photon_efficiency(self) -> float:
        return self.efficiency

    @property
    def max_single_photon_efficiency(self) -> float:
        return 1.0

    def with_parameters(self, efficiency: float, dark_prob: float, crosstalk_prob: float) -> "EqualSplitModel":
        return replace(self, efficiency=efficiency, dark_prob=dark_prob, crosstalk_prob=crosstalk_prob)

    def ideal_povm(self, M: int) -> POVMSet:
        if M < 2:
            raise DimensionError(f"`M` must be >= 2, not {M}.")

        N, eta = self.bins, self.efficiency
        k = np.arange(N + 1)
        stay = 1 - eta + eta * k / N
        advance = eta * (N - k) / N

        W = np.empty((N + 1, M))
        state = np.zeros(N + 1)
        state[0] = 1.0
        for n in range(M):
            W[:, n] = state
            new = state * stay
            new[1:] += state[:-1] * advance[:-1]
            state = new / new.sum()  # Removes accumulated rounding

        return POVMSet(W)

    def sample_true_clicks(self, n: int, size: int, rng: np.random.Generator) -> np.ndarray:
        survivors = rng.binomial(n, self.efficiency, size=size)
        counts = rng.multinomial(survivors, np.full(self.bins, 1 / self.bins))
        return np.count_nonzero(counts, axis=1)


def _log_binom(a: int, b: int) -> float:
    return gammaln(a + 1) - gammaln(b + 1) - gammaln(a - b + 1)


def click_probability(bins: int, efficiency: float, k: int, n: int) -> float:
    """
    Closed-form probability of exactly `k` clicked bins for `n` photons split evenly over `bins` noise-free bins:
    C(N,k) Σ_j (-1)^j C(k,j) (1 - η + η(k-j)/N)^n.
    Terms are evaluated in log-space and summed with `math.fsum`.
    The alternating sum cancels badly for large N and n; `equal_split_povm` uses a recursion instead.

    :param bins: Number of bins N
    :type  bins: int
    :param efficiency: Per-photon detection probability η
    :type  efficiency: float
    :param k: Number of clicks
    :type  k: int
    :param n: Number of incident photons
    :type  n: int

    :return: θ_k(n)
    :rtype: float
    """
    if not 0 <= k <= bins:
        return 0.0

    terms = []
    for j in range(k + 1):
        base = 1 - efficiency + efficiency * (k - j) / bins
        log_coeff = _log_binom(bins, k) + _log_binom(k, j)
        if base <= 0:
            power = 1.0 if n == 0 else 0.0  # 0^0 = 1
            terms.append((-1) ** j * math.exp(log_coeff) * power)
        else:
            terms.append((-1) ** j * math.exp(log_coeff + n * math.log(base)))

    return math.fsum(terms)


def equal_split_povm(model: EqualSplitModel, M: int) -> POVMSet:
    """
    POVM set of an equal-split multiplexed detector with N + 1 outcomes.
    Photons are added one at a time: with k bins already clicked, a photon is lost or lands in a clicked bin
    with probability 1 - η + ηk/N and clicks a new bin otherwise. This reproduces `click_probability` exactly.
    Cross-talk and dark counts are applied afterwards on outcome space.

    :param model: Detector parameters
    :type  model: EqualSplitModel
    :param M: Dimension: photon numbers 0..M-1
    :type  M: int

    :return: POVM set of shape (N + 1) x M
    :rtype: POVMSet
    """
    return model.povm(M)
