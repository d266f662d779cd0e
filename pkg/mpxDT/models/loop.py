from dataclasses import dataclass, replace

import numpy as np

from mpxDT.errors import DimensionError, ParameterError
from mpxDT.models.base import DetectorModel
from mpxDT.povm import POVMSet

MAX_LOOP_BINS = 16  # The exact construction tracks all 2^bins sets of clicked bins
DEFAULT_OUT_COUPLING = 0.6
DEFAULT_LOOP_EFFICIENCY = 0.85


@dataclass(frozen=True)
class LogLoopModel(DetectorModel):
    """Time-multiplexed loop detector: each round trip couples a fraction `out_coupling` onto the click detector.

    A photon clicks bin k (k = 1..bins) with probability q_k = η_det R ((1 - R) η_loop)^(k-1).
    Photons still in the loop after the last bin are lost.

    :param bins: Number of time bins K_loop
    :param out_coupling: Out-coupling ratio R per round trip
    :param loop_efficiency: Transmission η_loop of one round trip
    :param detector_efficiency: Detection efficiency η_det of the click detector
    :param dark_prob: Per-bin, per-shot dark-count probability
    :param crosstalk_prob: Probability that a real click induces one extra click in an idle bin
    """
    bins: int
    out_coupling: float = DEFAULT_OUT_COUPLING
    loop_efficiency: float = DEFAULT_LOOP_EFFICIENCY
    detector_efficiency: float = 1.0
    dark_prob: float = 0.0
    crosstalk_prob: float = 0.0

    kind = "log_loop"

    def __post_init__(self):
        if not isinstance(self.bins, (int, np.integer)) or not 2 <= self.bins <= MAX_LOOP_BINS:
            raise ParameterError(f"`bins` {self.bins!r} is not an integer in interval 2 <= x <= {MAX_LOOP_BINS}.")
        if not 0 < self.out_coupling <= 1:
            raise ParameterError(f"`out_coupling` {self.out_coupling} is not in interval 0 < x <= 1.")
        if not 0 < self.loop_efficiency <= 1:
            raise ParameterError(f"`loop_efficiency` {self.loop_efficiency} is not in interval 0 < x <= 1.")
        if not 0 < self.detector_efficiency <= 1:
            raise ParameterError(f"`detector_efficiency` {self.detector_efficiency} is not in interval 0 < x <= 1.")
        self._check_noise(self.dark_prob, self.crosstalk_prob)

    @classmethod
    def from_total_efficiency(cls, efficiency: float, bins: int, out_coupling: float = DEFAULT_OUT_COUPLING,
                              loop_efficiency: float = DEFAULT_LOOP_EFFICIENCY, dark_prob: float = 0.0,
                              crosstalk_prob: float = 0.0) -> "LogLoopModel":
        """Loop detector whose single-photon click probability Σ q_k equals `efficiency`."""
        reachable = cls(bins, out_coupling, loop_efficiency).bin_probabilities().sum()
        if not 0 < efficiency <= reachable:
            raise ParameterError(f"`efficiency` {efficiency} is not in interval 0 < x <= {reachable:.6f} "
                                 f"for {bins=}, {out_coupling=}, {loop_efficiency=}.")

        return cls(bins, out_coupling, loop_efficiency, min(efficiency / reachable, 1.0), dark_prob, crosstalk_prob)

    def bin_probabilities(self) -> np.ndarray:
        """Vector q of length `bins`: probability that a single photon clicks bin k."""
        k = np.arange(self.bins)
        return self.detector_efficiency * self.out_coupling * ((1 - self.out_coupling) * self.loop_efficiency) ** k

    @property
    def single_photon_efficiency(self) -> float:
        return float(self.bin_probabilities().sum())

    @property
    def max_single_photon_efficiency(self) -> float:
        return float(replace(self, detector_efficiency=1.0).bin_probabilities().sum())

    def with_parameters(self, efficiency: float, dark_prob: float, crosstalk_prob: float) -> "LogLoopModel":
        return self.from_total_efficiency(efficiency, self.bins, self.out_coupling, self.loop_efficiency,
                                          dark_prob, crosstalk_prob)

    def ideal_povm(self, M: int) -> POVMSet:
        if M < 2:
            raise DimensionError(f"`M` must be >= 2, not {M}.")

        K = self.bins
        q = self.bin_probabilities()
        lost = 1 - q.sum()

        # State s is the set of clicked bins, bit k set <=> bin k clicked
        states = np.arange(2 ** K)
        bits = (states[:, None] >> np.arange(K)) & 1
        clicks = bits.sum(axis=1)
        stay = lost + bits @ q  # Photon lost or absorbed by an already clicked bin
        moves = [(states[bits[:, k] == 0], q[k], 1 << k) for k in range(K)]

        W = np.empty((K + 1, M))
        state = np.zeros(2 ** K)
        state[0] = 1.0
        for n in range(M):
            W[:, n] = np.bincount(clicks, weights=state, minlength=K + 1)
            new = state * stay
            for source, q_k, bit in moves:
                new[source | bit] += q_k * state[source]
            state = new / new.sum()  # Removes accumulated rounding

        return POVMSet(W)

    def sample_true_clicks(self, n: int, size: int, rng: np.random.Generator) -> np.ndarray:
        q = self.bin_probabilities()
        pvals = np.append(q, max(1 - q.sum(), 0.0))
        counts = rng.multinomial(n, pvals, size=size)
        return np.count_nonzero(counts[:, :self.bins], axis=1)


def loop_povm(model: LogLoopModel, M: int) -> POVMSet:
    """
    POVM set of a logarithmic loop detector with K_loop + 1 outcomes.
    Exact dynamic program over the set of clicked bins, adding one photon at a time;
    cross-talk and dark counts are applied afterwards on outcome space.

    :param model: Detector parameters
    :type  model: LogLoopModel
    :param M: Dimension: photon numbers 0..M-1
    :type  M: int

    :return: POVM set of shape (K_loop + 1) x M
    :rtype: POVMSet
    """
    return model.povm(M)
