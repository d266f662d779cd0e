from abc import ABC, abstractmethod
from dataclasses import asdict

import numpy as np
from tqdm import tqdm

from mpxDT.errors import DimensionError, ParameterError
from mpxDT.models.noise import apply_crosstalk, apply_dark_counts
from mpxDT.povm import POVMSet

MC_CHUNK_SIZE = 1_000_000  # Samples drawn per random stream


class DetectorModel(ABC):
    """Parametric description of a multiplexed click detector.

    Subclasses describe how photons are routed onto `bins` click detectors.
    Dark counts and cross-talk are shared: both act on the number of clicks, cross-talk first.
    """
    kind = None  # Value of the "type" field in model files

    bins: int  # Number of click detectors, the device has `bins + 1` outcomes
    dark_prob: float
    crosstalk_prob: float

    @property
    @abstractmethod
    def single_photon_efficiency(self) -> float:
        """Probability that a single photon produces a click."""
        raise NotImplementedError

    @property
    @abstractmethod
    def max_single_photon_efficiency(self) -> float:
        """Largest `single_photon_efficiency` reachable with the fixed architecture parameters."""
        raise NotImplementedError

    @abstractmethod
    def with_parameters(self, efficiency: float, dark_prob: float, crosstalk_prob: float) -> "DetectorModel":
        """Copy of the model with the given single-photon efficiency, dark-count and cross-talk probabilities."""
        raise NotImplementedError

    @abstractmethod
    def ideal_povm(self, M: int) -> POVMSet:
        """Noise-free POVM set of dimension `M`."""
        raise NotImplementedError

    @abstractmethod
    def sample_true_clicks(self, n: int, size: int, rng: np.random.Generator) -> np.ndarray:
        """Simulates `size` shots with `n` incident photons, returns the number of clicked bins per shot."""
        raise NotImplementedError

    def apply_noise(self, povm_set: POVMSet) -> POVMSet:
        """Applies cross-talk, then dark counts, to a noise-free POVM set of this device."""
        povm_set = apply_crosstalk(povm_set, self.crosstalk_prob, self.bins)
        return apply_dark_counts(povm_set, self.dark_prob, self.bins)

    def povm(self, M: int) -> POVMSet:
        """POVM set of dimension `M` including cross-talk and dark counts."""
        return self.apply_noise(self.ideal_povm(M))

    def sample_clicks(self, n: int, size: int, rng: np.random.Generator) -> np.ndarray:
        """Like `sample_true_clicks`, followed by cross-talk and dark counts."""
        clicks = self.sample_true_clicks(n, size, rng)

        if self.crosstalk_prob > 0:
            extra = (rng.random(size) < 1 - (1 - self.crosstalk_prob) ** clicks) & (clicks < self.bins)
            clicks = clicks + extra
        if self.dark_prob > 0:
            clicks = clicks + rng.binomial(self.bins - clicks, self.dark_prob)

        return np.minimum(clicks, self.bins)

    def to_dict(self) -> dict:
        return {"type": self.kind, **asdict(self)}

    @staticmethod
    def _check_noise(dark_prob: float, crosstalk_prob: float) -> None:
        if not 0 <= dark_prob < 1:
            raise ParameterError(f"`dark_prob` {dark_prob} is not in interval 0 <= x < 1.")
        if not 0 <= crosstalk_prob < 1:
            raise ParameterError(f"`crosstalk_prob` {crosstalk_prob} is not in interval 0 <= x < 1.")


def _chunks(samples: int, chunk_size: int):
    """Sizes of the random streams: stream i gets `chunk_size` samples, the last one the remainder."""
    full, rest = divmod(samples, chunk_size)
    return [chunk_size] * full + ([rest] if rest else [])


def monte_carlo_click_distribution(model: DetectorModel, n: int, samples: int, seed: int,
                                   chunk_size: int = MC_CHUNK_SIZE) -> np.ndarray:
    """
    Empirical outcome distribution for `n` incident photons.
    Stream i of the sample budget uses `np.random.default_rng(seed + i)`.

    :param model: Detector to simulate
    :type  model: DetectorModel
    :param n: Number of incident photons
    :type  n: int
    :param samples: Total number of simulated shots
    :type  samples: int
    :param seed: Seed of the first random stream
    :type  seed: int
    :param chunk_size: Number of shots per random stream
    :type  chunk_size: int

    :return: Vector of length `bins + 1` with the observed click frequencies
    :rtype: np.ndarray
    """
    if samples < 1:
        raise ParameterError(f"`samples` must be >= 1, not {samples}.")

    counts = np.zeros(model.bins + 1, dtype=np.int64)
    for i, size in enumerate(_chunks(samples, chunk_size)):
        rng = np.random.default_rng(seed + i)
        counts += np.bincount(model.sample_clicks(n, size, rng), minlength=model.bins + 1)

    return counts / samples


def monte_carlo_povm(model: DetectorModel, M: int, samples: int, seed: int,
                     chunk_size: int = MC_CHUNK_SIZE, logging: bool = False) -> POVMSet:
    """
    Empirical POVM set from direct simulation of photon routing, loss, cross-talk and dark counts.
    Used as an oracle for the exact constructions. Identical `seed` gives identical output.

    :param model: Detector to simulate
    :type  model: DetectorModel
    :param M: Dimension: photon numbers 0..M-1 are simulated
    :type  M: int
    :param samples: Shots per photon number
    :type  samples: int
    :param seed: Seed of the first random stream, stream i uses `seed + i`
    :type  seed: int
    :param chunk_size: Number of shots per random stream
    :type  chunk_size: int
    :param logging: Show a progress bar over the random streams?
    :type  logging: bool

    :return: Empirical POVM set of dimension `M`
    :rtype: POVMSet
    """
    if samples < 1:
        raise ParameterError(f"`samples` must be >= 1, not {samples}.")
    if M < 1:
        raise DimensionError(f"`M` must be >= 1, not {M}.")

    K = model.bins + 1
    counts = np.zeros((K, M), dtype=np.int64)
    for i, size in enumerate(tqdm(_chunks(samples, chunk_size), disable=not logging)):
        rng = np.random.default_rng(seed + i)
        for n in range(M):
            counts[:, n] += np.bincount(model.sample_clicks(n, size, rng), minlength=K)

    return POVMSet(counts / samples)
