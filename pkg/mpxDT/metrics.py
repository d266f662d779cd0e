import math
from dataclasses import asdict, dataclass
from typing import Dict, List

import numpy as np
import pandas as pd
from scipy.special import entr

from mpxDT.errors import RangeError, ZeroOutcomeError
from mpxDT.povm import DiagonalPOVM, POVMSet

ENTROPY_FLOOR = 1e-300  # Posterior terms below are dropped from the entropy sum
RANGE_TOL = 1e-9
METRIC_COLUMNS = ["n", "purity", "effective_states", "missing_bits", "extracted_bits"]


@dataclass(frozen=True)
class OutcomeMetrics:
    """Per-outcome figures of a POVM set: purity, 1 / purity and the missing and extracted information in bits."""
    outcome_index: int
    purity: float
    effective_states: float
    missing_info: float
    extracted_info: float

    def to_row(self) -> dict:
        return dict(zip(METRIC_COLUMNS, asdict(self).values()))


def _trace(povm: DiagonalPOVM) -> float:
    if (trace := math.fsum(povm.weights)) <= 0:
        raise ZeroOutcomeError(f"Outcome {povm.outcome_index} has zero total weight, it never occurs.")
    return trace


def purity(povm: DiagonalPOVM) -> float:
    """Measurement outcome purity Tr(π²) / (Tr π)² of a diagonal POVM element.

    :param povm: Diagonal POVM element
    :type  povm: DiagonalPOVM

    :return: Purity in [1/M, 1]
    :rtype: float
    """
    trace = _trace(povm)
    return math.fsum(povm.weights ** 2) / trace ** 2


def effective_states(povm: DiagonalPOVM) -> float:
    """Number of orthogonal input states contributing to the outcome, estimated as 1 / purity."""
    return 1 / purity(povm)


def posterior(povm_set: POVMSet, n: int) -> np.ndarray:
    """
    Photon-number distribution p(i|n) after observing outcome `n`, for a flat prior over 0..M-1.
    Bayes' rule reduces to the normalized POVM diagonal.

    :param povm_set: The detector
    :type  povm_set: POVMSet
    :param n: Observed outcome
    :type  n: int

    :return: Probability vector of length M
    :rtype: np.ndarray
    """
    povm = povm_set[n]
    return povm.weights / _trace(povm)


def missing_info(posterior: np.ndarray) -> float:
    """Shannon entropy in bits of a probability vector, 0 log 0 = 0."""
    p = np.asarray(posterior, dtype=np.float64)
    p = p[p >= ENTROPY_FLOOR]
    return math.fsum(entr(p)) / math.log(2)


def h_total(M: int) -> float:
    """Information content log2(M) of a flat prior over M photon numbers."""
    if M < 1:
        raise ValueError(f"`M` must be >= 1, not {M}.")
    return math.log2(M)


def extracted_info(missing: float, M: int) -> float:
    """Information in bits gained about the photon number from one outcome, log2(M) minus `missing`.

    :param missing: Missing information of the outcome in bits
    :type  missing: float
    :param M: Hilbert-space dimension
    :type  M: int

    :return: Extracted information, clamped below at 0
    :rtype: float
    """
    total = h_total(M)
    if not 0 <= missing <= total + RANGE_TOL:
        raise RangeError(f"`missing` {missing} is not in interval 0 <= x <= log2({M}) = {total}.")
    return max(total - missing, 0.0)


def outcome_metrics(povm_set: POVMSet) -> List[OutcomeMetrics]:
    """Metrics of every outcome of `povm_set`; outcomes that never occur get NaN entries."""
    M = povm_set.dimension
    metrics = []
    for povm in povm_set.outcomes:
        try:
            pur = purity(povm)
        except ZeroOutcomeError:
            metrics.append(OutcomeMetrics(povm.outcome_index, *[math.nan] * 4))
            continue

        missing = missing_info(posterior(povm_set, povm.outcome_index))
        metrics.append(OutcomeMetrics(povm.outcome_index, pur, 1 / pur, missing, extracted_info(missing, M)))
    return metrics


def metrics_frame(povm_set: POVMSet) -> pd.DataFrame:
    """Table with columns n, purity, effective_states, missing_bits, extracted_bits, one row per outcome."""
    return pd.DataFrame([m.to_row() for m in outcome_metrics(povm_set)], columns=METRIC_COLUMNS)


def compare_detectors(povm_sets: Dict[str, POVMSet], print_stats: bool = False) -> pd.DataFrame:
    """Combined metrics table of several detectors, with a leading `detector` column.

    :param povm_sets: Detector name to POVM set, compared in iteration order
    :type  povm_sets: dict
    :param print_stats: Print the purity and extracted information per detector and outcome?
    :type  print_stats: bool

    :return: DataFrame with columns detector, n, purity, effective_states, missing_bits, extracted_bits
    :rtype: pd.DataFrame
    """
    if not isinstance(povm_sets, dict):
        raise TypeError(f"`povm_sets` must be of type `dict`, not {type(povm_sets)}.")

    frames = [metrics_frame(p).assign(detector=name) for name, p in povm_sets.items()]
    if frames:
        table = pd.concat(frames, ignore_index=True)
    else:
        table = pd.DataFrame(columns=METRIC_COLUMNS)
        table["detector"] = []
    table = table[["detector"] + METRIC_COLUMNS]

    if print_stats:
        for name, p in povm_sets.items():
            print(f"{name} (M={p.dimension}, H_total={h_total(p.dimension):.4f} bits)")
            for row in table[table.detector == name].itertuples():
                print(f"\tn={row.n:<3} purity={row.purity:.4f}  extracted={row.extracted_bits:.4f} bits")

    return table
