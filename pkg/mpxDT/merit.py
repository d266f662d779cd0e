import math
from dataclasses import asdict, dataclass
from typing import Callable, Optional, Tuple

import numpy as np
from scipy.optimize import minimize_scalar
from tqdm import tqdm

from mpxDT.errors import FitDivergence, ParameterError, ShapeError
from mpxDT.models.base import DetectorModel
from mpxDT.models.equal_split import EqualSplitModel
from mpxDT.models.presets import device_dark_prob
from mpxDT.povm import POVMSet, dynamic_range
from mpxDT.probes import OutcomeStats, ProbeSet, probed_range
from mpxDT.tomography import ReconstructionConfig, reconstruct

MAX_PHOTONS = 500  # Fit window cap
MAX_RMS = 0.1
MAX_CROSSTALK = 0.5
MIN_EFFICIENCY = 1e-6
GRID_POINTS = 21
COORDINATE_ROUNDS = 20
BOUND_SNAP = 1e-9


@dataclass(frozen=True)
class Estimate:
    """Parameter value with lower and upper uncertainty; one side is 0 for estimates at a parameter bound."""
    value: float
    minus: float = 0.0
    plus: float = 0.0

    def __str__(self) -> str:
        if self.minus == self.plus:
            return f"{self.value:.6g} ± {self.plus:.2g}"
        return f"{self.value:.6g} -{self.minus:.2g} +{self.plus:.2g}"


@dataclass(frozen=True)
class FiguresOfMerit:
    """Efficiency, device dark-count probability and cross-talk probability of a detector.

    :param efficiency: Single-photon efficiency, the probability that one photon produces a click
    :param dark_prob: Probability of at least one click on vacuum
    :param crosstalk_prob: Probability that a click induces an extra click
    :param rms: Root-mean-square deviation between the fitted model and the input POVM set
    :param photon_range: Number of photon numbers used in the fit
    """
    efficiency: Estimate
    dark_prob: Estimate
    crosstalk_prob: Estimate
    rms: float
    photon_range: int

    def to_dict(self) -> dict:
        return asdict(self)


def _snap(x: float, lo: float, hi: float) -> float:
    if x - lo <= BOUND_SNAP:
        return lo
    if hi - x <= BOUND_SNAP:
        return hi
    return x


def _line_search(f: Callable[[float], float], lo: float, hi: float) -> float:
    """Grid search over [lo, hi] refined by a bounded scalar search between the neighbours of the best grid point."""
    grid = np.linspace(lo, hi, GRID_POINTS)
    values = [f(x) for x in grid]
    j = int(np.argmin(values))
    a, b = grid[max(j - 1, 0)], grid[min(j + 1, GRID_POINTS - 1)]

    res = minimize_scalar(f, bounds=(a, b), method="bounded", options={"xatol": 1e-12})
    return float(res.x) if res.fun < values[j] else float(grid[j])


def _coordinate_search(loss: Callable[[float, float], float], start: Tuple[float, float],
                       bounds: Tuple[Tuple[float, float], Tuple[float, float]]) -> Tuple[float, float]:
    """
    Minimizes `loss` by alternating line searches over both coordinates.
    The first round scans the full bounds, later rounds a window of four times the last step around the current value.
    """
    point = list(start)
    windows = [hi - lo for lo, hi in bounds]
    for _ in range(COORDINATE_ROUNDS):
        previous = list(point)
        for axis, (lo, hi) in enumerate(bounds):
            if hi <= lo:
                continue

            def f(v: float) -> float:
                trial = list(point)
                trial[axis] = v
                return loss(*trial)

            a, b = max(lo, point[axis] - windows[axis]), min(hi, point[axis] + windows[axis])
            point[axis] = _snap(_line_search(f, a, b), lo, hi)

        steps = [abs(p - q) for p, q in zip(point, previous)]
        if max(steps) < 1e-10:
            break
        windows = [max(4 * s, 1e-8) for s in steps]

    return point[0], point[1]


def figures_of_merit(povm_set: POVMSet, bins: int, template: Optional[DetectorModel] = None,
                     max_photons: int = MAX_PHOTONS, max_rms: float = MAX_RMS) -> FiguresOfMerit:
    """
    Fits efficiency, dark-count and cross-talk probability of a detector model to a POVM set.
    The per-bin dark-count probability follows from the vacuum response θ_0(0) = (1 - p_d)^bins;
    efficiency and cross-talk are found by alternating grid and bounded scalar searches minimizing the
    sum of squared differences over photon numbers up to the dynamic range (at most `max_photons`).

    :param povm_set: POVM set to characterize, with `bins + 1` outcomes
    :type  povm_set: POVMSet
    :param bins: Number of click detectors of the device
    :type  bins: int
    :param template: Model family to fit, its architecture parameters are kept; default an equal-split model
    :type  template: DetectorModel
    :param max_photons: Largest photon number included in the fit
    :type  max_photons: int
    :param max_rms: Largest accepted root-mean-square residual
    :type  max_rms: float

    :return: Best-fit figures of merit without uncertainties
    :rtype: FiguresOfMerit
    """
    if not isinstance(bins, (int, np.integer)) or bins < 1:
        raise ParameterError(f"`bins` must be a positive integer, not {bins!r}.")
    if povm_set.n_outcomes != bins + 1:
        raise ShapeError(f"A detector with {bins} bins has {bins + 1} outcomes, not {povm_set.n_outcomes}.")
    if template is None:
        template = EqualSplitModel(bins, 1.0)
    if template.bins != bins:
        raise ParameterError(f"`template` has {template.bins} bins, expected {bins}.")
    if max_photons < 1:
        raise ParameterError(f"`max_photons` must be >= 1, not {max_photons}.")

    M = min(dynamic_range(povm_set), max_photons, povm_set.dimension - 1) + 1
    target = povm_set.weights[:, :M]

    vacuum = float(np.clip(target[0, 0], 0, 1))
    dark = _snap(1 - vacuum ** (1 / bins), 0.0, 1.0)
    if dark >= 1:
        raise FitDivergence("Outcome 0 never occurs on vacuum, no dark-count probability can be fitted.")

    def loss(efficiency: float, crosstalk: float) -> float:
        model = template.with_parameters(efficiency, dark, crosstalk)
        return float(np.sum((model.povm(M).weights - target) ** 2))

    eta_max = template.max_single_photon_efficiency
    xtalk_max = MAX_CROSSTALK if bins > 1 else 0.0  # A single bin has no neighbour
    efficiency, crosstalk = _coordinate_search(loss, (eta_max / 2, 0.0),
                                               ((MIN_EFFICIENCY, eta_max), (0.0, xtalk_max)))

    rms = math.sqrt(loss(efficiency, crosstalk) / target.size)
    if rms > max_rms:
        raise FitDivergence(f"Fit residual {rms:.4f} exceeds {max_rms}, the POVM set does not match "
                            f"the {template.kind} model family.")

    return FiguresOfMerit(Estimate(efficiency), Estimate(device_dark_prob(dark, bins)), Estimate(crosstalk), rms, M)


def _error_bar(value: float, samples: np.ndarray, lo: float, hi: float) -> Estimate:
    std = float(np.std(samples, ddof=1))
    if value <= lo:
        return Estimate(value, 0.0, std)
    if value >= hi:
        return Estimate(value, std, 0.0)
    return Estimate(value, std, std)


def uncertainty_bars(stats: OutcomeStats, probes: ProbeSet, K: int,
                     config: ReconstructionConfig = ReconstructionConfig(), amp_uncertainty: float = 0.05,
                     trials: int = 20, seed: int = 0, template: Optional[DetectorModel] = None,
                     max_photons: int = MAX_PHOTONS, verbose: bool = False) -> FiguresOfMerit:
    """
    Figures of merit with error bars from the uncertainty of the probe amplitudes.
    Every fit stops at the largest nominal probe mean (`probed_range`), beyond it the reconstruction is extrapolated.
    Trial t draws one global amplitude error δ uniformly from ±`amp_uncertainty` with
    `np.random.default_rng(seed + t)`, rescales every probe mean by (1 + δ)², reconstructs and fits again.
    The error bar is the sample standard deviation over the trials.

    :param stats: Observed outcome statistics
    :type  stats: OutcomeStats
    :param probes: Nominal probes
    :type  probes: ProbeSet
    :param K: Number of outcomes
    :type  K: int
    :param config: Reconstruction settings
    :type  config: ReconstructionConfig
    :param amp_uncertainty: Relative amplitude uncertainty, 0 <= x < 0.5
    :type  amp_uncertainty: float
    :param trials: Number of rescaled reconstructions, at least 2
    :type  trials: int
    :param seed: Seed of the first trial
    :type  seed: int
    :param template: Model family used by `figures_of_merit`
    :type  template: DetectorModel
    :param max_photons: Fit window cap of `figures_of_merit`, lowered to the probed range
    :type  max_photons: int
    :param verbose: Show a progress bar over the trials?
    :type  verbose: bool

    :return: Figures of merit of the nominal reconstruction with error bars
    :rtype: FiguresOfMerit
    """
    if not 0 <= amp_uncertainty < 0.5:
        raise ParameterError(f"`amp_uncertainty` {amp_uncertainty} is not in interval 0 <= x < 0.5.")
    if not isinstance(trials, (int, np.integer)) or trials < 2:
        raise ParameterError(f"`trials` must be an integer >= 2, not {trials!r}.")

    window = min(max_photons, probed_range(probes))

    def fit(p: ProbeSet) -> FiguresOfMerit:
        result = reconstruct(stats, p, K, config)
        return figures_of_merit(result.povm, K - 1, template, window)

    nominal = fit(probes)
    if amp_uncertainty == 0:
        return nominal

    samples = []
    for t in tqdm(range(trials), disable=not verbose, desc="Amplitude trials"):
        delta = np.random.default_rng(seed + t).uniform(-amp_uncertainty, amp_uncertainty)
        trial = fit(probes.scaled((1 + delta) ** 2))
        samples.append((trial.efficiency.value, trial.dark_prob.value, trial.crosstalk_prob.value))
    efficiency, dark, crosstalk = np.array(samples).T

    eta_max = (template or EqualSplitModel(K - 1, 1.0)).max_single_photon_efficiency
    return FiguresOfMerit(_error_bar(nominal.efficiency.value, efficiency, MIN_EFFICIENCY, eta_max),
                          _error_bar(nominal.dark_prob.value, dark, 0.0, 1.0),
                          _error_bar(nominal.crosstalk_prob.value, crosstalk, 0.0, MAX_CROSSTALK),
                          nominal.rms, nominal.photon_range)
