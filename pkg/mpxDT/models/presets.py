from typing import Dict

from mpxDT.models.base import DetectorModel
from mpxDT.models.equal_split import EqualSplitModel
from mpxDT.models.loop import LogLoopModel

# name: (kind, bins, efficiency, device dark-count probability, cross-talk probability)
DEVICES = {
    "4-pixel": ("equal_split", 4, 0.63, 5.9e-6, 0.14),
    "4-bin spatial": ("equal_split", 4, 0.61, 5.4e-6, 0.036),
    "4-bin TMD": ("equal_split", 4, 0.72, 1.6e-6, 0.0),
    "8-bin TMD": ("equal_split", 8, 0.69, 0.0, 4.3e-7),
    "10-bin loop": ("log_loop", 10, 0.44, 0.0, 4.6e-6),
}


def per_bin_dark_prob(device_prob: float, bins: int) -> float:
    """Per-bin dark-count probability p_d such that 1 - (1 - p_d)^bins equals `device_prob`."""
    return 1 - (1 - device_prob) ** (1 / bins)


def device_dark_prob(bin_prob: float, bins: int) -> float:
    """Probability of at least one dark click on vacuum for `bins` independent bins."""
    return 1 - (1 - bin_prob) ** bins


def detector_presets(noiseless: bool = False) -> Dict[str, DetectorModel]:
    """
    Forward models of the five compared multiplexed detectors.

    :param noiseless: Keep only the efficiencies, as used for the modeled purity and information curves
    :type  noiseless: bool

    :return: Dictionary of device name to detector model, in comparison order
    :rtype: dict
    """
    if not isinstance(noiseless, bool):
        raise TypeError(f"`noiseless` must be of type `bool`, not {type(noiseless)}.")

    presets = {}
    for name, (kind, bins, efficiency, dark, xtalk) in DEVICES.items():
        if noiseless:
            dark, xtalk = 0.0, 0.0
        dark = per_bin_dark_prob(dark, bins)

        if kind == "equal_split":
            presets[name] = EqualSplitModel(bins, efficiency, dark, xtalk)
        else:
            presets[name] = LogLoopModel.from_total_efficiency(efficiency, bins, dark_prob=dark, crosstalk_prob=xtalk)

    return presets
