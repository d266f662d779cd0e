from mpxDT.errors import ParameterError
from mpxDT.models.base import (DetectorModel, monte_carlo_click_distribution,
                               monte_carlo_povm)
from mpxDT.models.equal_split import (EqualSplitModel, click_probability,
                                      equal_split_povm)
from mpxDT.models.loop import LogLoopModel, loop_povm
from mpxDT.models.noise import apply_crosstalk, apply_dark_counts
from mpxDT.models.presets import detector_presets

MODEL_TYPES = {cls.kind: cls for cls in (EqualSplitModel, LogLoopModel)}


def model_from_dict(d: dict) -> DetectorModel:
    """Builds a detector model from a dictionary with a "type" key and the model's fields as other keys.

    A loop model may be given by its single-photon `efficiency` instead of `detector_efficiency`.
    """
    if not isinstance(d, dict):
        raise TypeError(f"Model description must be of type `dict`, not {type(d)}.")
    if (kind := d.get("type")) not in MODEL_TYPES:
        raise ParameterError(f"No valid model `type` {kind!r}, must be one of {sorted(MODEL_TYPES)}.")

    params = {k: v for k, v in d.items() if k not in ("type", "name")}
    try:
        if kind == "log_loop" and "efficiency" in params:
            return LogLoopModel.from_total_efficiency(**params)
        return MODEL_TYPES[kind](**params)
    except TypeError as exc:  # Unknown or missing fields
        raise ParameterError(f"Invalid fields for model type {kind!r}: {exc}") from exc


__all__ = ["DetectorModel", "EqualSplitModel", "LogLoopModel", "MODEL_TYPES", "apply_crosstalk", "apply_dark_counts",
           "click_probability", "detector_presets", "equal_split_povm", "loop_povm", "model_from_dict",
           "monte_carlo_click_distribution", "monte_carlo_povm"]
