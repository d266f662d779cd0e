import json
import os
from typing import Optional, Tuple

import numpy as np
import pandas as pd

from mpxDT.errors import ShapeError
from mpxDT.models import DetectorModel, model_from_dict
from mpxDT.povm import POVMSet
from mpxDT.probes import OutcomeStats, ProbeSet
from mpxDT.utils import atomic_write

FLOAT_FORMAT = "%.17g"  # Round-trips every float64 through CSV


def _check_file(fp: str) -> None:
    if not os.path.isfile(fp):
        raise FileNotFoundError(f"File at {fp=} does not exist.")


def read_json(fp: str):
    _check_file(fp)
    with open(fp) as f:
        return json.load(f)


def write_json(obj, fp: str) -> None:
    """Writes `obj` as indented JSON; floats use Python's shortest round-trip representation."""
    with atomic_write(fp) as f:
        json.dump(obj, f, indent=2)
        f.write("\n")


def save_frame(df: pd.DataFrame, fp: str) -> None:
    """Writes a table as CSV without index, floats with 17 significant digits."""
    with atomic_write(fp) as f:
        df.to_csv(f, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")


def _read_csv(fp: str) -> pd.DataFrame:
    _check_file(fp)
    return pd.read_csv(fp, float_precision="round_trip")


def povm_to_dict(povm_set: POVMSet) -> dict:
    return {"dimension": povm_set.dimension, "outcomes": povm_set.weights.tolist()}


def povm_from_dict(d: dict) -> POVMSet:
    """Reads {"dimension": M, "outcomes": [[θ_0(0), ...], ...]}."""
    if not isinstance(d, dict) or not {"dimension", "outcomes"}.issubset(d):
        raise ShapeError("POVM description must be an object with keys `dimension` and `outcomes`.")
    outcomes = d["outcomes"]
    if not outcomes or any(not isinstance(row, list) or len(row) != d["dimension"] for row in outcomes):
        raise ShapeError(f"Every outcome must list exactly dimension={d['dimension']} weights.")

    return POVMSet(np.array(outcomes, dtype=np.float64))


def save_povm(povm_set: POVMSet, fp: str) -> None:
    """Saves a POVM set as JSON or as CSV with header n,i0,i1,..., chosen by the file extension.

    :param povm_set: The POVM set
    :type  povm_set: POVMSet
    :param fp: Destination ending in `.json` or `.csv`
    :type  fp: str

    :return: None
    :rtype: NoneType
    """
    if fp.endswith(".json"):
        write_json(povm_to_dict(povm_set), fp)
    elif fp.endswith(".csv"):
        df = pd.DataFrame(povm_set.weights, columns=[f"i{i}" for i in range(povm_set.dimension)])
        df.insert(0, "n", np.arange(povm_set.n_outcomes))
        save_frame(df, fp)
    else:
        raise ValueError(f"Unknown POVM file extension of {fp=}, use `.json` or `.csv`.")


def load_povm(fp: str) -> POVMSet:
    """Loads a POVM set written by `save_povm`."""
    if fp.endswith(".json"):
        return povm_from_dict(read_json(fp))
    if not fp.endswith(".csv"):
        raise ValueError(f"Unknown POVM file extension of {fp=}, use `.json` or `.csv`.")

    df = _read_csv(fp)
    if list(df.columns) != ["n"] + [f"i{i}" for i in range(df.shape[1] - 1)]:
        raise ShapeError(f"POVM CSV at {fp=} must have header n,i0,i1,...")
    return POVMSet(df.sort_values("n").drop(columns="n").to_numpy(dtype=np.float64))


def save_stats(stats: OutcomeStats, fp: str) -> None:
    """Saves outcome statistics as CSV with header mu,shots,n0,...,nK-1, one row per probe."""
    df = pd.DataFrame(stats.frequencies, columns=[f"n{n}" for n in range(stats.n_outcomes)])
    df.insert(0, "shots", stats.shots)
    df.insert(0, "mu", stats.means)
    save_frame(df, fp)


def load_stats(fp: str) -> OutcomeStats:
    """Loads outcome statistics written by `save_stats`.

    :param fp: Path of the CSV file
    :type  fp: str

    :return: The outcome statistics
    :rtype: OutcomeStats
    """
    df = _read_csv(fp)
    K = df.shape[1] - 2
    if K < 1 or list(df.columns) != ["mu", "shots"] + [f"n{n}" for n in range(K)]:
        raise ShapeError(f"Statistics CSV at {fp=} must have header mu,shots,n0,n1,...")
    if df.shots.nunique() != 1:
        raise ShapeError(f"All probes in {fp=} must have the same number of shots.")

    return OutcomeStats(df.mu.to_numpy(), df.iloc[:, 2:].to_numpy(dtype=np.float64), int(df.shots.iloc[0]))


def save_probes(probes: ProbeSet, fp: str) -> None:
    write_json({"means": probes.means.tolist()}, fp)


def load_probes(fp: str) -> ProbeSet:
    """Loads a probe set from JSON {"means": [μ_0, μ_1, ...]}."""
    d = read_json(fp)
    if not isinstance(d, dict) or "means" not in d:
        raise ShapeError(f"Probe file at {fp=} must be an object with key `means`.")
    return ProbeSet(d["means"])


def save_model(model: DetectorModel, fp: str, name: Optional[str] = None) -> None:
    d = model.to_dict()
    if name is not None:
        d["name"] = name
    write_json(d, fp)


def load_model(fp: str) -> Tuple[Optional[str], DetectorModel]:
    """Loads a model description {"type": ..., "name": ..., fields} and returns (name, model)."""
    d = read_json(fp)
    return (d.get("name") if isinstance(d, dict) else None), model_from_dict(d)
