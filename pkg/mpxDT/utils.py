import os
import tempfile
from contextlib import contextmanager
from typing import Dict, Iterator, TextIO

import matplotlib.pyplot as plt
import numpy as np
import pandas as pd
import seaborn as sns

from mpxDT.metrics import compare_detectors, h_total
from mpxDT.povm import POVMSet


@contextmanager
def atomic_write(fp: str) -> Iterator[TextIO]:
    """Opens a temporary file next to `fp` for writing and renames it to `fp` once the block succeeds.
    Readers never see a partially written file; on error the temporary file is removed.

    :param fp: Destination path, its directory must exist
    :type  fp: str

    :return: Text handle of the temporary file
    :rtype: TextIO
    """
    directory = os.path.dirname(os.path.abspath(fp))
    if not os.path.isdir(directory):
        raise FileNotFoundError(f"Directory at {directory=} does not exist.")

    fd, tmp = tempfile.mkstemp(dir=directory, prefix=f".{os.path.basename(fp)}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as f:
            yield f
        os.replace(tmp, fp)
    except BaseException:
        if os.path.exists(tmp):
            os.remove(tmp)
        raise


def rounded_dict(d: dict, precision: int = 6) -> dict:
    """Rounds all float values in a dictionary to `precision` digits after the decimal point, nested dictionaries included.

    :param d: Dictionary containing floats, ints or dictionaries of those as values
    :type  d: dict

    :return: Rounded dictionary
    :rtype: dict
    """
    return {k: rounded_dict(v, precision) if isinstance(v, dict) else round(v, precision) for k, v in d.items()}


def plot_povm(povm_set: POVMSet, max_photons: int = None, title: str = "POVM diagonals") -> None:  # pragma: no cover
    """Plots θ_n(i) of every outcome against the photon number i.

    :param povm_set: POVM set to plot
    :type  povm_set: POVMSet
    :param max_photons: Largest photon number shown, default the full dimension
    :type  max_photons: int
    :param title: Figure title
    :type  title: str

    :return: None
    :rtype: NoneType
    """
    if not isinstance(povm_set, POVMSet):
        raise TypeError(f"`povm_set` must be of type `POVMSet`, not {type(povm_set)}.")

    M = povm_set.dimension if max_photons is None else min(max_photons + 1, povm_set.dimension)
    i = np.arange(M)
    for n, row in enumerate(povm_set.weights[:, :M]):
        plt.plot(i, row, label=f"n={n}")

    plt.ylim([0.0, 1.05])
    plt.xlabel("Photon number i")
    plt.ylabel(r"$\theta_n(i)$")
    plt.title(title)
    plt.legend(loc="center right")
    plt.grid(True)
    plt.show()


def plot_outcome_metrics(table: pd.DataFrame, H_total: float = None) -> None:  # pragma: no cover
    """Plots purity and extracted information per outcome for every detector in a comparison table.

    :param table: Output of `mpxDT.metrics.compare_detectors`
    :type  table: pd.DataFrame
    :param H_total: Draw the total information as a horizontal line in the information panel
    :type  H_total: float

    :return: None
    :rtype: NoneType
    """
    required = {"detector", "n", "purity", "extracted_bits"}
    if not required.issubset(table.columns):
        raise ValueError(f"`table` misses the columns {sorted(required - set(table.columns))}.")

    _, (ax_pur, ax_info) = plt.subplots(1, 2, figsize=(12, 5))
    sns.lineplot(data=table, x="n", y="purity", hue="detector", marker="o", ax=ax_pur)
    sns.lineplot(data=table, x="n", y="extracted_bits", hue="detector", marker="o", ax=ax_info)
    if H_total is not None:
        ax_info.axhline(H_total, color="gray", linestyle="--", label="H_total")

    ax_pur.set_yscale("log")
    ax_pur.set_xlabel("Outcome n")
    ax_pur.set_ylabel("Purity")
    ax_info.set_xlabel("Outcome n")
    ax_info.set_ylabel("Extracted information [bits]")
    plt.tight_layout()
    plt.show()


def plot_comparison(povm_sets: Dict[str, POVMSet]) -> None:  # pragma: no cover
    """Plots outcome metrics of several detectors side by side."""
    table = compare_detectors(povm_sets)
    dims = {p.dimension for p in povm_sets.values()}
    plot_outcome_metrics(table, h_total(dims.pop()) if len(dims) == 1 else None)
