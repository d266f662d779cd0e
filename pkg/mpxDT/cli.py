"""Batch pipeline: model -> simulate -> reconstruct -> analyze, driven by a JSON manifest and/or flags.

Exit codes: 0 success (non-converged reconstructions are flagged in their report), 2 input error,
3 numerical precondition failure (probe truncation, extension of an unsaturated POVM). A reconstruction
that cannot be extended is still written at its own dimension and analyzed there, exit code 3 follows
once every stage has run.
"""
import argparse
import json
import math
import os
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields
from typing import Callable, List, Optional, Sequence, Tuple, Union

from mpxDT.data import (load_model, load_povm, load_probes, load_stats,
                        save_frame, save_povm, save_probes, save_stats, write_json)
from mpxDT.errors import (FitDivergence, NonConvergenceWarning, ParameterError,
                          SaturationError, TruncationError)
from mpxDT.merit import MAX_PHOTONS, figures_of_merit, uncertainty_bars
from mpxDT.metrics import compare_detectors, h_total, metrics_frame
from mpxDT.models import DetectorModel, detector_presets, model_from_dict
from mpxDT.povm import extend_to
from mpxDT.probes import adequate_dimension, probed_range, quadratic_probe_set, simulate_outcomes
from mpxDT.tomography import ReconstructionConfig, reconstruct

COMPARISON_DIMENSION = 5000
EXIT_OK, EXIT_INPUT, EXIT_NUMERICAL = 0, 2, 3
MODEL_FLAGS = {"type": str, "name": str, "bins": int, "efficiency": float, "dark_prob": float,
               "crosstalk_prob": float, "out_coupling": float, "loop_efficiency": float,
               "detector_efficiency": float}

Detector = Tuple[str, DetectorModel]


@dataclass(frozen=True)
class RunManifest:
    """Everything a pipeline run depends on; identical manifests give byte-identical outputs.

    :param models: Model JSON file paths or inline model descriptions
    :param presets: Names of built-in devices to add
    :param noiseless: Strip dark counts and cross-talk from the presets
    :param mu_max: Largest probe mean photon number
    :param probe_count: Number of quadratically spaced probes
    :param shots: Shots per probe
    :param seed: Seed of the simulation and the amplitude trials
    :param gamma: Smoothing weight, None for the default
    :param max_iter: Iteration cap of the reconstruction
    :param tol: Relative objective decrease at which the reconstruction stops
    :param dimension: Comparison dimension M
    :param output_dir: Directory of all output files
    :param amp_uncertainty: Relative probe amplitude uncertainty of the error bars
    :param trials: Number of amplitude trials, 0 skips the error bars
    :param jobs: Number of detectors processed concurrently
    """
    models: Tuple[Union[str, dict], ...] = ()
    presets: Tuple[str, ...] = ()
    noiseless: bool = False
    mu_max: float = 100.0
    probe_count: int = 30
    shots: int = 1_000_000
    seed: int = 0
    gamma: Optional[float] = None
    max_iter: int = 20_000
    tol: float = 1e-10
    dimension: int = COMPARISON_DIMENSION
    output_dir: str = "output"
    amp_uncertainty: float = 0.05
    trials: int = 0
    jobs: int = 1

    def __post_init__(self):
        object.__setattr__(self, "models", tuple(self.models))
        object.__setattr__(self, "presets", tuple(self.presets))
        if not isinstance(self.seed, int):
            raise ParameterError(f"`seed` must be an integer, not {self.seed!r}.")
        if not isinstance(self.shots, int) or self.shots < 1:
            raise ParameterError(f"`shots` must be an integer >= 1, not {self.shots!r}.")
        if self.jobs < 1:
            raise ParameterError(f"`jobs` must be >= 1, not {self.jobs}.")
        if self.trials != 0 and self.trials < 2:
            raise ParameterError(f"`trials` must be 0 or >= 2, not {self.trials}.")
        if self.dimension < (needed := adequate_dimension(self.mu_max)):
            raise ParameterError(f"`dimension` {self.dimension} is below {needed}, "
                                 f"the dimension required by probes up to mu_max={self.mu_max}.")
        ReconstructionConfig(self.gamma, self.max_iter, self.tol)  # Raises on invalid settings

    @classmethod
    def from_dict(cls, d: dict) -> "RunManifest":
        if not isinstance(d, dict):
            raise ParameterError(f"Manifest must be a JSON object, not {type(d).__name__}.")
        if unknown := set(d) - {f.name for f in fields(cls)}:
            raise ParameterError(f"Unknown manifest fields: {sorted(unknown)}.")
        return cls(**d)

    @property
    def config(self) -> ReconstructionConfig:
        return ReconstructionConfig(self.gamma, self.max_iter, self.tol)

    def path(self, name: str, suffix: str) -> str:
        return os.path.join(self.output_dir, f"{name.replace(' ', '_')}_{suffix}")


def resolve_detectors(manifest: RunManifest) -> List[Detector]:
    """Detector names and models of a manifest: model files and inline descriptions first, then presets."""
    detectors = []
    for i, entry in enumerate(manifest.models):
        if isinstance(entry, dict):
            detectors.append((entry.get("name") or f"detector{i}", model_from_dict(entry)))
        else:
            name, model = load_model(entry)
            detectors.append((name or os.path.splitext(os.path.basename(entry))[0], model))

    available = detector_presets(manifest.noiseless)
    for name in manifest.presets:
        if name not in available:
            raise ParameterError(f"Unknown preset {name!r}, must be one of {list(available)}.")
        detectors.append((name, available[name]))

    names = [name for name, _ in detectors]
    if not detectors:
        raise ParameterError("The manifest names no detectors, add `models` or `presets`.")
    if len(set(names)) != len(names):
        raise ParameterError(f"Detector names must be unique: {names}.")
    return detectors


def _run(manifest: RunManifest, detectors: List[Detector], task: Callable[[Detector], object]) -> list:
    """Applies `task` to every detector, `jobs` at a time; results keep the manifest order."""
    if manifest.jobs == 1:
        return [task(d) for d in detectors]
    with ThreadPoolExecutor(max_workers=manifest.jobs) as executor:
        return list(executor.map(task, detectors))


def cmd_model(manifest: RunManifest, detectors: List[Detector]) -> List[str]:
    """Writes the forward-model POVM set of every detector at the comparison dimension."""
    povms = _run(manifest, detectors, lambda d: d[1].povm(manifest.dimension))
    for (name, _), povm_set in zip(detectors, povms):
        save_povm(povm_set, manifest.path(name, "povm.json"))
        save_povm(povm_set, manifest.path(name, "povm.csv"))
        print(f"[model] {name}: {povm_set.n_outcomes} outcomes, M={povm_set.dimension}")
    return []


def cmd_simulate(manifest: RunManifest, detectors: List[Detector]) -> List[str]:
    """Simulates the probe statistics of every detector from its model POVM file."""
    probes = quadratic_probe_set(manifest.mu_max, manifest.probe_count)
    povms = [load_povm(manifest.path(name, "povm.json")) for name, _ in detectors]
    stats = _run(manifest, list(zip(detectors, povms)),
                 lambda d: simulate_outcomes(d[1], probes, manifest.shots, manifest.seed))

    for (name, _), s in zip(detectors, stats):
        save_probes(probes, manifest.path(name, "probes.json"))
        save_stats(s, manifest.path(name, "stats.csv"))
        print(f"[simulate] {name}: {len(probes)} probes x {manifest.shots} shots")
    return []


def cmd_reconstruct(manifest: RunManifest, detectors: List[Detector]) -> List[str]:
    """
    Reconstructs every detector from its statistics and extends the result to the comparison dimension.
    A reconstruction that cannot be extended is written at its own dimension with `extendable: false`
    in its report, and its name is returned among the failures.
    """
    inputs = [(load_stats(manifest.path(name, "stats.csv")), load_probes(manifest.path(name, "probes.json")))
              for name, _ in detectors]

    def task(item):
        stats, probes = item
        result = reconstruct(stats, probes, stats.n_outcomes, manifest.config)
        try:
            return result, extend_to(result.povm, manifest.dimension), None
        except SaturationError as exc:
            return result, result.povm, exc

    with warnings.catch_warnings():  # Non-convergence is flagged in the report
        warnings.simplefilter("ignore", NonConvergenceWarning)
        results = _run(manifest, inputs, task)

    failures = []
    for (name, _), (result, povm_set, error) in zip(detectors, results):
        save_povm(povm_set, manifest.path(name, "recon.json"))
        save_povm(povm_set, manifest.path(name, "recon.csv"))
        write_json({**result.report(), "extendable": error is None}, manifest.path(name, "report.json"))
        flag = "" if result.converged else " (not converged)"
        print(f"[reconstruct] {name}: residual {result.residual:.3e} after {result.iterations} iterations{flag}")
        if error is not None:
            print(f"error: {name}: {error} Kept at M={povm_set.dimension}.", file=sys.stderr)
            failures.append(name)
    return failures


def _nulls(row: dict) -> dict:
    return {k: None if isinstance(v, float) and math.isnan(v) else v for k, v in row.items()}


def cmd_analyze(manifest: RunManifest, detectors: List[Detector]) -> List[str]:
    """
    Per-outcome metrics of every detector plus the combined comparison table.
    Reconstructed POVM sets are analyzed when present, the model POVM sets otherwise, each at its own dimension.
    Fits to a reconstruction stop at the largest probe mean.
    Figures of merit get error bars when `trials` > 0 and simulated statistics exist.
    """
    sources = {}
    for name, _ in detectors:
        recon = manifest.path(name, "recon.json")
        sources[name] = recon if os.path.isfile(recon) else manifest.path(name, "povm.json")
    povms = {name: load_povm(sources[name]) for name, _ in detectors}

    def task(detector: Detector) -> Optional[dict]:
        name, model = detector
        stats_fp, probes_fp = manifest.path(name, "stats.csv"), manifest.path(name, "probes.json")
        reconstructed = sources[name].endswith("recon.json") and os.path.isfile(probes_fp)
        try:
            if manifest.trials and reconstructed and os.path.isfile(stats_fp):
                merit = uncertainty_bars(load_stats(stats_fp), load_probes(probes_fp),
                                         model.bins + 1, manifest.config, manifest.amp_uncertainty,
                                         manifest.trials, manifest.seed, model)
            elif reconstructed:
                merit = figures_of_merit(povms[name], model.bins, model,
                                         min(MAX_PHOTONS, probed_range(load_probes(probes_fp))))
            else:
                merit = figures_of_merit(povms[name], model.bins, model)
        except FitDivergence as exc:
            print(f"[analyze] {name}: {exc}", file=sys.stderr)
            return None
        return merit.to_dict()

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NonConvergenceWarning)
        merits = _run(manifest, detectors, task)

    table = compare_detectors(povms)
    report = {"dimension": manifest.dimension, "H_total": h_total(manifest.dimension), "detectors": {}}
    for (name, _), merit in zip(detectors, merits):
        frame = metrics_frame(povms[name])
        report["detectors"][name] = {"source": os.path.basename(sources[name]), "dimension": povms[name].dimension,
                                     "H_total": h_total(povms[name].dimension),
                                     "outcomes": [_nulls(row) for row in frame.to_dict("records")],
                                     "figures_of_merit": merit}
        save_frame(frame, manifest.path(name, "metrics.csv"))
        print(f"[analyze] {name}: {len(frame)} outcomes from {os.path.basename(sources[name])}")

    write_json(report, os.path.join(manifest.output_dir, "metrics.json"))
    save_frame(table, os.path.join(manifest.output_dir, "comparison.csv"))
    return []


COMMANDS = {"model": [cmd_model], "simulate": [cmd_simulate], "reconstruct": [cmd_reconstruct],
            "analyze": [cmd_analyze], "all": [cmd_model, cmd_simulate, cmd_reconstruct, cmd_analyze]}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mpxdt", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("command", choices=list(COMMANDS), help="Pipeline stage, `all` runs every stage")
    parser.add_argument("--manifest", type=str, default=None, help="JSON file with RunManifest fields")
    parser.add_argument("--model", dest="models", action="append", default=None, help="Model JSON file, repeatable")
    parser.add_argument("--preset", dest="presets", action="append", default=None, help="Built-in device, repeatable")
    parser.add_argument("--noiseless", action="store_true", default=None, help="Presets without dark counts and cross-talk")
    parser.add_argument("--mu-max", type=float, default=None, help="Largest probe mean photon number (default: 100)")
    parser.add_argument("--probe-count", type=int, default=None, help="Number of probes (default: 30)")
    parser.add_argument("--shots", type=int, default=None, help="Shots per probe (default: 10^6)")
    parser.add_argument("--seed", type=int, default=None, help="Base random seed (default: 0)")
    parser.add_argument("--gamma", type=float, default=None, help="Smoothing weight (default: 1e-3 ||P||^2 / M)")
    parser.add_argument("--max-iter", type=int, default=None, help="Reconstruction iteration cap (default: 20000)")
    parser.add_argument("--tol", type=float, default=None, help="Relative objective decrease to stop at (default: 1e-10)")
    parser.add_argument("--dimension", type=int, default=None, help="Comparison dimension M (default: 5000)")
    parser.add_argument("--output-dir", type=str, default=None, help="Output directory (default: output)")
    parser.add_argument("--amp-uncertainty", type=float, default=None, help="Probe amplitude uncertainty (default: 0.05)")
    parser.add_argument("--trials", type=int, default=None, help="Amplitude trials for error bars, 0 skips (default: 0)")
    parser.add_argument("--jobs", type=int, default=None, help="Detectors processed concurrently (default: 1)")

    group = parser.add_argument_group("inline model", "Describe one detector with flags instead of a model file")
    for field, kind in MODEL_FLAGS.items():
        group.add_argument(f"--{field.replace('_', '-')}", dest=f"model_{field}", type=kind, default=None)
    return parser


def manifest_from_args(args: argparse.Namespace) -> RunManifest:
    """Manifest file contents overridden by every flag that was given."""
    d = {}
    if args.manifest is not None:
        if not os.path.isfile(args.manifest):
            raise FileNotFoundError(f"File at {args.manifest=} does not exist.")
        with open(args.manifest) as f:
            d = json.load(f)
        if not isinstance(d, dict):
            raise ParameterError("Manifest must be a JSON object.")

    for key, value in vars(args).items():
        if value is None or key in ("command", "manifest") or key.startswith("model_"):
            continue
        d[key] = value

    inline = {k[len("model_"):]: v for k, v in vars(args).items() if k.startswith("model_") and v is not None}
    if inline:
        if "type" not in inline:
            raise ParameterError("An inline model needs `--type`.")
        d["models"] = list(d.get("models", [])) + [inline]

    return RunManifest.from_dict(d)


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        manifest = manifest_from_args(args)
        detectors = resolve_detectors(manifest)
        if not os.path.isdir(manifest.output_dir):
            os.makedirs(manifest.output_dir)
        failures = [name for command in COMMANDS[args.command] for name in command(manifest, detectors)]
    except (TruncationError, SaturationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ValueError, TypeError, FileNotFoundError) as exc:  # Includes ParameterError and malformed JSON
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    if failures:
        print(f"error: not extendable to M={manifest.dimension}: {sorted(set(failures))}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
