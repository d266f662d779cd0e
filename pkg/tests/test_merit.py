import mpxDT.merit as merit
import numpy as np
import pytest
from mpxDT.errors import FitDivergence, ParameterError, ShapeError
from mpxDT.models import EqualSplitModel, LogLoopModel, detector_presets
from mpxDT.models.presets import DEVICES
from mpxDT.povm import POVMSet
from mpxDT.probes import exact_outcomes, quadratic_probe_set, simulate_outcomes
from mpxDT.tomography import reconstruct


@pytest.fixture(scope="module")
def tmd_stats():
    model = detector_presets()["4-bin TMD"]
    probes = quadratic_probe_set(100, 30)
    return probes, simulate_outcomes(model.povm(220), probes, 1_000_000, seed=3)


def test_Estimate():
    """Tests mpxDT.merit.Estimate."""
    assert str(merit.Estimate(0.72, 0.04, 0.04)) == "0.72 ± 0.04"
    assert str(merit.Estimate(0.0, 0.0, 0.01)) == "0 -0 +0.01"
    assert merit.Estimate(0.5) == merit.Estimate(0.5, 0.0, 0.0)


def test_error_bar():
    """Tests mpxDT.merit._error_bar."""
    samples = np.array([0.1, 0.2, 0.3])
    assert merit._error_bar(0.2, samples, 0.0, 0.5) == merit.Estimate(0.2, pytest.approx(0.1), pytest.approx(0.1))
    assert merit._error_bar(0.0, samples, 0.0, 0.5) == merit.Estimate(0.0, 0.0, pytest.approx(0.1))
    assert merit._error_bar(0.5, samples, 0.0, 0.5).plus == 0


@pytest.mark.parametrize("name", ["4-pixel", "4-bin spatial", "4-bin TMD", "8-bin TMD"])
def test_figures_of_merit(name):
    """Tests mpxDT.merit.figures_of_merit on exact POVM sets of the equal-split devices."""
    _, bins, efficiency, dark, crosstalk = DEVICES[name]
    model = detector_presets()[name]

    fom = merit.figures_of_merit(model.povm(200), bins)
    assert fom.efficiency.value == pytest.approx(efficiency, abs=1e-4)
    assert fom.crosstalk_prob.value == pytest.approx(crosstalk, abs=1e-3)
    assert fom.dark_prob.value == pytest.approx(dark, rel=0.1, abs=1e-12)
    assert fom.rms <= 1e-4
    assert 2 <= fom.photon_range <= 200
    assert fom.to_dict()["efficiency"] == {"value": fom.efficiency.value, "minus": 0.0, "plus": 0.0}


def test_figures_of_merit_loop():
    """Tests mpxDT.merit.figures_of_merit with a loop template."""
    model = detector_presets()["10-bin loop"]
    fom = merit.figures_of_merit(model.povm(501), 10, template=model)
    assert fom.efficiency.value == pytest.approx(0.44, abs=1e-3)
    assert fom.crosstalk_prob.value == pytest.approx(4.6e-6, abs=1e-3)
    assert fom.dark_prob.value == 0
    assert fom.photon_range == 501


def test_figures_of_merit_noiseless():
    """Tests mpxDT.merit.figures_of_merit on a noiseless detector."""
    fom = merit.figures_of_merit(EqualSplitModel(4, 0.72).povm(200), 4)
    assert fom.efficiency.value == pytest.approx(0.72, abs=1e-4)
    assert fom.crosstalk_prob.value == 0
    assert fom.dark_prob.value == 0

    fom = merit.figures_of_merit(EqualSplitModel(1, 0.5).povm(100), 1)
    assert fom.efficiency.value == pytest.approx(0.5, abs=1e-4)
    assert fom.crosstalk_prob.value == 0


def test_figures_of_merit_errors():
    """Tests the argument checks and fit failures of mpxDT.merit.figures_of_merit."""
    povm_set = EqualSplitModel(4, 0.72).povm(100)

    with pytest.raises(ParameterError) as exc:
        merit.figures_of_merit(povm_set, 0)
    assert "`bins` must be a positive integer" in str(exc.value)

    with pytest.raises(ShapeError) as exc:
        merit.figures_of_merit(povm_set, 3)
    assert "A detector with 3 bins has 4 outcomes, not 5" in str(exc.value)

    with pytest.raises(ParameterError) as exc:
        merit.figures_of_merit(EqualSplitModel(10, 0.5).povm(100), 10, template=EqualSplitModel(8, 0.5))
    assert "`template` has 8 bins" in str(exc.value)

    with pytest.raises(ParameterError) as exc:
        merit.figures_of_merit(povm_set, 4, max_photons=0)
    assert "`max_photons` must be >= 1" in str(exc.value)

    W = np.zeros((5, 50))
    W[0, 0] = 1
    W[2, 1:] = 1
    with pytest.raises(FitDivergence) as exc:
        merit.figures_of_merit(POVMSet(W), 4)
    assert "does not match the equal_split model family" in str(exc.value)

    W[0, 0], W[2, 0] = 0, 1
    with pytest.raises(FitDivergence) as exc:
        merit.figures_of_merit(POVMSet(W), 4)
    assert "Outcome 0 never occurs on vacuum" in str(exc.value)


def test_figures_of_merit_reconstructed(tmd_stats):
    """Figures of merit of a POVM set reconstructed from sampled statistics."""
    probes, stats = tmd_stats
    result = reconstruct(stats, probes, 5)
    fom = merit.figures_of_merit(result.povm, 4)
    assert fom.efficiency.value == pytest.approx(0.72, abs=0.01)


def test_uncertainty_bars(tmd_stats):
    """Tests mpxDT.merit.uncertainty_bars."""
    probes, stats = tmd_stats

    with pytest.raises(ParameterError) as exc:
        merit.uncertainty_bars(stats, probes, 5, amp_uncertainty=0.5)
    assert "`amp_uncertainty` 0.5 is not in interval" in str(exc.value)

    with pytest.raises(ParameterError) as exc:
        merit.uncertainty_bars(stats, probes, 5, trials=1)
    assert "`trials` must be an integer >= 2" in str(exc.value)

    nominal = merit.uncertainty_bars(stats, probes, 5, amp_uncertainty=0)
    assert (nominal.efficiency.minus, nominal.efficiency.plus) == (0, 0)
    assert nominal.efficiency.value == pytest.approx(0.72, abs=0.01)

    first = merit.uncertainty_bars(stats, probes, 5, trials=2, seed=7)
    second = merit.uncertainty_bars(stats, probes, 5, trials=2, seed=7)
    assert first == second
    assert first.efficiency.value == nominal.efficiency.value

    fom = merit.uncertainty_bars(stats, probes, 5)
    assert 0.02 <= fom.efficiency.plus <= 0.08
    assert fom.efficiency.minus == fom.efficiency.plus


def test_uncertainty_bars_template():
    """Error bars are computed for the given model family."""
    model = LogLoopModel.from_total_efficiency(0.44, 4)
    probes = quadratic_probe_set(50, 20)
    stats = exact_outcomes(model.povm(150), probes)
    fom = merit.uncertainty_bars(stats, probes, 5, template=model, trials=3, amp_uncertainty=0.02)
    assert fom.efficiency.value == pytest.approx(0.44, abs=0.02)
    assert fom.photon_range == 51  # Fits stop at the largest probe mean
    assert fom.rms < 0.05
    assert fom.efficiency.plus > 0
