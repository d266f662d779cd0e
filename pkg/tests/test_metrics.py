import math

import mpxDT.metrics as metrics
import numpy as np
import pandas as pd
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from mpxDT.errors import RangeError, ZeroOutcomeError
from mpxDT.models import EqualSplitModel, detector_presets
from mpxDT.povm import DiagonalPOVM, POVMSet, extend_to

M = 5000


@pytest.fixture(scope="module")
def noiseless():
    return {name: model.povm(M) for name, model in detector_presets(noiseless=True).items()}


def test_purity():
    """Tests mpxDT.metrics.purity."""
    assert metrics.purity(DiagonalPOVM(0, [0, 1, 0])) == 1
    assert metrics.purity(DiagonalPOVM(0, np.ones(5))) == pytest.approx(0.2, abs=1e-15)

    weights = np.random.default_rng(0).random(100)
    assert metrics.purity(DiagonalPOVM(0, 0.3 * weights)) == pytest.approx(metrics.purity(DiagonalPOVM(0, weights)),
                                                                        rel=1e-12)

    with pytest.raises(ZeroOutcomeError) as exc:
        metrics.purity(DiagonalPOVM(3, np.zeros(4)))
    assert "Outcome 3 has zero total weight" in str(exc.value)


@settings(max_examples=100, deadline=None)
@given(arrays(np.float64, st.integers(1, 50), elements=st.one_of(st.just(0.0), st.floats(1e-6, 1))))
def test_effective_states(weights):
    """Tests mpxDT.metrics.effective_states."""
    if weights.sum() == 0:
        return
    count = metrics.effective_states(DiagonalPOVM(0, weights))
    assert 1 - 1e-12 <= count <= weights.size + 1e-12


def test_effective_states_uniform():
    """Tests mpxDT.metrics.effective_states on a maximally mixed outcome."""
    assert metrics.effective_states(DiagonalPOVM(1, np.full(M, 0.25))) == pytest.approx(M)


def test_posterior():
    """Tests mpxDT.metrics.posterior."""
    povm_set = EqualSplitModel(4, 1.0).povm(100)
    p = metrics.posterior(povm_set, 4)
    assert np.all(p[:4] == 0) and np.all(p[4:] > 0)
    assert abs(p.sum() - 1) <= 1e-12

    # Bayes' rule with a flat prior over 0..M-1
    likelihood = povm_set.weights[2]
    joint = likelihood / 100
    assert np.allclose(metrics.posterior(povm_set, 2), joint / joint.sum(), rtol=1e-12, atol=0)

    with pytest.raises(ZeroOutcomeError):
        metrics.posterior(POVMSet([[1, 1], [0, 0]]), 1)


def test_missing_info():
    """Tests mpxDT.metrics.missing_info."""
    assert metrics.missing_info([0, 1, 0]) == 0
    assert metrics.missing_info([0.5, 0.5]) == pytest.approx(1, abs=1e-15)
    assert metrics.missing_info(np.full(M, 1 / M)) == pytest.approx(12.2877, abs=1e-4)
    assert metrics.missing_info(np.full(M, 1 / M)) == pytest.approx(math.log2(M), abs=1e-12)


def test_h_total():
    """Tests mpxDT.metrics.h_total."""
    assert metrics.h_total(M) == pytest.approx(12.2877, abs=1e-4)
    assert round(metrics.h_total(M), 1) == 12.3
    assert metrics.h_total(1) == 0

    with pytest.raises(ValueError) as exc:
        metrics.h_total(0)
    assert "`M` must be >= 1" in str(exc.value)


def test_extracted_info():
    """Tests mpxDT.metrics.extracted_info."""
    assert metrics.extracted_info(0, M) == pytest.approx(12.2877, abs=1e-4)
    assert metrics.extracted_info(1, 2) == 0
    assert metrics.extracted_info(math.log2(M) + 1e-10, M) == 0  # Clamped

    with pytest.raises(RangeError) as exc:
        metrics.extracted_info(-0.1, M)
    assert "`missing` -0.1 is not in interval" in str(exc.value)

    with pytest.raises(RangeError):
        metrics.extracted_info(13, M)


def test_outcome_metrics():
    """Tests mpxDT.metrics.outcome_metrics."""
    povm_set = POVMSet([[1, 0.5, 0, 0], [0, 0.5, 1, 1], [0, 0, 0, 0]])
    rows = metrics.outcome_metrics(povm_set)
    assert [r.outcome_index for r in rows] == [0, 1, 2]

    assert rows[0].purity == pytest.approx(1.25 / 1.5 ** 2)
    assert rows[0].effective_states == pytest.approx(1.8)
    assert rows[0].missing_info == pytest.approx(-(2 / 3) * math.log2(2 / 3) - (1 / 3) * math.log2(1 / 3))
    assert rows[0].extracted_info == pytest.approx(2 - rows[0].missing_info)

    assert all(math.isnan(x) for x in (rows[2].purity, rows[2].missing_info, rows[2].extracted_info))
    assert rows[1].to_row()["n"] == 1


def test_metrics_frame():
    """Tests mpxDT.metrics.metrics_frame."""
    table = metrics.metrics_frame(EqualSplitModel(4, 0.72).povm(200))
    assert list(table.columns) == metrics.METRIC_COLUMNS
    assert len(table) == 5
    assert table.n.tolist() == list(range(5))
    assert np.allclose(table.effective_states * table.purity, 1)
    assert np.allclose(table.missing_bits + table.extracted_bits, math.log2(200))


def test_compare_detectors(noiseless, capsys):
    """Tests mpxDT.metrics.compare_detectors."""
    with pytest.raises(TypeError) as exc:
        metrics.compare_detectors([EqualSplitModel(4, 0.72).povm(200)])
    assert "must be of type `dict`" in str(exc.value)

    table = metrics.compare_detectors(noiseless, print_stats=True)
    assert list(table.columns) == ["detector"] + metrics.METRIC_COLUMNS
    assert len(table) == 5 + 5 + 5 + 9 + 11
    assert table.detector.unique().tolist() == list(noiseless)
    assert "H_total=12.2877 bits" in capsys.readouterr().out

    # 8-bin rows show higher purities than the 4-bin TMD rows
    pivot = table.pivot(index="n", columns="detector", values="purity")
    assert np.all(pivot.loc[1:4, "8-bin TMD"] >= pivot.loc[1:4, "4-bin TMD"])

    empty = metrics.compare_detectors({})
    assert empty.empty and list(empty.columns) == ["detector"] + metrics.METRIC_COLUMNS


def test_purity_bounds():
    """Purities of every preset detector lie in [1/M, 1]."""
    for noisy in (True, False):
        for name, model in detector_presets(noiseless=not noisy).items():
            for row in metrics.outcome_metrics(model.povm(M)):
                assert 1 / M - 1e-12 <= row.purity <= 1 + 1e-12, name
                assert -1e-12 <= row.missing_info <= math.log2(M) + 1e-12, name


def test_purity_extension():
    """Extending a saturated POVM set only lowers the purity of the largest outcome."""
    povm_set = EqualSplitModel(4, 0.72).povm(200)
    extended = extend_to(povm_set, M)
    for n in range(4):
        assert metrics.purity(extended[n]) == pytest.approx(metrics.purity(povm_set[n]), abs=1e-6)
    assert metrics.purity(extended[4]) < metrics.purity(povm_set[4])


def test_purity_trends(noiseless):
    """Purity orderings between the compared detector architectures."""
    for n in range(1, 5):
        eight = EqualSplitModel(8, 0.7).povm(M)[n]
        four = EqualSplitModel(4, 0.7).povm(M)[n]
        assert metrics.purity(eight) >= metrics.purity(four)
        assert metrics.purity(noiseless["8-bin TMD"][n]) >= metrics.purity(noiseless["4-bin TMD"][n])

    four_bin = ["4-pixel", "4-bin spatial", "4-bin TMD"]
    purities = np.array([[metrics.purity(noiseless[name][n]) for n in range(5)] for name in four_bin])
    spread = purities.max(axis=0) - purities.min(axis=0)
    assert np.all(spread[2:4] <= 0.05)
    assert spread[1] <= 0.1

    loop = noiseless["10-bin loop"]
    for n in range(2, 4):
        for name in four_bin + ["8-bin TMD"]:
            assert metrics.purity(loop[n]) < metrics.purity(noiseless[name][n])


def test_information_trends(noiseless):
    """Extracted information drops at the saturating outcome of split detectors, not of the loop detector."""
    for name in ["4-pixel", "4-bin spatial", "4-bin TMD", "8-bin TMD"]:
        table = metrics.metrics_frame(noiseless[name])
        assert table.extracted_bits.iloc[-1] < table.extracted_bits.iloc[-2], name

    table = metrics.metrics_frame(noiseless["10-bin loop"])
    assert table.extracted_bits.iloc[-1] > 0.5
    assert isinstance(table, pd.DataFrame)
