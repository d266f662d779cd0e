import json

import mpxDT.data as data
import numpy as np
import pytest
from mpxDT.errors import ParameterError, ShapeError
from mpxDT.models import EqualSplitModel, LogLoopModel
from mpxDT.probes import quadratic_probe_set, simulate_outcomes


@pytest.fixture
def povm_set():
    return EqualSplitModel(4, 0.72, 4e-7, 0.036).povm(60)


def test_write_json(tmp_path):
    """Tests mpxDT.data.write_json and mpxDT.data.read_json."""
    fp = str(tmp_path / "values.json")
    data.write_json({"x": 0.1 + 0.2, "n": 3}, fp)
    with open(fp) as f:
        text = f.read()
    assert text.endswith("}\n")
    assert "0.30000000000000004" in text
    assert data.read_json(fp) == {"x": 0.1 + 0.2, "n": 3}

    with pytest.raises(FileNotFoundError) as exc:
        data.read_json(str(tmp_path / "missing.json"))
    assert "File at" in str(exc.value)

    with pytest.raises(FileNotFoundError) as exc:
        data.write_json({}, str(tmp_path / "missing" / "values.json"))
    assert "Directory at" in str(exc.value)


def test_povm_json(tmp_path, povm_set):
    """Tests mpxDT.data.save_povm and mpxDT.data.load_povm with JSON files."""
    fp = str(tmp_path / "povm.json")
    data.save_povm(povm_set, fp)
    assert np.array_equal(data.load_povm(fp).weights, povm_set.weights)

    with open(fp) as f:
        d = json.load(f)
    assert d["dimension"] == 60 and len(d["outcomes"]) == 5


def test_povm_csv(tmp_path, povm_set):
    """Tests mpxDT.data.save_povm and mpxDT.data.load_povm with CSV files."""
    fp = str(tmp_path / "povm.csv")
    data.save_povm(povm_set, fp)
    assert np.array_equal(data.load_povm(fp).weights, povm_set.weights)

    with open(fp) as f:
        assert f.readline().startswith("n,i0,i1,i2,")

    with pytest.raises(ValueError) as exc:
        data.save_povm(povm_set, str(tmp_path / "povm.txt"))
    assert "Unknown POVM file extension" in str(exc.value)

    with open(bad := str(tmp_path / "bad.csv"), "w") as f:
        f.write("n,x0\n0,1\n")
    with pytest.raises(ShapeError) as exc:
        data.load_povm(bad)
    assert "must have header n,i0,i1" in str(exc.value)


def test_povm_from_dict():
    """Tests mpxDT.data.povm_from_dict."""
    with pytest.raises(ShapeError) as exc:
        data.povm_from_dict({"outcomes": [[1, 0]]})
    assert "keys `dimension` and `outcomes`" in str(exc.value)

    with pytest.raises(ShapeError) as exc:
        data.povm_from_dict({"dimension": 3, "outcomes": [[1, 0, 0], [0, 1]]})
    assert "exactly dimension=3 weights" in str(exc.value)

    povm_set = data.povm_from_dict({"dimension": 2, "outcomes": [[1, 0.5], [0, 0.5]]})
    assert np.array_equal(povm_set.weights, [[1, 0.5], [0, 0.5]])
    assert data.povm_to_dict(povm_set) == {"dimension": 2, "outcomes": [[1, 0.5], [0, 0.5]]}


def test_stats(tmp_path, povm_set):
    """Tests mpxDT.data.save_stats and mpxDT.data.load_stats."""
    stats = simulate_outcomes(povm_set, quadratic_probe_set(10, 5), 1000, seed=0)
    fp = str(tmp_path / "stats.csv")
    data.save_stats(stats, fp)
    loaded = data.load_stats(fp)
    assert np.array_equal(loaded.means, stats.means)
    assert np.array_equal(loaded.frequencies, stats.frequencies)
    assert loaded.shots == 1000

    with open(fp) as f:
        assert f.readline() == "mu,shots,n0,n1,n2,n3,n4\n"

    with open(fp, "w") as f:
        f.write("mu,shots,n0,n1\n0,10,1,0\n1,20,0.5,0.5\n")
    with pytest.raises(ShapeError) as exc:
        data.load_stats(fp)
    assert "same number of shots" in str(exc.value)

    with open(fp, "w") as f:
        f.write("mu,n0,n1\n0,1,0\n")
    with pytest.raises(ShapeError) as exc:
        data.load_stats(fp)
    assert "header mu,shots,n0,n1" in str(exc.value)


def test_probes(tmp_path):
    """Tests mpxDT.data.save_probes and mpxDT.data.load_probes."""
    probes = quadratic_probe_set(4000, 30)
    fp = str(tmp_path / "probes.json")
    data.save_probes(probes, fp)
    assert np.array_equal(data.load_probes(fp).means, probes.means)

    data.write_json([1, 2], fp)
    with pytest.raises(ShapeError) as exc:
        data.load_probes(fp)
    assert "key `means`" in str(exc.value)


def test_model(tmp_path):
    """Tests mpxDT.data.save_model and mpxDT.data.load_model."""
    fp = str(tmp_path / "model.json")
    model = LogLoopModel.from_total_efficiency(0.44, 10, crosstalk_prob=4.6e-6)
    data.save_model(model, fp, name="loop")
    assert data.load_model(fp) == ("loop", model)

    data.save_model(EqualSplitModel(4, 0.72), fp)
    assert data.load_model(fp) == (None, EqualSplitModel(4, 0.72))

    data.write_json({"type": "equal_split", "bins": 4}, fp)
    with pytest.raises(ParameterError) as exc:
        data.load_model(fp)
    assert "Invalid fields" in str(exc.value)
