import json

import numpy as np
import pytest

from qbath_figures import io


def write_populations(path, t, pops, header=None):
    d = pops.shape[1]
    cols = header or ["t"] + [f"p{i + 1}" for i in range(d)] + ["energy", "norm"]
    data = np.column_stack([t, pops, np.zeros(len(t)), np.ones(len(t))])
    np.savetxt(path, data, fmt="%.17g", delimiter=",", header=",".join(cols), comments="")
    return path


def test_populations_reader(tmp_path):
    t = np.linspace(0, 10, 5)
    pops = np.tile([0.6, 0.4], (5, 1))
    path = write_populations(tmp_path / "p.csv", t, pops)
    out = io.read_populations_csv(path)
    assert np.array_equal(out["t"], t)
    assert np.array_equal(out["populations"], pops)


def test_missing_column_named(tmp_path):
    t = np.linspace(0, 10, 5)
    pops = np.tile([0.25, 0.25, 0.25, 0.25], (5, 1))
    header = ["t", "p1", "p2", "p4", "p5", "energy", "norm"]  # p3 renamed away
    path = write_populations(tmp_path / "p.csv", t, pops, header=header)
    with pytest.raises(io.FigureInputError) as exc:
        io.read_populations_csv(path)
    assert "p3" in str(exc.value)


def test_missing_file():
    with pytest.raises(io.FigureInputError):
        io.read_populations_csv("does_not_exist.csv")


def test_eth_reader_and_column_check(tmp_path):
    k = np.arange(6)
    energy = np.linspace(3, 4, 6)
    q = np.tile([0.7, 0.3], (6, 1))
    data = np.column_stack([k, energy, q, q])
    path = tmp_path / "eth.csv"
    np.savetxt(path, data, delimiter=",", header="k,E_k,q1,q2,ma1,ma2", comments="")
    out = io.read_eth_csv(path)
    assert np.array_equal(out["q"], q)
    assert np.array_equal(out["ma"], q)

    bad = tmp_path / "bad.csv"
    np.savetxt(bad, data, delimiter=",", header="k,E_k,q1,q2,ma1,xx2", comments="")
    with pytest.raises(io.FigureInputError) as exc:
        io.read_eth_csv(bad)
    assert "ma2" in str(exc.value)


def test_thermal_payload_forms(tmp_path):
    direct = {"beta": 0.4, "populations": [0.6, 0.4]}
    nested = {"thermal": direct, "other": 1}
    assert np.array_equal(io.thermal_populations(direct, "x"), [0.6, 0.4])
    assert np.array_equal(io.thermal_populations(nested, "x"), [0.6, 0.4])
    with pytest.raises(io.FigureInputError):
        io.thermal_populations({"beta": 0.4}, "x")


def test_json_reader(tmp_path):
    path = tmp_path / "t.json"
    path.write_text(json.dumps({"a": 1}))
    assert io.read_json(path) == {"a": 1}
    bad = tmp_path / "bad.json"
    bad.write_text("{nope")
    with pytest.raises(io.FigureInputError):
        io.read_json(bad)
