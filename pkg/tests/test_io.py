import json

import numpy as np
import pytest

from gaborprop import io
from gaborprop.core import GridSpec, make_gaussian_window, make_test_signal
from gaborprop.stft import TFLattice, stft


def test_signal_roundtrip(tmp_path):
    grid = GridSpec(128, 8.0)
    f = make_test_signal("gaussian", grid, x0=1.0, xi0=0.5)
    f = f.with_values(f.values, t=0.5)
    header = io.save_signal(tmp_path / "sig", f)
    doc = json.loads(header.read_text())
    assert doc["n_points"] == 128 and doc["extent"] == 8.0 and doc["t"] == 0.5
    raw = np.fromfile(tmp_path / "sig.bin", dtype="<f8")
    assert raw.size == 256
    assert raw[0] == f.values[0].real and raw[1] == f.values[0].imag
    back = io.load_signal(tmp_path / "sig")
    assert back.grid == grid and np.array_equal(back.values, f.values)
    assert back.label == f.label and back.t == 0.5


def test_real_and_complex_arrays(tmp_path):
    a = np.arange(12.0).reshape(3, 4)
    io.save_array(tmp_path / "a", a, axes={"rows": "r"}, meta={"t": 1.0})
    side = json.loads((tmp_path / "a.json").read_text())
    assert side["shape"] == [3, 4] and not side["complex_interleaved"] and side["t"] == 1.0
    assert np.array_equal(io.load_array(tmp_path / "a"), a)
    c = a + 1j * a[::-1]
    io.save_array(tmp_path / "c", c)
    assert np.array_equal(io.load_array(tmp_path / "c.json"), c)


def test_tfarray_roundtrip(tmp_path):
    grid = GridSpec(256, 16.0)
    g = make_gaussian_window(grid)
    F = stft(make_test_signal("chirp", grid), g, TFLattice.box(grid, 2, 2, 0.5, 0.5))
    io.save_tfarray(tmp_path / "F", F)
    back = io.load_tfarray(tmp_path / "F")
    assert np.array_equal(back.values, F.values)
    assert np.array_equal(back.lattice.x_points, F.lattice.x_points)
    assert back.window_label == "gaussian"


def test_round_sig():
    assert io.round_sig(0.1 + 0.2) == 0.3
    assert io.round_sig({"a": [np.float64(1 / 3), np.int64(2), np.bool_(True)]}) == {
        "a": [0.333333333333, 2, True]}
    assert io.round_sig(float("inf")) is None
    assert io.round_sig(1j) == [0.0, 1.0]


def test_dump_json_is_stable(tmp_path):
    io.dump_json(tmp_path / "x.json", {"b": 1 / 3, "a": [1e-20, 2.0]})
    io.dump_json(tmp_path / "y.json", {"a": [1e-20, 2.0], "b": 1 / 3})
    assert (tmp_path / "x.json").read_bytes() == (tmp_path / "y.json").read_bytes()
    assert io.sha256_file(tmp_path / "x.json") == io.sha256_file(tmp_path / "y.json")


def test_sha256(tmp_path):
    p = tmp_path / "f"
    p.write_bytes(b"abc")
    assert io.sha256_file(p) == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
