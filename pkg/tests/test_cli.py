import json
import os
import subprocess
import sys
from pathlib import Path

import pytest

from gaborprop import cli


def _write(tmp_path, doc, name="cfg.json", raw=None):
    p = tmp_path / name
    p.write_text(raw if raw is not None else json.dumps(doc, indent=2))
    return p


def _files(root: Path) -> dict:
    return {p.relative_to(root).as_posix(): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


def test_schema_error_reports_line(tmp_path, capsys):
    raw = '{\n  "experiment": "stft",\n  "grid": {\n    "n_points": 256,\n    "bogus": 1\n  }\n}\n'
    p = _write(tmp_path, None, raw=raw)
    assert cli.run(p, tmp_path / "out") == 2
    err = capsys.readouterr().err
    assert f"{p}:5: error:" in err and "bogus" in err


def test_unknown_experiment_and_bad_json(tmp_path, capsys):
    assert cli.run(_write(tmp_path, {"experiment": "telepathy"}), tmp_path / "o") == 2
    assert cli.run(_write(tmp_path, None, "b.json", raw='{\n "experiment": \n'), tmp_path / "o") == 2
    assert cli.run(tmp_path / "missing.json", tmp_path / "o") == 2
    err = capsys.readouterr().err
    assert "b.json:3: error: invalid JSON" in err


@pytest.mark.parametrize("doc,needle", [
    ({"experiment": "stft", "grid": {"n_points": 1000, "extent": 8}}, "power of two"),
    ({"experiment": "propagate", "hamiltonian": "ho", "initial": {"kind": "delta"}}, "delta"),
    ({"experiment": "propagate", "hamiltonian": "ho", "potential": {"kind": "translation"}},
     "translation"),
    ({"experiment": "gabor-matrix", "hamiltonian": "quartic_root"}, "quartic_root"),
    ({"experiment": "dyson", "potential": {"kind": "none"}}, "dyson"),
])
def test_semantic_errors(tmp_path, capsys, doc, needle):
    assert cli.run(_write(tmp_path, doc), tmp_path / "out") == 2
    assert needle in capsys.readouterr().err


def test_range_violation(tmp_path, capsys):
    doc = {"experiment": "flow", "flow": {"step": 0.5}}
    assert cli.run(_write(tmp_path, doc), tmp_path / "out") == 2
    assert "flow/step" in capsys.readouterr().err


@pytest.mark.parametrize("exp", sorted(cli.DEFAULTS))
def test_normalize_is_idempotent(exp):
    once = cli.normalize({"experiment": exp})
    assert cli.normalize(once) == once
    assert cli.normalize(json.loads(json.dumps(once))) == once


def test_config_round_trip(tmp_path):
    p = _write(tmp_path, {"experiment": "wavefront", "wavefront": {"n_bins": 32}})
    cfg, _ = cli.load_config(p)
    q = _write(tmp_path, cfg, "again.json")
    assert cli.load_config(q)[0] == cfg


def test_stft_run_and_manifest(tmp_path):
    p = _write(tmp_path, {"experiment": "stft", "initial": {"kind": "chirp", "c": -2.0}})
    out = tmp_path / "out"
    assert cli.run(p, out) == 0
    man = json.loads((out / "manifest.json").read_text())
    assert man["passed"] and man["tool"] == "gaborprop" and man["experiment"] == "stft"
    assert {c["name"] for c in man["checks"]} >= {"chirp-stft-closed-form"}
    assert {f["path"] for f in man["files"]} == {"report.json", "stft.bin", "stft.json"}
    assert len(man["input"]["sha256"]) == 64


def test_determinism(tmp_path):
    p = _write(tmp_path, {"experiment": "flow", "hamiltonian": "quartic_root", "times": [0.5],
                          "flow": {"n_random": 10}})
    a, b = tmp_path / "a", tmp_path / "b"
    assert cli.run(p, a, seed=3) == 0
    assert cli.run(p, b, seed=3) == 0
    assert _files(a) == _files(b)


def test_wavefront_delta(tmp_path):
    p = _write(tmp_path, {"experiment": "wavefront", "initial": {"kind": "delta"},
                          "wavefront": {"expect_directions": [[0, 1], [0, -1]]}})
    out = tmp_path / "out"
    assert cli.run(p, out) == 0
    rep = json.loads((out / "report.json").read_text())
    assert rep["in_wf_bins"] == [16, 48]
    assert (out / "wavefront.csv").exists() and (out / "shells.csv").exists()


def test_failing_check_exits_one(tmp_path, capsys):
    p = _write(tmp_path, {"experiment": "wavefront", "initial": {"kind": "delta"},
                          "wavefront": {"expect_directions": [[1, 0]]}})
    assert cli.run(p, tmp_path / "out") == 1
    assert "check failed: expected-directions" in capsys.readouterr().err
    man = json.loads((tmp_path / "out" / "manifest.json").read_text())
    assert not man["passed"]


def test_domain_error_exits_one(tmp_path, capsys):
    p = _write(tmp_path, {"experiment": "wavefront", "grid": {"n_points": 4096, "extent": 128}})
    assert cli.run(p, tmp_path / "out") == 1
    assert "error:UnreliableTruncation" in capsys.readouterr().err


def test_output_dir_precedence(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    doc = {"experiment": "flow", "times": [0.5], "flow": {"n_random": 5}}
    p = _write(tmp_path, doc)
    monkeypatch.setenv("TOOL_OUTPUT_DIR", str(tmp_path / "env"))
    assert cli.run(p) == 0
    assert (tmp_path / "env" / "manifest.json").exists()
    q = _write(tmp_path, {**doc, "output_dir": str(tmp_path / "cfgdir")}, "q.json")
    assert cli.run(q) == 0
    assert (tmp_path / "cfgdir" / "manifest.json").exists()
    assert cli.main(["run", str(q), "--output-dir", str(tmp_path / "flag")]) == 0
    assert (tmp_path / "flag" / "manifest.json").exists()
    monkeypatch.delenv("TOOL_OUTPUT_DIR")
    assert cli.run(p) == 0
    assert (tmp_path / "gaborprop-output" / "manifest.json").exists()


def test_propagate_with_snapshots(tmp_path):
    doc = {"experiment": "propagate", "grid": {"n_points": 1048576, "extent": 4096.0},
           "hamiltonian": "free", "initial": {"kind": "delta"}, "times": [0.5]}
    p = _write(tmp_path, doc)
    out = tmp_path / "out"
    assert cli.main(["run", str(p), "--output-dir", str(out), "--snapshot-times", "0.25,0.5"]) == 0
    snaps = sorted(x.name for x in (out / "snapshots").iterdir())
    assert snaps == ["u_p0_250000.bin", "u_p0_250000.json", "u_p0_500000.bin", "u_p0_500000.json"]
    rep = json.loads((out / "report.json").read_text())
    assert rep["path"] == "exact-multiplier" and rep["unitary"]
    assert rep["times"][0]["distance_bins"] <= 2
    assert (out / "wf_t0.json").exists() and (out / "wf_p0_500000.json").exists()


def test_non_unitary_potential_is_flagged(tmp_path):
    doc = {"experiment": "propagate", "grid": {"n_points": 1048576, "extent": 4096.0},
           "hamiltonian": "free", "potential": {"kind": "translation", "x0": 1.0},
           "initial": {"kind": "delta"}, "times": [0.5]}
    out = tmp_path / "out"
    assert cli.run(_write(tmp_path, doc), out) == 0
    rep = json.loads((out / "report.json").read_text())
    assert not rep["unitary"] and "non-unitary" in rep["non_unitary_note"]
    assert not any(c["name"].startswith("norm-drift") for c in rep["checks"])


def test_bad_snapshot_times(tmp_path, capsys):
    p = _write(tmp_path, {"experiment": "flow"})
    assert cli.main(["run", str(p), "--output-dir", str(tmp_path / "o"), "--snapshot-times", "a,b"]) == 2


def test_gabor_and_dyson(tmp_path):
    g = _write(tmp_path, {"experiment": "gabor-matrix", "grid": {"n_points": 256, "extent": 16.0},
                          "times": [1.0], "steps_per_unit": 400, "gabor": {"radius": 4.0}}, "g.json")
    assert cli.run(g, tmp_path / "g") == 0
    rep = json.loads((tmp_path / "g" / "report.json").read_text())
    assert rep["fits"][0]["wrong_flow"]["status"] == "falsified"
    assert (tmp_path / "g" / "shells_p1_000000.csv").exists()
    d = _write(tmp_path, {"experiment": "dyson", "grid": {"n_points": 256, "extent": 16.0},
                          "dyson": {"reference_steps": 4000}}, "d.json")
    assert cli.run(d, tmp_path / "d") == 0
    rep = json.loads((tmp_path / "d" / "report.json").read_text())
    assert rep["sign"] == "(+i)^n"


def test_verify_suite_parallel(tmp_path, capsys):
    p = _write(tmp_path, {"experiment": "verify-suite", "criteria": [1, 5]})
    out = tmp_path / "out"
    assert cli.main(["run", str(p), "--output-dir", str(out), "--jobs", "2"]) == 0
    man = json.loads((out / "manifest.json").read_text())
    assert [c["name"].split(":")[0] for c in man["checks"]] == ["criterion-1", "criterion-5"]
    assert (out / "criterion-1" / "report.json").exists()
    assert "criterion 5" in capsys.readouterr().err


def test_module_entry_point(tmp_path):
    p = _write(tmp_path, {"experiment": "flow", "times": [0.25], "flow": {"n_random": 5}})
    env = dict(os.environ, TOOL_OUTPUT_DIR=str(tmp_path / "o"))
    r = subprocess.run([sys.executable, "-m", "gaborprop", "run", str(p)], env=env,
                       capture_output=True, text=True)
    assert r.returncode == 0, r.stderr
    assert (tmp_path / "o" / "manifest.json").exists()
    v = subprocess.run([sys.executable, "-m", "gaborprop", "--version"], capture_output=True, text=True)
    assert v.stdout.strip().startswith("gaborprop ")
