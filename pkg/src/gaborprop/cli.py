"""Command-line experiment runner.

    gaborprop run <config.json> [--output-dir D] [--jobs N] [--seed S] [--snapshot-times T1,T2]

Exit codes: 0 when every configured check passes, 1 when a numerical check
fails, 2 when the configuration is invalid.
"""
from __future__ import annotations

import argparse
import copy
import csv
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from importlib import resources
from pathlib import Path

import numpy as np
from jsonschema import Draft202012Validator

from . import __version__, checks, core, flow, gabormatrix as gm, io, propagator as prop, stft as st
from . import wavefront as wf


class ConfigError(Exception):
    def __init__(self, message: str, line: int | None = None):
        super().__init__(message)
        self.line = line


DEFAULTS = {
    "stft": {"grid": {"n_points": 2048, "extent": 64.0}, "initial": {"kind": "chirp", "c": 1.0},
             "window": "gaussian",
             "lattice": {"x_max": 6.0, "xi_max": 12.0, "x_step": 0.125, "xi_step": 0.125}},
    "wavefront": {"grid": {"n_points": 65536, "extent": 256.0}, "initial": {"kind": "delta"},
                  "window": "gaussian", "wavefront": {}},
    "flow": {"hamiltonian": "ho", "times": [0.5, 1.0],
             "flow": {"kind": "numeric", "step": 1e-3, "n_random": 100, "radius": 10.0,
                      "starts": [[1.0, 0.0], [0.0, 1.0], [3.0, -2.0]]}},
    "propagate": {"grid": {"n_points": 65536, "extent": 256.0}, "hamiltonian": "ho",
                  "potential": {"kind": "none"}, "initial": {"kind": "constant"},
                  "window": "gaussian", "times": [0.5, 1.0], "steps_per_unit": 400,
                  "wavefront": {"mode": "weighted"}},
    "gabor-matrix": {"grid": {"n_points": 1024, "extent": 32.0}, "hamiltonian": "ho",
                     "potential": {"kind": "none"}, "times": [1.0], "steps_per_unit": 2000,
                     "gabor": {"radius": 6.0, "step": 0.5, "wrong_flow": "identity",
                               "closed_form_tol": 5e-3}},
    "dyson": {"grid": {"n_points": 512, "extent": 16.0}, "hamiltonian": "ho",
              "potential": {"kind": "sin_mu", "mu": 3.0, "coupling": 0.1},
              "initial": {"kind": "gaussian", "x0": float(np.pi / 2)}, "times": [0.2],
              "dyson": {"n_terms": 3, "quad_points": 129, "reference_steps": 20000}},
    "verify-suite": {"criteria": list(range(1, 10))},
}

WF_DEFAULTS = {"mode": "smooth", "n_bins": 64, "R_max": 64.0, "inner_radius": 2.0,
               "r_threshold": 6.0, "p": 2.0, "r": 0.0, "ratio_threshold": 0.9}
POTENTIAL_DEFAULTS = {"sin_mu": {"mu": 3.0, "coupling": 1.0}, "translation": {"x0": 1.0, "coupling": 1.0},
                      "modulation": {"xi0": 1.0, "coupling": 1.0}, "none": {}}
NON_DECAYING = {"constant", "plane_wave", "chirp"}


# --- configuration -----------------------------------------------------------

def _schema() -> dict:
    text = resources.files("gaborprop").joinpath("schema/config.schema.json").read_text()
    return json.loads(text)


def _locate(text: str, path) -> int | None:
    """Line of the innermost key along ``path`` in the JSON source (best effort)."""
    pos, found = 0, None
    for comp in path:
        if isinstance(comp, str):
            hit = text.find(f'"{comp}"', pos)
            if hit < 0:
                break
            pos = found = hit
    return None if found is None else text.count("\n", 0, found) + 1


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def normalize(cfg: dict) -> dict:
    """Fill experiment defaults; the result is a fixed point of ``normalize``."""
    exp = cfg["experiment"]
    out = _merge(DEFAULTS[exp], cfg)
    if "wavefront" in out or exp in ("wavefront", "propagate"):
        out["wavefront"] = _merge(WF_DEFAULTS, out.get("wavefront", {}))
    if "potential" in out:
        out["potential"] = _merge(POTENTIAL_DEFAULTS[out["potential"]["kind"]], out["potential"])
    if "initial" in out and "apodize" not in out["initial"]:
        # the taper only matters when non-decaying data is evolved
        out["initial"]["apodize"] = exp == "propagate" and out["initial"]["kind"] in NON_DECAYING
    return out


def _semantic_checks(cfg: dict, text: str):
    exp = cfg["experiment"]
    grid = cfg.get("grid")
    if grid is not None:
        n = grid["n_points"]
        if n & (n - 1):
            raise ConfigError("grid.n_points must be a power of two", _locate(text, ["grid", "n_points"]))
    pot = cfg.get("potential", {}).get("kind", "none")
    ham = cfg.get("hamiltonian")
    if exp in ("propagate", "gabor-matrix", "dyson") and ham == "quartic_root":
        raise ConfigError("hamiltonian quartic_root is only available in flow experiments",
                          _locate(text, ["hamiltonian"]))
    if pot == "translation" and ham != "free":
        raise ConfigError("the translation potential is only supported with the free Hamiltonian",
                          _locate(text, ["potential"]))
    if exp == "propagate":
        init = cfg.get("initial", {}).get("kind")
        exact = ham == "free" and pot in ("none", "translation")
        if init == "delta" and not exact:
            raise ConfigError("delta data is evolved only on the exact multiplier path "
                              "(free Hamiltonian without multiplication potential)",
                              _locate(text, ["initial"]))
    if exp == "dyson" and pot not in ("sin_mu", "modulation"):
        raise ConfigError("dyson needs a sin_mu or modulation perturbation", _locate(text, ["potential"]))


def load_config(path) -> tuple[dict, str]:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc.msg}", exc.lineno) from exc
    errors = sorted(Draft202012Validator(_schema()).iter_errors(raw), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        where = "/".join(str(p) for p in err.absolute_path) or "<root>"
        path_hint = list(err.absolute_path)
        if err.validator == "additionalProperties":
            extra = [k for k in err.instance if k not in err.schema.get("properties", {})]
            path_hint = path_hint + extra[:1]
        raise ConfigError(f"{where}: {err.message}", _locate(text, path_hint))
    cfg = normalize(raw)
    _semantic_checks(cfg, text)
    return cfg, text


# --- helpers -------------------------------------------------------------------

def _grid(cfg) -> core.GridSpec:
    return core.GridSpec(int(cfg["grid"]["n_points"]), float(cfg["grid"]["extent"]))


def _window(cfg, grid) -> core.Window:
    if cfg.get("window", "gaussian") == "hermite":
        return core.make_hermite_window(grid)
    return core.make_gaussian_window(grid)


def _initial(cfg, grid) -> core.SampledSignal:
    spec = dict(cfg["initial"])
    kind = spec.pop("kind")
    apod = spec.pop("apodize", False)
    f = core.make_test_signal(kind, grid, **spec)
    return core.apodize(f) if apod else f


def _flow_of(ham: str, t: float) -> flow.FlowMap:
    return flow.closed_form_free(t) if ham == "free" else flow.closed_form_ho(t)


def _kinetic(ham):
    return prop.free_multiplier if ham == "free" else prop.ho_multiplier


def _potential_fn(cfg):
    """Multiplication potential added to the kinetic part (None if absent)."""
    ham, pot = cfg["hamiltonian"], cfg["potential"]
    base = prop.ho_potential if ham == "ho" else None
    kind = pot["kind"]
    if kind == "sin_mu":
        extra = prop.sin_potential(pot["mu"], pot["coupling"])
    elif kind == "modulation":
        extra = lambda x: pot["coupling"] * np.exp(2j * np.pi * pot["xi0"] * np.asarray(x))
    else:
        extra = None
    if base is None:
        return extra
    if extra is None:
        return base
    return lambda x: base(x) + extra(x)


def _evolution(cfg, grid):
    """Handle ``(values, t) -> values`` and a label for the path taken."""
    ham, pot = cfg["hamiltonian"], cfg["potential"]
    if ham == "free" and pot["kind"] in ("none", "translation"):
        c, x0 = pot.get("coupling", 1.0), pot.get("x0", 0.0)
        if pot["kind"] == "translation":
            symbol = lambda xi: prop.free_multiplier(xi) + c * np.exp(-2j * np.pi * x0 * xi)
        else:
            symbol = prop.free_multiplier

        def U(values, t):
            return prop.apply_multiplier(values, grid, np.exp(1j * t * symbol(grid.xi)))
        return U, "exact-multiplier"
    ss = prop.SplitStep(grid, _kinetic(ham), _potential_fn(cfg))
    spu = cfg.get("steps_per_unit", 400)
    return (lambda values, t: ss(values, t, steps_per_unit=spu)), "split-step"


def _unitary(cfg) -> bool:
    return cfg.get("potential", {}).get("kind", "none") in ("none", "sin_mu")


def _check(name, passed, value=None, tol=None, **extra) -> dict:
    out = {"name": name, "passed": bool(passed)}
    if value is not None:
        out["value"] = float(value)
    if tol is not None:
        out["tolerance"] = float(tol)
    out.update(extra)
    return out


def _tag(t: float) -> str:
    return f"{t:+.6f}".replace("+", "p").replace("-", "m").replace(".", "_")


def _wf_kwargs(cfg) -> dict:
    w = cfg["wavefront"]
    return {"mode": w["mode"], "n_bins": w["n_bins"], "R_max": w["R_max"],
            "inner_radius": w["inner_radius"], "r_threshold": w["r_threshold"], "p": w["p"],
            "r": w["r"], "ratio_threshold": w["ratio_threshold"]}


# --- experiments ---------------------------------------------------------------

def exp_stft(cfg, out: Path, ctx) -> list:
    grid = _grid(cfg)
    g = _window(cfg, grid)
    f = _initial(cfg, grid)
    lc = cfg["lattice"]
    lat = st.TFLattice.box(grid, lc["x_max"], lc["xi_max"], lc["x_step"], lc["xi_step"])
    F = st.stft(f, g, lat)
    io.save_tfarray(out / "stft", F)
    res = [_check("stft-finite", np.all(np.isfinite(F.values)))]
    init = cfg["initial"]
    if init["kind"] == "chirp" and cfg["window"] == "gaussian" and not init["apodize"]:
        X, XI = np.meshgrid(lat.x_points, lat.xi_points, indexing="ij")
        err = float(np.max(np.abs(F.magnitude() - checks.chirp_closed_form(init["c"], X, XI))))
        res.append(_check("chirp-stft-closed-form", err <= 1e-6, err, 1e-6))
    io.dump_json(out / "report.json", {"experiment": "stft", "signal": f.label, "window": g.label,
                                       "lattice_shape": list(lat.shape), "checks": res})
    return res


def _write_shells(path, est: wf.WFEstimate):
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["bin", "angle", "shell", "max"])
        for b in range(est.n_bins):
            for m, v in enumerate(est.shell_maxima[b]):
                wr.writerow([b, f"{est.angles[b]:.12e}", m, f"{v:.12e}"])


def exp_wavefront(cfg, out: Path, ctx) -> list:
    grid = _grid(cfg)
    g = _window(cfg, grid)
    f = _initial(cfg, grid)
    est = wf.estimate_wf(f, g, **_wf_kwargs(cfg))
    io.dump_json(out / "wavefront.json", {**est.as_dict(), "signal": f.label, "window": g.label})
    wf.write_wf_csv(out / "wavefront.csv", est)
    _write_shells(out / "shells.csv", est)
    res = [_check("wavefront-estimated", True, n_in_wf=int(est.in_wf.sum()))]
    dirs = cfg["wavefront"].get("expect_directions")
    if dirs:
        want = np.zeros(est.n_bins, bool)
        d = np.asarray(dirs, float)
        want[wf.angle_bin(np.arctan2(d[:, 1], d[:, 0]), est.n_bins)] = True
        dist = wf.wf_distance(est, est.with_bins(want)) / est.bin_width
        res.append(_check("expected-directions", dist <= 1 + 1e-9, dist, 1.0))
    io.dump_json(out / "report.json", {"experiment": "wavefront", "signal": f.label,
                                       "in_wf_bins": est.wf_bins().tolist(), "arcs": est.arcs(),
                                       "checks": res})
    return res


def exp_flow(cfg, out: Path, ctx) -> list:
    fc = cfg["flow"]
    ham = cfg["hamiltonian"]
    rng = np.random.default_rng(ctx["seed"])
    spec = {"ho": flow.harmonic_oscillator, "free": flow.free_particle,
            "quartic_root": flow.quartic_root}[ham]()
    n = fc["n_random"]
    pts = rng.normal(size=(n, 2))
    pts *= (fc["radius"] * np.sqrt(rng.uniform(size=n)) / np.linalg.norm(pts, axis=1))[:, None]
    if ham == "quartic_root":
        # keep samples outside the smoothed core
        pts *= np.maximum(1.0, 3 * spec.cutoff_radius / np.linalg.norm(pts, axis=1))[:, None]

    def make(t):
        if fc["kind"] == "numeric" or ham == "quartic_root":
            return flow.numeric_flow(spec, t, fc["step"])
        return _flow_of(ham, t)

    times = [float(t) for t in cfg["times"]]
    flow.write_trace_csv(out / "trace.csv", make(0.0), fc["starts"], [0.0] + times)
    res = []
    for t in times:
        chi = make(t)
        sym = max(flow.symplectic_defect(chi, w) for w in pts[: min(n, 25)]) if n else 0.0
        res.append(_check(f"symplectic t={t:g}", sym <= 1e-6, sym, 1e-6))
        if n and abs(t) <= 5:
            gl = flow.group_law_check(spec, t, t / 3, pts, fc["step"]).max_deviation
            res.append(_check(f"group-law t={t:g}", gl <= 1e-7, gl, 1e-7))
        if n:
            img = flow.flow_apply(chi, pts)
            a0, a1 = spec.eval(pts), spec.eval(img)
            en = float(np.max(np.abs(a1 - a0) / (1 + np.abs(a0))))
            res.append(_check(f"energy t={t:g}", en <= 1e-6, en, 1e-6))
            if ham in ("ho", "free") and chi.kind == "numeric":
                dev = float(np.max(np.abs(img - flow.flow_apply(_flow_of(ham, t), pts))))
                res.append(_check(f"numeric-vs-closed t={t:g}", dev <= 1e-8, dev, 1e-8))
        if ham == "quartic_root":
            dirs = np.column_stack([np.cos(np.linspace(0, 2 * np.pi, 16, endpoint=False)),
                                    np.sin(np.linspace(0, 2 * np.pi, 16, endpoint=False))])
            hom = flow.homogeneity_check(chi, np.array([40.0]), dirs).max_deviation
            res.append(_check(f"homogeneity t={t:g}", hom <= 1e-3, hom, 1e-3))
    io.dump_json(out / "report.json", {"experiment": "flow", "hamiltonian": ham, "checks": res})
    return res


def exp_propagate(cfg, out: Path, ctx) -> list:
    grid = _grid(cfg)
    g = _window(cfg, grid)
    u0 = _initial(cfg, grid)
    U, path = _evolution(cfg, grid)
    times = [float(t) for t in cfg["times"]]
    snaps = ctx["snapshot_times"] if ctx["snapshot_times"] is not None else cfg.get("snapshot_times", times)
    kw = _wf_kwargs(cfg)
    e0 = wf.estimate_wf(u0, g, **kw)
    io.dump_json(out / "wf_t0.json", e0.as_dict())
    snap_dir = out / "snapshots"
    snap_dir.mkdir(exist_ok=True)
    unitary = _unitary(cfg)
    res, rows = [], []
    for t in sorted(set(times) | set(float(s) for s in snaps)):
        ut = u0.with_values(U(u0.values, t), t=t)
        if t in [float(s) for s in snaps]:
            io.save_signal(snap_dir / f"u_{_tag(t)}", ut)
        if t not in times:
            continue
        et = wf.estimate_wf(ut, g, **kw)
        io.dump_json(out / f"wf_{_tag(t)}.json", {**et.as_dict(), "t": t})
        pushed = wf.map_wf(e0, _flow_of(cfg["hamiltonian"], t))
        dist = wf.wf_distance(et, pushed) / et.bin_width
        res.append(_check(f"wf-propagation t={t:g}", dist <= 2 + 1e-9, dist, 2.0))
        drift = abs(ut.norm() - u0.norm()) / u0.norm()
        if unitary:
            res.append(_check(f"norm-drift t={t:g}", drift <= 1e-8 * max(1.0, abs(t)), drift,
                              1e-8 * max(1.0, abs(t))))
        rows.append({"t": t, "wf_bins": et.wf_bins().tolist(), "predicted": pushed.wf_bins().tolist(),
                     "distance_bins": dist, "norm_ratio": ut.norm() / u0.norm()})
    io.dump_json(out / "report.json", {
        "experiment": "propagate", "path": path, "unitary": unitary,
        "non_unitary_note": None if unitary else "complex or non-unitary perturbation: norms are not conserved",
        "apodized": bool(cfg["initial"]["apodize"]), "wf_u0": e0.wf_bins().tolist(),
        "times": rows, "checks": res})
    return res


def exp_gabor(cfg, out: Path, ctx) -> list:
    grid = _grid(cfg)
    g = core.make_gaussian_window(grid)
    gc = cfg["gabor"]
    ham = cfg["hamiltonian"]
    if ham == "ho" or cfg["potential"]["kind"] not in ("none", "translation"):
        handle = prop.SplitStep(grid, _kinetic(ham), _potential_fn(cfg)).matrix_handle(cfg["steps_per_unit"])
    else:
        U, _ = _evolution(cfg, grid)
        handle = U
    W = gm.box_points(gc["radius"], gc["step"])
    zl = st.TFLattice.box(grid, gc["radius"], gc["radius"], gc["step"], gc["step"])
    res, fits = [], []
    for t in (float(t) for t in cfg["times"]):
        smp = gm.sample_gabor_matrix(handle, g, W, zl, t)
        chi = _flow_of(ham, t)
        fit = gm.fit_envelope(smp, chi)
        io.save_array(out / f"matrix_{_tag(t)}", smp.values, axes={"rows": "w (x-major)", "cols": "z (x-major)"},
                      meta={"t": t, "radius": gc["radius"], "step": gc["step"], "window": g.label})
        with open(out / f"shells_{_tag(t)}.csv", "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["m", "max"])
            for m, v in zip(fit.shells, fit.shell_max):
                wr.writerow([int(m), f"{v:.12e}"])
        res.append(_check(f"rows-within-box t={t:g}", not smp.flagged_rows, len(smp.flagged_rows), 0))
        res.append(_check(f"envelope-violations t={t:g}", fit.violations == 0, fit.violations, 0))
        wrong_kind = gc["wrong_flow"]
        chi_w = flow.FlowMap("identity", t) if wrong_kind == "identity" else _flow_of(wrong_kind, t)
        rep = gm.wrongflow_falsification(smp, chi, chi_w)
        res.append(_check(f"wrong-flow-falsified t={t:g}", rep.falsified, rep.s_true - rep.s_wrong, 1.0))
        entry = {"t": t, "envelope": fit.as_dict(), "wrong_flow": rep.as_dict()}
        if ham == "ho" and cfg["potential"]["kind"] == "none":
            d = gm.displacement(smp, chi)
            err = float(np.max(np.abs(np.abs(smp.values) - 2 ** -0.5 * np.exp(-np.pi / 2 * d * d))))
            res.append(_check(f"ho-closed-form t={t:g}", err <= gc["closed_form_tol"], err, gc["closed_form_tol"]))
            entry["closed_form_error"] = err
        if ham == "free" and cfg["potential"]["kind"] == "none":
            eps = gm.fit_gaussian_envelope(smp, chi)
            res.append(_check(f"gaussian-envelope t={t:g}", eps > 0, eps, 0.0))
            entry["gaussian_eps"] = eps
        fits.append(entry)
    io.dump_json(out / "report.json", {"experiment": "gabor-matrix", "hamiltonian": ham,
                                       "potential": cfg["potential"], "fits": fits, "checks": res})
    return res


def exp_dyson(cfg, out: Path, ctx) -> list:
    grid = _grid(cfg)
    u0 = _initial(cfg, grid)
    u0 = u0.with_values(u0.values / u0.norm())
    ham, pot = cfg["hamiltonian"], cfg["potential"]
    A = prop.EigenEvolution(grid, _kinetic(ham), prop.ho_potential if ham == "ho" else None)
    if pot["kind"] == "sin_mu":
        Bv = prop.sin_potential(pot["mu"], pot["coupling"])(grid.x).astype(complex)
    else:
        Bv = pot["coupling"] * np.exp(2j * np.pi * pot["xi0"] * grid.x)
    dc = cfg["dyson"]
    ref = prop.SplitStep(grid, _kinetic(ham), _potential_fn(cfg))
    res, rows = [], []
    for t in (float(t) for t in cfg["times"]):
        r = prop.dyson_phillips_apply(u0, t, A, prop.multiplication_operator(Bv),
                                      prop.DysonSpec(dc["n_terms"], dc["quad_points"]))
        ref_vals = ref.step_values(u0.values, t, max(dc["reference_steps"], prop.min_steps(t)))
        max_b = float(np.max(np.abs(Bv)))
        n = dc["n_terms"]
        err = core.l2_norm(r.signal.values - ref_vals, grid)
        tol = 10 * (t * max_b) ** (n + 1) / float(np.prod(np.arange(1, n + 2)))
        res.append(_check(f"dyson-vs-split-step t={t:g}", err <= tol, err, tol))
        rows.append({"t": t, "error": err, "bound": tol, "term_norms": list(r.term_norms), "max_B": max_b})
        io.save_signal(out / f"dyson_{_tag(t)}", r.signal)
    io.dump_json(out / "report.json", {"experiment": "dyson", "sign": "(+i)^n", "rows": rows,
                                       "unitary": _unitary(cfg), "checks": res})
    return res


def _suite_worker(args):
    criterion, out = args
    r = checks.run_check(criterion)
    d = r.as_dict()
    d.pop("runtime_s")
    sub = Path(out) / f"criterion-{criterion}"
    sub.mkdir(parents=True, exist_ok=True)
    io.dump_json(sub / "report.json", d)
    return criterion, r.name, r.passed, r.runtime


def exp_suite(cfg, out: Path, ctx) -> list:
    crit = sorted(cfg["criteria"])
    jobs = [(c, str(out)) for c in crit]
    if ctx["jobs"] > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=ctx["jobs"]) as ex:
            results = list(ex.map(_suite_worker, jobs))
    else:
        results = [_suite_worker(j) for j in jobs]
    res = []
    for c, name, passed, runtime in sorted(results):
        print(f"criterion {c} {name}: {'PASS' if passed else 'FAIL'} ({runtime:.1f}s)", file=sys.stderr)
        res.append(_check(f"criterion-{c}:{name}", passed, report=f"criterion-{c}/report.json"))
    return res


EXPERIMENTS = {"stft": exp_stft, "wavefront": exp_wavefront, "flow": exp_flow,
               "propagate": exp_propagate, "gabor-matrix": exp_gabor, "dyson": exp_dyson,
               "verify-suite": exp_suite}


def _manifest(out: Path, cfg, cfg_path, seed, results) -> dict:
    files = []
    for p in sorted(out.rglob("*")):
        if p.is_file() and p.name != "manifest.json":
            files.append({"path": p.relative_to(out).as_posix(), "sha256": io.sha256_file(p)})
    return {"tool": "gaborprop", "version": __version__, "experiment": cfg["experiment"],
            "input": {"path": Path(cfg_path).name, "sha256": io.sha256_file(cfg_path)},
            "seed": seed, "config": cfg, "checks": results,
            "passed": all(r["passed"] for r in results), "files": files}


def _parse_times(text):
    if text is None:
        return None
    try:
        return [float(s) for s in text.split(",") if s.strip()]
    except ValueError as exc:
        raise ConfigError(f"--snapshot-times: {exc}") from exc


def run(config_path, output_dir=None, jobs=1, seed=0, snapshot_times=None) -> int:
    try:
        cfg, _ = load_config(config_path)
        snaps = _parse_times(snapshot_times)
    except ConfigError as exc:
        loc = f"{config_path}:{exc.line}" if exc.line else str(config_path)
        print(f"{loc}: error: {exc}", file=sys.stderr)
        return 2
    out = Path(output_dir or cfg.get("output_dir") or os.environ.get("TOOL_OUTPUT_DIR") or "gaborprop-output")
    out.mkdir(parents=True, exist_ok=True)
    ctx = {"jobs": max(1, int(jobs)), "seed": int(seed), "snapshot_times": snaps}
    try:
        results = EXPERIMENTS[cfg["experiment"]](cfg, out, ctx)
    except (wf.UnreliableTruncation, wf.EmptyConeShell, wf.SingularMapError, gm.UnpopulatedShells,
            core.GridError, prop.StepCountError, flow.FlowBlowup, ValueError) as exc:
        results = [_check(f"error:{type(exc).__name__}", False, message=str(exc))]
    io.dump_json(out / "manifest.json", _manifest(out, cfg, config_path, int(seed), results))
    failed = [r["name"] for r in results if not r["passed"]]
    for name in failed:
        print(f"check failed: {name}", file=sys.stderr)
    return 1 if failed else 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="gaborprop", description="Phase-space propagation experiments")
    ap.add_argument("--version", action="version", version=f"gaborprop {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run one experiment config")
    r.add_argument("config")
    r.add_argument("--output-dir", default=None)
    r.add_argument("--jobs", type=int, default=1)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--snapshot-times", default=None, help="comma-separated times to save u(t)")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "run":
        return run(args.config, args.output_dir, args.jobs, args.seed, args.snapshot_times)
    return 2


if __name__ == "__main__":
    sys.exit(main())
