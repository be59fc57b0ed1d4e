"""On-disk formats: JSON headers with little-endian float64 sidecars."""
from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from .core import GridSpec, SampledSignal
from .stft import TFArray, TFLattice

_LE = "<f8"


def _interleave(values) -> np.ndarray:
    v = np.ascontiguousarray(np.asarray(values, dtype=np.complex128))
    return v.view(np.float64).astype(_LE, copy=False)


def _deinterleave(raw, shape) -> np.ndarray:
    return raw.astype(np.float64).view(np.complex128).reshape(shape)


def round_sig(x, digits: int = 12):
    """Round floats (recursively) to ``digits`` significant digits for stable output."""
    if isinstance(x, dict):
        return {k: round_sig(v, digits) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [round_sig(v, digits) for v in x]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        if not np.isfinite(x) or x == 0.0:
            return x if np.isfinite(x) else None
        return float(f"{x:.{digits}g}")
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, complex):
        return [round_sig(x.real, digits), round_sig(x.imag, digits)]
    return x


def dump_json(path, doc) -> None:
    with open(path, "w") as fh:
        json.dump(round_sig(doc), fh, indent=2, sort_keys=True)
        fh.write("\n")


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def save_signal(path, f: SampledSignal) -> Path:
    """Write ``<path>.json`` (header) and ``<path>.bin`` (interleaved re/im)."""
    path = Path(path)
    bin_path = path.with_suffix(".bin")
    _interleave(f.values).tofile(bin_path)
    header = {"n_points": f.grid.n_points, "extent": f.grid.extent, "label": f.label,
              "t": f.t, "dtype": "float64-le interleaved re,im", "data": bin_path.name}
    dump_json(path.with_suffix(".json"), header)
    return path.with_suffix(".json")


def load_signal(path) -> SampledSignal:
    path = Path(path).with_suffix(".json")
    header = json.loads(path.read_text())
    grid = GridSpec(int(header["n_points"]), float(header["extent"]))
    raw = np.fromfile(path.parent / header["data"], dtype=_LE)
    return SampledSignal(grid, _deinterleave(raw, (grid.n_points,)), header.get("label", ""),
                         header.get("t"))


def save_array(path, arr, axes=None, meta: dict | None = None) -> Path:
    """Raw row-major little-endian float64 (complex interleaved) with a JSON sidecar."""
    path = Path(path)
    a = np.asarray(arr)
    is_complex = np.iscomplexobj(a)
    raw = _interleave(a) if is_complex else np.ascontiguousarray(a, dtype=_LE)
    bin_path = path.with_suffix(".bin")
    raw.tofile(bin_path)
    side = {"shape": list(a.shape), "dtype": "float64-le", "complex_interleaved": bool(is_complex),
            "order": "row-major", "data": bin_path.name}
    if axes is not None:
        side["axes"] = axes
    if meta:
        side.update(meta)
    dump_json(path.with_suffix(".json"), side)
    return path.with_suffix(".json")


def load_array(path) -> np.ndarray:
    path = Path(path).with_suffix(".json")
    side = json.loads(path.read_text())
    raw = np.fromfile(path.parent / side["data"], dtype=_LE)
    if side["complex_interleaved"]:
        return _deinterleave(raw, side["shape"])
    return raw.astype(np.float64).reshape(side["shape"])


def save_tfarray(path, F: TFArray) -> Path:
    axes = {"x": [float(v) for v in F.lattice.x_points], "xi": [float(v) for v in F.lattice.xi_points]}
    return save_array(path, F.values, axes=axes, meta={"window": F.window_label})


def load_tfarray(path) -> TFArray:
    path = Path(path).with_suffix(".json")
    side = json.loads(path.read_text())
    vals = load_array(path)
    lat = TFLattice(np.array(side["axes"]["x"]), np.array(side["axes"]["xi"]))
    return TFArray(lat, vals, side.get("window", ""))
