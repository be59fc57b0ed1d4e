"""Gabor wave front set estimates from STFT decay along phase-space cones (d = 1).

The unit circle is split into ``n_bins`` equal arcs centred on the angles
``2 pi k / n_bins``. For each arc the STFT magnitude is reduced over dyadic
shells ``2^m <= |z| < 2^(m+1)`` between ``inner_radius`` and ``R_max``.

* smooth mode: an arc is in the set when the decay exponent between the two
  outermost shell maxima is below ``r_threshold``;
* weighted mode: an arc is in the set when the median ratio of consecutive
  weighted shell sums ``sum |V_g f|^p <z>^(pr) dx dxi`` is at least
  ``ratio_threshold``.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from .core import GridSpec, SampledSignal, Window
from .flow import FlowMap, flow_apply
from .kernels import binned_max_sum, cone_shell_reduce
from .stft import TFArray, TFLattice, stft


class EmptyConeShell(ValueError):
    """A cone/shell intersection holds no lattice points."""


class UnreliableTruncation(ValueError):
    """The window leaks more than the tolerated mass past the sampled box."""


class SingularMapError(ValueError):
    """The flow sends a direction to the origin."""


R_HOM = 100.0
TRUNCATION_TOL = 1e-6


@dataclass(frozen=True)
class Cone:
    direction: np.ndarray
    half_angle: float

    def __post_init__(self):
        d = np.asarray(self.direction, dtype=float)
        if abs(np.linalg.norm(d) - 1.0) > 1e-12:
            raise ValueError("cone direction must be a unit vector")
        if not 0 < self.half_angle <= np.pi / 2:
            raise ValueError("half_angle must lie in (0, pi/2]")
        object.__setattr__(self, "direction", d)

    @classmethod
    def from_angle(cls, theta: float, half_angle: float) -> "Cone":
        return cls(np.array([np.cos(theta), np.sin(theta)]), half_angle)

    def contains(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        rad = np.linalg.norm(pts, axis=-1)
        cosang = (pts @ self.direction) / np.maximum(rad, 1e-300)
        return (rad > 0) & (cosang >= np.cos(self.half_angle) - 1e-15)


@dataclass(frozen=True)
class ShellProfile:
    shells: np.ndarray
    maxima: np.ndarray
    sums: np.ndarray
    counts: np.ndarray

    def as_rows(self):
        return [(int(m), float(a), float(s), int(c))
                for m, a, s, c in zip(self.shells, self.maxima, self.sums, self.counts)]


def _shell_range(inner_radius: float, outer_radius: float):
    m_lo = int(np.floor(np.log2(inner_radius) + 1e-12))
    m_hi = int(np.ceil(np.log2(outer_radius) - 1e-12)) - 1
    return m_lo, m_hi - m_lo + 1


def cone_shell_profile(F: TFArray, cone: Cone, p: float = np.inf, r: float = 0.0,
                       inner_radius: float = 2.0, outer_radius: float | None = None) -> ShellProfile:
    """Per dyadic shell: max of ``|F|`` (all p) and the weighted cell-sum (finite p)."""
    lat = F.lattice
    R = outer_radius or float(min(np.abs(lat.x_points).max(), np.abs(lat.xi_points).max()))
    if R < 32:
        raise ValueError("lattice must reach radius 32")
    if inner_radius < 2:
        raise ValueError("inner_radius must be at least 2")
    X, XI = np.meshgrid(lat.x_points, lat.xi_points, indexing="ij")
    pts = np.stack([X, XI], axis=-1).reshape(-1, 2)
    rad = np.hypot(pts[:, 0], pts[:, 1])
    mag = np.abs(F.values).ravel()
    m_lo, n_sh = _shell_range(inner_radius, R)
    inside = cone.contains(pts) & (rad >= inner_radius) & (rad < R)
    m = np.floor(np.log2(np.where(inside, rad, 1.0))).astype(np.int64) - m_lo
    labels = np.where(inside & (m >= 0) & (m < n_sh), m, -1)
    mx, _, cnt = binned_max_sum(labels, mag, n_sh)
    if np.any(cnt == 0):
        raise EmptyConeShell("cone narrower than the angular lattice resolution")
    sums = np.zeros(n_sh)
    if np.isfinite(p):
        w = (mag ** p) * (1 + rad * rad) ** (p * r / 2) * lat.cell
        _, sums, _ = binned_max_sum(labels, w, n_sh)
    return ShellProfile(np.arange(m_lo, m_lo + n_sh), mx, sums, cnt)


@dataclass(frozen=True)
class WFEstimate:
    n_bins: int
    scores: np.ndarray
    exponents: np.ndarray
    in_wf: np.ndarray
    mode: str
    r_param: float
    p_param: float
    inner_radius: float
    R_max: float
    threshold: float
    shell_maxima: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        for name in ("scores", "exponents", "in_wf"):
            a = np.asarray(getattr(self, name))
            if a.shape != (self.n_bins,):
                raise ValueError(f"{name} must have one entry per bin")
        if not np.all(np.isfinite(self.scores)):
            raise ValueError("scores must be finite")
        object.__setattr__(self, "in_wf", np.asarray(self.in_wf, dtype=bool))

    @property
    def bin_width(self) -> float:
        return 2 * np.pi / self.n_bins

    @property
    def angles(self) -> np.ndarray:
        return np.arange(self.n_bins) * self.bin_width

    @property
    def directions(self) -> np.ndarray:
        return np.column_stack([np.cos(self.angles), np.sin(self.angles)])

    def wf_bins(self) -> np.ndarray:
        return np.nonzero(self.in_wf)[0]

    def arcs(self) -> list:
        """Maximal runs of adjacent in-set bins as ``(first, last)`` (wrapping)."""
        on = self.in_wf
        n = self.n_bins
        if on.all():
            return [(0, n - 1)]
        if not on.any():
            return []
        start = int(np.argmin(on))  # an off bin: begin scanning after it
        arcs, run = [], None
        for k in range(1, n + 1):
            b = (start + k) % n
            if on[b] and run is None:
                run = b
            elif not on[b] and run is not None:
                arcs.append((run, (b - 1) % n))
                run = None
        return arcs

    def with_bins(self, in_wf) -> "WFEstimate":
        return WFEstimate(self.n_bins, self.scores, self.exponents, np.asarray(in_wf, bool),
                          self.mode, self.r_param, self.p_param, self.inner_radius, self.R_max,
                          self.threshold, self.shell_maxima)

    def as_dict(self) -> dict:
        bins = []
        for k in range(self.n_bins):
            bins.append({"index": k, "angle": float(self.angles[k]),
                         "direction": [float(v) for v in self.directions[k]],
                         "score": float(self.scores[k]),
                         "exponent_hat": _finite_or_none(self.exponents[k]),
                         "in_wf": bool(self.in_wf[k])})
        return {"mode": self.mode, "n_bins": self.n_bins, "r_param": self.r_param,
                "p_param": _finite_or_none(self.p_param), "inner_radius": self.inner_radius,
                "R_max": self.R_max, "threshold": self.threshold,
                "threshold_note": "engineering heuristic, calibrated on known signals",
                "arcs": [list(a) for a in self.arcs()], "bins": bins}


def _finite_or_none(v):
    v = float(v)
    return v if np.isfinite(v) else None


def wf_lattice(grid: GridSpec, R_max: float = 64.0, x_step: float = 0.25,
               xi_step: float = 1.0 / 16) -> TFLattice:
    return TFLattice.box(grid, R_max, R_max, x_step, xi_step)


def truncation_mass(g: Window, R_max: float) -> float:
    """Relative window mass that a shift by up to ``R_max`` pushes past the grid.

    Spatially the window must fit inside ``|x| <= L/2 - R_max``; spectrally
    inside ``|xi| <= nyquist - R_max``.
    """
    grid = g.grid
    vals = g.values
    tot = np.sum(np.abs(vals) ** 2)
    room_x = grid.extent / 2 - R_max
    room_xi = grid.nyquist - R_max
    if room_x <= 0 or room_xi <= 0:
        return 1.0
    out_x = np.sum(np.abs(vals[np.abs(grid.x) > room_x]) ** 2) / tot
    spec = np.fft.fftshift(np.fft.fft(np.fft.ifftshift(vals)))
    out_xi = np.sum(np.abs(spec[np.abs(grid.xi) > room_xi]) ** 2) / np.sum(np.abs(spec) ** 2)
    return float(max(out_x, out_xi))


def estimate_wf(f: SampledSignal, g: Window, mode: str = "smooth", *, r_threshold: float = 6.0,
                p: float = 2.0, r: float = 0.0, ratio_threshold: float = 0.9,
                n_bins: int = 64, R_max: float = 64.0, inner_radius: float = 2.0,
                floor_rel: float = 1e-10, lattice: TFLattice | None = None) -> WFEstimate:
    if n_bins < 16:
        raise ValueError("n_bins must be at least 16")
    if R_max / inner_radius < 8:
        raise ValueError("R_max / inner_radius must be at least 8")
    if mode not in ("smooth", "weighted"):
        raise ValueError(f"unknown mode {mode!r}")
    leak = truncation_mass(g, R_max)
    if leak > TRUNCATION_TOL:
        raise UnreliableTruncation(f"window mass {leak:.2e} beyond the sampled box at R_max={R_max:g}")

    lat = lattice or wf_lattice(f.grid, R_max)
    F = stft(f, g, lat)
    m_lo, n_sh = _shell_range(inner_radius, R_max)
    pp = np.inf if mode == "smooth" else float(p)
    mx, sums, cnt = cone_shell_reduce(lat.x_points, lat.xi_points, np.ascontiguousarray(F.magnitude()),
                                      n_bins, inner_radius, R_max, m_lo, n_sh, pp, r, lat.cell)
    if np.any(cnt == 0):
        raise EmptyConeShell("some bin/shell cell holds no lattice points")

    floor = floor_rel * max(float(mx.max()), 1e-300)
    with np.errstate(divide="ignore", invalid="ignore"):
        tail = np.log2(mx[:, -2] / mx[:, -1])
    tail = np.where(mx[:, -1] <= floor, np.inf, tail)
    exponents = tail

    if mode == "smooth":
        in_wf = exponents < r_threshold
        scores = np.minimum(exponents, 1e6)
        threshold = r_threshold
    else:
        # sums scale like |F|^p, so the amplitude floor enters to the power p
        sfloor = floor_rel ** pp * max(float(sums.max()), 1e-300)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratios = sums[:, 1:] / sums[:, :-1]
        ratios = np.where((sums[:, :-1] > sfloor) & (sums[:, 1:] > sfloor), ratios, 0.0)
        scores = np.median(ratios, axis=1)
        in_wf = scores >= ratio_threshold
        threshold = ratio_threshold
    return WFEstimate(n_bins, scores, exponents, in_wf, mode, float(r), float(pp),
                      float(inner_radius), float(R_max), float(threshold), mx)


def angle_bin(theta, n_bins: int) -> np.ndarray:
    w = 2 * np.pi / n_bins
    return np.floor((np.mod(theta, 2 * np.pi) + w / 2) / w).astype(int) % n_bins


def map_wf(est: WFEstimate, chi: FlowMap) -> WFEstimate:
    """Push each in-set direction through ``chi`` at radius R_HOM and re-bin."""
    idx = est.wf_bins()
    out = np.zeros(est.n_bins, dtype=bool)
    if idx.size:
        img = flow_apply(chi, R_HOM * est.directions[idx])
        rad = np.linalg.norm(img, axis=-1)
        if np.any(rad <= 1e-12 * R_HOM):
            raise SingularMapError("chi maps a direction to the origin")
        out[angle_bin(np.arctan2(img[:, 1], img[:, 0]), est.n_bins)] = True
    return est.with_bins(out)


def wf_distance(a: WFEstimate, b: WFEstimate) -> float:
    """Symmetric Hausdorff distance (radians) between the in-set bin centres."""
    if a.n_bins != b.n_bins:
        raise ValueError("estimates must use the same number of bins")
    A, B = a.angles[a.in_wf], b.angles[b.in_wf]
    if A.size == 0 and B.size == 0:
        return 0.0
    if A.size == 0 or B.size == 0:
        return float(np.pi)
    d = np.abs(A[:, None] - B[None, :]) % (2 * np.pi)
    d = np.minimum(d, 2 * np.pi - d)
    return float(max(d.min(axis=1).max(), d.min(axis=0).max()))


def write_wf_json(path, est: WFEstimate, extra: dict | None = None) -> None:
    doc = est.as_dict()
    if extra:
        doc.update(extra)
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)


def write_wf_csv(path, est: WFEstimate) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["angle", "score", "in_wf"])
        for th, s, w in zip(est.angles, est.scores, est.in_wf):
            wr.writerow([f"{th:.12e}", f"{s:.12e}", int(w)])
