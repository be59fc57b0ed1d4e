"""Sampled Gabor matrices ``k(t, w, z) = <U(t) pi(w) g, pi(z) g>`` and envelope fits."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import Window, fourier_values, shifted_windows
from .flow import FlowMap, flow_apply
from .kernels import binned_max_sum
from .stft import TFLattice, stft_rows


class UnpopulatedShells(ValueError):
    """Fewer than four displacement shells carry samples."""


@dataclass(frozen=True)
class GaborMatrixSample:
    t: float
    w_points: np.ndarray
    z_points: np.ndarray
    values: np.ndarray
    window_label: str = ""
    flagged_rows: tuple = ()

    def __post_init__(self):
        if self.values.shape != (len(self.w_points), len(self.z_points)):
            raise ValueError("matrix shape does not match the lattices")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("Gabor matrix entries must be finite")


def box_points(radius=6.0, step=0.5, disk=False) -> np.ndarray:
    ax = np.arange(-radius, radius + 1e-9, step)
    X, XI = np.meshgrid(ax, ax, indexing="ij")
    pts = np.column_stack([X.ravel(), XI.ravel()])
    if disk:
        pts = pts[np.hypot(pts[:, 0], pts[:, 1]) <= radius + 1e-9]
    return pts


def edge_mass(values, grid, fraction=0.05) -> np.ndarray:
    """Relative L2 mass of each row in the outer ``fraction`` of space or frequency."""
    vals = np.atleast_2d(values)
    total = np.sum(np.abs(vals) ** 2, axis=-1)
    near_edge = np.abs(grid.x) > (0.5 - fraction) * grid.extent
    spec = fourier_values(vals, grid)
    near_nyq = np.abs(grid.xi) > (1 - 2 * fraction) * grid.nyquist
    out = np.sum(np.abs(vals[:, near_edge]) ** 2, axis=-1) / total
    out = np.maximum(out, np.sum(np.abs(spec[:, near_nyq]) ** 2, axis=-1)
                     / np.sum(np.abs(spec) ** 2, axis=-1))
    return out


def sample_gabor_matrix(U, g: Window, w_points, z_lattice: TFLattice, t: float,
                        mass_tol: float = 1e-8) -> GaborMatrixSample:
    """Evolve every ``pi(w) g`` with ``U(rows, t)`` and STFT-sample at the z lattice.

    ``U`` maps an (n_w, n) array of samples to the evolved samples.
    """
    w_points = np.atleast_2d(np.asarray(w_points, dtype=float))
    rows = shifted_windows(g, w_points)
    evolved = U(rows, t)
    flagged = tuple(int(i) for i in np.nonzero(edge_mass(evolved, g.grid) > mass_tol)[0])
    k = stft_rows(evolved, g, z_lattice)
    return GaborMatrixSample(t, w_points, z_lattice.points(), k.reshape(len(w_points), -1),
                             g.label, flagged)


@dataclass(frozen=True)
class EnvelopeFit:
    s_hat: float
    C_hat: float
    violations: int
    chi: FlowMap
    shells: np.ndarray = field(repr=False)
    shell_max: np.ndarray = field(repr=False)
    s_anchored: float = float("nan")
    superpolynomial: bool = False

    def as_dict(self) -> dict:
        return {
            "s_hat": self.s_hat, "C_hat": self.C_hat, "violations": self.violations,
            "s_anchored": self.s_anchored, "superpolynomial": self.superpolynomial,
            "flow": {"kind": self.chi.kind, "t": self.chi.t},
            "shells": [{"m": int(m), "max": float(v)} for m, v in zip(self.shells, self.shell_max)],
        }


def displacement(sample: GaborMatrixSample, chi: FlowMap) -> np.ndarray:
    img = flow_apply(chi, sample.w_points)
    diff = sample.z_points[None, :, :] - img[:, None, :]
    return np.sqrt(np.sum(diff * diff, axis=-1))


def fit_envelope(sample: GaborMatrixSample, chi: FlowMap, floor_rel: float = 1e-12) -> EnvelopeFit:
    """Envelope ``C <z - chi(w)>^(-s)`` from dyadic shells ``2^m <= <z - chi(w)> < 2^(m+1)``.

    ``s_hat`` is the least-squares slope of ``-log2(shell max)`` against m
    over the shells above ``floor_rel * (largest shell max)``; a shell under
    the floor marks the profile super-polynomial. ``C_hat`` is the smallest
    constant dominating every sample at exponent ``s_hat``. ``s_anchored``
    is the largest exponent whose power law through the innermost shell
    stays above all resolved shells.
    """
    rows = np.setdiff1d(np.arange(len(sample.w_points)), np.asarray(sample.flagged_rows, int))
    dist = displacement(sample, chi)[rows]
    mag = np.abs(sample.values[rows]).ravel()
    br = np.sqrt(1 + dist * dist).ravel()
    m = np.floor(np.log2(br)).astype(np.int64)
    n_sh = int(m.max()) + 1
    mx, _, cnt = binned_max_sum(m, mag, n_sh)
    populated = cnt > 0
    if populated.sum() < 4:
        raise UnpopulatedShells(f"only {populated.sum()} displacement shells populated")
    shells = np.arange(n_sh)[populated]
    smax = mx[populated]
    floor = floor_rel * smax.max()
    above = smax > floor
    if above.sum() >= 2:
        A = np.column_stack([shells[above], np.ones(above.sum())])
        s_hat = float(-np.linalg.lstsq(A, np.log2(smax[above]), rcond=None)[0][0])
    else:
        s_hat = float(np.log2(smax[0] / floor) / shells[-1])
    cand = [np.log2(smax[0] / v) / s for s, v in zip(shells[1:], smax[1:]) if v > floor]
    s_anch = float(max(0.0, min(cand))) if cand else float("inf")
    superpoly = bool((~above[1:]).any())

    C_hat = float(np.max(mag * br ** s_hat)) * (1 + 1e-12)
    viol = int(np.sum(mag > C_hat * br ** (-s_hat)))
    return EnvelopeFit(s_hat, C_hat, viol, chi, shells, smax, s_anch, superpoly)


@dataclass(frozen=True)
class FalsificationReport:
    s_true: float
    s_wrong: float
    falsified: bool
    identical_flows: bool
    margin: float = 1.0

    def as_dict(self) -> dict:
        return {"s_true": self.s_true, "s_wrong": self.s_wrong, "falsified": self.falsified,
                "identical_flows": self.identical_flows,
                "status": "falsified" if self.falsified else "not falsified"}


def wrongflow_falsification(sample: GaborMatrixSample, chi_true: FlowMap, chi_wrong: FlowMap,
                            margin: float = 1.0) -> FalsificationReport:
    """The envelope against a wrong flow must lose at least ``margin`` in s_hat."""
    same = bool(np.allclose(flow_apply(chi_true, sample.w_points),
                            flow_apply(chi_wrong, sample.w_points), atol=1e-12))
    s_true = fit_envelope(sample, chi_true).s_hat
    s_wrong = fit_envelope(sample, chi_wrong).s_hat
    falsified = (not same) and s_wrong < s_true - margin
    return FalsificationReport(s_true, s_wrong, falsified, same, margin)


def lattice_compose(k1: np.ndarray, k2: np.ndarray, cell: float) -> np.ndarray:
    """Discrete composition: matrix of U1 U2 from sampled matrices (rows w, columns z).

    ``k_{U1 U2}(w, z) = int k_{U2}(w, u) k_{U1}(u, z) du / ||g||^2`` when the
    window has unit norm; the caller divides by the norm if not.
    """
    return (k2 @ k1) * cell


def fit_gaussian_envelope(sample: GaborMatrixSample, chi: FlowMap, floor_rel: float = 1e-10,
                          min_distance: float = 0.5) -> float:
    """Largest ``eps`` with ``|k| <= max|k| exp(-eps |z - chi(w)|^2)`` on the resolved samples."""
    rows = np.setdiff1d(np.arange(len(sample.w_points)), np.asarray(sample.flagged_rows, int))
    d = displacement(sample, chi)[rows].ravel()
    mag = np.abs(sample.values[rows]).ravel()
    C = mag.max()
    use = (mag > floor_rel * C) & (d >= min_distance)
    if not use.any():
        return float("inf")
    return float(np.min(np.log(C / mag[use]) / d[use] ** 2))
