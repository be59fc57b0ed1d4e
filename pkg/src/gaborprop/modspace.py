"""Modulation-space norms, symbol-STFT envelopes and power-law decay fits."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import fft as sfft

from .core import GridSpec, SampledSignal, Window, make_gaussian_window
from .flow import bump
from .stft import TFLattice, stft


class UndefinedFit(ValueError):
    """Not enough nonzero dyadic shells to fit an exponent."""


class BoxTooSmall(ValueError):
    """The sampling box truncates the window by more than the tolerated mass."""


def bracket(z):
    """Japanese bracket ``<z> = (1 + |z|^2)^(1/2)`` over the last axis."""
    z = np.asarray(z, dtype=float)
    if z.ndim == 0:
        return np.sqrt(1 + z * z)
    return np.sqrt(1 + np.sum(z * z, axis=-1))


@dataclass(frozen=True)
class WeightParams:
    r: float = 0.0
    p: float = 2.0

    def __post_init__(self):
        if not np.isfinite(self.r):
            raise ValueError("weight order r must be finite")
        if not (1 <= self.p <= np.inf):
            raise ValueError("p must lie in [1, inf]")


def mod_norm(f: SampledSignal, g: Window, w: WeightParams, lat: TFLattice | None = None) -> float:
    """``(sum |V_g f|^p <z>^(pr) dz)^(1/p)`` on the lattice (sup for p = inf)."""
    lat = lat or TFLattice.full(f.grid)
    F = stft(f, g, lat).values
    if np.any(np.isnan(F)):
        raise ValueError("NaN in STFT")
    X, XI = np.meshgrid(lat.x_points, lat.xi_points, indexing="ij")
    weight = (1 + X ** 2 + XI ** 2) ** (w.r / 2)
    mag = np.abs(F)
    if np.isinf(w.p):
        return float(np.max(mag * weight))
    total = np.sum((mag * weight) ** w.p) * lat.cell
    return float(total ** (1.0 / w.p))


@dataclass(frozen=True)
class SymbolSampler:
    """Symbol sigma(x, xi) on R^2 (d = 1).

    ``factors`` marks a separable symbol ``s1(x) s2(xi)``; ``period`` is the
    x-period of the first factor when it has one.
    """
    evaluator: Callable[[np.ndarray, np.ndarray], np.ndarray]
    smoothness_label: str
    factors: tuple | None = None
    period: float | None = None

    def __call__(self, x, xi):
        return self.evaluator(np.asarray(x, dtype=float), np.asarray(xi, dtype=float))


def make_symbol(kind: str, **params):
    """Symbols used by the experiments.

    ``sin_mu(mu)``, ``homog_cutoff(h, radius)``, ``potential_only(V)`` return a
    SymbolSampler; ``example4_split(h)`` returns the pair ``(a, sigma)`` with
    ``a = (1 - phi) h`` and ``sigma = phi h``.
    """
    if kind == "sin_mu":
        mu = float(params["mu"])
        if mu <= 1:
            raise ValueError("sin_mu requires mu > 1")
        s1 = lambda x: np.abs(np.sin(x)) ** mu
        s2 = lambda xi: np.ones_like(xi)
        return SymbolSampler(lambda x, xi: s1(x) * s2(xi), f"|sin x|^{mu:g}", (s1, s2), np.pi)
    if kind == "potential_only":
        V = params["V"]
        return SymbolSampler(lambda x, xi: V(x) * np.ones_like(xi), "potential",
                             (V, lambda xi: np.ones_like(xi)), params.get("period"))
    if kind == "homog_cutoff":
        h = params["h"]
        radius = params.get("radius", 1.0)
        return SymbolSampler(lambda x, xi: h(x, xi) * bump(np.hypot(x, xi) / radius),
                             "homogeneous*cutoff")
    if kind == "example4_split":
        h = params["h"]
        a = SymbolSampler(lambda x, xi: (1 - bump(np.hypot(x, xi))) * h(x, xi), "smooth part")
        s = SymbolSampler(lambda x, xi: bump(np.hypot(x, xi)) * h(x, xi), "singular part")
        return a, s
    raise ValueError(f"unknown symbol kind {kind!r}")


def _boundary_mass(w: np.ndarray, margin: int) -> float:
    tot = np.sum(np.abs(w) ** 2)
    inner = np.sum(np.abs(w[margin:-margin]) ** 2)
    return float((tot - inner) / tot)


def stft_sup_profile(f: SampledSignal, x_points, zeta_max: float, zeta_step: float | None = None):
    """``(zeta, sup_x |V_g f(x, zeta)|)`` with the Gaussian window, sup over ``x_points``."""
    grid = f.grid
    g = make_gaussian_window(grid)
    xs = grid.x[grid.index_of(np.unique(np.asarray(x_points, dtype=float))) % grid.n_points]
    lat = TFLattice(np.unique(xs), TFLattice.box(grid, 1.0, zeta_max, None, zeta_step).xi_points)
    return lat.xi_points, np.abs(stft(f, g, lat).values).max(axis=0)


def symbol_stft_sup(sigma: SymbolSampler, grid: GridSpec, z_points, zeta_max: float,
                    zeta_step: float | None = None):
    """``G(zeta) = sup_z |V_psi sigma(z, zeta)|`` with a tensor Gaussian psi.

    Returns ``(zeta1, zeta2, G)`` with ``G`` indexed ``[zeta1, zeta2]``.
    Separable symbols use the product of two 1-D STFTs; otherwise each z is a
    2-D FFT of ``sigma * psi(. - z)`` over the box ``grid x grid``.
    """
    z_points = np.atleast_2d(np.asarray(z_points, dtype=float))
    g = make_gaussian_window(grid)
    margin = max(1, grid.n_points // 64)
    for z in z_points:
        for c in z:
            shifted = np.exp(-np.pi * (grid.x - grid.x[grid.index_of(c) % grid.n_points]) ** 2)
            if _boundary_mass(shifted, margin) > 1e-10:
                raise BoxTooSmall(f"window at {c:g} has boundary mass above 1e-10")

    if sigma.factors is not None:
        s1, s2 = sigma.factors
        lat1 = TFLattice.box(grid, grid.extent / 2, zeta_max, None, zeta_step)
        xs1 = np.unique(z_points[:, 0])
        xs2 = np.unique(z_points[:, 1])
        f1 = SampledSignal(grid, s1(grid.x).astype(complex))
        f2 = SampledSignal(grid, s2(grid.x).astype(complex))
        l1 = TFLattice(grid.x[grid.index_of(xs1) % grid.n_points], lat1.xi_points)
        l2 = TFLattice(grid.x[grid.index_of(xs2) % grid.n_points], lat1.xi_points)
        G1 = np.abs(stft(f1, g, l1).values).max(axis=0)
        G2 = np.abs(stft(f2, g, l2).values).max(axis=0)
        return lat1.xi_points, lat1.xi_points, np.outer(G1, G2)

    n = grid.n_points
    X1, X2 = np.meshgrid(grid.x, grid.x, indexing="ij")
    S = sigma(X1, X2)
    zeta = grid.xi
    keep = np.abs(zeta) <= zeta_max + 1e-12
    if zeta_step:
        q = zeta / zeta_step
        keep &= np.abs(q - np.rint(q)) < 1e-9
    G = np.zeros((keep.sum(), keep.sum()))
    for z in z_points:
        i1 = grid.index_of(z[0]) % n
        i2 = grid.index_of(z[1]) % n
        psi = np.exp(-np.pi * ((X1 - grid.x[i1]) ** 2 + (X2 - grid.x[i2]) ** 2))
        spec = sfft.fftshift(sfft.fft2(sfft.ifftshift(S * psi))) * grid.dx ** 2
        G = np.maximum(G, np.abs(spec[np.ix_(keep, keep)]))
    return zeta[keep], zeta[keep], G


@dataclass(frozen=True)
class DecayFit:
    exponent_hat: float
    constant_hat: float
    shell_range: tuple
    residual: float
    shells: np.ndarray = field(repr=False)
    shell_max: np.ndarray = field(repr=False)
    superpolynomial: bool = False
    head_exponent: float = float("nan")
    tail_exponent: float = float("nan")

    def as_dict(self) -> dict:
        return {
            "exponent_hat": self.exponent_hat,
            "constant_hat": self.constant_hat,
            "residual": self.residual,
            "superpolynomial": self.superpolynomial,
            "head_exponent": self.head_exponent,
            "tail_exponent": self.tail_exponent,
            "shells": [{"m": int(m), "max": float(v)} for m, v in zip(self.shells, self.shell_max)],
        }


def _radial_bracket(radii):
    r = np.abs(np.asarray(radii, dtype=float).ravel())
    return np.sqrt(1 + r * r)


def shell_maxima(radii, values, m_min=None, m_max=None):
    """Per-shell max over ``2^m <= <radius> < 2^(m+1)``."""
    from .kernels import binned_max_sum

    br = _radial_bracket(radii)
    vals = np.abs(np.asarray(values, dtype=float).ravel())
    m = np.floor(np.log2(br)).astype(np.int64)
    lo = int(m.min()) if m_min is None else int(m_min)
    hi = int(m.max()) if m_max is None else int(m_max)
    labels = np.where((m >= lo) & (m <= hi), m - lo, -1)
    mx, _, cnt = binned_max_sum(labels, vals, hi - lo + 1)
    return np.arange(lo, hi + 1), mx, cnt


def _slope(ms, logs):
    A = np.column_stack([ms, np.ones_like(ms)])
    coef, *_ = np.linalg.lstsq(A, logs, rcond=None)
    res = logs - A @ coef
    return -coef[0], float(np.sqrt(np.mean(res ** 2)))


def fit_decay(radii, values, m_min=None, m_max=None, floor_rel=1e-13) -> DecayFit:
    """Least-squares fit of ``log2(shell max)`` against the shell index m.

    Shells are dyadic in ``<radius>``. Shells whose max falls below
    ``floor_rel * (largest shell max)`` are dropped and mark the profile as
    super-polynomial; at least four usable shells are required.
    """
    ms, mx, cnt = shell_maxima(radii, values, m_min, m_max)
    populated = cnt > 0
    ms, mx = ms[populated], mx[populated]
    if ms.size == 0 or mx.max() <= 0:
        raise UndefinedFit("all shells are zero")
    floor = floor_rel * mx.max()
    usable = mx > floor
    if usable.sum() < 4:
        raise UndefinedFit(f"only {usable.sum()} shells above the noise floor (need 4)")
    mu, lv = ms[usable], np.log2(mx[usable])
    expo, resid = _slope(mu.astype(float), lv)
    k = max(2, min(3, mu.size // 2))
    head, _ = _slope(mu[:k].astype(float), lv[:k])
    tail, _ = _slope(mu[-k:].astype(float), lv[-k:])
    superpoly = bool((~usable).any() and usable[0]) or (tail - head) > max(1.0, 0.25 * abs(head))

    br = _radial_bracket(radii)
    vals = np.abs(np.asarray(values, dtype=float).ravel())
    in_range = (np.floor(np.log2(br)) >= mu[0]) & (np.floor(np.log2(br)) <= mu[-1])
    const = float(np.max(vals[in_range] * br[in_range] ** expo)) * (1 + 1e-12)
    return DecayFit(float(expo), const, (int(mu[0]), int(mu[-1])), resid, ms, mx,
                    superpoly, float(head), float(tail))


def peetre_holds(z, zeta, q, constant: float | None = None) -> bool:
    """``<z + zeta>^q <= c <z>^|q| <zeta>^q`` on all sample pairs.

    The default ``c = 2^(|q|/2)`` is the textbook constant for the Japanese
    bracket; with ``c = 1`` the bound fails, e.g. at ``z = zeta = (1, 0)``.
    """
    c = 2.0 ** (abs(q) / 2) if constant is None else constant
    lhs = bracket(np.asarray(z) + np.asarray(zeta)) ** q
    rhs = c * bracket(z) ** abs(q) * bracket(zeta) ** q
    return bool(np.all(lhs <= rhs * (1 + 1e-12)))
