"""Periodic 1-D grids, sampled signals, windows and time-frequency shifts.

Conventions follow the continuum formulas used throughout the package:

* Fourier transform ``f^(xi) = int f(t) exp(-2 pi i t xi) dt``,
* time-frequency shift ``pi(x, eta) f(t) = exp(2 pi i t eta) f(t - x)``.

A grid of ``n`` points covers ``[-L/2, L/2)`` with spacing ``L/n``; its dual
frequency grid has spacing ``1/L`` and covers ``[-n/(2L), n/(2L))``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import fft as sfft


class GridError(ValueError):
    """Raised for invalid or mismatched grids."""


class ShiftOutOfRange(ValueError):
    """Raised when a translation is not representable on the periodic grid."""


@dataclass(frozen=True)
class GridSpec:
    n_points: int
    extent: float

    def __post_init__(self):
        n = self.n_points
        if not isinstance(n, (int, np.integer)) or n < 8 or n & (n - 1):
            raise GridError(f"n_points must be a power of two >= 8, got {n!r}")
        if not np.isfinite(self.extent) or self.extent <= 0:
            raise GridError(f"extent must be positive, got {self.extent!r}")
        object.__setattr__(self, "n_points", int(n))
        object.__setattr__(self, "extent", float(self.extent))

    @property
    def dx(self) -> float:
        return self.extent / self.n_points

    @property
    def dxi(self) -> float:
        return 1.0 / self.extent

    @property
    def nyquist(self) -> float:
        return self.n_points / (2.0 * self.extent)

    @cached_property
    def x(self) -> np.ndarray:
        x = (np.arange(self.n_points) - self.n_points // 2) * self.dx
        x.flags.writeable = False
        return x

    @cached_property
    def xi(self) -> np.ndarray:
        xi = (np.arange(self.n_points) - self.n_points // 2) * self.dxi
        xi.flags.writeable = False
        return xi

    def dual(self) -> "GridSpec":
        """The frequency grid viewed as a grid in its own right."""
        return GridSpec(self.n_points, self.n_points / self.extent)

    def index_of(self, x, what="x") -> np.ndarray:
        """Nearest grid index (0-based, into ``self.x``) of positions ``x``."""
        step = self.dx if what == "x" else self.dxi
        return np.rint(np.asarray(x, dtype=float) / step).astype(np.int64) + self.n_points // 2

    def on_grid(self, values, what="x", tol=1e-9) -> bool:
        step = self.dx if what == "x" else self.dxi
        q = np.asarray(values, dtype=float) / step
        return bool(np.all(np.abs(q - np.rint(q)) <= tol * np.maximum(1.0, np.abs(q))))


def _frozen(values) -> np.ndarray:
    arr = np.array(values, dtype=np.complex128)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class SampledSignal:
    grid: GridSpec
    values: np.ndarray
    label: str = ""
    t: float | None = None

    def __post_init__(self):
        vals = _frozen(self.values)
        if vals.shape != (self.grid.n_points,):
            raise GridError(
                f"expected {self.grid.n_points} samples, got shape {vals.shape}")
        if not np.all(np.isfinite(vals)):
            raise ValueError("signal samples must be finite")
        object.__setattr__(self, "values", vals)

    def norm(self) -> float:
        """Discrete L2 norm ``sqrt(dx * sum |f|^2)``."""
        return l2_norm(self.values, self.grid)

    def with_values(self, values, label=None, t=None) -> "SampledSignal":
        return SampledSignal(self.grid, values, self.label if label is None else label,
                             self.t if t is None else t)


def l2_norm(values, grid: GridSpec) -> float:
    return float(np.sqrt(grid.dx * np.sum(np.abs(values) ** 2)))


def inner(f: SampledSignal, g: SampledSignal) -> complex:
    """Discrete ``<f, g> = dx * sum f conj(g)``."""
    _check_same_grid(f.grid, g.grid)
    return complex(f.grid.dx * np.vdot(g.values, f.values))


def _check_same_grid(a: GridSpec, b: GridSpec):
    if a != b:
        raise GridError(f"grid mismatch: {a} vs {b}")


@dataclass(frozen=True)
class Window:
    signal: SampledSignal
    l2_norm: float = field(default=float("nan"))

    def __post_init__(self):
        norm = self.signal.norm()
        if norm <= 0:
            raise ValueError("window must be nonzero")
        if np.isfinite(self.l2_norm) and abs(self.l2_norm - norm) > 1e-12 * norm:
            raise ValueError("l2_norm does not match the samples")
        object.__setattr__(self, "l2_norm", norm)

    @property
    def grid(self) -> GridSpec:
        return self.signal.grid

    @property
    def values(self) -> np.ndarray:
        return self.signal.values

    @property
    def label(self) -> str:
        return self.signal.label

    def support_radius(self, rel_tol=1e-17) -> float:
        """Smallest r with |g(x)| <= rel_tol * max|g| for |x| > r."""
        mag = np.abs(self.values)
        big = np.nonzero(mag > rel_tol * mag.max())[0]
        x = self.grid.x
        return float(max(abs(x[big[0]]), abs(x[big[-1]])) + self.grid.dx)


@dataclass(frozen=True)
class PhasePoint:
    x: np.ndarray
    xi: np.ndarray

    def __post_init__(self):
        x = np.atleast_1d(np.asarray(self.x, dtype=float))
        xi = np.atleast_1d(np.asarray(self.xi, dtype=float))
        if x.shape != xi.shape or x.ndim != 1:
            raise ValueError("x and xi must be vectors of equal length")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(xi))):
            raise ValueError("phase point must be finite")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "xi", xi)

    @property
    def dim(self) -> int:
        return self.x.size

    def as_array(self) -> np.ndarray:
        return np.concatenate([self.x, self.xi])

    @classmethod
    def from_array(cls, z) -> "PhasePoint":
        z = np.asarray(z, dtype=float)
        d = z.size // 2
        return cls(z[:d], z[d:])


# --- windows and elementary signals ---------------------------------------

def gaussian(x, width=1.0):
    return np.exp(-np.pi * (np.asarray(x) / width) ** 2)


def make_gaussian_window(grid: GridSpec, normalize: bool = False) -> Window:
    vals = gaussian(grid.x).astype(complex)
    if normalize:
        vals = vals / l2_norm(vals, grid)
    return Window(SampledSignal(grid, vals, "gaussian" + ("-unit" if normalize else "")))


def make_hermite_window(grid: GridSpec, order: int = 1, normalize: bool = True) -> Window:
    """Hermite function ``H_n(sqrt(2 pi) x) exp(-pi x^2)``, orthogonal to the Gaussian for n >= 1."""
    from numpy.polynomial.hermite import hermval

    coef = np.zeros(order + 1)
    coef[order] = 1.0
    vals = (hermval(np.sqrt(2 * np.pi) * grid.x, coef) * gaussian(grid.x)).astype(complex)
    if normalize:
        vals = vals / l2_norm(vals, grid)
    return Window(SampledSignal(grid, vals, f"hermite{order}"))


def smooth_step(t):
    """C-infinity step: 0 for t <= 0, 1 for t >= 1."""
    t = np.asarray(t, dtype=float)

    def f(s):
        out = np.zeros_like(s)
        pos = s > 0
        out[pos] = np.exp(-1.0 / s[pos])
        return out

    a, b = f(t), f(1.0 - t)
    return a / (a + b)


def taper(grid: GridSpec, fraction: float = 0.05) -> np.ndarray:
    """Smooth apodization: 1 in the interior, falling to 0 over the outer ``fraction`` of each side."""
    half = grid.extent / 2
    ramp = fraction * grid.extent
    dist = half - np.abs(grid.x)
    return smooth_step(dist / ramp)


def apodize(f: SampledSignal, fraction: float = 0.05) -> SampledSignal:
    return f.with_values(f.values * taper(f.grid, fraction), label=f.label + "+taper")


def make_test_signal(kind: str, grid: GridSpec, **params) -> SampledSignal:
    """Elementary signals.

    kinds: ``delta(x0)``, ``plane_wave(xi0)``, ``chirp(c)``, ``ho_ground_state``,
    ``constant``, ``gaussian(x0, xi0, width)``, ``gaussian_chirp(c, width)``.
    """
    x = grid.x
    if kind == "delta":
        x0 = params.get("x0", 0.0)
        if not grid.on_grid(x0):
            raise GridError(f"delta position {x0} is not on the grid")
        vals = np.zeros(grid.n_points, complex)
        vals[grid.index_of(x0) % grid.n_points] = 1.0 / grid.dx
        label = f"delta({x0:g})"
    elif kind == "plane_wave":
        xi0 = params.get("xi0", 0.0)
        if not grid.on_grid(xi0, "xi"):
            raise GridError(f"frequency {xi0} is not on the dual grid")
        vals = np.exp(2j * np.pi * xi0 * x)
        label = f"plane_wave({xi0:g})"
    elif kind == "chirp":
        c = params.get("c", 1.0)
        vals = np.exp(1j * np.pi * c * x ** 2)
        label = f"chirp({c:g})"
    elif kind == "ho_ground_state":
        vals = 2 ** 0.25 * gaussian(x).astype(complex)
        label = "ho_ground_state"
    elif kind == "constant":
        vals = np.full(grid.n_points, params.get("value", 1.0), complex)
        label = "constant"
    elif kind == "gaussian":
        x0, xi0, width = params.get("x0", 0.0), params.get("xi0", 0.0), params.get("width", 1.0)
        vals = gaussian(x - x0, width) * np.exp(2j * np.pi * xi0 * x)
        label = f"gaussian({x0:g},{xi0:g},{width:g})"
    elif kind == "gaussian_chirp":
        c, width = params.get("c", 1.0), params.get("width", 8.0)
        vals = np.exp(1j * np.pi * c * x ** 2) * gaussian(x, width)
        label = f"gaussian_chirp({c:g},{width:g})"
    else:
        raise ValueError(f"unknown signal kind {kind!r}")
    return SampledSignal(grid, vals, label)


# --- Fourier transform and shifts ----------------------------------------

def fft_centered(values, axis=-1, workers=None):
    """``sum_j v_j exp(-2 pi i k j / n)`` with both j and k centred at 0."""
    return sfft.fftshift(sfft.fft(sfft.ifftshift(values, axes=axis), axis=axis, workers=workers),
                         axes=axis)


def ifft_centered(values, axis=-1, workers=None):
    return sfft.fftshift(sfft.ifft(sfft.ifftshift(values, axes=axis), axis=axis, workers=workers),
                         axes=axis)


def fourier_values(values, grid: GridSpec, axis=-1):
    return grid.dx * fft_centered(values, axis=axis)


def inverse_fourier_values(values, grid: GridSpec, axis=-1):
    return grid.n_points * grid.dxi * ifft_centered(values, axis=axis)


def fourier(f: SampledSignal) -> SampledSignal:
    """Samples of ``f^`` on the dual grid (returned as a signal on ``grid.dual()``)."""
    return SampledSignal(f.grid.dual(), fourier_values(f.values, f.grid), f"F[{f.label}]")


def inverse_fourier(F: SampledSignal, grid: GridSpec) -> SampledSignal:
    if F.grid != grid.dual():
        raise GridError("spectrum does not live on the dual of the target grid")
    return SampledSignal(grid, inverse_fourier_values(F.values, grid), f"F^-1[{F.label}]")


def tf_shift(f: SampledSignal, z: PhasePoint) -> SampledSignal:
    """``M_eta T_x f``; x is snapped to the nearest grid point, translation is circular."""
    x0 = float(z.x[0])
    eta = float(z.xi[0])
    if abs(x0) >= f.grid.extent / 2:
        raise ShiftOutOfRange(f"|x| = {abs(x0)} exceeds half the extent {f.grid.extent / 2}")
    k = int(np.rint(x0 / f.grid.dx))
    vals = np.roll(f.values, k) * np.exp(2j * np.pi * eta * f.grid.x)
    return f.with_values(vals, label=f"pi({x0:g},{eta:g}){f.label}")


def shifted_windows(g: Window, points) -> np.ndarray:
    """Rows ``pi(z_k) g`` for an (n, 2) array of on-grid points."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    grid = g.grid
    if np.any(np.abs(pts[:, 0]) >= grid.extent / 2):
        raise ShiftOutOfRange("translation exceeds half the extent")
    k = np.rint(pts[:, 0] / grid.dx).astype(np.int64)
    idx = (np.arange(grid.n_points)[None, :] - k[:, None]) % grid.n_points
    mod = np.exp(2j * np.pi * pts[:, 1:2] * grid.x[None, :])
    return g.values[idx] * mod
