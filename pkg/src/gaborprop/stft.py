"""Short-time Fourier transform on phase-space lattices.

``V_g f(x, xi) = dx * sum_v f(v) conj(g(v - x)) exp(-2 pi i xi v)``, i.e. the
continuum convention with the phase referred to the absolute position ``v``.
Each lattice row is one FFT of the windowed segment around ``x``; the factor
``exp(-2 pi i xi x)`` restores the absolute phase.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import fft as sfft
from scipy.signal import fftconvolve

from .core import GridError, GridSpec, SampledSignal, Window, inner

_CHUNK = 1 << 22


class PartialLatticeError(ValueError):
    """The adjoint was requested on a lattice that does not cover the grid."""


class DegenerateWindowPair(ValueError):
    """``<gamma, g1>`` vanishes, so the window-change bound is void."""


@dataclass(frozen=True)
class TFLattice:
    x_points: np.ndarray
    xi_points: np.ndarray

    def __post_init__(self):
        xs = np.asarray(self.x_points, dtype=float)
        xis = np.asarray(self.xi_points, dtype=float)
        if xs.ndim != 1 or xis.ndim != 1 or xs.size == 0 or xis.size == 0:
            raise ValueError("lattice axes must be nonempty 1-D arrays")
        if np.any(np.diff(xs) <= 0) or np.any(np.diff(xis) <= 0):
            raise ValueError("lattice axes must be strictly increasing")
        xs.flags.writeable = False
        xis.flags.writeable = False
        object.__setattr__(self, "x_points", xs)
        object.__setattr__(self, "xi_points", xis)

    @property
    def shape(self):
        return (self.x_points.size, self.xi_points.size)

    @property
    def cell(self) -> float:
        """Riemann cell area (uniform spacing assumed)."""
        dx = self.x_points[1] - self.x_points[0] if self.x_points.size > 1 else 1.0
        dxi = self.xi_points[1] - self.xi_points[0] if self.xi_points.size > 1 else 1.0
        return float(dx * dxi)

    def points(self) -> np.ndarray:
        """All lattice points as an (n, 2) array, x-major."""
        X, XI = np.meshgrid(self.x_points, self.xi_points, indexing="ij")
        return np.column_stack([X.ravel(), XI.ravel()])

    def check_on_grid(self, grid: GridSpec):
        if not grid.on_grid(self.x_points, "x"):
            raise GridError("lattice x points are not grid points")
        if not grid.on_grid(self.xi_points, "xi"):
            raise GridError("lattice xi points are not dual-grid points")
        if self.x_points[0] < grid.x[0] - 1e-12 or self.x_points[-1] > grid.x[-1] + 1e-12:
            raise GridError("lattice x range exceeds the grid")
        if self.xi_points[0] < grid.xi[0] - 1e-12 or self.xi_points[-1] > grid.xi[-1] + 1e-12:
            raise GridError("lattice xi range exceeds the dual grid")

    def is_full(self, grid: GridSpec) -> bool:
        return (self.x_points.size == grid.n_points and self.xi_points.size == grid.n_points
                and np.allclose(self.x_points, grid.x) and np.allclose(self.xi_points, grid.xi))

    @classmethod
    def full(cls, grid: GridSpec) -> "TFLattice":
        return cls(grid.x.copy(), grid.xi.copy())

    @classmethod
    def box(cls, grid: GridSpec, x_max, xi_max, x_step=None, xi_step=None) -> "TFLattice":
        """Symmetric box lattice; steps are rounded to multiples of the grid spacings."""
        def axis(limit, step, base):
            k = max(1, int(round((step or base) / base)))
            n = int(np.floor(limit / (k * base) + 1e-9))
            return np.arange(-n, n + 1) * k * base
        return cls(axis(x_max, x_step, grid.dx), axis(xi_max, xi_step, grid.dxi))


@dataclass(frozen=True)
class TFArray:
    lattice: TFLattice
    values: np.ndarray
    window_label: str = ""

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.complex128)
        if vals.shape != self.lattice.shape:
            raise ValueError(f"values shape {vals.shape} != lattice shape {self.lattice.shape}")
        if not np.all(np.isfinite(vals)):
            raise ValueError("STFT values must be finite")
        object.__setattr__(self, "values", vals)

    def magnitude(self) -> np.ndarray:
        return np.abs(self.values)


def segment_length(g: Window, xi_points) -> int:
    """Power-of-two FFT length per row.

    The segment must hold the window's numerical support and its frequency
    spacing ``1/(M dx)`` must divide every requested frequency.
    """
    grid = g.grid
    need = 2.0 * g.support_radius()
    xis = np.asarray(xi_points, dtype=float)
    m = 8
    while m < grid.n_points:
        span = m * grid.dx
        if span >= need:
            q = xis * span
            if np.all(np.abs(q - np.rint(q)) <= 1e-9 * np.maximum(1.0, np.abs(q))):
                return m
        m *= 2
    return grid.n_points


def stft_rows(values: np.ndarray, g: Window, lat: TFLattice, seg: int | None = None) -> np.ndarray:
    """STFT of one or more sample vectors (..., n) on ``lat``; returns (..., nx, nxi)."""
    grid = g.grid
    n = grid.n_points
    values = np.asarray(values, dtype=np.complex128)
    lead = values.shape[:-1]
    flat = values.reshape(-1, n)
    seg = seg or segment_length(g, lat.xi_points)
    half = seg // 2

    offs = np.arange(seg) - half
    centre = grid.index_of(lat.x_points)
    win_idx = (n // 2 + offs) % n
    gwin = np.conj(g.values[win_idx])

    k = np.rint(lat.xi_points * seg * grid.dx).astype(np.int64) % seg
    phase = np.exp(-2j * np.pi * np.outer(lat.x_points, lat.xi_points))

    nx = lat.x_points.size
    out = np.empty((flat.shape[0], nx, lat.xi_points.size), dtype=np.complex128)
    rows_per = max(1, _CHUNK // seg)
    sample_idx = (centre[:, None] + offs[None, :]) % n
    for b in range(flat.shape[0]):
        for start in range(0, nx, rows_per):
            sl = slice(start, min(nx, start + rows_per))
            block = flat[b][sample_idx[sl]] * gwin[None, :]
            spec = sfft.fft(sfft.ifftshift(block, axes=-1), axis=-1)
            out[b, sl] = spec[:, k] * phase[sl] * grid.dx
    return out.reshape(lead + out.shape[1:])


def stft(f: SampledSignal, g: Window, lat: TFLattice) -> TFArray:
    if f.grid != g.grid:
        raise GridError(f"signal grid {f.grid} differs from window grid {g.grid}")
    lat.check_on_grid(f.grid)
    return TFArray(lat, stft_rows(f.values, g, lat), g.label)


def stft_direct(f: SampledSignal, g: Window, lat: TFLattice) -> np.ndarray:
    """Reference quadrature ``sum_v f(v) conj(g(v-x)) exp(-2 pi i xi v) dx`` (O(n) per point)."""
    grid = f.grid
    n = grid.n_points
    v = grid.x
    out = np.empty(lat.shape, dtype=np.complex128)
    kern = np.exp(-2j * np.pi * np.outer(lat.xi_points, v))
    for i, x in enumerate(lat.x_points):
        k = int(np.rint(x / grid.dx))
        gs = np.roll(g.values, k)
        out[i] = kern @ (f.values * np.conj(gs)) * grid.dx
    return out


def stft_adjoint(F: TFArray, g: Window) -> SampledSignal:
    """Riemann sum ``sum F(x, xi) pi(x, xi) g dx dxi`` over the full lattice."""
    grid = g.grid
    if not F.lattice.is_full(grid):
        raise PartialLatticeError("the adjoint needs every grid point in x and every frequency in xi")
    n = grid.n_points
    # row j: sum_k F(x_j, xi_k) exp(2 pi i xi_k v) = n * ifft_centered
    rows = n * sfft.fftshift(sfft.ifft(sfft.ifftshift(F.values, axes=1), axis=1), axes=1)
    acc = np.zeros(n, dtype=np.complex128)
    for j in range(n):
        acc += rows[j] * np.roll(g.values, j - n // 2)
    return SampledSignal(grid, acc * grid.dx * grid.dxi, "V*F")


def stft_invert(F: TFArray, g: Window) -> SampledSignal:
    rec = stft_adjoint(F, g)
    return rec.with_values(rec.values / g.l2_norm ** 2, label="inverse-stft")


@dataclass(frozen=True)
class WindowChangeReport:
    max_violation: float
    lhs_max: float
    rhs_min_on_support: float
    pairing: complex
    n_points: int

    @property
    def holds(self) -> bool:
        return self.max_violation <= 1e-8


def _kernel_half_width(gamma: Window, g0: Window, dx: float, dxi: float) -> tuple:
    """Lattice half-widths (in steps) beyond which ``|V_g0 gamma|`` is below 1e-17 of its peak."""
    grid = g0.grid
    kx_max = int(np.floor(grid.x[-1] / dx + 1e-9))
    kxi_max = int(np.floor(grid.xi[-1] / dxi + 1e-9))
    kx, kxi = min(4, kx_max), min(4, kxi_max)
    while True:
        klat = TFLattice(np.arange(-kx, kx + 1) * dx, np.arange(-kxi, kxi + 1) * dxi)
        b = np.abs(stft(gamma.signal, g0, klat).values)
        tiny = 1e-17 * b.max()
        grow_x = max(b[0].max(), b[-1].max()) > tiny and kx < kx_max
        grow_xi = max(b[:, 0].max(), b[:, -1].max()) > tiny and kxi < kxi_max
        if not (grow_x or grow_xi):
            return kx, kxi, b
        if grow_x:
            kx = min(2 * kx, kx_max)
        if grow_xi:
            kxi = min(2 * kxi, kxi_max)


def _padded_axis(points, step, k, lo, hi):
    n_lo = min(k, int(np.floor((points[0] - lo) / step + 1e-9)))
    n_hi = min(k, int(np.floor((hi - points[-1]) / step + 1e-9)))
    ext = np.concatenate([points[0] - step * np.arange(n_lo, 0, -1), points,
                          points[-1] + step * np.arange(1, n_hi + 1)])
    return ext, n_lo


def window_change_check(f: SampledSignal, g0: Window, g1: Window, gamma: Window,
                        lat: TFLattice | None = None) -> WindowChangeReport:
    """Evaluate ``|V_g0 f| <= (|V_g1 f| * |V_g0 gamma|) / |<gamma, g1>|`` on a lattice.

    The convolution is a Riemann sum with cell ``dx_lat * dxi_lat``; ``|V_g1 f|``
    is sampled on the lattice padded by the numerical reach of the kernel (and
    clipped to the grid), so no wraparound and no missing mass near the edges.
    """
    pairing = inner(gamma.signal, g1.signal)
    if abs(pairing) <= 1e-8:
        raise DegenerateWindowPair(f"|<gamma, g1>| = {abs(pairing):.3e}")
    grid = f.grid
    if lat is None:
        lat = TFLattice.box(grid, grid.extent / 4, min(grid.nyquist / 2, 8.0), 0.125, 0.125)
    lhs = np.abs(stft(f, g0, lat).values)
    dx = lat.x_points[1] - lat.x_points[0]
    dxi = lat.xi_points[1] - lat.xi_points[0]
    kx, kxi, b = _kernel_half_width(gamma, g0, dx, dxi)
    xs, ox = _padded_axis(lat.x_points, dx, kx, grid.x[0], grid.x[-1])
    xis, oxi = _padded_axis(lat.xi_points, dxi, kxi, grid.xi[0], grid.xi[-1])
    a = np.abs(stft(f, g1, TFLattice(xs, xis)).values)
    conv = fftconvolve(a, b, mode="full") * dx * dxi
    nx, nxi = lat.shape
    conv = conv[ox + kx: ox + kx + nx, oxi + kxi: oxi + kxi + nxi]
    rhs = np.maximum(conv, 0.0) / abs(pairing)
    viol = float(np.max(lhs - rhs))
    supp = lhs > 1e-12 * max(lhs.max(), 1e-300)
    rhs_min = float(rhs[supp].min()) if np.any(supp) else 0.0
    return WindowChangeReport(max(viol, 0.0), float(lhs.max()), rhs_min, pairing, lhs.size)
