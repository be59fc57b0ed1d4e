"""Schrodinger evolution ``u(t) = exp(itH) u0`` on the periodic grid.

``H = m(D) + V(x)`` with ``m`` a real Fourier multiplier and ``V`` a
multiplication potential, so ``i u_t + H u = 0``. The free particle is
``m(xi) = -4 pi^2 xi^2``; the harmonic oscillator is ``m = pi xi^2``,
``V = pi x^2`` with ground-state energy 1/2.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import fft as sfft
from scipy import linalg
from scipy.integrate import cumulative_trapezoid

from .core import GridSpec, SampledSignal, l2_norm


class StepCountError(ValueError):
    """Too few split steps for the requested time."""


def free_multiplier(xi):
    return -4 * np.pi ** 2 * np.asarray(xi) ** 2


def ho_multiplier(xi):
    return np.pi * np.asarray(xi) ** 2


def ho_potential(x):
    return np.pi * np.asarray(x) ** 2


def sin_potential(mu: float, coupling: float = 1.0):
    return lambda x: coupling * np.abs(np.sin(x)) ** mu


def perturbed_ho_potential(mu: float, coupling: float = 1.0):
    return lambda x: np.pi * np.asarray(x) ** 2 + coupling * np.abs(np.sin(x)) ** mu


def min_steps(t: float) -> int:
    return int(np.ceil(abs(t) * 200 - 1e-9))


@dataclass(frozen=True)
class EvolutionSpec:
    kinetic_multiplier: Callable
    potential: Callable | None
    t: float
    n_steps: int
    pseudo_perturbation: Callable | None = None

    def __post_init__(self):
        if self.n_steps < max(1, min_steps(self.t)):
            raise StepCountError(f"n_steps={self.n_steps} below the floor ceil(|t|*200)={min_steps(self.t)}")


def _kinetic_phase(grid: GridSpec, m, dt):
    """exp(i dt m(xi)) laid out in unshifted FFT order."""
    return sfft.ifftshift(np.exp(1j * dt * m(grid.xi)))


def _fourier_multiply(values, unshifted_mult):
    # samples are centred; ifftshift/fftshift keep the multiplier aligned with frequencies
    spec = sfft.fft(sfft.ifftshift(values, axes=-1), axis=-1)
    return sfft.fftshift(sfft.ifft(spec * unshifted_mult, axis=-1), axes=-1)


def apply_multiplier(values, grid: GridSpec, symbol_values):
    """Apply the Fourier multiplier given by its samples on ``grid.xi``."""
    return _fourier_multiply(values, sfft.ifftshift(symbol_values))


def evolve_exact_free(u0: SampledSignal, t: float) -> SampledSignal:
    """Multiply ``u0^`` by ``exp(-4 pi^2 i t xi^2)``."""
    vals = _fourier_multiply(u0.values, _kinetic_phase(u0.grid, free_multiplier, t))
    return u0.with_values(vals, t=(u0.t or 0.0) + t)


def evolve_translation_potential(u0: SampledSignal, t: float, x0: float) -> SampledSignal:
    """``exp(i t T_x0) u0``: Fourier multiplier ``exp(i t exp(-2 pi i x0 xi))``."""
    if not u0.grid.on_grid(x0):
        raise ValueError(f"x0={x0} is not a grid point")
    mult = np.exp(1j * t * np.exp(-2j * np.pi * x0 * u0.grid.xi))
    return u0.with_values(apply_multiplier(u0.values, u0.grid, mult), t=(u0.t or 0.0) + t)


def evolve_fourier_symbol(u0: SampledSignal, t: float, symbol) -> SampledSignal:
    """``exp(i t p(D)) u0`` for a (possibly complex) Fourier multiplier ``p``."""
    mult = np.exp(1j * t * symbol(u0.grid.xi))
    return u0.with_values(apply_multiplier(u0.values, u0.grid, mult), t=(u0.t or 0.0) + t)


class SplitStep:
    """Strang splitting ``exp(i dt V/2) F^-1 exp(i dt m) F exp(i dt V/2)``.

    ``potential`` may be complex; the evolution is then not unitary.
    """

    def __init__(self, grid: GridSpec, kinetic_multiplier, potential=None):
        self.grid = grid
        self.m = kinetic_multiplier
        self.V = np.zeros(grid.n_points) if potential is None else np.asarray(
            potential(grid.x), dtype=complex)

    def _factors(self, dt):
        return np.exp(0.5j * dt * self.V), _kinetic_phase(self.grid, self.m, dt)

    def step_values(self, values, t: float, n_steps: int) -> np.ndarray:
        """Evolve (..., n) sample arrays by time t in n_steps Strang steps."""
        if n_steps <= 0 or t == 0:
            return np.array(values, dtype=complex, copy=True)
        dt = t / n_steps
        half, kin = self._factors(dt)
        full = half * half
        u = np.asarray(values, dtype=complex) * half
        for k in range(n_steps):
            u = _fourier_multiply(u, kin)
            u = u * (full if k < n_steps - 1 else half)
        return u

    def step_matrix(self, dt: float) -> np.ndarray:
        """Matrix of one Strang step (acts on column vectors)."""
        eye = np.eye(self.grid.n_points, dtype=complex)
        return self.step_values(eye, dt, 1).T

    def propagator_matrix(self, t: float, n_steps: int) -> np.ndarray:
        """``S^n`` by binary powering; equals n sequential steps up to rounding."""
        S = self.step_matrix(t / n_steps)
        return np.linalg.matrix_power(S, n_steps)

    def matrix_handle(self, steps_per_unit: int = 2000):
        """Evolution handle ``(rows, t) -> rows evolved`` through powers of one step matrix.

        Suited to many right-hand sides on small grids (Gabor matrices).
        """
        cache = {}

        def U(rows, t):
            n = max(min_steps(t), int(np.ceil(abs(t) * steps_per_unit - 1e-9)), 1)
            key = (float(t), n)
            if key not in cache:
                cache[key] = self.propagator_matrix(t, n)
            return np.asarray(rows, dtype=complex) @ cache[key].T
        return U

    def __call__(self, values, t: float, steps_per_unit: int = 2000):
        n = max(min_steps(t), int(np.ceil(abs(t) * steps_per_unit - 1e-9)), 1)
        return self.step_values(values, t, n)


def evolve_split_step(u0: SampledSignal, spec: EvolutionSpec) -> SampledSignal:
    if spec.pseudo_perturbation is not None:
        raise ValueError("split-step handles multiplication potentials only")
    ss = SplitStep(u0.grid, spec.kinetic_multiplier, spec.potential)
    vals = ss.step_values(u0.values, spec.t, spec.n_steps)
    return u0.with_values(vals, t=(u0.t or 0.0) + spec.t)


class EigenEvolution:
    """Exact ``exp(itH)`` of the discretized ``H = F^-1 m F + V`` by diagonalization.

    Used as the A-evolution inside the Dyson-Phillips series and as an
    independent reference for the split-step path.
    """

    def __init__(self, grid: GridSpec, kinetic_multiplier, potential=None):
        n = grid.n_points
        self.grid = grid
        eye = np.eye(n, dtype=complex)
        K = apply_multiplier(eye, grid, kinetic_multiplier(grid.xi)).T
        H = K + (np.diag(potential(grid.x)) if potential is not None else 0)
        H = 0.5 * (H + H.conj().T)
        self.energies, self.vectors = linalg.eigh(H)

    def __call__(self, values, t: float) -> np.ndarray:
        vals = np.asarray(values, dtype=complex)
        coef = vals @ self.vectors.conj()
        return (coef * np.exp(1j * t * self.energies)) @ self.vectors.T

    def matrix(self, t: float) -> np.ndarray:
        return (self.vectors * np.exp(1j * t * self.energies)) @ self.vectors.conj().T


# --- perturbations and the Dyson-Phillips series ----------------------------

def multiplication_operator(potential_values):
    pv = np.asarray(potential_values, dtype=complex)
    return lambda u: pv * u


def modulation_operator(grid: GridSpec, xi0: float):
    ph = np.exp(2j * np.pi * xi0 * grid.x)
    return lambda u: ph * u


def conjugated_perturbation(B, s: float, evolution) -> Callable:
    """``B(s) = exp(-isA) B exp(isA)`` from an evolution handle ``(u, t) -> exp(itA) u``."""
    if s == 0:
        return B
    return lambda u: evolution(B(evolution(u, s)), -s)


@dataclass(frozen=True)
class DysonSpec:
    n_terms: int = 3
    quad_points_per_level: int = 129

    def __post_init__(self):
        if not 0 <= self.n_terms <= 4:
            raise ValueError("n_terms must lie in [0, 4]")
        if self.quad_points_per_level < 8:
            raise ValueError("need at least 8 quadrature points per level")


@dataclass(frozen=True)
class DysonResult:
    signal: SampledSignal
    q_signal: SampledSignal
    term_norms: tuple


def dyson_terms(u0_values, t: float, evolution, B, spec: DysonSpec) -> list:
    """Terms ``Q_n(t) u0``, n = 0..N, of ``Q(t) = exp(-itA) exp(itH)``.

    ``Q_n = i^n int_{t > t1 > ... > tn > 0} B(t1) ... B(tn) dt``; iterated
    trapezoid on a shared node grid: ``W_1(s) = B(s) u0``,
    ``W_k(s) = B(s) int_0^s W_{k-1}``, ``Q_n u0 = i^n int_0^t W_n``.
    """
    if t < 0:
        raise ValueError("Dyson-Phillips expansion implemented for t >= 0")
    u0 = np.asarray(u0_values, dtype=complex)
    terms = [u0.copy()]
    if spec.n_terms == 0 or t == 0:
        return terms + [np.zeros_like(u0)] * spec.n_terms
    s = np.linspace(0.0, t, spec.quad_points_per_level)

    def B_at(vecs):
        # vecs[j] -> B(s_j) vecs[j]
        fwd = np.stack([evolution(v, sj) for v, sj in zip(vecs, s)])
        bu = np.stack([B(v) for v in fwd])
        return np.stack([evolution(v, -sj) for v, sj in zip(bu, s)])

    W = B_at(np.broadcast_to(u0, (s.size, u0.size)))
    for n in range(1, spec.n_terms + 1):
        terms.append((1j) ** n * np.trapezoid(W, s, axis=0))
        if n < spec.n_terms:
            inner = cumulative_trapezoid(W, s, axis=0, initial=0)
            W = B_at(inner)
    return terms


def dyson_phillips_apply(u0: SampledSignal, t: float, evolution, B, spec: DysonSpec) -> DysonResult:
    """``exp(itH) u0 ~ exp(itA) sum_{n<=N} Q_n(t) u0``."""
    terms = dyson_terms(u0.values, t, evolution, B, spec)
    q = np.sum(terms, axis=0)
    out = evolution(q, t)
    norms = tuple(l2_norm(v, u0.grid) for v in terms)
    return DysonResult(u0.with_values(out, t=t), u0.with_values(q, label="Q(t)u0", t=t), norms)
