"""Hamiltonian flows chi_t of degree-2 symbols.

The flow solves ``2 pi x' = -grad_xi a``, ``2 pi xi' = grad_x a`` with
``(x, xi)(0) = (y, eta)``. Points are arrays whose last axis has length 2d,
ordered ``(x_1..x_d, xi_1..xi_d)``.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .core import PhasePoint, smooth_step


class FlowBlowup(FloatingPointError):
    """The numerical trajectory left the finite range."""


@dataclass(frozen=True)
class HamiltonianSpec:
    dim: int
    eval: Callable[[np.ndarray], np.ndarray]
    grad: Callable[[np.ndarray], np.ndarray]
    cutoff_radius: float = 0.0
    homogeneity_degree: int = 2
    label: str = ""

    def vector_field(self, u: np.ndarray) -> np.ndarray:
        d = self.dim
        gr = self.grad(u)
        return np.concatenate([-gr[..., d:], gr[..., :d]], axis=-1) / (2 * np.pi)


def harmonic_oscillator(dim: int = 1) -> HamiltonianSpec:
    """``a(x, xi) = pi (|x|^2 + |xi|^2)``."""
    return HamiltonianSpec(
        dim,
        lambda u: np.pi * np.sum(u * u, axis=-1),
        lambda u: 2 * np.pi * u,
        label="harmonic_oscillator",
    )


def free_particle(dim: int = 1) -> HamiltonianSpec:
    """``a(x, xi) = -4 pi^2 |xi|^2`` (the symbol of the Laplacian)."""
    def grad(u):
        g = np.zeros_like(u)
        g[..., dim:] = -8 * np.pi ** 2 * u[..., dim:]
        return g
    return HamiltonianSpec(dim, lambda u: -4 * np.pi ** 2 * np.sum(u[..., dim:] ** 2, axis=-1),
                           grad, label="free_particle")


def bump(rad):
    """Smooth cutoff: 1 for rad <= 1, 0 for rad >= 2."""
    return 1.0 - smooth_step(np.asarray(rad, dtype=float) - 1.0)


def _bump_derivative(rad, h=1e-6):
    return (bump(rad + h) - bump(rad - h)) / (2 * h)


def quartic_root(scale: float = 1.0) -> HamiltonianSpec:
    """``a = (1 - phi(z/scale)) (x^4 + xi^4)^(1/2)`` in d = 1, smoothed near the origin."""
    def h(u):
        return np.sqrt(u[..., 0] ** 4 + u[..., 1] ** 4)

    def hgrad(u):
        hv = np.maximum(h(u), 1e-300)
        return 2 * u ** 3 / hv[..., None]

    def ev(u):
        rad = np.linalg.norm(u, axis=-1) / scale
        return (1 - bump(rad)) * h(u)

    def grad(u):
        rad = np.linalg.norm(u, axis=-1)
        cut = 1 - bump(rad / scale)
        dcut = -_bump_derivative(rad / scale) / scale
        unit = u / np.maximum(rad, 1e-300)[..., None]
        return cut[..., None] * hgrad(u) + (dcut * h(u))[..., None] * unit

    return HamiltonianSpec(1, ev, grad, cutoff_radius=2 * scale, label="quartic_root")


@dataclass(frozen=True)
class FlowMap:
    """chi_t, either closed form (``free``, ``ho``) or RK4 on a HamiltonianSpec."""
    kind: str
    t: float
    dim: int = 1
    spec: HamiltonianSpec | None = None
    step: float = 1e-3
    label: str = field(default="")

    def __post_init__(self):
        if self.kind not in ("free", "ho", "identity", "numeric"):
            raise ValueError(f"unknown flow kind {self.kind!r}")
        if self.kind == "numeric":
            if self.spec is None:
                raise ValueError("numeric flows need a HamiltonianSpec")
            if self.step > 1e-2:
                raise ValueError("RK4 step must be <= 1e-2")
            object.__setattr__(self, "dim", self.spec.dim)

    def __call__(self, w):
        return flow_apply(self, w)

    def at(self, t: float) -> "FlowMap":
        return FlowMap(self.kind, t, self.dim, self.spec, self.step, self.label)


def closed_form_free(t, dim=1) -> FlowMap:
    return FlowMap("free", t, dim)


def closed_form_ho(t, dim=1) -> FlowMap:
    return FlowMap("ho", t, dim)


def numeric_flow(spec: HamiltonianSpec, t, step=1e-3) -> FlowMap:
    return FlowMap("numeric", t, spec.dim, spec, step)


def _matrix(chi: FlowMap) -> np.ndarray | None:
    d, t = chi.dim, chi.t
    eye = np.eye(d)
    if chi.kind == "identity":
        return np.eye(2 * d)
    if chi.kind == "free":
        return np.block([[eye, 4 * np.pi * t * eye], [np.zeros((d, d)), eye]])
    if chi.kind == "ho":
        c, s = np.cos(t), np.sin(t)
        return np.block([[c * eye, -s * eye], [s * eye, c * eye]])
    return None


def rk4(spec: HamiltonianSpec, w: np.ndarray, t: float, step: float) -> np.ndarray:
    n = int(np.ceil(abs(t) / step - 1e-12))
    if n == 0:
        return w.copy()
    h = t / n
    u = w.astype(float, copy=True)
    f = spec.vector_field
    for _ in range(n):
        k1 = f(u)
        k2 = f(u + 0.5 * h * k1)
        k3 = f(u + 0.5 * h * k2)
        k4 = f(u + h * k3)
        u = u + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    if not np.all(np.isfinite(u)):
        raise FlowBlowup(f"non-finite state integrating {spec.label} to t={t}")
    return u


def _as_points(w):
    if isinstance(w, PhasePoint):
        return w.as_array(), True
    return np.asarray(w, dtype=float), False


def flow_apply(chi: FlowMap, w):
    """chi_t(w) for a PhasePoint or an array of points (..., 2d)."""
    arr, was_point = _as_points(w)
    M = _matrix(chi)
    out = arr @ M.T if M is not None else rk4(chi.spec, arr, chi.t, chi.step)
    return PhasePoint.from_array(out) if was_point else out


def flow_jacobian(chi: FlowMap, w) -> np.ndarray:
    arr, _ = _as_points(w)
    M = _matrix(chi)
    if M is not None:
        return M.copy()
    n = arr.size
    h = 1e-4 * max(1.0, float(np.linalg.norm(arr)))
    pts = np.concatenate([arr + h * np.eye(n), arr - h * np.eye(n)])
    img = flow_apply(chi, pts)
    return ((img[:n] - img[n:]) / (2 * h)).T


def symplectic_form(dim: int) -> np.ndarray:
    eye = np.eye(dim)
    z = np.zeros((dim, dim))
    return np.block([[z, eye], [-eye, z]])


def symplectic_defect(chi: FlowMap, w) -> float:
    J = flow_jacobian(chi, w)
    om = symplectic_form(chi.dim)
    return float(np.max(np.abs(J.T @ om @ J - om)))


@dataclass(frozen=True)
class FlowCheck:
    name: str
    max_deviation: float
    n_samples: int


def group_law_check(spec_or_kind, t, t_prime, points, step=1e-3) -> FlowCheck:
    """max |chi_t(chi_t'(w)) - chi_{t+t'}(w)| / (1 + |w|)."""
    if max(abs(t), abs(t_prime)) > 5:
        raise ValueError("group-law check limited to |t|, |t'| <= 5")
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if isinstance(spec_or_kind, HamiltonianSpec):
        mk = lambda s: numeric_flow(spec_or_kind, s, step)
    else:
        mk = lambda s: FlowMap(spec_or_kind, s, pts.shape[-1] // 2)
    lhs = flow_apply(mk(t), flow_apply(mk(t_prime), pts))
    rhs = flow_apply(mk(t + t_prime), pts)
    dev = np.linalg.norm(lhs - rhs, axis=-1) / (1 + np.linalg.norm(pts, axis=-1))
    return FlowCheck("group_law", float(dev.max()), len(pts))


def homogeneity_check(chi: FlowMap, radii, directions) -> FlowCheck:
    """max relative deviation of chi(lam w)/lam from chi(w), lam in {2, 4}."""
    dirs = np.atleast_2d(np.asarray(directions, dtype=float))
    dirs = dirs / np.linalg.norm(dirs, axis=-1, keepdims=True)
    pts = (np.asarray(radii, dtype=float)[:, None, None] * dirs[None]).reshape(-1, dirs.shape[-1])
    if chi.spec is not None and chi.spec.cutoff_radius > 0:
        if np.min(np.linalg.norm(pts, axis=-1)) < 4 * chi.spec.cutoff_radius:
            raise ValueError("radii must be at least 4x the symbol cutoff radius")
    base = flow_apply(chi, pts)
    dev = 0.0
    for lam in (2.0, 4.0):
        scaled = flow_apply(chi, lam * pts) / lam
        rel = np.linalg.norm(scaled - base, axis=-1) / np.maximum(np.linalg.norm(base, axis=-1), 1e-300)
        dev = max(dev, float(rel.max()))
    return FlowCheck("homogeneity", dev, len(pts))


def write_trace_csv(path, chi: FlowMap, starts, times) -> None:
    """Rows ``t, y, eta, x(t), xi(t)`` (d = 1)."""
    starts = np.atleast_2d(np.asarray(starts, dtype=float))
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["t", "y", "eta", "x", "xi"])
        for t in times:
            img = flow_apply(chi.at(float(t)), starts)
            for w, z in zip(starts, img):
                wr.writerow([f"{t:.12e}", f"{w[0]:.12e}", f"{w[1]:.12e}", f"{z[0]:.12e}", f"{z[1]:.12e}"])
