"""Numerical acceptance checks, one function per criterion.

Every check returns a :class:`CheckResult`; the test suite and the CLI
``verify-suite`` experiment both call these.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import core, flow, gabormatrix as gm, modspace, propagator as prop, stft as st, wavefront as wf


@dataclass
class CheckResult:
    criterion: int
    name: str
    passed: bool
    measured: float
    tolerance: float
    details: dict = field(default_factory=dict)
    runtime: float = 0.0
    bound: str = ""

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        need = self.bound or f"tolerance {self.tolerance:.4g}"
        return (f"[{tag}] criterion {self.criterion} {self.name}: measured={self.measured:.4g} "
                f"required: {need} ({self.runtime:.1f}s)")

    def as_dict(self) -> dict:
        return {"criterion": self.criterion, "name": self.name, "passed": bool(self.passed),
                "measured": float(self.measured), "tolerance": float(self.tolerance),
                "runtime_s": float(self.runtime), "bound": self.bound, "details": self.details}


def _timed(fn):
    def wrapper(*a, **kw):
        t0 = time.perf_counter()
        res = fn(*a, **kw)
        res.runtime = time.perf_counter() - t0
        return res
    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


def chirp_closed_form(c, x, xi):
    return (1 + c * c) ** -0.25 * np.exp(-np.pi * (xi - c * x) ** 2 / (1 + c * c))


@_timed
def check_chirp_stft(cs=(1.0, -2.0), n_points=2048, extent=64.0) -> CheckResult:
    """|V_g chirp(c)| against its closed form, Gaussian window e^{-pi x^2}."""
    grid = core.GridSpec(n_points, extent)
    g = core.make_gaussian_window(grid)
    lat = st.TFLattice.box(grid, 6.0, 12.0, 0.125, 0.125)
    X, XI = np.meshgrid(lat.x_points, lat.xi_points, indexing="ij")
    errs = {}
    for c in cs:
        F = st.stft(core.make_test_signal("chirp", grid, c=c), g, lat)
        errs[str(c)] = float(np.max(np.abs(F.magnitude() - chirp_closed_form(c, X, XI))))
    worst = max(errs.values())
    return CheckResult(1, "chirp-stft-closed-form", worst <= 1e-6, worst, 1e-6,
                       {"sup_error_by_c": errs, "lattice": [list(lat.shape), 0.125]},
                       bound="sup error <= 1e-6 for c in {1, -2}")


def ho_gabor_sample(t, potential=prop.ho_potential, n_points=1024, extent=32.0,
                    steps_per_unit=2000, radius=6.0, step=0.5, handle=None):
    grid = core.GridSpec(n_points, extent)
    g = core.make_gaussian_window(grid)
    if handle is None:
        handle = prop.SplitStep(grid, prop.ho_multiplier, potential).matrix_handle(steps_per_unit)
    W = gm.box_points(radius, step)
    zl = st.TFLattice.box(grid, radius, radius, step, step)
    return gm.sample_gabor_matrix(handle, g, W, zl, t), handle


@_timed
def check_ho_gabor_matrix(times=(0.3, 1.0, 2.5)) -> CheckResult:
    """Sampled |k(t, w, z)| of the oscillator against 2^{-1/2} exp(-pi/2 |z - chi_t(w)|^2)."""
    errs, flagged, handle = {}, {}, None
    for t in times:
        smp, handle = ho_gabor_sample(t, handle=handle)
        d = gm.displacement(smp, flow.closed_form_ho(t))
        errs[str(t)] = float(np.max(np.abs(np.abs(smp.values) - 2 ** -0.5 * np.exp(-np.pi / 2 * d * d))))
        flagged[str(t)] = len(smp.flagged_rows)
    worst = max(errs.values())
    ok = worst <= 5e-3 and not any(flagged.values())
    return CheckResult(2, "ho-gabor-matrix", ok, worst, 5e-3,
                       {"sup_error_by_t": errs, "flagged_rows": flagged, "n_points": 1024,
                        "steps_per_unit": 2000, "lattice": "|w|,|z| <= 6 step 0.5"},
                       bound="sup error <= 5e-3 at t in {0.3, 1, 2.5}")


@_timed
def check_envelope_perturbed(times=(0.5, 1.0), mu=3.0) -> CheckResult:
    """Envelope C <z - chi_t(w)>^{-s} for V = pi x^2 + |sin x|^mu, plus wrong-flow controls."""
    details, ok, s_min, handle = {}, True, np.inf, None
    for t in times:
        smp, handle = ho_gabor_sample(t, potential=prop.perturbed_ho_potential(mu), handle=handle)
        chi = flow.closed_form_ho(t)
        fit = gm.fit_envelope(smp, chi)
        wrong = {}
        for label, chi_w in (("identity", flow.FlowMap("identity", t)),
                             ("free", flow.closed_form_free(t))):
            rep = gm.wrongflow_falsification(smp, chi, chi_w)
            wrong[label] = rep.as_dict()
            ok &= rep.falsified
        ok &= fit.violations == 0 and fit.s_hat >= 2 and not smp.flagged_rows
        s_min = min(s_min, fit.s_hat)
        details[str(t)] = {"s_hat": fit.s_hat, "C_hat": fit.C_hat, "violations": fit.violations,
                           "s_anchored": fit.s_anchored, "wrong_flow": wrong}
    return CheckResult(3, "envelope-nonsmooth-potential", bool(ok), float(s_min), 2.0, details,
                       bound="min s_hat >= 2, zero violations, wrong-flow drop >= 1")


def propagation_cases():
    """(label, u0 builder, evolution (u0, t) -> u(t), flow builder)."""
    def free_delta():
        grid = core.GridSpec(2 ** 20, 4096.0)
        u0 = core.make_test_signal("delta", grid)
        return u0, lambda u, t: prop.evolve_exact_free(u, t), flow.closed_form_free

    def ho_constant():
        grid = core.GridSpec(65536, 256.0)
        u0 = core.apodize(core.make_test_signal("constant", grid))
        ss = prop.SplitStep(grid, prop.ho_multiplier, prop.ho_potential)
        return u0, lambda u, t: u.with_values(ss(u.values, t, steps_per_unit=400), t=t), flow.closed_form_ho

    def perturbed_chirp():
        grid = core.GridSpec(65536, 256.0)
        u0 = core.make_test_signal("gaussian_chirp", grid, c=4.0, width=16.0)
        ss = prop.SplitStep(grid, prop.ho_multiplier, prop.perturbed_ho_potential(3.0))
        return u0, lambda u, t: u.with_values(ss(u.values, t, steps_per_unit=400), t=t), flow.closed_form_ho

    return [("free/delta", free_delta), ("ho/constant", ho_constant),
            ("ho+|sin x|^3/gaussian-chirp", perturbed_chirp)]


def verify_propagation(u0, evolve, chi_of_t, times, wf_kwargs=None, n_bins=64) -> list:
    """Per time: wf_distance between WF(u(t)) and chi_t(WF(u0)), in radians and bins."""
    kw = dict(mode="weighted", p=2.0, r=0.0)
    kw.update(wf_kwargs or {})
    g = core.make_gaussian_window(u0.grid)
    e0 = wf.estimate_wf(u0, g, n_bins=n_bins, **kw)
    rows = []
    for t in times:
        et = wf.estimate_wf(evolve(u0, t), g, n_bins=n_bins, **kw)
        pushed = wf.map_wf(e0, chi_of_t(t))
        dist = wf.wf_distance(et, pushed)
        rows.append({"t": float(t), "distance": dist, "distance_bins": dist / et.bin_width,
                     "wf_u0": e0.wf_bins().tolist(), "wf_ut": et.wf_bins().tolist(),
                     "predicted": pushed.wf_bins().tolist(), "passed": dist <= 2 * et.bin_width + 1e-12})
    return rows


@_timed
def check_propagation(times=(0.5, 1.0)) -> CheckResult:
    """WF(u(t)) against chi_t(WF(u0)) for three (Hamiltonian, datum) pairs."""
    details, worst = {}, 0.0
    for label, build in propagation_cases():
        u0, evolve, chi = build()
        rows = verify_propagation(u0, evolve, chi, times)
        details[label] = rows
        worst = max(worst, max(r["distance_bins"] for r in rows))
    return CheckResult(4, "wf-propagation", worst <= 2 + 1e-9, worst, 2.0,
                       {"cases": details, "mode": "weighted p=2 r=0", "n_bins": 64},
                       bound="worst distance <= 2 bins of 64")


@_timed
def check_symbol_decay(mu=3.0, n_points=16384, extent=16.0) -> CheckResult:
    """Decay exponent of sup_x |V_g |sin x|^mu (x, zeta)| over dyadic zeta shells 4..128."""
    grid = core.GridSpec(n_points, extent)
    f = core.SampledSignal(grid, np.abs(np.sin(grid.x)) ** mu)
    xs = np.linspace(-1.1 * np.pi / 2, 1.1 * np.pi / 2, 129)
    zeta, G = modspace.stft_sup_profile(f, xs, 128.0)
    fit = modspace.fit_decay(zeta, G, m_min=2, m_max=6)
    ok = 3.5 <= fit.exponent_hat <= 4.5
    return CheckResult(5, "symbol-stft-decay", ok, fit.exponent_hat, 4.0,
                       {"interval": [3.5, 4.5], **fit.as_dict()},
                       bound="exponent in [3.5, 4.5]")


@_timed
def check_flow_algebra(seed=0) -> CheckResult:
    """Symplecticity, group law and numeric-vs-closed-form oscillator flow."""
    rng = np.random.default_rng(seed)
    spec = flow.harmonic_oscillator()
    pts = rng.uniform(-1, 1, size=(100, 2))
    pts *= (10 * np.sqrt(rng.uniform(size=100)) / np.linalg.norm(pts, axis=1))[:, None]
    times = np.linspace(-3, 3, 13)
    sym = max(flow.symplectic_defect(flow.numeric_flow(spec, t), w) for t in (-3.0, -0.7, 1.3, 3.0)
              for w in pts[:25])
    grp = max(flow.group_law_check(spec, a, b, pts).max_deviation
              for a, b in ((0.7, 0.7), (1.5, -2.0), (-1.2, -1.8)))
    dev = max(float(np.max(np.abs(flow.flow_apply(flow.numeric_flow(spec, t), pts)
                                  - flow.flow_apply(flow.closed_form_ho(t), pts)))) for t in times)
    ok = sym <= 1e-6 and grp <= 1e-7 and dev <= 1e-8
    return CheckResult(6, "flow-algebra", ok, max(sym / 1e-6, grp / 1e-7, dev / 1e-8), 1.0,
                       {"symplectic_defect": sym, "group_law": grp, "numeric_vs_closed": dev,
                        "note": "measured is the worst ratio to its tolerance"},
                       bound="each defect / its tolerance <= 1")


@_timed
def check_dyson(t=0.2, coupling=0.1, mu=3.0, n_terms=3, n_points=512, extent=16.0) -> CheckResult:
    """Truncated Dyson-Phillips series against a fine split-step reference."""
    grid = core.GridSpec(n_points, extent)
    u0 = core.make_test_signal("gaussian", grid, x0=np.pi / 2)
    u0 = u0.with_values(u0.values / u0.norm())
    A = prop.EigenEvolution(grid, prop.ho_multiplier, prop.ho_potential)
    Bv = prop.sin_potential(mu, coupling)(grid.x)
    res = prop.dyson_phillips_apply(u0, t, A, prop.multiplication_operator(Bv), prop.DysonSpec(n_terms))
    ref = prop.SplitStep(grid, prop.ho_multiplier, prop.perturbed_ho_potential(mu, coupling))
    ref_vals = ref.step_values(u0.values, t, 20000)
    max_b = float(np.max(np.abs(Bv)))
    err = core.l2_norm(res.signal.values - ref_vals, grid) / u0.norm()
    tol = 10 * (t * max_b) ** (n_terms + 1) / np.prod(np.arange(1, n_terms + 2))
    norms = np.array(res.term_norms) / u0.norm()
    # factorial test: beta_n = (n+1) |Q_{n+1}| / (t |Q_n|) should stay within a factor 3
    beta = np.arange(1, n_terms + 1) * norms[1:] / (t * norms[:-1])
    bounded = bool(np.all(norms[1:] <= 3 * (t * max_b) ** np.arange(1, n_terms + 1)
                          / np.cumprod(np.arange(1, n_terms + 1))))
    steady = bool(beta.max() <= 3 * beta.min())
    ok = err <= tol and bounded and steady
    return CheckResult(7, "dyson-phillips", ok, err, tol,
                       {"term_norms": norms.tolist(), "beta": beta.tolist(), "max_B": max_b,
                        "factorial_bound": bounded, "ratio_within_3": steady,
                        "sign_convention": "Q_n carries (+i)^n for i u_t + H u = 0"},
                       bound="error <= 10 (t max|B|)^4 / 4! ||u0||, term norms factorial")


@_timed
def check_inversion_unitarity() -> CheckResult:
    """STFT inversion, split-step unitarity, ground-state phase and the HO period."""
    small = core.GridSpec(256, 16.0)
    g = core.make_gaussian_window(small)
    f = core.make_test_signal("gaussian_chirp", small, c=1.5, width=2.0)
    rec = st.stft_invert(st.stft(f, g, st.TFLattice.full(small)), g)
    inv = core.l2_norm(rec.values - f.values, small) / f.norm()

    grid = core.GridSpec(512, 16.0)
    ss = prop.SplitStep(grid, prop.ho_multiplier, prop.ho_potential)
    u0 = core.make_test_signal("ho_ground_state", grid)
    u1 = ss.step_values(u0.values, 1.0, 2000)
    phase = core.l2_norm(u1 - np.exp(0.5j) * u0.values, grid) / u0.norm()

    probe = core.make_test_signal("gaussian", grid, x0=1.5, xi0=1.0, width=0.8)
    t_long = 2 * np.pi
    uT = ss(probe.values, t_long)
    drift = abs(core.l2_norm(uT, grid) - probe.norm()) / probe.norm() / t_long
    period = max(core.l2_norm(ss(v.values, t_long) + v.values, grid) / v.norm() for v in (u0, probe))

    ok = inv <= 1e-9 and drift <= 1e-8 and phase <= 1e-4 and period <= 1e-3
    return CheckResult(8, "inversion-unitarity", ok,
                       max(inv / 1e-9, drift / 1e-8, phase / 1e-4, period / 1e-3), 1.0,
                       {"stft_inversion": inv, "unitarity_drift_per_unit_time": drift,
                        "ground_state_phase": phase, "full_period": period,
                        "note": "measured is the worst ratio to its tolerance"},
                       bound="each defect / its tolerance <= 1")


@_timed
def check_window_independence(n_points=65536, extent=256.0) -> CheckResult:
    """Smooth-mode WF estimates under Gaussian and first-Hermite windows."""
    grid = core.GridSpec(n_points, extent)
    g0 = core.make_gaussian_window(grid)
    g1 = core.make_hermite_window(grid)
    signals = {"delta": core.make_test_signal("delta", grid),
               "plane_wave": core.make_test_signal("plane_wave", grid, xi0=1.0),
               "chirp(1)": core.make_test_signal("chirp", grid, c=1.0),
               "chirp(-2)": core.make_test_signal("chirp", grid, c=-2.0)}
    details, worst = {}, 0.0
    for label, f in signals.items():
        a = wf.estimate_wf(f, g0)
        b = wf.estimate_wf(f, g1)
        d = wf.wf_distance(a, b) / a.bin_width
        worst = max(worst, d)
        details[label] = {"gaussian": a.wf_bins().tolist(), "hermite": b.wf_bins().tolist(),
                          "distance_bins": d}
    return CheckResult(9, "window-independence", worst <= 1 + 1e-9, worst, 1.0, details,
                       bound="distance <= 1 bin")


ALL_CHECKS = {
    1: check_chirp_stft,
    2: check_ho_gabor_matrix,
    3: check_envelope_perturbed,
    4: check_propagation,
    5: check_symbol_decay,
    6: check_flow_algebra,
    7: check_dyson,
    8: check_inversion_unitarity,
    9: check_window_independence,
}


def run_check(criterion: int) -> CheckResult:
    return ALL_CHECKS[criterion]()
