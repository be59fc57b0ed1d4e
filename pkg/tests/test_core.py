import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gaborprop.core import (
    GridError, GridSpec, PhasePoint, SampledSignal, ShiftOutOfRange, Window, apodize,
    fourier, inverse_fourier, make_gaussian_window, make_hermite_window, make_test_signal,
    shifted_windows, smooth_step, taper, tf_shift,
)


def test_grid_rejects_bad_sizes():
    for n in (4, 100, 0):
        with pytest.raises(GridError):
            GridSpec(n, 1.0)
    with pytest.raises(GridError):
        GridSpec(64, -1.0)


def test_grid_duality():
    grid = GridSpec(1024, 32.0)
    assert grid.dx * grid.n_points == pytest.approx(32.0)
    assert grid.dual().dx == pytest.approx(grid.dxi)
    assert grid.x[grid.n_points // 2] == 0.0
    assert grid.xi[0] == pytest.approx(-grid.nyquist)


def test_signal_validation(small_grid):
    with pytest.raises(GridError):
        SampledSignal(small_grid, np.zeros(10))
    bad = np.zeros(small_grid.n_points, complex)
    bad[3] = np.nan
    with pytest.raises(ValueError):
        SampledSignal(small_grid, bad)


def test_gaussian_window_values():
    grid = GridSpec(1024, 32.0)
    g = make_gaussian_window(grid)
    assert g.values[grid.n_points // 2] == 1.0
    assert g.l2_norm == pytest.approx(2 ** -0.25, abs=1e-8)
    assert make_gaussian_window(grid, normalize=True).l2_norm == pytest.approx(1.0, abs=1e-12)


def test_window_norm_must_match(small_grid):
    sig = make_gaussian_window(small_grid).signal
    with pytest.raises(ValueError):
        Window(sig, l2_norm=3.0)
    with pytest.raises(ValueError):
        Window(sig.with_values(np.zeros(small_grid.n_points)))


def test_hermite_orthogonal_to_gaussian():
    grid = GridSpec(1024, 32.0)
    g, h = make_gaussian_window(grid), make_hermite_window(grid, 1)
    assert abs(grid.dx * np.vdot(g.values, h.values)) < 1e-12
    assert h.l2_norm == pytest.approx(1.0)


def test_test_signals():
    grid = GridSpec(1024, 32.0)
    d = make_test_signal("delta", grid)
    assert np.sum(d.values).real * grid.dx == pytest.approx(1.0)
    assert make_test_signal("chirp", grid, c=1.0).values[grid.n_points // 2] == 1.0
    assert make_test_signal("ho_ground_state", grid).norm() == pytest.approx(1.0, abs=1e-8)
    with pytest.raises(ValueError):
        make_test_signal("nonsense", grid)
    with pytest.raises(GridError):
        make_test_signal("delta", grid, x0=0.01)


def test_fourier_of_gaussian_is_gaussian():
    grid = GridSpec(1024, 32.0)
    G = fourier(make_gaussian_window(grid).signal)
    sel = np.abs(G.grid.x) <= 8
    assert np.max(np.abs(G.values[sel] - np.exp(-np.pi * G.grid.x[sel] ** 2))) < 1e-8


def test_fourier_of_delta_and_plane_wave():
    grid = GridSpec(512, 16.0)
    D = fourier(make_test_signal("delta", grid))
    assert np.max(np.abs(D.values - 1)) < 1e-10
    xi0 = 2.0
    P = fourier(make_test_signal("plane_wave", grid, xi0=xi0))
    peak = np.argmax(np.abs(P.values))
    assert grid.xi[peak] == pytest.approx(xi0)
    others = np.delete(np.abs(P.values), peak)
    assert others.max() < 1e-9 * np.abs(P.values[peak])


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_fourier_roundtrip(seed):
    grid = GridSpec(128, 8.0)
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(128) + 1j * rng.standard_normal(128)
    f = SampledSignal(grid, v)
    back = inverse_fourier(fourier(f), grid)
    assert np.linalg.norm(back.values - v) <= 1e-12 * np.linalg.norm(v)


def test_inverse_fourier_needs_dual_grid():
    grid = GridSpec(256, 8.0)
    f = make_test_signal("constant", grid)
    with pytest.raises(GridError):
        inverse_fourier(f, grid)


def test_tf_shift_identity_and_translation(small_grid):
    f = make_test_signal("gaussian", small_grid, x0=1.0)
    assert np.array_equal(tf_shift(f, PhasePoint(0.0, 0.0)).values, f.values)
    d = make_test_signal("delta", small_grid)
    moved = tf_shift(d, PhasePoint(2.0, 0.0))
    assert np.allclose(moved.values, make_test_signal("delta", small_grid, x0=2.0).values)
    with pytest.raises(ShiftOutOfRange):
        tf_shift(f, PhasePoint(small_grid.extent, 0.0))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.floats(-7.9, 7.9), st.floats(-5, 5))
def test_tf_shift_is_unitary(seed, x0, eta):
    grid = GridSpec(256, 16.0)
    rng = np.random.default_rng(seed)
    f = SampledSignal(grid, rng.standard_normal(256) + 1j * rng.standard_normal(256))
    assert tf_shift(f, PhasePoint(x0, eta)).norm() == pytest.approx(f.norm(), rel=1e-13)


def test_commutation_phase(small_grid):
    f = make_test_signal("gaussian", small_grid, width=2.0)
    x0, eta = 1.5, 0.75
    mt = tf_shift(f, PhasePoint(x0, eta)).values
    m = np.exp(2j * np.pi * eta * small_grid.x)
    tm = np.roll(f.values * m, int(round(x0 / small_grid.dx)))
    assert np.max(np.abs(mt - np.exp(2j * np.pi * x0 * eta) * tm)) < 1e-12


def test_shifted_windows_match_tf_shift(small_grid):
    g = make_gaussian_window(small_grid)
    pts = np.array([[0.0, 0.0], [1.0, -2.0], [-3.0, 0.5]])
    rows = shifted_windows(g, pts)
    for row, p in zip(rows, pts):
        assert np.allclose(row, tf_shift(g.signal, PhasePoint(*p)).values, atol=1e-14)


def test_smooth_step_and_taper(small_grid):
    s = smooth_step(np.array([-1.0, 0.0, 0.5, 1.0, 2.0]))
    assert s[0] == 0 and s[1] == 0 and s[3] == 1 and s[4] == 1
    assert s[2] == pytest.approx(0.5)
    w = taper(small_grid)
    assert w[small_grid.n_points // 2] == 1.0
    assert w[0] == 0.0
    f = apodize(make_test_signal("constant", small_grid))
    assert abs(f.values[0]) == 0.0
