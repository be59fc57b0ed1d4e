import numpy as np
import pytest

from gaborprop.core import (
    GridError, GridSpec, PhasePoint, SampledSignal, make_gaussian_window, make_hermite_window,
    make_test_signal, tf_shift,
)
from gaborprop.stft import (
    DegenerateWindowPair, PartialLatticeError, TFArray, TFLattice, stft, stft_adjoint,
    stft_direct, stft_invert, window_change_check,
)


@pytest.fixture(scope="module")
def grid():
    return GridSpec(2048, 64.0)


@pytest.fixture(scope="module")
def g(grid):
    return make_gaussian_window(grid)


@pytest.fixture(scope="module")
def lat(grid):
    return TFLattice.box(grid, 6, 6, 0.25, 0.25)


def test_lattice_validation(grid):
    with pytest.raises(ValueError):
        TFLattice(np.array([1.0, 0.0]), np.array([0.0]))
    with pytest.raises(ValueError):
        TFLattice(np.array([]), np.array([0.0]))
    with pytest.raises(GridError):
        TFLattice(np.array([0.01]), np.array([0.0])).check_on_grid(grid)


def test_tfarray_shape_check(lat):
    with pytest.raises(ValueError):
        TFArray(lat, np.zeros((2, 2)))


def test_grid_mismatch(g):
    other = make_test_signal("constant", GridSpec(64, 4.0))
    with pytest.raises(GridError):
        stft(other, g, TFLattice(np.array([0.0]), np.array([0.0])))


def test_fft_rows_agree_with_direct_quadrature():
    grid = GridSpec(256, 16.0)
    g = make_gaussian_window(grid)
    f = make_test_signal("chirp", grid, c=0.5)
    lat = TFLattice.box(grid, 4, 3, 0.5, 0.25)
    assert np.max(np.abs(stft(f, g, lat).values - stft_direct(f, g, lat))) < 1e-10


def test_stft_of_delta(grid, g, lat):
    F = stft(make_test_signal("delta", grid), g, lat).values
    expect = np.exp(-np.pi * lat.x_points ** 2)[:, None]
    assert np.max(np.abs(F - expect)) < 1e-10


def test_stft_of_constant(grid, g, lat):
    F = stft(make_test_signal("constant", grid), g, lat).values
    expect = np.exp(-np.pi * lat.xi_points ** 2)[None, :]
    assert np.max(np.abs(np.abs(F) - expect)) < 1e-8


@pytest.mark.parametrize("c", [1.0, -2.0, 0.5])
def test_stft_of_chirp(grid, g, lat, c):
    F = np.abs(stft(make_test_signal("chirp", grid, c=c), g, lat).values)
    X, XI = np.meshgrid(lat.x_points, lat.xi_points, indexing="ij")
    expect = (1 + c * c) ** -0.25 * np.exp(-np.pi * (XI - c * X) ** 2 / (1 + c * c))
    assert np.max(np.abs(F - expect)) < 1e-7


def test_constant_phase_invariance(grid, g, lat, rng):
    f = make_test_signal("gaussian", grid, x0=1.0, xi0=0.5, width=2.0)
    a = np.abs(stft(f, g, lat).values)
    b = np.abs(stft(f.with_values(np.exp(1j * rng.uniform(0, 6)) * f.values), g, lat).values)
    assert np.max(np.abs(a - b)) < 1e-13


def test_covariance(grid, g):
    f = make_test_signal("gaussian", grid, width=1.5)
    z0 = (1.0, 0.5)
    lat = TFLattice.box(grid, 4, 4, 0.25, 0.25)
    moved = TFLattice(lat.x_points + z0[0], lat.xi_points + z0[1])
    a = np.abs(stft(tf_shift(f, PhasePoint(*z0)), g, moved).values)
    b = np.abs(stft(f, g, lat).values)
    assert np.max(np.abs(a - b)) < 1e-10


def test_inversion_full_lattice():
    grid = GridSpec(128, 16.0)
    g = make_gaussian_window(grid)
    full = TFLattice.full(grid)
    for f in (make_test_signal("gaussian", grid, x0=1.0, xi0=0.5),
              make_test_signal("gaussian_chirp", grid, c=1.0, width=3.0)):
        rec = stft_invert(stft(f, g, full), g)
        assert np.linalg.norm(rec.values - f.values) <= 1e-9 * np.linalg.norm(f.values)


def test_adjoint_of_zero_and_partial_lattice():
    grid = GridSpec(64, 8.0)
    g = make_gaussian_window(grid)
    full = TFLattice.full(grid)
    zero = stft_adjoint(TFArray(full, np.zeros(full.shape)), g)
    assert not np.any(zero.values)
    part = TFLattice(grid.x[::2].copy(), grid.xi.copy())
    with pytest.raises(PartialLatticeError):
        stft_adjoint(TFArray(part, np.zeros(part.shape)), g)


def test_moyal_identity():
    grid = GridSpec(128, 16.0)
    g = make_gaussian_window(grid)
    f = make_test_signal("gaussian", grid, x0=-1.0, width=1.3)
    full = TFLattice.full(grid)
    F = stft(f, g, full).values
    lhs = np.sqrt(np.sum(np.abs(F) ** 2) * full.cell)
    assert lhs == pytest.approx(g.l2_norm * f.norm(), rel=1e-8)


def test_window_change_holds_for_chirp():
    grid = GridSpec(512, 32.0)
    g = make_gaussian_window(grid)
    rep = window_change_check(make_test_signal("chirp", grid, c=1.0), g, g, g)
    assert rep.holds and rep.max_violation <= 1e-8


def test_window_change_zero_signal():
    grid = GridSpec(256, 32.0)
    g = make_gaussian_window(grid)
    rep = window_change_check(SampledSignal(grid, np.zeros(256)), g, g, g)
    assert rep.lhs_max == 0.0 and rep.max_violation == 0.0


def test_window_change_degenerate_pair():
    grid = GridSpec(256, 32.0)
    g = make_gaussian_window(grid)
    with pytest.raises(DegenerateWindowPair):
        window_change_check(make_test_signal("chirp", grid), g, make_hermite_window(grid), g)


def test_window_change_with_distinct_windows():
    grid = GridSpec(512, 32.0)
    g = make_gaussian_window(grid)
    h = make_hermite_window(grid, 1)
    wide = make_test_signal("gaussian", grid, width=1.5)
    from gaborprop.core import Window
    rep = window_change_check(make_test_signal("chirp", grid, c=-2.0), h, g, Window(wide))
    assert rep.holds
    assert rep.lhs_max > 0.1
