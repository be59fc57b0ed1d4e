import numpy as np
import pytest

from gaborprop.core import GridSpec, SampledSignal, apodize, make_gaussian_window, make_test_signal
from gaborprop.propagator import (
    DysonSpec, EigenEvolution, EvolutionSpec, SplitStep, StepCountError, conjugated_perturbation,
    dyson_phillips_apply, dyson_terms, evolve_exact_free, evolve_fourier_symbol,
    evolve_split_step, evolve_translation_potential, free_multiplier, ho_multiplier,
    ho_potential, modulation_operator, multiplication_operator, perturbed_ho_potential,
    sin_potential,
)


@pytest.fixture(scope="module")
def grid():
    return GridSpec(512, 16.0)


@pytest.fixture(scope="module")
def ground(grid):
    return make_test_signal("ho_ground_state", grid)


def test_step_floor():
    with pytest.raises(StepCountError):
        EvolutionSpec(ho_multiplier, ho_potential, 1.0, 199)
    EvolutionSpec(ho_multiplier, ho_potential, 1.0, 200)


def test_exact_free_identity_and_unitarity(grid):
    f = make_test_signal("gaussian", grid, x0=1.0, xi0=0.5)
    assert np.allclose(evolve_exact_free(f, 0.0).values, f.values, atol=1e-15)
    assert evolve_exact_free(f, 0.37).norm() == pytest.approx(f.norm(), rel=1e-12)


def test_exact_free_plane_wave(grid):
    xi0 = 1.5
    f = make_test_signal("plane_wave", grid, xi0=xi0)
    t = 0.2
    out = evolve_exact_free(f, t).values
    assert np.max(np.abs(out - np.exp(-4j * np.pi ** 2 * t * xi0 ** 2) * f.values)) < 1e-12


def test_exact_free_delta_kernel():
    # the band edge adds an error ~ 1/nyquist; the kernel reaches |x| = 4 pi t nyquist < L
    grid = GridSpec(2 ** 20, 1024.0)
    t = 0.1
    u = evolve_exact_free(make_test_signal("delta", grid), t).values
    x = grid.x
    kern = np.exp(1j * x ** 2 / (4 * t)) / np.sqrt(4j * np.pi * t)
    sel = np.abs(x) < 3
    assert np.max(np.abs(u[sel] - kern[sel]) / np.abs(kern[sel])) < 1e-3


def test_exact_free_group_property(grid):
    f = make_test_signal("gaussian", grid, width=1.2)
    a = evolve_exact_free(evolve_exact_free(f, 0.1), 0.25).values
    b = evolve_exact_free(f, 0.35).values
    assert np.linalg.norm(a - b) <= 1e-7 * np.linalg.norm(b)


def test_ho_ground_state_phase(grid, ground):
    out = evolve_split_step(ground, EvolutionSpec(ho_multiplier, ho_potential, 1.0, 2000))
    err = SampledSignal(grid, out.values - np.exp(0.5j) * ground.values).norm()
    assert err <= 1e-4


def test_ho_constant_initial_datum():
    grid = GridSpec(4096, 64.0)
    u0 = apodize(make_test_signal("constant", grid), 0.2)
    t = 0.5
    out = evolve_split_step(u0, EvolutionSpec(ho_multiplier, ho_potential, t, 2000))
    sel = np.abs(grid.x) < 4
    assert np.max(np.abs(np.abs(out.values[sel]) - np.abs(np.cos(t)) ** -0.5)) < 1e-2


def test_perturbed_ho_time_zero(grid):
    f = make_test_signal("gaussian", grid, x0=1.0)
    out = evolve_split_step(f, EvolutionSpec(ho_multiplier, perturbed_ho_potential(3), 0.0, 1))
    assert np.array_equal(out.values, f.values)


def test_split_step_unitarity(grid):
    f = make_test_signal("gaussian", grid, x0=1.0, xi0=1.0)
    out = evolve_split_step(f, EvolutionSpec(ho_multiplier, perturbed_ho_potential(3), 2.0, 800))
    assert abs(out.norm() - f.norm()) <= 2e-8 * f.norm()


def test_ho_full_period_is_minus_identity(grid):
    f = make_test_signal("gaussian", grid, x0=1.0, xi0=-0.5)
    out = evolve_split_step(f, EvolutionSpec(ho_multiplier, ho_potential, 2 * np.pi, 4000))
    assert np.linalg.norm(out.values + f.values) <= 1e-3 * np.linalg.norm(f.values)


def test_split_step_second_order(grid):
    f = make_test_signal("gaussian", grid, x0=1.0, xi0=0.5, width=1.3)
    t = 1.0
    ref = EigenEvolution(grid, ho_multiplier, ho_potential)(f.values, t)
    ss = SplitStep(grid, ho_multiplier, ho_potential)
    e1 = np.linalg.norm(ss.step_values(f.values, t, 200) - ref)
    e2 = np.linalg.norm(ss.step_values(f.values, t, 400) - ref)
    assert 4 * 0.8 <= e1 / e2 <= 4 * 1.2


def test_matrix_handle_matches_steps(grid):
    ss = SplitStep(grid, ho_multiplier, perturbed_ho_potential(3))
    rows = np.stack([make_test_signal("gaussian", grid, x0=x).values for x in (-1.0, 0.5)])
    U = ss.matrix_handle(400)
    assert np.allclose(U(rows, 0.3), ss(rows, 0.3, 400), atol=1e-10)


def test_eigen_evolution_matches_split_step(grid, ground):
    E = EigenEvolution(grid, ho_multiplier, ho_potential)
    assert np.allclose(E.matrix(0.4) @ ground.values, E(ground.values, 0.4))
    f = make_test_signal("gaussian", grid, x0=0.5)
    a = E(f.values, 0.2)
    b = SplitStep(grid, ho_multiplier, ho_potential)(f.values, 0.2, 4000)
    assert np.linalg.norm(a - b) <= 1e-6 * np.linalg.norm(a)


def test_translation_potential():
    grid = GridSpec(256, 32.0)
    d = make_test_signal("delta", grid)
    assert np.allclose(evolve_translation_potential(d, 0.0, 1.0).values, d.values, atol=1e-12)
    x0 = 1.0
    out = evolve_translation_potential(d, 1.0, x0).values * grid.dx
    from math import factorial
    for n in range(7):
        idx = grid.index_of(n * x0)
        assert abs(out[idx] - 1j ** n / factorial(n)) <= 1e-6
    with pytest.raises(ValueError):
        evolve_translation_potential(d, 1.0, 0.01)


def test_translation_potential_is_not_unitary():
    grid = GridSpec(256, 32.0)
    f = make_test_signal("gaussian", grid)
    out = evolve_translation_potential(f, 1.0, 0.5)
    assert abs(out.norm() - f.norm()) > 1e-3


def test_fourier_symbol_path_matches_free(grid):
    f = make_test_signal("gaussian", grid, xi0=1.0)
    a = evolve_fourier_symbol(f, 0.3, free_multiplier).values
    assert np.allclose(a, evolve_exact_free(f, 0.3).values, atol=1e-13)


def test_conjugated_modulation_closed_form():
    grid = GridSpec(1024, 32.0)
    xi0, s = 0.5, 0.25 / np.pi
    free = lambda u, t: evolve_exact_free(SampledSignal(grid, u), t).values
    B = modulation_operator(grid, xi0)
    assert conjugated_perturbation(B, 0.0, free) is B
    u = make_test_signal("gaussian", grid, x0=1.0).values
    got = conjugated_perturbation(B, s, free)(u)
    shift = -4 * np.pi * s * xi0
    k = int(round(shift / grid.dx))
    assert abs(k * grid.dx - shift) < 1e-12
    expect = np.exp(4j * np.pi ** 2 * xi0 ** 2 * s) * np.exp(2j * np.pi * xi0 * grid.x) * np.roll(u, k)
    assert np.max(np.abs(got - expect)) < 1e-8


def test_conjugation_preserves_norm(grid, rng):
    E = EigenEvolution(grid, ho_multiplier, ho_potential)
    B = multiplication_operator(sin_potential(3)(grid.x))
    Bs = conjugated_perturbation(B, 0.3, E)
    for _ in range(3):
        u = rng.standard_normal(grid.n_points) + 1j * rng.standard_normal(grid.n_points)
        assert np.linalg.norm(Bs(u)) == pytest.approx(np.linalg.norm(B(E(u, 0.3))), rel=1e-8)


def test_dyson_spec_limits():
    with pytest.raises(ValueError):
        DysonSpec(n_terms=5)
    with pytest.raises(ValueError):
        DysonSpec(quad_points_per_level=4)


def test_dyson_zero_perturbation(grid, ground):
    E = EigenEvolution(grid, ho_multiplier, ho_potential)
    res = dyson_phillips_apply(ground, 0.2, E, lambda u: 0 * u, DysonSpec(3, 33))
    assert np.allclose(res.q_signal.values, ground.values)
    assert np.allclose(res.signal.values, E(ground.values, 0.2))


def test_dyson_first_order_is_linear_in_coupling(grid, ground):
    E = EigenEvolution(grid, ho_multiplier, ho_potential)
    V = sin_potential(3)(grid.x)
    eps = np.array([1e-2, 1e-3, 1e-4])
    diffs = []
    for e in eps:
        terms = dyson_terms(ground.values, 0.2, E, multiplication_operator(e * V), DysonSpec(1, 65))
        diffs.append(np.linalg.norm(terms[1]))
    slope = np.polyfit(np.log(eps), np.log(diffs), 1)[0]
    assert slope == pytest.approx(1.0, abs=0.1)


def test_dyson_negative_time(grid, ground):
    E = EigenEvolution(grid, ho_multiplier, ho_potential)
    with pytest.raises(ValueError):
        dyson_terms(ground.values, -0.1, E, lambda u: u, DysonSpec())


def test_dyson_matches_reference():
    grid = GridSpec(256, 16.0)
    u0 = make_test_signal("gaussian", grid, x0=np.pi / 2)
    E = EigenEvolution(grid, ho_multiplier, ho_potential)
    V = 0.1 * sin_potential(3)(grid.x)
    t = 0.2
    res = dyson_phillips_apply(u0, t, E, multiplication_operator(V), DysonSpec(3, 129))
    ref = EigenEvolution(grid, ho_multiplier, lambda x: ho_potential(x) + 0.1 * np.abs(np.sin(x)) ** 3)
    err = SampledSignal(grid, res.signal.values - ref(u0.values, t)).norm()
    assert err <= 10 * (t * 0.1) ** 4 / 24 * u0.norm()
    n = res.term_norms
    assert n[0] > n[1] > n[2] > n[3]
