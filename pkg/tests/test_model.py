import math

import numpy as np
import pytest

from galerkinrks.exceptions import GridTooCoarse, InvalidBound, SingularCorrelation, WindowMismatch
from galerkinrks.kernels import integrate
from galerkinrks.model import (
    SINGULARITY_THRESHOLD, FriSignal, ShiftedFamily, UniformGrid, apply_integral_operator, assemble_correlation,
    build_family, build_truncated_kernel, cross_correlation, eval_signal, gram_matrix, make_test_signal,
    pair_with_family, rng_for)


def test_streams_are_deterministic_and_independent():
    assert np.array_equal(rng_for(5, 1).uniform(size=4), rng_for(5, 1).uniform(size=4))
    assert not np.array_equal(rng_for(5, 1).uniform(size=4), rng_for(5, 2).uniform(size=4))


def test_build_family_zero_shifts():
    family = build_family("sinc", "zero", 4)
    assert family.window_halfwidth == 4
    assert np.array_equal(family.shifts, np.zeros(9))
    assert np.array_equal(family.centers(2), np.arange(-2, 3))


def test_build_family_random_shifts():
    family = build_family("gauss", "random", 10, seed=3, bound=0.2)
    again = build_family("gauss", "random", 10, seed=3, bound=0.2)
    assert np.max(np.abs(family.shifts)) <= 0.2
    assert np.array_equal(family.shifts, again.shifts)
    assert family.theta(-10) == family.shifts[0]


@pytest.mark.parametrize("bound", [0.0, 0.6, -0.1])
def test_build_family_rejects_bound(bound):
    with pytest.raises(InvalidBound):
        build_family("sinc", "random", 5, seed=1, bound=bound)


def test_build_family_rejects_window():
    with pytest.raises(WindowMismatch):
        build_family("sinc", "zero", 0)
    with pytest.raises(WindowMismatch):
        build_family("sinc", "zero", 3).centers(4)


def test_basis_matrix():
    family = build_family("spline", "random", 6, seed=2)
    t = np.array([-1.3, 0.0, 2.7])
    basis = family.basis(t, 3)
    assert basis.shape == (3, 7)
    expected = family.generator(t[1] - 1 - family.theta(1))
    assert basis[1, 4] == pytest.approx(expected, abs=1e-15)


def test_test_signal_laws():
    family = build_family("sinc", "zero", 12)
    cosine = make_test_signal(family, "cosine", 8)
    i = np.arange(-8, 9)
    assert np.allclose(cosine.coeffs, np.cos(np.pi * i / 8) / (1 + np.abs(i)), atol=1e-15)

    random = make_test_signal(family, "random", 8, seed=4)
    assert np.all(np.abs(random.coeffs) <= 1.0 / (1 + np.abs(i)))
    assert np.array_equal(random.coeffs, make_test_signal(family, "random", 8, seed=4).coeffs)
    assert not np.array_equal(random.coeffs, make_test_signal(family, "random", 8, seed=5).coeffs)


def test_test_signal_window():
    family = build_family("sinc", "zero", 5)
    with pytest.raises(WindowMismatch):
        make_test_signal(family, "random", 6, seed=1)
    with pytest.raises(WindowMismatch):
        make_test_signal(family, "random", 0, seed=1)


@pytest.mark.parametrize("generator", ["sinc", "gauss", "spline"])
def test_eval_signal_matches_basis(generator):
    family = build_family(generator, "random", 8, seed=9)
    signal = make_test_signal(family, "random", 6, seed=9)
    t = np.linspace(-9.0, 9.0, 501)
    assert np.allclose(eval_signal(signal, t), family.basis(t, 6) @ signal.coeffs, atol=1e-13)
    assert isinstance(signal(0.25), float)
    assert signal(t.reshape(3, 167)).shape == (3, 167)


def test_padded_coefficients():
    family = build_family("gauss", "zero", 5)
    signal = FriSignal(family, [1.0, 2.0, 3.0])
    assert np.array_equal(signal.padded(3), [0, 0, 1, 2, 3, 0, 0])
    assert signal.coefficient(1) == 3.0
    assert signal.coefficient(4) == 0.0
    with pytest.raises(WindowMismatch):
        signal.padded(0)


def test_orthonormal_families():
    sinc = build_family("sinc", "zero", 6)
    indicator = build_family("indicator", "zero", 6)
    assert np.allclose(gram_matrix(sinc, 6), np.eye(13), atol=1e-12)
    assert np.allclose(gram_matrix(indicator, 6), np.eye(13), atol=1e-12)


def test_gram_is_symmetric():
    family = build_family("spline", "random", 5, seed=1)
    gram = gram_matrix(family, 5)
    assert np.array_equal(gram, gram.T)
    assert np.all(np.linalg.eigvalsh(gram) > 0)


def test_cross_correlation_shape():
    trial = build_family("gauss", "random", 6, seed=2)
    test = build_family("indicator", "zero", 8)
    assert cross_correlation(trial, 4, test, 7).shape == (9, 15)


def test_pairings_of_callables_match_closed_forms():
    family = build_family("gauss", "random", 6, seed=6)
    signal = make_test_signal(family, "cosine", 4)
    closed = pair_with_family(signal, family, 4)
    numeric = pair_with_family(lambda t: eval_signal(signal, t), family, 4)
    assert np.allclose(closed, numeric, atol=1e-8)


def test_singular_correlation():
    shifts = np.zeros(5)
    shifts[2], shifts[3] = 0.5, -0.5
    family = ShiftedFamily("gauss", shifts, "random", 0.5)
    assert not assemble_correlation(family, family, 2).condition() <= SINGULARITY_THRESHOLD
    with pytest.raises(SingularCorrelation):
        assemble_correlation(family, family, 2).inverse()


def test_correlation_condition():
    indicator = build_family("indicator", "zero", 4)
    assert assemble_correlation(indicator, indicator, 4).condition() == pytest.approx(1.0, abs=1e-12)
    trial = build_family("gauss", "random", 4, seed=3)
    matrix = assemble_correlation(trial, indicator, 4)
    assert matrix.condition() == pytest.approx(np.linalg.cond(matrix.entries), rel=1e-8)


@pytest.mark.parametrize("trial_generator, test_generator", [
    ("sinc", "indicator"),
    ("gauss", "indicator"),
    ("spline", "spline"),
    ("gauss", "gauss"),
])
def test_kernel_reproduces_window_signals(trial_generator, test_generator):
    trial = build_family(trial_generator, "random", 9, seed=12)
    test = build_family(test_generator, "zero", 9)
    kernel = build_truncated_kernel(trial, test, 4, padding=5)
    signal = make_test_signal(trial, "random", 6, seed=12)
    reproduced = kernel.apply(signal)
    assert np.allclose(reproduced.coeffs, signal.padded(9), atol=1e-9)


@pytest.mark.parametrize("trial_generator", ["sinc", "gauss", "spline"])
def test_kernel_is_dual_to_the_test_family(trial_generator):
    trial = build_family(trial_generator, "random", 8, seed=4)
    test = build_family("indicator", "zero", 8)
    kernel = build_truncated_kernel(trial, test, 3, padding=5)
    for y in [-0.3, 0.2, 1.45]:
        for j in [-2, 0, 1, 3]:
            paired = integrate(lambda x: np.asarray(kernel(x, np.array([y])))[:, 0], (j - 0.5, j + 0.5))
            assert paired == pytest.approx(float(test.generator(y - j)), abs=1e-8)


def test_kernel_evaluation_shapes():
    trial = build_family("gauss", "zero", 6)
    kernel = build_truncated_kernel(trial, trial, 3, padding=3)
    assert kernel.window == 6
    assert isinstance(kernel(0.1, -0.2), float)
    assert kernel(np.zeros(4), np.zeros(7)).shape == (4, 7)
    assert kernel(0.3, 0.7) == pytest.approx(kernel(0.7, 0.3), abs=1e-12)


def test_kernel_padding_converges():
    trial = build_family("gauss", "zero", 17)
    test = build_family("indicator", "zero", 17)
    short = build_truncated_kernel(trial, test, 5, padding=6)
    long = build_truncated_kernel(trial, test, 5, padding=12)
    x = np.linspace(-5.0, 5.0, 41)
    y = np.linspace(-5.0, 5.0, 37)
    assert np.max(np.abs(short(x, y) - long(x, y))) <= 1e-3


def test_integral_operator_reproduces_smooth_signals():
    trial = build_family("gauss", "zero", 6)
    kernel = build_truncated_kernel(trial, trial, 3, padding=3)
    signal = make_test_signal(trial, "random", 3, seed=8)
    lower, upper = kernel.active_window()
    grid = UniformGrid.covering(lower, upper, 0.01)
    values = apply_integral_operator(kernel, signal(grid.points), grid)
    assert np.allclose(values, signal(grid.points), atol=1e-9)


def test_integral_operator_annihilates_orthogonal_signals():
    trial = build_family("sinc", "zero", 8)
    test = build_family("indicator", "zero", 8)
    kernel = build_truncated_kernel(trial, test, 4, padding=4)
    lower, upper = kernel.active_window()
    grid = UniformGrid.covering(lower, upper, 0.01)
    values = apply_integral_operator(kernel, np.sin(2 * np.pi * grid.points), grid)
    assert np.max(np.abs(values)) < 1e-8


def test_integral_operator_preconditions():
    trial = build_family("gauss", "zero", 6)
    kernel = build_truncated_kernel(trial, trial, 3, padding=3)
    lower, upper = kernel.active_window()
    coarse = UniformGrid.covering(lower, upper, 0.1)
    with pytest.raises(GridTooCoarse):
        apply_integral_operator(kernel, np.zeros(coarse.count), coarse)
    short = UniformGrid.covering(lower + 1.0, upper, 0.01)
    with pytest.raises(WindowMismatch):
        apply_integral_operator(kernel, np.zeros(short.count), short)


def test_uniform_grid():
    grid = UniformGrid.covering(-1.0, 1.0, 0.5)
    assert grid.count == 5
    assert grid.stop == pytest.approx(1.0)
    assert math.fsum(grid.trapezoid_weights()) == pytest.approx(2.0)
