import math

import numpy as np
import pytest

from galerkinrks.exceptions import (
    InvalidGapRange, InvalidSamplingSet, JitterTooLarge, NoCrossings, WindowMismatch, ZeroSignal)
from galerkinrks.model import build_family, build_truncated_kernel, make_test_signal
from galerkinrks.sampling import (
    SampleRecord, SamplingKind, SamplingSet, capture, make_ctem, make_jittered, make_nonuniform,
    make_uniform, pre_reconstruct)


def test_trapezoid_weights():
    sampling_set = SamplingSet([0.0, 1.0, 3.0, 3.5])
    assert np.allclose(sampling_set.weights, [0.5, 1.5, 1.25, 0.25])
    assert sampling_set.delta == 1.0
    assert sampling_set.kind is SamplingKind.CUSTOM
    assert sampling_set.interval == (0.0, 3.5)


def test_sampling_set_must_increase():
    with pytest.raises(InvalidSamplingSet):
        SamplingSet([0.0, 2.0, 1.0])
    with pytest.raises(InvalidSamplingSet):
        SamplingSet.from_points([0.0, 1.0, 1.0])
    with pytest.raises(InvalidSamplingSet):
        SamplingSet([0.0, np.nan])


def test_small_sets():
    assert len(SamplingSet([])) == 0
    assert SamplingSet([]).delta == 0.0
    assert SamplingSet([2.0]).weights.tolist() == [0.0]


def test_uniform_set():
    sampling_set = make_uniform((-2.0, 2.0), 0.5)
    assert len(sampling_set) == 9
    assert sampling_set.kind is SamplingKind.UNIFORM
    assert sampling_set.delta == pytest.approx(0.25)
    with pytest.raises(InvalidSamplingSet):
        make_uniform((1.0, 0.0), 0.5)


def test_nonuniform_set():
    sampling_set = make_nonuniform(10, (0.9, 1.1), seed=4)
    gaps = np.diff(sampling_set.abscissae)
    assert len(sampling_set) == 25
    assert sampling_set.abscissae[0] == -12.0
    assert np.all((gaps >= 0.9) & (gaps <= 1.1))
    assert np.array_equal(sampling_set.abscissae, make_nonuniform(10, (0.9, 1.1), seed=4).abscissae)


@pytest.mark.parametrize("gap_range", [(0.0, 1.0), (1.2, 1.0), (-0.5, 0.5)])
def test_nonuniform_gap_range(gap_range):
    with pytest.raises(InvalidGapRange):
        make_nonuniform(5, gap_range, seed=1)


def test_jittered_set():
    sampling_set = make_jittered(8, 0.1, seed=2)
    k = np.arange(-10, 11)
    assert len(sampling_set) == 21
    assert np.all(np.abs(sampling_set.abscissae - k) <= 0.1)
    assert np.array_equal(make_jittered(8, 0.0, seed=2).abscissae, k)


def test_generated_sets_need_a_window():
    with pytest.raises(WindowMismatch):
        make_nonuniform(0, seed=1)
    with pytest.raises(WindowMismatch):
        make_jittered(-2, 0.1, seed=1)


@pytest.mark.parametrize("kind", ["nonuniform", "jittered", "ctem"])
def test_weights_sum_to_the_span(kind):
    if kind == "nonuniform":
        sampling_set = make_nonuniform(10, seed=7)
    elif kind == "jittered":
        sampling_set = make_jittered(10, 0.3, seed=7)
    else:
        sampling_set = make_ctem(_reference_signal(7), (-12.0, 12.0))
    gamma = sampling_set.abscissae
    assert math.fsum(sampling_set.weights) == pytest.approx(gamma[-1] - gamma[0], abs=1e-12)
    assert np.all(sampling_set.weights > 0)


@pytest.mark.parametrize("jitter", [0.5, 0.6, -0.1])
def test_jitter_too_large(jitter):
    with pytest.raises(JitterTooLarge):
        make_jittered(5, jitter, seed=1)


def _reference_signal(seed, L=10):
    family = build_family("sinc", "zero", L + 20)
    return make_test_signal(family, "random", L + 20, seed=seed)


@pytest.mark.parametrize("L", [10, 30])
@pytest.mark.parametrize("seed", range(5))
def test_ctem_crossings(seed, L):
    signal = _reference_signal(seed, L)
    sampling_set = make_ctem(signal, (-L - 2.0, L + 2.0))
    gamma = sampling_set.abscissae
    M = sampling_set.metadata["norm_inf"]
    assert sampling_set.kind is SamplingKind.CTEM
    assert M >= np.max(np.abs(signal(np.linspace(-L - 2, L + 2, 24001))))

    residual = lambda t: signal(t) - M * np.sin(np.pi * t)
    assert np.max(np.abs(residual(gamma))) <= 1e-9 * M

    # No sign change between consecutive crossings on a finer grid
    fine = np.linspace(-L - 2.0, L + 2.0, 20000 * (L + 2) + 1)
    fine_residual = residual(fine)
    for left, right in zip(gamma[:-1], gamma[1:]):
        inside = fine_residual[(fine > left + 1e-6) & (fine < right - 1e-6)]
        assert np.all(inside >= 0) or np.all(inside <= 0)

    # Each half-shifted unit interval holds a crossing
    for k in range(-L - 2, L + 1):
        assert np.any((gamma >= k + 0.5 - 1e-6) & (gamma <= k + 1.5 + 1e-6))


def test_ctem_integer_intervals_can_be_empty():
    L = 30
    empty = []
    for seed in range(5):
        gamma = make_ctem(_reference_signal(seed, L), (-L - 2.0, L + 2.0)).abscissae
        empty += [k for k in range(-L - 2, L + 2) if not np.any((gamma >= k) & (gamma <= k + 1))]
    assert empty


def test_ctem_keeps_tangential_roots():
    # Touches M sin(pi t) 1e-7 away from the grid point 0.25 without crossing it
    touch = 0.25 + 1e-7
    signal = lambda t: np.sin(np.pi * t) - (t - touch) ** 2 * (t - 0.5) ** 2
    sampling_set = make_ctem(signal, (0.0, 1.0), grid_step=0.125)
    assert sampling_set.metadata["norm_inf"] == 1.0
    assert sampling_set.metadata["tangencies"] == 1
    assert np.min(np.abs(sampling_set.abscissae - touch)) <= 1e-6
    assert np.min(np.abs(sampling_set.abscissae - 0.5)) <= 1e-9


def test_ctem_zero_signal():
    with pytest.raises(ZeroSignal):
        make_ctem(lambda t: np.zeros_like(t), (-3.0, 3.0))
    with pytest.raises(ZeroSignal):
        make_ctem(_reference_signal(0).scaled(0.0), (-3.0, 3.0))


def test_ctem_without_crossings():
    with pytest.raises(NoCrossings):
        make_ctem(lambda t: np.ones_like(t), (0.6, 1.4))


def test_ctem_invalid_interval():
    with pytest.raises(InvalidSamplingSet):
        make_ctem(np.cos, (1.0, -1.0))


def test_capture():
    signal = _reference_signal(3)
    sampling_set = make_jittered(10, 0.2, seed=3)
    record = capture(signal, sampling_set)
    assert np.array_equal(record.values, signal(sampling_set.abscissae))
    assert np.array_equal(record.scaled(2.0).values, 2.0 * record.values)
    with pytest.raises(InvalidSamplingSet):
        SampleRecord(sampling_set, np.zeros(3))


def test_pre_reconstruction_is_kernel_sum():
    trial = build_family("sinc", "random", 30, seed=5)
    test = build_family("indicator", "zero", 30)
    kernel = build_truncated_kernel(trial, test, 10, padding=10)
    signal = make_test_signal(trial, "random", 30, seed=5)
    record = capture(signal, make_nonuniform(10, seed=5))
    pre = pre_reconstruct(record, kernel)

    x = np.linspace(-10.0, 10.0, 41)
    expected = kernel(x, record.set.abscissae) @ (record.set.weights * record.values)
    assert np.allclose(pre(x), expected, atol=1e-10)


def test_pre_reconstruction_is_linear():
    trial = build_family("gauss", "random", 8, seed=1)
    test = build_family("indicator", "zero", 8)
    kernel = build_truncated_kernel(trial, test, 4, padding=4)
    sampling_set = make_jittered(4, 0.3, seed=1)
    first = capture(make_test_signal(trial, "random", 6, seed=1), sampling_set)
    second = capture(make_test_signal(trial, "cosine", 6), sampling_set)
    combined = SampleRecord(sampling_set, 2.0 * first.values - 0.5 * second.values)
    expected = 2.0 * pre_reconstruct(first, kernel).coeffs - 0.5 * pre_reconstruct(second, kernel).coeffs
    assert np.allclose(pre_reconstruct(combined, kernel).coeffs, expected, atol=1e-12)


def test_pre_reconstruction_with_dense_samples():
    trial = build_family("gauss", "zero", 6)
    test = build_family("indicator", "zero", 6)
    kernel = build_truncated_kernel(trial, test, 3, padding=3)
    signal = make_test_signal(trial, "random", 3, seed=2)
    record = capture(signal, make_uniform((-6.5, 6.4999), 2e-4))
    x = np.linspace(-3.0, 3.0, 61)
    error = np.max(np.abs(pre_reconstruct(record, kernel)(x) - signal(x)))
    assert error <= 1e-2 * np.max(np.abs(signal(x)))


def test_pre_reconstruction_window():
    trial = build_family("gauss", "zero", 6)
    kernel = build_truncated_kernel(trial, trial, 3, padding=3)
    record = capture(lambda t: np.ones_like(t), SamplingSet([-1.0, 0.0, 7.0]))
    with pytest.raises(WindowMismatch):
        pre_reconstruct(record, kernel)
