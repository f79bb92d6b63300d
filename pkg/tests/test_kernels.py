import math

import numpy as np
import pytest
from scipy.special import erf

from galerkinrks.kernels import (
    DEFAULT_SPEC, Generator, GeneratorKind, QuadratureSpec, correlation, eval_generator,
    gauss_tail_product, has_closed_form, integrate)

SINC = Generator("sinc")
GAUSS = Generator("gauss")
SPLINE = Generator("spline")
INDICATOR = Generator("indicator")


def test_generator_values():
    assert eval_generator(SINC, 0.0) == 1.0
    assert eval_generator(SINC, 3.0) == 0.0
    assert eval_generator(SINC, 0.5) == pytest.approx(2 / math.pi, abs=1e-15)
    assert eval_generator(GAUSS, 1.0) == pytest.approx(math.exp(-1.5), abs=1e-15)
    assert eval_generator(SPLINE, 0.0) == pytest.approx(2 / 3, abs=1e-14)
    assert eval_generator(SPLINE, 1.0) == pytest.approx(1 / 6, abs=1e-14)
    assert eval_generator(SPLINE, 2.5) == 0.0
    assert eval_generator(INDICATOR, -0.5) == 1.0
    assert eval_generator(INDICATOR, 0.5) == 0.0


def test_generator_shapes():
    t = np.linspace(-3, 3, 12).reshape(3, 4)
    for g in (SINC, GAUSS, SPLINE, INDICATOR):
        assert eval_generator(g, t).shape == (3, 4)
    assert isinstance(eval_generator(GAUSS, 0.25), float)


def test_generator_reach():
    assert SINC.reach() == DEFAULT_SPEC.infinite_window
    assert SINC.reach(QuadratureSpec(infinite_window=50.0)) == 50.0
    assert GAUSS.reach() == 6.0
    assert SPLINE.reach() == 2.0
    assert not INDICATOR.is_continuous
    assert Generator(GeneratorKind.GAUSS) == GAUSS


def test_sinc_correlation_closed_form():
    rng = np.random.default_rng(11)
    a = rng.uniform(-20, 20, 100)
    b = rng.uniform(-20, 20, 100)
    values = correlation(SINC, SINC, a, b)
    assert np.allclose(values, np.sinc(a - b), atol=1e-8)


def test_sinc_correlation_quadrature():
    rng = np.random.default_rng(12)
    a = rng.uniform(-5, 5, 100)
    b = rng.uniform(-5, 5, 100)
    values = correlation(SINC, SINC, a, b, method="quadrature")
    assert np.allclose(values, np.sinc(a - b), atol=1e-3)


def test_gauss_correlation():
    d = np.linspace(-4, 4, 33)
    values = correlation(GAUSS, GAUSS, 0.0, d)
    assert np.allclose(values, math.sqrt(math.pi / 3) * np.exp(-0.75 * d * d), atol=1e-10, rtol=0)
    numeric = correlation(GAUSS, GAUSS, 0.0, d, method="quadrature")
    assert np.allclose(numeric, values, atol=1e-10, rtol=0)


def test_gauss_indicator_correlation():
    d = np.linspace(-3, 3, 25)
    expected = math.sqrt(math.pi / 6) * (erf(math.sqrt(1.5) * (d + 0.5)) - erf(math.sqrt(1.5) * (d - 0.5)))
    assert np.allclose(correlation(GAUSS, INDICATOR, 0.0, d), expected, atol=1e-12)
    assert np.allclose(correlation(GAUSS, INDICATOR, 0.0, d, method="quadrature"), expected, atol=1e-9)


@pytest.mark.parametrize("g, g_tilde", [
    (SPLINE, SPLINE),
    (SPLINE, INDICATOR),
    (INDICATOR, INDICATOR),
    (SINC, INDICATOR),
])
def test_closed_forms_match_quadrature(g, g_tilde):
    a = np.array([0.0, 0.3, -1.2, 2.0])
    b = np.array([0.0, -0.45, 0.9, 3.7])
    closed = correlation(g, g_tilde, a, b)
    numeric = correlation(g, g_tilde, a, b, method="quadrature")
    assert np.allclose(closed, numeric, atol=1e-9)


def test_reversed_pair_uses_closed_form():
    assert has_closed_form(INDICATOR, GAUSS)
    assert not has_closed_form(SINC, GAUSS)
    forward = correlation(GAUSS, INDICATOR, 0.4, -0.7)
    backward = correlation(INDICATOR, GAUSS, -0.7, 0.4)
    assert backward == pytest.approx(forward, abs=1e-15)


def test_pair_without_closed_form():
    spec = QuadratureSpec(infinite_window=100.0)
    value = correlation(SINC, GAUSS, 0.0, 0.0, spec)
    expected = integrate(lambda t: np.sinc(t) * np.exp(-1.5 * t * t), (-6.0, 6.0), spec)
    assert value == pytest.approx(expected, abs=1e-10)


def test_spline_indicator_partition_of_unity():
    # Integer shifts of the cubic B-spline sum to one
    centers = np.arange(-6, 7)
    assert math.fsum(correlation(SPLINE, INDICATOR, centers, 0.0)) == pytest.approx(1.0, abs=1e-12)


def test_gauss_tail_product():
    a, b = 0.3, -0.4
    right = gauss_tail_product(a, b, 1.0, "right")
    left = gauss_tail_product(a, b, 1.0, "left")
    total = correlation(GAUSS, GAUSS, a, b)
    assert float(right + left) == pytest.approx(total, abs=1e-14)
    numeric = integrate(lambda t: np.exp(-1.5 * (t - a) ** 2) * np.exp(-1.5 * (t - b) ** 2), (1.0, 12.0))
    assert float(right) == pytest.approx(numeric, abs=1e-12)


GENERATORS = [SINC, GAUSS, SPLINE, INDICATOR]
ALL_PAIRS = [(g, g_tilde) for g in GENERATORS for g_tilde in GENERATORS]


@pytest.mark.parametrize("g, g_tilde", ALL_PAIRS, ids=lambda g: g.name)
def test_correlation_is_shift_covariant_and_symmetric(g, g_tilde):
    a = np.array([0.0, 0.35, -1.1])
    b = np.array([0.2, -0.6, 1.4])
    values = correlation(g, g_tilde, a, b)
    for shift in [0.75, -3.25]:
        assert np.allclose(correlation(g, g_tilde, a + shift, b + shift), values, atol=1e-8)
    assert np.allclose(correlation(g_tilde, g, b, a), values, atol=1e-8)


@pytest.mark.parametrize("g, g_tilde", [
    (GAUSS, GAUSS),
    (SPLINE, SPLINE),
    (INDICATOR, INDICATOR),
    (SINC, INDICATOR),
    (GAUSS, INDICATOR),
    (SPLINE, INDICATOR),
], ids=lambda g: g.name)
def test_closed_forms_match_quadrature_at_random_offsets(g, g_tilde):
    rng = np.random.default_rng(21)
    a = rng.uniform(-3.0, 3.0, 100)
    b = a + rng.uniform(-4.0, 4.0, 100)
    assert has_closed_form(g, g_tilde)
    closed = correlation(g, g_tilde, a, b)
    numeric = correlation(g, g_tilde, a, b, method="quadrature")
    assert np.allclose(closed, numeric, atol=1e-8)


def test_spline_partition_of_unity_at_random_points():
    t = np.random.default_rng(5).uniform(-10.0, 10.0, 200)
    k = np.arange(-14, 15)
    assert np.allclose(eval_generator(SPLINE, t[:, None] - k[None, :]).sum(axis=1), 1.0, atol=1e-12)
