import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from modsi.signal_model import (BSpline, FineSignal, Grid, Lorentzian, SISpec, Sinc, Tabulated,
                                bspline_closed_form, default_grid, generator_spectrum, generator_value,
                                sinc, synthesize)

finite = st.floats(-1e3, 1e3, allow_nan=False)


def test_sinc_convention():
    assert sinc(0.0) == 1.0
    assert abs(sinc(2 * np.pi)) < 1e-16
    u = np.linspace(-20, 20, 101)
    np.testing.assert_allclose(sinc(u), np.sinc(u / (2 * np.pi)))
    np.testing.assert_allclose(sinc(1.0), math.sin(0.5) / 0.5)


def test_lorentzian_examples():
    g = Lorentzian(0.5)
    assert generator_value(g, 0.0) == pytest.approx(0.636620, abs=1e-6)
    assert generator_spectrum(g, 0.0) == pytest.approx(1.0)
    assert generator_spectrum(g, np.pi) == pytest.approx(0.207880, abs=1e-6)
    assert generator_spectrum(g, -np.pi) == pytest.approx(math.exp(-np.pi / 2), rel=1e-15)


def test_lorentzian_rejects_bad_gamma():
    with pytest.raises(ValueError):
        Lorentzian(0.0)


def test_lorentzian_spectrum_matches_transform():
    g = Lorentzian(0.5)
    t = np.arange(-4000, 4000, 0.01)
    for w in [0.0, 0.7, 2.0]:
        numeric = np.sum(g.value(t) * np.cos(w * t)) * 0.01
        assert numeric == pytest.approx(math.exp(-0.5 * w), abs=2e-4)


def test_lorentzian_periodized_closed_form():
    g = Lorentzian(0.3)
    t = np.linspace(-2.0, 2.0, 41)
    brute = sum(g.value(t + k * 4.0) for k in range(-20000, 20001))
    np.testing.assert_allclose(g.periodized(t, 4.0), brute, rtol=1e-4)


def test_bspline_examples():
    assert generator_value(BSpline(1, 1.0), 0.5) == pytest.approx(0.5)
    assert generator_value(BSpline(0, 1.0), 0.25) == 1.0
    # half-open box
    assert BSpline(0).value(-0.5) == 1.0
    assert BSpline(0).value(0.5) == 0.0
    assert abs(generator_spectrum(BSpline(1, 2.5), 0.8 * np.pi)) < 1e-15


@pytest.mark.parametrize("order", [0, 1, 2, 3, 5])
@pytest.mark.parametrize("scale", [1.0, 2.5])
def test_bspline_support_exact(order, scale):
    g = BSpline(order, scale)
    half = scale * (order + 1) / 2
    assert g.support == (-half, half)
    outside = np.concatenate([np.linspace(-3 * half, -half, 50), np.linspace(half, 3 * half, 50)])
    if order == 0:
        outside = outside[outside != -half]
    assert np.all(g.value(outside) == 0.0)
    inside = np.linspace(-half, half, 203)[1:-1]
    assert np.all(g.value(inside) > 0.0)


@pytest.mark.parametrize("order", [2, 3, 4])
def test_bspline_recursion_matches_closed_form(order):
    t = np.linspace(-3, 3, 1201)
    np.testing.assert_allclose(BSpline(order).value(t), bspline_closed_form(t, order), atol=1e-6)


def test_box_convolution_gives_triangle():
    dt = 1.0 / 1024
    box = BSpline(0).value(np.arange(-512, 512) * dt)
    tri = np.convolve(box, box) * dt
    t = (np.arange(tri.size) - 1023) * dt
    assert np.max(np.abs(tri - bspline_closed_form(t, 1))) <= 1e-6


@pytest.mark.parametrize("order,scale", [(0, 1.0), (1, 2.5), (2, 1.3), (3, 0.7)])
def test_bspline_spectrum_matches_riemann_sum(order, scale):
    g = BSpline(order, scale)
    dt = 1e-4 * scale
    t = np.arange(-(order + 1) * scale / 2, (order + 1) * scale / 2, dt) + dt / 2
    for w in [0.0, 0.9, 2.7, 6.0]:
        numeric = np.sum(g.value(t) * np.exp(-1j * w * t)) * dt
        assert abs(numeric - g.spectrum(w)) < 1e-5


def test_bspline_unit_area():
    for order, scale in [(0, 1.0), (1, 2.5), (3, 0.5)]:
        g = BSpline(order, scale)
        lo, hi = g.support
        dt = (hi - lo) / 200000
        t = lo + dt * (np.arange(200000) + 0.5)
        assert np.sum(g.value(t)) * dt == pytest.approx(1.0, abs=1e-6)


def test_sinc_generator():
    g = Sinc(np.pi)
    assert g.value(0.0) == pytest.approx(1.0)
    assert g.spectrum(0.5) == 1.0 and g.spectrum(4.0) == 0.0
    assert g.spectrum(np.pi) == 0.5


def test_tabulated_zero_outside_and_interp():
    p = FineSignal(0.0, 0.1, [1.0, 2.0, 3.0])
    g = Tabulated(p)
    assert g.value(-0.01) == 0.0 and g.value(0.21) == 0.0
    assert g.value(0.05) == pytest.approx(1.5)


@settings(max_examples=50, deadline=None)
@given(arrays(float, st.integers(2, 40), elements=st.floats(-10, 10)),
       st.floats(-5, 5), st.floats(0.01, 1.0), arrays(float, 5, elements=st.floats(-50, 50)))
def test_tabulated_conjugate_symmetry(values, t0, dt, omega):
    g = Tabulated(FineSignal(t0, dt, values))
    np.testing.assert_allclose(g.spectrum(-omega), np.conj(g.spectrum(omega)), atol=1e-10 * (1 + np.abs(values).sum()))


def test_fine_signal_validation():
    with pytest.raises(ValueError):
        FineSignal(0.0, 0.0, [1.0])
    with pytest.raises(ValueError):
        FineSignal(0.0, 0.1, [])
    with pytest.raises(ValueError):
        FineSignal(0.0, 0.1, [np.nan])
    s = FineSignal(1.0, 0.5, [1.0, 2.0])
    np.testing.assert_allclose(s.t, [1.0, 1.5])
    with pytest.raises(ValueError):
        s.values[0] = 3.0


def test_sispec_validation():
    with pytest.raises(ValueError):
        SISpec(0.0, [1.0], Lorentzian(1))
    with pytest.raises(ValueError):
        SISpec(1.0, [], Lorentzian(1))
    with pytest.raises(ValueError):
        SISpec(1.0, [np.inf], Lorentzian(1))
    s = SISpec(1.0, [1, 2, 3], Lorentzian(1), n0=-1)
    assert s.n1 == 1 and list(s.indices) == [-1, 0, 1]


def test_synthesize_delta_is_generator():
    g = Lorentzian(0.5)
    spec = SISpec(1.0, [1.0], g)
    grid = Grid(-5.0, 0.01, 1000)
    np.testing.assert_array_equal(synthesize(spec, grid).values, g.value(grid.t))


def test_synthesize_zero_and_two_boxes():
    grid = Grid(-2.0, 0.125, 48)
    assert not np.any(synthesize(SISpec(1.0, np.zeros(4), Lorentzian(1)), grid).values)
    x = synthesize(SISpec(1.0, [1.0, 1.0], BSpline(0)), Grid(0.5, 0.25, 1))
    assert x.values[0] == 1.0


def test_synthesize_rejects_coarse_grid():
    with pytest.raises(ValueError):
        synthesize(SISpec(1.0, [1.0], Lorentzian(1)), Grid(0.0, 1.0, 10))


@settings(max_examples=25, deadline=None)
@given(arrays(float, 8, elements=st.floats(-1, 1)), arrays(float, 8, elements=st.floats(-1, 1)),
       st.floats(-3, 3), st.floats(-3, 3), st.booleans())
def test_synthesize_linearity(a, b, alpha, beta, periodic):
    g = BSpline(1, 2.5)
    grid = default_grid(SISpec(1.0, a, g), 4, 4, pad=4)
    xa = synthesize(SISpec(1.0, a, g), grid, periodic).values
    xb = synthesize(SISpec(1.0, b, g), grid, periodic).values
    xab = synthesize(SISpec(1.0, alpha * a + beta * b, g), grid, periodic).values
    scale = max(np.abs(alpha * xa).max(), np.abs(beta * xb).max(), 1e-300)
    assert np.max(np.abs(xab - (alpha * xa + beta * xb))) <= 1e-12 * scale + 1e-300


def test_synthesize_shift_covariance():
    g = Lorentzian(0.5)
    a = np.random.default_rng(0).uniform(-1, 1, 10)
    grid = Grid(-20.0, 1.0 / 16, 50 * 16)
    x0 = synthesize(SISpec(1.0, a, g, n0=0), grid).values
    x1 = synthesize(SISpec(1.0, a, g, n0=1), grid).values
    np.testing.assert_allclose(x1[16:], x0[:-16], atol=1e-13)
    p0 = synthesize(SISpec(1.0, a, g, n0=0), grid, periodic=True).values
    p1 = synthesize(SISpec(1.0, a, g, n0=1), grid, periodic=True).values
    np.testing.assert_allclose(p1, np.roll(p0, 16), atol=1e-13)


def test_periodic_synthesis_matches_periodized_lorentzian():
    g = Lorentzian(0.5)
    a = np.random.default_rng(1).uniform(-1, 1, 12)
    spec = SISpec(1.0, a, g, n0=-3)
    grid = default_grid(spec, 5, 8, pad=6)
    x = synthesize(spec, grid, periodic=True).values
    period = grid.duration
    ref = sum(c * g.periodized(grid.t - n, period) for n, c in zip(spec.indices, a))
    np.testing.assert_allclose(x, ref, atol=1e-10)


def test_default_grid_layout():
    spec = SISpec(1.0, np.ones(50), Lorentzian(0.5), n0=0)
    grid = default_grid(spec, 5)
    assert grid.dt == pytest.approx(1 / 80)
    assert grid.t0 == -20.0
    assert grid.n == 90 * 80
