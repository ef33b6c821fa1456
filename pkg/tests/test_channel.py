import math

import numpy as np
import pytest
from scipy import integrate

from lattice_wiretap import channel as ch


def test_gaussian_coefficients_are_ones(rng):
    assert np.array_equal(ch.sample_channel(ch.ChannelModel.gaussian(), 3, rng).h, np.ones(3))


def test_static_is_fixed(rng):
    h0 = (1 + 1j, -0.5)
    m = ch.ChannelModel.static(h0)
    for _ in range(3):
        assert np.array_equal(ch.sample_channel(m, 2, rng).h, np.array(h0))
    with pytest.raises(ValueError):
        ch.sample_channel(m, 3, rng)


def test_rayleigh_unit_power(rng):
    h = ch.sample_channels(ch.ChannelModel.rayleigh(), 1, 100_000, rng).ravel()
    g = np.abs(h) ** 2
    assert abs(g.mean() - 1) <= 3 * g.std() / math.sqrt(len(g))


def test_model_validation():
    with pytest.raises(ValueError):
        ch.ChannelModel.static([1, 0])
    with pytest.raises(ValueError):
        ch.ChannelModel.gaussian(0.0)
    with pytest.raises(ValueError):
        ch.ChannelModel("nakagami")


def test_transmit_noiseless_identity(rng):
    x = np.array([1 + 2j, -3j])
    y = ch.transmit(x, ch.ChannelRealization(np.ones(2), 1e-30), rng)
    assert np.allclose(y, x)


def test_transmit_noise_variance(rng):
    real = ch.ChannelRealization(np.ones(1), 2.5)
    y = ch.transmit(np.zeros((200_000, 1)), real, rng)
    v = np.abs(y) ** 2
    assert abs(v.mean() - 2.5) <= 3 * v.std() / math.sqrt(v.size)


def test_transmit_linear_for_fixed_noise():
    real = ch.ChannelRealization(np.array([0.5 + 1j, 2.0]), 1.0)
    x1, x2 = np.array([1.0, 2j]), np.array([-1j, 3.0])
    w = ch.transmit(np.zeros(2), real, np.random.default_rng(1))
    y = ch.transmit(2 * x1 + 3 * x2, real, np.random.default_rng(1))
    assert np.allclose(y - w, 2 * real.h * x1 + 3 * real.h * x2)


def test_transmit_dimension_mismatch(rng):
    with pytest.raises(ValueError):
        ch.transmit(np.zeros(3), ch.ChannelRealization(np.ones(2), 1.0), rng)


def test_transmit_reproducible():
    real = ch.ChannelRealization(np.ones(2), 1.0)
    a = ch.transmit(np.ones(2), real, np.random.default_rng(9))
    b = ch.transmit(np.ones(2), real, np.random.default_rng(9))
    assert np.array_equal(a, b)


def test_gaussian_capacity_closed_form():
    assert ch.capacity(ch.ChannelModel.gaussian(), 10.0) == (math.log(11), 0.0)


def test_rayleigh_capacity_oracle():
    # direct integral of ln(1 + rho g) e^{-g} against the exponential-integral form
    rho = 10.0
    ref, _ = integrate.quad(lambda g: math.log1p(rho * g) * math.exp(-g), 0, math.inf)
    assert ch.rayleigh_capacity(rho) == pytest.approx(ref, rel=1e-10)
    assert ch.rayleigh_capacity(rho) == pytest.approx(2.0146, abs=1e-4)


def test_rayleigh_capacity_monte_carlo_within_ci(rng):
    est, half = ch.capacity(ch.ChannelModel.rayleigh(), 10.0, 200_000, rng)
    assert abs(est - ch.rayleigh_capacity(10.0)) <= half


def test_secrecy_capacity():
    assert ch.secrecy_capacity(3.0, 1.0) == 2.0


def test_lln_gaussian_zero(rng):
    assert ch.lln_diagnostic(ch.ChannelModel.gaussian(), 10.0, 4, 0.1, 1000, rng) == 0.0


def test_lln_rayleigh_decreasing():
    m = ch.ChannelModel.rayleigh()
    p = [ch.lln_diagnostic(m, 10.0, k, 0.2, 20_000, ch.spawn_rng(3, k)) for k in (4, 16, 64)]
    assert p[0] > p[1] > p[2]


def test_lln_huge_delta(rng):
    assert ch.lln_diagnostic(ch.ChannelModel.rayleigh(), 10.0, 4, 100.0, 1000, rng) == 0.0


def test_splitmix_known_values():
    # reference outputs of SplitMix64 seeded with 0 (first two draws)
    assert ch.splitmix64(0) == 0xE220A8397B1DCDAF
    assert ch.splitmix64(0x9E3779B97F4A7C15) == 0x6E789E6AA1B965F4


def test_derived_streams_differ():
    seeds = {ch.derive_seed(42, i) for i in range(1000)}
    assert len(seeds) == 1000


def test_wilson_interval_contains_estimate():
    lo, hi = ch.wilson_interval(30, 1000)
    assert lo < 0.03 < hi
    assert ch.wilson_interval(0, 100)[0] == 0.0
