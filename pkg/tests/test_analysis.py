import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import code_for
from lattice_wiretap import analysis as an
from lattice_wiretap import channel as ch
from lattice_wiretap import numberfield as nf
from lattice_wiretap import wiretap as wt


class TestLeakageBound:
    def test_example_value(self):
        eps = 2.0**-20
        assert 8 * 10 * eps == pytest.approx(7.63e-5, rel=1e-3)
        assert an.leakage_bound(eps, 10, 1.0) == pytest.approx(1.66e-4, rel=3e-3)

    def test_vanishing_eps(self):
        assert an.leakage_bound(1e-300, 4, 2.0) < 1e-290

    def test_zero_rate_isolates_log_term(self):
        eps = 1e-3
        assert an.leakage_bound(eps, 7, 0.0) == pytest.approx(-8 * eps * math.log(8 * eps))

    @pytest.mark.parametrize("eps", [0.0, -1e-3, 0.6])
    def test_range(self, eps):
        with pytest.raises(ValueError):
            an.leakage_bound(eps, 1, 1.0)

    @settings(max_examples=40)
    @given(
        e1=st.floats(1e-12, 1 / (8 * math.e)),
        e2=st.floats(1e-12, 1 / (8 * math.e)),
        k=st.integers(1, 20),
        R=st.floats(0, 5),
    )
    def test_monotone(self, e1, e2, k, R):
        lo, hi = sorted((e1, e2))
        assert an.leakage_bound(lo, k, R) <= an.leakage_bound(hi, k, R) * (1 + 1e-12)
        assert an.leakage_bound(lo, k, R) <= an.leakage_bound(lo, k + 1, R + 0.1)


class TestFadedFlatness:
    def test_scaling_invariance(self, rng):
        # h -> c h with P -> P / c^2 leaves the faded codebook, and hence eps, unchanged
        for _ in range(4):
            h = ch.complex_normal(rng, 1)
            c = float(rng.uniform(0.3, 3.0))
            a = an.faded_flatness(wt.design_code("Q(i)", 10.0, None, 3.0, nesting=2), h, 10.0, 1.0)
            b = an.faded_flatness(wt.design_code("Q(i)", 10.0 / c**2, None, 3.0, nesting=2), c * h, 10.0 / c**2, 1.0)
            assert a.eps.lo <= b.eps.hi * (1 + 1e-9) and b.eps.lo <= a.eps.hi * (1 + 1e-9)
            assert a.eta_bound == pytest.approx(b.eta_bound)

    def test_small_power_is_not_flat(self, zi_code):
        assert an.faded_flatness(zi_code, [1.0], 1e-3, 1.0).eps.lo > 1.0

    def test_flat_regime_unit_gain(self, zi_code):
        # at unit parameter the faded lattice has volume ~ alpha_e^2 / (P sigma_e^2/(P+sigma_e^2)),
        # which is small relative to 1 once sigma_e^2 is comparable to alpha_e^2
        ff = an.faded_flatness(zi_code, [1.0], zi_code.P, 25.0)
        assert ff.eps.hi <= 2.0 ** (-2 * zi_code.k)

    def test_analytic_condition_implies_flat(self, zi_code, rng):
        hits = 0
        for _ in range(30):
            h = ch.complex_normal(rng, 1)
            ff = an.faded_flatness(zi_code, h, zi_code.P, float(rng.uniform(1, 40)))
            if ff.condition:
                hits += 1
                assert ff.eps.hi <= 2.0**-2
        assert hits > 0

    def test_zero_gain_rejected(self, zi_code):
        with pytest.raises(ValueError):
            an.faded_flatness(zi_code, [0.0], 10.0, 1.0)


@pytest.mark.parametrize("name", ["Q(i)", "Q(zeta3)", "Q(zeta8)"])
def test_dual_lambda1_bound(name, rng):
    f = nf.get_field(name)
    for _ in range(10):
        h = ch.complex_normal(rng, f.k)
        assert an.dual_lambda1_check(f, h, 10.0, float(rng.uniform(0.2, 5))).ok


class TestDecomposition:
    def test_gaussian_outage_zero(self, zi_code, rng):
        d = an.leakage_decomposition(zi_code, ch.ChannelModel.gaussian(), None, 0.5, 1000, rng)
        assert d.outage_probability == 0.0 and d.outage_term == 0.0

    def test_huge_delta(self, zi_code, rng):
        d = an.leakage_decomposition(zi_code, ch.ChannelModel.rayleigh(), None, 50.0, 2000, rng)
        small = an.leakage_decomposition(zi_code, ch.ChannelModel.rayleigh(), None, 0.1, 2000, rng)
        assert d.outage_term == 0.0
        assert d.sigma_condition > small.sigma_condition

    def test_outage_decreases_with_k(self):
        m = ch.ChannelModel.rayleigh()
        p = [an.outage_probability(m, 10.0, k, ch.rayleigh_capacity(10.0), 0.5, 50_000, ch.spawn_rng(8, k)) for k in (2, 4, 8)]
        assert p[0] > p[1] > p[2]

    def test_delta_must_be_positive(self, zi_code, rng):
        with pytest.raises(ValueError):
            an.leakage_decomposition(zi_code, ch.ChannelModel.gaussian(), None, 0.0, 10, rng)


class TestEmpiricalLeakage:
    def test_point_mass_is_zero(self, zi_code):
        est = an.empirical_leakage(zi_code, [1.0], 2.0, message_probs=[0, 0, 1, 0])
        assert est.value == 0.0

    def test_noisy_eve_learns_little(self, zi_code):
        quiet = an.empirical_leakage(zi_code, [1.0], 2.0)
        loud = an.empirical_leakage(zi_code, [1.0], 50.0)
        assert loud.value < quiet.value
        assert loud.value < 1e-4

    def test_clean_eve_learns_everything(self, zi_code):
        # strong fading gain against moderate noise: the faded cosets are well separated
        est = an.empirical_leakage(zi_code, [3.0], 0.5, budget=1e-2)
        assert est.value == pytest.approx(math.log(zi_code.index), abs=0.02)

    def test_never_exceeds_log_index(self, zi_code, rng):
        p = rng.dirichlet(np.ones(zi_code.index))
        assert an.empirical_leakage(zi_code, [0.8 - 0.3j], 0.5, message_probs=p).value <= math.log(zi_code.index) + 1e-6

    def test_validation(self, zi_code):
        with pytest.raises(ValueError):
            an.empirical_leakage(zi_code, [0.0], 1.0)
        with pytest.raises(ValueError):
            an.empirical_leakage(zi_code, [1.0], 1.0, message_probs=[0.5, 0.5, 0.5, 0])
        with pytest.raises(ValueError):
            an.empirical_leakage(code_for("Q(zeta15)"), np.ones(4), 1.0)


def test_secrecy_report_nonnegative(zi_code, rng):
    rep = an.secrecy_report(zi_code, ch.ChannelModel.rayleigh(2.0), [1.0], 0.5, 500, rng)
    d = rep.to_dict()
    assert d["outage_term"] >= 0
    assert rep.leakage_bound_nats is None or rep.leakage_bound_bits == pytest.approx(rep.leakage_bound_nats / math.log(2))
    with pytest.raises(ValueError):
        an.SecrecyReport(**{**d, "outage_term": -1.0})
