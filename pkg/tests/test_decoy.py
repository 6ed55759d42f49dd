import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mdicw.decoy import (
    CountsRecord,
    IntensityConfig,
    ProbInterval,
    count_interval,
    empirical_prob,
    gaussian_interval,
    single_photon_bounds_decoy,
    single_photon_bounds_nondecoy,
)
from mdicw.errors import EmptyRecord, InfeasibleIntervals, InvalidIntensities, UnknownState
from mdicw.simulator import DETECTOR_FRACTION, SIM_STATES, db_to_eta


def poisson_mixture(intensity, yields):
    """sum_n e^-I I^n / n! Y_n, summed term by term."""
    total, term = 0.0, math.exp(-intensity)
    for n, y in enumerate(yields):
        total += term * y
        term *= intensity / (n + 1)
    return total


def linear_loss_yields(eff, p_d, n_max=80):
    return [1 - (1 - p_d) * (1 - eff) ** n for n in range(n_max)]


class TestRecords:
    def test_validation(self):
        with pytest.raises(UnknownState):
            CountsRecord("Q", "signal", 1, 0)
        with pytest.raises(ValueError):
            CountsRecord("Z0", "signal", 1, 2)
        with pytest.raises(ValueError):
            CountsRecord("Z0", "bright", 1, 0)

    def test_empirical(self):
        assert empirical_prob(CountsRecord("Z0", "signal", 2049836, 21671)) == 21671 / 2049836
        with pytest.raises(EmptyRecord):
            empirical_prob(CountsRecord("Z0", "signal", 0, 0))

    def test_gaussian_interval(self):
        r = CountsRecord("Z0", "signal", 2049836, 21671)
        iv = gaussian_interval(r, 3.89)
        spread = 3.89 * math.sqrt(21671)
        assert iv.lo == pytest.approx((21671 - spread) / 2049836, rel=1e-14)
        assert iv.hi == pytest.approx((21671 + spread) / 2049836, rel=1e-14)

    def test_interval_clamped(self):
        iv = count_interval(1, 1, 5.0)
        assert iv.lo == 0.0 and iv.hi == 1.0


class TestIntensityConfig:
    @pytest.mark.parametrize("mu,nu", [(0.5, 0.5), (0.5, 0.6), (0.5, 0.46), (0.0, None), (0.5, 0.0)])
    def test_rejects(self, mu, nu):
        with pytest.raises(InvalidIntensities):
            IntensityConfig(mu, nu)

    def test_accepts(self):
        IntensityConfig(0.529, 0.057, 1e-6)
        IntensityConfig(0.5, 0.45)


class TestDecoyBounds:
    def test_closed_form(self):
        cfg = IntensityConfig(0.5, 0.1, 1e-6)
        p_mu, p_nu = ProbInterval(0.02, 0.021), ProbInterval(0.004, 0.0041)
        out = single_photon_bounds_decoy(p_mu, p_nu, cfg)
        mu, nu, pd = 0.5, 0.1, 1e-6
        lo = mu / (mu * nu - nu**2) * (
            0.004 * math.exp(nu) - 0.021 * math.exp(mu) * nu**2 / mu**2 - (mu**2 - nu**2) / mu**2 * pd
        )
        assert out.lo == pytest.approx(lo, rel=1e-13)
        assert out.hi == pytest.approx(0.0041 * math.exp(nu) / nu, rel=1e-13)

    def test_inconsistent_data(self):
        cfg = IntensityConfig(0.5, 0.1, 0.0)
        with pytest.raises(InfeasibleIntervals):
            single_photon_bounds_decoy(ProbInterval(0, 0), ProbInterval(0.01, 0.01), cfg)

    def test_needs_decoy(self):
        with pytest.raises(InvalidIntensities):
            single_photon_bounds_decoy(ProbInterval(0, 0), ProbInterval(0, 0), IntensityConfig(0.5))

    def test_soundness_exact_mixture(self):
        rng = np.random.default_rng(11)
        for _ in range(1000):
            eff = 10 ** rng.uniform(-4, 0)
            mu = rng.uniform(0.05, 1.0)
            nu = rng.uniform(0.01, 0.9) * mu
            p_d = 10 ** rng.uniform(-8, -3)
            y = linear_loss_yields(eff, p_d)
            cfg = IntensityConfig(mu, nu, p_d)
            out = single_photon_bounds_decoy(
                ProbInterval.point(poisson_mixture(mu, y)), ProbInterval.point(poisson_mixture(nu, y)), cfg
            )
            assert out.contains(y[1], tol=1e-12)
            assert 0 <= out.lo <= out.hi <= 1

    @given(
        st.floats(0.0, 0.3), st.floats(0.0, 0.01), st.floats(0.0, 0.05), st.floats(0.0, 0.005),
        st.floats(0, 0.01), st.floats(0, 0.01), st.floats(0, 0.0005), st.floats(0, 0.0005),
    )
    def test_monotone_in_inputs(self, mu_lo, mu_w, nu_lo, nu_w, a, b, c, d):
        cfg = IntensityConfig(0.529, 0.057, 1e-6)
        inner_mu = ProbInterval(mu_lo, min(1, mu_lo + mu_w))
        inner_nu = ProbInterval(nu_lo, min(1, nu_lo + nu_w))
        outer_mu = ProbInterval(max(0, inner_mu.lo - a), min(1, inner_mu.hi + b))
        outer_nu = ProbInterval(max(0, inner_nu.lo - c), min(1, inner_nu.hi + d))
        try:
            inner = single_photon_bounds_decoy(inner_mu, inner_nu, cfg)
        except InfeasibleIntervals:
            return
        outer = single_photon_bounds_decoy(outer_mu, outer_nu, cfg)
        assert outer.lo <= inner.lo and outer.hi >= inner.hi


class TestNonDecoyBounds:
    def test_closed_form(self):
        mu, pd = 0.5, 1e-5
        p = ProbInterval(0.1, 0.11)
        out = single_photon_bounds_nondecoy(p, IntensityConfig(mu, None, pd))
        one = mu * math.exp(-mu)
        assert out.lo == pytest.approx((0.1 - math.exp(-mu) * pd - (1 - math.exp(-mu) - one)) / one)
        assert out.hi == pytest.approx(0.11 / one)

    def test_soundness_exact_mixture(self):
        rng = np.random.default_rng(12)
        for _ in range(500):
            eff, mu, p_d = 10 ** rng.uniform(-4, 0), rng.uniform(0.05, 1.0), 10 ** rng.uniform(-8, -3)
            y = linear_loss_yields(eff, p_d)
            out = single_photon_bounds_nondecoy(
                ProbInterval.point(poisson_mixture(mu, y)), IntensityConfig(mu, None, p_d)
            )
            assert out.contains(y[1], tol=1e-12)

    @pytest.mark.parametrize("p_d", [1e-6, 1e-5])
    def test_decoy_tighter_in_lossy_regime(self, p_d):
        # nesting holds where signal clicks dominate dark counts and multi-photon terms
        mu, nu = 0.529, 0.057
        for db in np.arange(1.0, 20.01, 0.5):
            for state in SIM_STATES:
                y = linear_loss_yields(db_to_eta(db) * DETECTOR_FRACTION[state], p_d)
                p_mu = ProbInterval.point(poisson_mixture(mu, y))
                dec = single_photon_bounds_decoy(p_mu, ProbInterval.point(poisson_mixture(nu, y)),
                                                 IntensityConfig(mu, nu, p_d))
                non = single_photon_bounds_nondecoy(p_mu, IntensityConfig(mu, None, p_d))
                assert non.lo <= dec.lo + 1e-12 and dec.hi <= non.hi + 1e-12, (db, state)

    def test_nesting_fails_when_dark_counts_dominate(self):
        mu, nu, p_d = 0.529, 0.057, 1e-5
        y = linear_loss_yields(0.0, p_d)
        dec = single_photon_bounds_decoy(ProbInterval.point(poisson_mixture(mu, y)),
                                         ProbInterval.point(poisson_mixture(nu, y)), IntensityConfig(mu, nu, p_d))
        non = single_photon_bounds_nondecoy(ProbInterval.point(poisson_mixture(mu, y)), IntensityConfig(mu, None, p_d))
        assert dec.hi > non.hi
