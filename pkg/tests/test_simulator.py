import math

import numpy as np
import pytest

from mdicw.decoy import empirical_prob
from mdicw.errors import UnknownState
from mdicw.simulator import (
    ATTACKED_WITNESS,
    FIG3_PROPORTIONS,
    SIM_STATES,
    ChannelConfig,
    attack_demo,
    channel_prob,
    db_to_eta,
    eta_to_db,
    loss_sweep,
    optimize_intensities,
    optimize_signal_intensity,
    simulate_counts,
    simulate_point,
    simulated_yields,
    single_photon_prob,
    sweep_values,
)


def test_db_conversion():
    assert db_to_eta(13.13) == pytest.approx(0.0486, abs=1e-4)
    assert eta_to_db(db_to_eta(7.5)) == pytest.approx(7.5)


class TestChannel:
    def test_config_validation(self):
        with pytest.raises(ValueError):
            ChannelConfig(eta=0.0)
        with pytest.raises(ValueError):
            ChannelConfig(eta=0.5, eta_j={"Z0": 0.5})
        with pytest.raises(UnknownState):
            ChannelConfig(eta=0.5, eta_j={"Q": 1.0})

    def test_pulse_budget(self):
        cfg = ChannelConfig(eta=0.1)
        total = sum(cfg.pulses(s, c) for s in FIG3_PROPORTIONS for c in ("signal", "decoy"))
        assert total == pytest.approx(cfg.N)

    def test_click_model(self):
        cfg = ChannelConfig(eta=0.1, p_d=1e-6)
        assert channel_prob("Z0", 0.5, cfg) == pytest.approx(1 - (1 - 1e-6) * math.exp(-0.1 * 0.5 * 0.5))
        assert channel_prob("YP", 0.5, cfg) == pytest.approx(1 - (1 - 1e-6) * math.exp(-0.05))
        assert channel_prob("RHO_MINUS_I", 0.5, cfg) == pytest.approx(1e-6)

    def test_monotone(self):
        for state in SIM_STATES:
            ps = [channel_prob(state, i, ChannelConfig(eta=0.2)) for i in np.linspace(0.01, 1, 20)]
            assert np.all(np.diff(ps) > 0)
            ps = [channel_prob(state, 0.5, ChannelConfig(eta=e)) for e in np.linspace(0.01, 1, 20)]
            assert np.all(np.diff(ps) > 0)

    def test_error_rate_mixes_outcomes(self):
        clean = ChannelConfig(eta=0.3)
        noisy = ChannelConfig(eta=0.3, error_rate=0.1)
        p = channel_prob("RHO_MINUS_I", 0.5, noisy)
        assert p == pytest.approx(0.9 * channel_prob("RHO_MINUS_I", 0.5, clean) + 0.1 * channel_prob("RHO_PLUS_I", 0.5, clean))

    def test_single_photon_is_poisson_limit(self):
        cfg = ChannelConfig(eta=0.2, p_d=1e-4)
        # a one-photon pulse clicks with 1 - (1 - p_d)(1 - eta f)
        assert single_photon_prob("XP", cfg) == pytest.approx(1 - (1 - 1e-4) * (1 - 0.1))

    def test_counts_recover_probabilities(self):
        cfg = ChannelConfig(eta=db_to_eta(10))
        for r in simulate_counts(cfg):
            intensity = cfg.mu if r.intensity_class == "signal" else cfg.nu
            assert abs(empirical_prob(r) - channel_prob(r.state_label, intensity, cfg)) <= 0.5 / r.sent

    def test_sampled_counts_reproducible(self):
        cfg = ChannelConfig(eta=0.05)
        assert simulate_counts(cfg, seed=3) == simulate_counts(cfg, seed=3)
        assert simulate_counts(cfg, seed=3) != simulate_counts(cfg, seed=4)


class TestYields:
    def test_contain_true_single_photon(self):
        rng = np.random.default_rng(21)
        for _ in range(100):
            nu_ratio = rng.uniform(0.02, 0.9)
            mu = rng.uniform(0.05, 1)
            cfg = ChannelConfig(eta=10 ** rng.uniform(-3, 0), mu=mu, nu=nu_ratio * mu, p_d=10 ** rng.uniform(-7, -4))
            y = simulated_yields(cfg)
            for s in SIM_STATES:
                assert y[s].contains(single_photon_prob(s, cfg), tol=1e-12)

    def test_method_checked(self):
        with pytest.raises(ValueError):
            simulated_yields(ChannelConfig(eta=0.1), method="magic")


class TestOptimizer:
    def test_decoy_optimum_is_grid_minimum(self):
        cfg = ChannelConfig(eta=db_to_eta(13.13))
        opt = optimize_intensities(cfg, grid=(40, 40))
        raw = optimize_intensities(cfg, grid=(40, 40), refine=False)
        assert opt.objective <= raw.objective
        assert 0 < opt.nu < opt.mu

    def test_signal_optimum(self):
        opt = optimize_signal_intensity(ChannelConfig(eta=db_to_eta(10), p_s=1.0))
        assert opt.nu is None and 0.01 <= opt.mu <= 1.0


class TestSweep:
    def test_sweep_values(self):
        assert len(sweep_values(0, 20, 0.5)) == 41
        assert sweep_values(1, 2, 0.5) == [1.0, 1.5, 2.0]
        with pytest.raises(ValueError):
            sweep_values(0, 1, 0)

    def test_nondecoy_zero_at_high_loss(self):
        assert simulate_point(ChannelConfig(eta=1.0), 13.13, "nondecoy").c_lower_bits == 0.0

    def test_sorted(self):
        pts = loss_sweep(ChannelConfig(eta=1.0), [12.0, 6.0], "decoy", optimize=False)
        assert [p.loss_db for p in pts] == [6.0, 12.0]
        assert all(p.flag == "ok" for p in pts)

    def test_failure_is_flagged(self):
        # with every pulse at signal intensity there is no decoy data
        pt = simulate_point(ChannelConfig(eta=1.0, p_s=1.0), 5.0, "decoy", optimize=False)
        assert math.isnan(pt.c_lower_bits) and pt.flag != "ok"


class TestAttack:
    def test_reported_value(self):
        rep = attack_demo(0.2)
        assert rep.attacked_value == pytest.approx(-0.1, abs=1e-12)
        assert rep.falsely_witnessed

    def test_threshold(self):
        assert not attack_demo(0.25).falsely_witnessed
        assert attack_demo(0.25).attacked_value == 0.0
        assert attack_demo(0.25 - 1e-9).falsely_witnessed

    def test_intended_witness_never_fires_on_incoherent(self):
        for p in np.linspace(0, 1, 101):
            assert attack_demo(p).intended_value >= 0

    def test_attacked_witness_is_not_a_valid_witness(self):
        # its dephased form has a negative eigenvalue
        w = ATTACKED_WITNESS
        assert min(w.w0 + w.w3, w.w0 - w.w3) < 0

    def test_range(self):
        with pytest.raises(ValueError):
            attack_demo(1.5)
