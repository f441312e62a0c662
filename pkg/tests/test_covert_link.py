import math
from dataclasses import replace

import numpy as np
import pytest

from config import MonteCarloConfig
from covert_link import (
    CovertChannels, bob_rate, design_covert, exact_min_error_prob, gaussian_min_error_prob,
    synth_covert_channels, willie_min_error_prob,
)
from error_handling import GeometryError, InfeasibleError, ValidationError
from propagation import ReflectionPattern
from reflection_designer import brute_force_best, optimal_residual_bound, random_pattern
from schemas import CovertGeometry, FadingMode

NOISE_W = 1e-13


def _channels(seed: int, n: int = 4) -> CovertChannels:
    """Willie sees a strong direct path the IRS can only partly cancel"""
    rng = np.random.default_rng(seed)
    r_w = rng.uniform(0.3, 0.8, n) * np.exp(1j * rng.uniform(0, 2 * np.pi, n))
    r_b = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / math.sqrt(2.0)
    return CovertChannels(d_b=0.5 + 0.0j, d_w=4.0 * np.exp(1j * rng.uniform(0, 2 * np.pi)),
                          r_b=r_b, r_w=r_w, noise_b=NOISE_W, noise_w=NOISE_W, tx_power=1.0)


def test_default_geometry_channels():
    ch = synth_covert_channels(CovertGeometry())
    assert ch.n_elements == 64
    assert ch.tx_power == pytest.approx(0.1)
    assert ch.noise_w == pytest.approx(1e-13)
    # 40 dB obstruction on Willie's direct path
    plain = synth_covert_channels(replace(CovertGeometry(), willie_direct_loss_db=0.0))
    assert abs(ch.d_w) == pytest.approx(abs(plain.d_w) * 1e-2)


def test_rayleigh_fading_is_seeded():
    geometry = replace(CovertGeometry(), fading=FadingMode.RAYLEIGH)
    a = synth_covert_channels(geometry, seed=3)
    b = synth_covert_channels(geometry, seed=3)
    c = synth_covert_channels(geometry, seed=4)
    assert np.array_equal(a.r_b, b.r_b)
    assert not np.array_equal(a.r_b, c.r_b)


def test_coincident_nodes_rejected():
    with pytest.raises(GeometryError):
        synth_covert_channels(replace(CovertGeometry(), willie=(100.0, 0.0, 0.0)))


def test_zero_amplifier_gain_rejected():
    with pytest.raises(ValidationError):
        synth_covert_channels(replace(CovertGeometry(), element_amp_gain=0.0))


class TestDesignCovert:

    def test_budget_met_and_beats_random_feasible_patterns(self):
        for seed in range(5):
            ch = _channels(seed)
            bound = optimal_residual_bound(ch.d_w, ch.r_w) ** 2
            epsilon = 2.0 * bound
            result = design_covert(ch, epsilon, seed=seed)
            assert ch.willie_power(result.pattern) <= epsilon * (1.0 + 1e-6)
            assert result.constraint_value == pytest.approx(ch.willie_power(result.pattern), rel=1e-12)

            rng_powers = []
            for k in range(300):
                pattern = random_pattern(ch.n_elements, 1000 * seed + k)
                if ch.willie_power(pattern) <= epsilon:
                    rng_powers.append(abs(ch.bob_amplitude(pattern)) ** 2)
            if rng_powers:
                assert result.objective >= np.median(rng_powers)

    def test_reaches_the_discrete_oracle(self):
        for seed in range(5):
            ch = _channels(seed)
            epsilon = 2.0 * optimal_residual_bound(ch.d_w, ch.r_w) ** 2
            result = design_covert(ch, epsilon, seed=seed)
            oracle = brute_force_best(ch.d_w, ch.r_w, 3, decoy=ch.r_b, budget=epsilon,
                                      decoy_direct=ch.d_b)
            assert result.objective >= 0.95 * oracle.objective

    def test_infeasible_epsilon_reports_watts(self):
        ch = replace(_channels(1), tx_power=0.5)
        bound_w = 0.5 * optimal_residual_bound(ch.d_w, ch.r_w) ** 2
        with pytest.raises(InfeasibleError) as info:
            design_covert(ch, 0.1 * bound_w)
        assert info.value.bound == pytest.approx(bound_w)

    def test_negative_epsilon(self):
        with pytest.raises(ValidationError):
            design_covert(_channels(0), -1.0)


class TestRadiometer:

    def test_no_signal_means_coin_flip_or_worse(self):
        ch = _channels(0)
        silent = replace(ch, d_w=0j, r_w=np.zeros(ch.n_elements, dtype=complex))
        report = willie_min_error_prob(silent, ReflectionPattern.off(ch.n_elements), 50, 20_000, seed=1)
        assert report.signal_power == 0.0
        assert report.xi == pytest.approx(1.0, abs=2.0 / math.sqrt(20_000))
        assert report.xi_gaussian == 1.0
        assert report.xi_exact == 1.0

    def test_agrees_with_gaussian_approximation(self):
        ch = replace(_channels(0), d_w=math.sqrt(0.2 * NOISE_W) + 0j,
                     r_w=np.zeros(4, dtype=complex))
        report = willie_min_error_prob(ch, ReflectionPattern.off(4), 100, 200_000, seed=7)
        assert report.xi == pytest.approx(report.xi_gaussian, abs=0.02)
        assert report.xi == pytest.approx(report.xi_exact, abs=0.01)

    def test_unit_snr_million_trials(self):
        ch = replace(_channels(0), d_w=math.sqrt(NOISE_W) + 0j, r_w=np.zeros(4, dtype=complex))
        report = willie_min_error_prob(ch, ReflectionPattern.off(4), 100, 1_000_000, seed=13)
        assert report.signal_power == pytest.approx(NOISE_W)
        assert report.xi == pytest.approx(report.xi_gaussian, abs=0.01)
        assert report.xi == pytest.approx(report.xi_exact, abs=0.01)
        assert report.xi < 0.05

    def test_more_samples_help_willie(self):
        ch = replace(_channels(0), d_w=math.sqrt(0.1 * NOISE_W) + 0j,
                     r_w=np.zeros(4, dtype=complex))
        short = willie_min_error_prob(ch, ReflectionPattern.off(4), 100, 50_000, seed=3)
        long = willie_min_error_prob(ch, ReflectionPattern.off(4), 400, 50_000, seed=3)
        assert long.xi < short.xi

    def test_chunking_does_not_change_the_answer(self):
        ch = replace(_channels(0), d_w=math.sqrt(0.1 * NOISE_W) + 0j,
                     r_w=np.zeros(4, dtype=complex))
        pattern = ReflectionPattern.off(4)
        serial = willie_min_error_prob(ch, pattern, 64, 10_000, seed=5,
                                       monte_carlo=MonteCarloConfig(chunk_size=2_500, n_jobs=1))
        parallel = willie_min_error_prob(ch, pattern, 64, 10_000, seed=5,
                                         monte_carlo=MonteCarloConfig(chunk_size=2_500, n_jobs=2))
        assert serial.xi == parallel.xi
        assert serial.threshold == parallel.threshold

    def test_rejects_zero_samples(self):
        with pytest.raises(ValidationError):
            willie_min_error_prob(_channels(0), ReflectionPattern.off(4), 0, 100, seed=0)

    def test_closed_forms_decrease_with_signal(self):
        weak = gaussian_min_error_prob(0.05 * NOISE_W, NOISE_W, 100)
        strong = gaussian_min_error_prob(0.3 * NOISE_W, NOISE_W, 100)
        assert strong < weak < 1.0
        assert exact_min_error_prob(0.3 * NOISE_W, NOISE_W, 100) < exact_min_error_prob(0.05 * NOISE_W, NOISE_W, 100)


def test_bob_rate():
    ch = replace(_channels(0), d_b=math.sqrt(3.0 * NOISE_W) + 0j, r_b=np.zeros(4, dtype=complex))
    assert bob_rate(ch, ReflectionPattern.off(4)) == pytest.approx(2.0)
