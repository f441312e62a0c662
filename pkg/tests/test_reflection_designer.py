import math

import numpy as np
import pytest

from conftest import oracle_instance, random_instance
from error_handling import (
    DimensionError, EnumerationSizeError, InfeasibleError, ValidationError,
)
from propagation import ReflectionPattern
from reflection_designer import (
    amplitude_residual_bound, brute_force_best, decoy_power, design_mmse_multi, design_null_zone,
    design_reverse_alignment, design_spoof, least_squares_bound, optimal_residual_bound,
    quantize_pattern, random_pattern, stealth_objective, zone_grid,
)
from schemas import ReflectionMode


class TestBounds:

    def test_echo_too_strong_to_cancel(self):
        assert optimal_residual_bound(5.0, [1.0, 1.0]) == pytest.approx(3.0)

    def test_dominant_element(self):
        assert optimal_residual_bound(0.5, [3.0, 1.0]) == pytest.approx(1.5)

    def test_cancellable(self):
        assert optimal_residual_bound(1.0, [1.0, 1.0]) == 0.0

    def test_amplitude_bound(self):
        assert amplitude_residual_bound(0.5, [3.0, 1.0]) == 0.0
        assert amplitude_residual_bound(5.0, [1.0, 1.0]) == pytest.approx(3.0)


class TestReverseAlignment:

    def test_two_element_exact_cancellation(self):
        result = design_reverse_alignment(1.0, [1.0, 1.0])
        assert result.objective < 1e-24
        assert np.allclose(result.pattern.amplitudes, 1.0)

    def test_echo_larger_than_irs(self):
        result = design_reverse_alignment(5.0, [1.0, 1.0])
        assert math.sqrt(result.objective) == pytest.approx(3.0, rel=1e-9)
        # both elements anti-phase to g
        assert np.allclose(result.pattern.coefficients(), [-1.0, -1.0])

    def test_matches_the_closed_form_bound(self):
        rng = np.random.default_rng(2024)
        for seed in range(1000):
            n = int(rng.integers(2, 17))
            g, h = random_instance(seed, n, g_scale=float(rng.uniform(0.1, 6.0)))
            result = design_reverse_alignment(g, h)
            residual = math.sqrt(result.objective)
            scale = abs(g) + float(np.sum(np.abs(h)))
            assert abs(residual - optimal_residual_bound(g, h)) <= 1e-6 * scale

    def test_objective_is_recomputed_from_the_pattern(self):
        g, h = random_instance(3, 6)
        result = design_reverse_alignment(g, h)
        assert result.objective == pytest.approx(stealth_objective(g, h, result.pattern), rel=1e-12)

    def test_amplitude_mode_closed_form(self):
        result = design_reverse_alignment(0.5, [1.0, 1.0], ReflectionMode.AMPLITUDE)
        assert np.allclose(result.pattern.amplitudes, 0.25)
        assert result.objective < 1e-24

    def test_amplitude_mode_saturates(self):
        result = design_reverse_alignment(5.0 * np.exp(0.3j), [1.0, 1.0j], ReflectionMode.AMPLITUDE)
        assert np.allclose(result.pattern.amplitudes, 1.0)
        assert math.sqrt(result.objective) == pytest.approx(3.0, rel=1e-9)

    def test_empty_channel(self):
        with pytest.raises(DimensionError):
            design_reverse_alignment(1.0, [])


class TestMmseMulti:

    def test_never_below_the_least_squares_bound(self):
        rng = np.random.default_rng(1)
        # more radars than elements, so exact cancellation is out of reach
        g = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        H = rng.standard_normal((2, 3)) + 1j * rng.standard_normal((2, 3))
        bound = least_squares_bound(g, H)
        result = design_mmse_multi(g, H)
        assert bound > 0.0
        assert result.objective >= bound * (1.0 - 1e-9)
        assert result.details['least_squares_bound'] == pytest.approx(bound, rel=1e-6)

    def test_single_radar_agrees_with_reverse_alignment(self):
        g, h = random_instance(8, 5, g_scale=3.0)
        multi = design_mmse_multi(np.array([g]), h[:, None])
        assert math.sqrt(multi.objective) == pytest.approx(optimal_residual_bound(g, h), abs=1e-6 * abs(g))

    def test_beats_random_patterns(self):
        rng = np.random.default_rng(4)
        g = 0.5 * (rng.standard_normal(2) + 1j * rng.standard_normal(2))
        H = rng.standard_normal((8, 2)) + 1j * rng.standard_normal((8, 2))
        result = design_mmse_multi(g, H)
        for seed in range(20):
            assert result.objective <= stealth_objective(g, H, random_pattern(8, seed))

    def test_cancels_radars_with_nearly_parallel_channels(self):
        rng = np.random.default_rng(12)
        n = 24
        target = np.exp(1j * rng.uniform(0.0, 2 * np.pi, n))
        h0 = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        # mirrored grating-lobe pair: the second radar sees the first channel up to 1e-6 rad
        h1 = -h0 * np.exp(1e-6j * rng.standard_normal(n))
        h2 = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        H = np.column_stack([h0, h1, h2])
        g = -(H.T @ target)
        result = design_mmse_multi(g, H)
        assert result.objective <= 1e-20 * float(np.sum(np.abs(g) ** 2))

    def test_shape_mismatch(self):
        with pytest.raises(DimensionError):
            design_mmse_multi(np.ones(2), np.ones((4, 3)))

    def test_amplitude_mode_respects_passivity(self):
        rng = np.random.default_rng(6)
        g = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        H = 0.2 * (rng.standard_normal((5, 2)) + 1j * rng.standard_normal((5, 2)))
        result = design_mmse_multi(g, H, ReflectionMode.AMPLITUDE)
        assert np.all(result.pattern.amplitudes <= 1.0)


class TestDiscrete:

    def test_quantize_ties_go_down(self):
        one_bit = quantize_pattern(ReflectionPattern(np.ones(2), np.array([math.pi / 2, 0.6 * math.pi])), 1)
        assert np.allclose(one_bit.phases, [0.0, math.pi])
        assert one_bit.bits == 1
        two_bit = quantize_pattern(ReflectionPattern(np.ones(1), np.array([math.pi / 4])), 2)
        assert np.allclose(two_bit.phases, [0.0])

    def test_quantize_is_idempotent(self):
        once = quantize_pattern(random_pattern(16, 8), 3)
        twice = quantize_pattern(once, 3)
        assert np.allclose(once.phases, twice.phases)

    def test_quantize_rejects_zero_bits(self):
        with pytest.raises(ValidationError):
            quantize_pattern(ReflectionPattern.off(2), 0)

    def test_enumeration_limit(self):
        with pytest.raises(EnumerationSizeError):
            brute_force_best(1.0, np.ones(9), 3)

    def test_brute_force_enumerates_every_pattern(self):
        result = brute_force_best(2.0, [1.0, 1.0], 2)
        assert result.details['patterns_enumerated'] == 16
        assert result.objective < 1e-24
        assert result.pattern.bits == 2

    def test_continuous_design_not_worse_than_three_bit_oracle(self):
        rng = np.random.default_rng(77)
        for seed in range(40):
            n = int(rng.integers(2, 7))
            g, h = random_instance(seed, n, g_scale=float(rng.uniform(0.2, 4.0)))
            continuous = design_reverse_alignment(g, h)
            discrete = brute_force_best(g, h, 3)
            assert continuous.objective <= discrete.objective + 1e-9

    def test_random_pattern_is_seeded(self):
        assert np.array_equal(random_pattern(6, 3).phases, random_pattern(6, 3).phases)
        assert not np.array_equal(random_pattern(6, 3).phases, random_pattern(6, 4).phases)


class TestSpoof:

    def test_constraint_and_oracle(self):
        for seed in range(8):
            g, h, t = oracle_instance(seed)
            budget = 2.0 * optimal_residual_bound(g, h) ** 2
            result = design_spoof(g, h, t, budget, seed=seed)
            assert result.constraint_value <= budget * (1.0 + 1e-6)
            oracle = brute_force_best(g, h, 3, decoy=t, budget=budget)
            assert result.objective >= 0.95 * oracle.objective

    def test_decoy_power_is_recomputed(self, fast_solver):
        g, h, t = oracle_instance(11)
        budget = 2.0 * optimal_residual_bound(g, h) ** 2
        result = design_spoof(g, h, t, budget, config=fast_solver)
        assert result.objective == pytest.approx(decoy_power(t, result.pattern), rel=1e-12)

    def test_infeasible_budget_reports_the_bound(self):
        g, h, t = oracle_instance(2)
        bound = optimal_residual_bound(g, h) ** 2
        with pytest.raises(InfeasibleError) as info:
            design_spoof(g, h, t, 0.5 * bound)
        assert info.value.bound == pytest.approx(bound)

    def test_brute_force_infeasible(self):
        g, h, t = oracle_instance(2)
        with pytest.raises(InfeasibleError):
            brute_force_best(g, h, 2, decoy=t, budget=0.0)


class TestNullZone:

    @staticmethod
    def _channel_fn(seed: int = 0, n: int = 8):
        rng = np.random.default_rng(seed)
        base = rng.uniform(0.0, 2 * np.pi, n)

        def channel(angle_deg: float):
            shift = np.pi * np.sin(np.radians(angle_deg)) * np.arange(n)
            return 2.0 * np.exp(1j * 0.01 * angle_deg), np.exp(1j * (base + shift))
        return channel

    def test_zone_grid_inclusive(self):
        assert list(zone_grid((-2.0, 2.0), 1.0)) == [-2.0, -1.0, 0.0, 1.0, 2.0]

    def test_empty_zone(self):
        with pytest.raises(ValidationError):
            zone_grid((3.0, -3.0), 1.0)

    def test_worst_case_not_above_first_pass(self):
        channel = self._channel_fn()
        result = design_null_zone(channel, (-5.0, 5.0), 1.0)
        assert result.objective <= result.history[0] * (1.0 + 1e-9) + 1e-15
        powers = [abs(g + np.dot(result.pattern.coefficients(), h)) ** 2
                  for g, h in (channel(a) for a in zone_grid((-5.0, 5.0), 1.0))]
        assert result.objective == pytest.approx(max(powers))
        assert result.details['worst_angle_deg'] in result.details['grid_deg']

    def test_zone_beats_doing_nothing(self):
        channel = self._channel_fn(3)
        result = design_null_zone(channel, (-3.0, 3.0), 0.5)
        worst_without = max(abs(channel(a)[0]) ** 2 for a in zone_grid((-3.0, 3.0), 0.5))
        assert result.objective < worst_without
