import json
import math
from dataclasses import replace

import numpy as np
import pytest

from error_handling import DimensionError, ValidationError
from eval_harness import (
    FLOOR_DBM, POWER_COLUMNS, CaseStudyConfig, angle_sweep, bearing_channels, case_study_report,
    quantization_sweep, radar_count_sweep, replay_sweep, slope_db_per_radar,
)
from reflection_designer import optimal_residual_bound
from scene_model import default_scenario
from schemas import Algorithm, PlacementRule, Scenario

SMALL_GRID = [-30.0, -10.0, 0.0, 10.0, 30.0]


class TestAngleSweep:

    def test_columns_and_axis(self, scenario):
        table = angle_sweep(scenario, angle_grid=SMALL_GRID)
        assert list(table.frame.columns) == ['azimuth_deg', 'no_irs_dbm', 'random_dbm', 'optimized_dbm']
        assert table.to_csv().splitlines()[0] == 'azimuth_deg,no_irs_dbm,random_dbm,optimized_dbm'
        assert list(table.column('azimuth_deg')) == SMALL_GRID
        assert table.metadata['n_elements'] == 8
        assert table.metadata['range_m'] == pytest.approx(1000.0)

    def test_default_grid_covers_the_half_space(self, scenario):
        table = angle_sweep(scenario)
        axis = table.column('azimuth_deg')
        assert axis[0] == -90.0 and axis[-1] == 90.0 and len(axis) == 181

    def test_optimized_is_lowest_at_the_design_angle(self, scenario):
        table = angle_sweep(scenario, angle_grid=SMALL_GRID)
        at_zero = table.frame[table.frame['azimuth_deg'] == 0.0].iloc[0]
        assert at_zero['optimized_dbm'] < at_zero['no_irs_dbm']
        assert at_zero['optimized_dbm'] < at_zero['random_dbm']

    def test_suppression_reaches_what_the_geometry_allows(self):
        for seed in (1, 2, 3):
            scenario = default_scenario(surface_seed=seed)
            g, h = bearing_channels(scenario, 0.0, 1000.0)
            bound = optimal_residual_bound(g, h)
            reachable = 10 * math.log10(abs(g) ** 2 / bound ** 2) if bound > 0 else math.inf
            table = angle_sweep(scenario, angle_grid=[0.0])
            suppression = table.column('no_irs_dbm')[0] - table.column('optimized_dbm')[0]
            assert suppression >= min(40.0, reachable - 0.1)

    def test_same_seed_same_bytes(self, scenario):
        first = angle_sweep(scenario, angle_grid=SMALL_GRID).to_csv()
        second = angle_sweep(scenario, angle_grid=SMALL_GRID).to_csv()
        parallel = angle_sweep(scenario, angle_grid=SMALL_GRID, n_jobs=2).to_csv()
        assert first == second == parallel

    def test_random_baseline_fixed_unless_rerandomized(self, scenario):
        fixed = angle_sweep(scenario, angle_grid=[0.0, 0.0])
        assert fixed.column('random_dbm')[0] == fixed.column('random_dbm')[1]
        moving = angle_sweep(scenario, angle_grid=[0.0, 10.0], rerandomize=True)
        baseline = angle_sweep(scenario, angle_grid=[0.0, 10.0])
        assert not np.array_equal(moving.column('random_dbm'), baseline.column('random_dbm'))

    def test_null_zone_design(self, scenario, fast_solver):
        table = angle_sweep(scenario, Algorithm.NULL_ZONE, angle_grid=[-2.0, 0.0, 2.0],
                            zone=(-2.0, 2.0), config=fast_solver)
        assert np.max(table.column('optimized_dbm')) < np.max(table.column('no_irs_dbm'))

    def test_multiple_radars_rejected(self):
        with pytest.raises(DimensionError):
            angle_sweep(default_scenario(n_radars=2), angle_grid=[0.0])

    def test_algorithm_without_a_power_sweep(self, scenario):
        with pytest.raises(ValidationError):
            angle_sweep(scenario, Algorithm.SPOOF, angle_grid=[0.0])

    def test_empty_grid(self, scenario):
        with pytest.raises(ValidationError):
            angle_sweep(scenario, angle_grid=[])

    def test_fully_absorbing_target_hits_the_floor(self, scenario):
        absorbing = replace(scenario, target=replace(scenario.target, absorb_eff=1.0))
        table = angle_sweep(absorbing, angle_grid=[0.0])
        assert table.column('no_irs_dbm')[0] == FLOOR_DBM
        assert '-400' in table.to_csv().splitlines()[1]


class TestRadarCountSweep:

    @pytest.fixture
    def table(self, fast_solver):
        # nested layouts extend each other, so every seed's sums grow with K
        return radar_count_sweep(default_scenario(range_m=2000.0), (1, 2, 3), seeds=range(3),
                                 placement=PlacementRule.NESTED, config=fast_solver)

    def test_layout(self, table):
        assert list(table.frame.columns) == ['n_radars', 'no_irs_dbm', 'random_dbm', 'optimized_dbm']
        assert list(table.column('n_radars')) == [1, 2, 3]
        assert table.metadata['n_elements'] == 50
        assert set(table.metadata['slopes_db_per_radar']) == {'no-irs', 'random', 'optimized'}
        assert table.metadata['config']['placement'] == 'nested'

    def test_baselines_grow_with_the_radar_count(self, table):
        for column in ('no_irs_dbm', 'random_dbm'):
            assert np.all(np.diff(table.column(column)) >= 0.0)

    def test_optimized_below_no_irs(self, table):
        assert np.all(table.column('optimized_dbm') < table.column('no_irs_dbm'))

    def test_single_radar_agrees_with_angle_sweep(self, fast_solver):
        seed = 5
        table = radar_count_sweep(default_scenario(range_m=2000.0), [1], seeds=[seed], config=fast_solver)
        resized = Scenario.from_dict(table.metadata['config']['scenario'])
        single = replace(resized, target=replace(resized.target, surface_seed=seed), seed=seed)
        angle = angle_sweep(single, Algorithm.MMSE, angle_grid=[0.0], config=fast_solver)
        for column in ('no_irs_dbm', 'random_dbm'):
            assert table.column(column)[0] == pytest.approx(angle.column(column)[0], abs=1e-9)
        # near-perfect cancellation is only meaningful relative to the bare echo
        reference_mw = 10 ** (table.column('no_irs_dbm')[0] / 10)
        residuals_mw = [10 ** (t.column('optimized_dbm')[0] / 10) for t in (table, angle)]
        assert abs(residuals_mw[0] - residuals_mw[1]) <= 1e-9 * reference_mw

    def test_k_values_must_increase(self):
        with pytest.raises(ValidationError):
            radar_count_sweep(default_scenario(), (2, 1), seeds=[0])

    def test_needs_a_seed(self):
        with pytest.raises(ValidationError):
            radar_count_sweep(default_scenario(), (1, 2), seeds=[])


def test_quantization_sweep_labels(scenario):
    table = quantization_sweep(scenario, bits_values=(1, 3), seeds=range(4))
    assert list(table.column('bits')) == ['continuous', '1', '3']
    suppression = table.column('median_suppression_db')
    # one-bit phases cannot beat the continuous design
    assert suppression[1] <= suppression[0] + 1e-9


class TestReplay:

    def test_angle_sweep_replays_exactly(self, scenario):
        original = angle_sweep(scenario, angle_grid=SMALL_GRID)
        assert replay_sweep(original.metadata).to_csv() == original.to_csv()

    def test_tampered_metadata_rejected(self, scenario):
        metadata = angle_sweep(scenario, angle_grid=[0.0]).metadata
        tampered = {**metadata, 'config': {**metadata['config'], 'nominal_deg': 5.0}}
        with pytest.raises(ValidationError):
            replay_sweep(tampered)


def test_case_study_report_writes_the_bundle(tmp_path, fast_solver):
    config = CaseStudyConfig(seed=3, out_dir=str(tmp_path), angle_grid=[-10.0, 0.0, 10.0],
                             k_values=[1, 2], n_seeds=2)
    written = case_study_report(config, solver=fast_solver)
    assert set(written) == {'fig4_analog.csv', 'fig5_analog.csv', 'summary.json'}
    summary = json.loads((tmp_path / 'summary.json').read_text())
    assert summary['seed'] == 3
    assert summary['fig4']['n_elements'] == 8
    assert summary['fig5']['n_elements'] == 50
    assert summary['suppression_db_at_0deg'] > 0.0
    assert (tmp_path / 'fig5_analog.csv').read_text().startswith('n_radars,no_irs_dbm')
    assert summary['fig5']['floored_k'].keys() == {'no-irs', 'random', 'optimized'}


class TestSlope:

    def test_straight_line(self):
        assert slope_db_per_radar([1, 2, 3], [-150.0, -148.0, -146.0]) == pytest.approx(2.0)

    def test_floor_points_are_left_out_of_the_fit(self):
        assert slope_db_per_radar([1, 2, 3, 4], [FLOOR_DBM, -200.0, -199.0, -198.0]) == pytest.approx(1.0)

    def test_column_pinned_at_the_floor_has_not_risen(self):
        assert slope_db_per_radar([1, 2, 3], [FLOOR_DBM] * 3) == 0.0

    def test_single_point(self):
        assert slope_db_per_radar([1], [-150.0]) == 0.0


class TestCaseStudyCriteria:

    def test_designed_angle_ordering_over_a_hundred_seeds(self):
        passed = 0
        for seed in range(100):
            scenario = replace(default_scenario(surface_seed=seed), seed=seed)
            row = angle_sweep(scenario, angle_grid=[0.0]).frame.iloc[0]
            g, h = bearing_channels(scenario, 0.0, 1000.0)
            bound = optimal_residual_bound(g, h)
            reachable = 10 * math.log10(abs(g) ** 2 / bound ** 2) if bound > 0 else math.inf
            suppression = row['no_irs_dbm'] - row['optimized_dbm']
            if (row['optimized_dbm'] < row['random_dbm'] and row['optimized_dbm'] < row['no_irs_dbm']
                    and suppression >= min(40.0, reachable - 0.1)):
                passed += 1
        assert passed >= 95

    def test_sum_power_rises_slowest_with_the_design(self, fast_solver):
        table = radar_count_sweep(default_scenario(range_m=2000.0), config=fast_solver)
        assert list(table.column('n_radars')) == [1, 2, 3, 4, 5, 6]
        assert table.metadata['config']['placement'] == 'spread'
        assert len(table.metadata['config']['seeds']) == 20
        for column in POWER_COLUMNS:
            assert np.all(np.diff(table.column(column)) >= 0.0), column
        slopes = table.metadata['slopes_db_per_radar']
        assert slopes['no-irs'] > 0.0 and slopes['random'] > 0.0
        assert slopes['optimized'] < slopes['no-irs']
        assert slopes['optimized'] < slopes['random']

    def test_case_study_bytes_repeat_across_runs_and_jobs(self, tmp_path, fast_solver):
        names = ('fig4_analog.csv', 'fig5_analog.csv', 'summary.json')
        bundles = []
        for run, n_jobs in (('first', 1), ('second', 1), ('parallel', 2)):
            config = CaseStudyConfig(seed=11, out_dir=str(tmp_path / run), angle_grid=[-10.0, 0.0, 10.0],
                                     k_values=[1, 2, 3], n_seeds=3, n_jobs=n_jobs)
            case_study_report(config, solver=fast_solver)
            bundles.append({name: (tmp_path / run / name).read_bytes() for name in names})
        assert bundles[0] == bundles[1] == bundles[2]
