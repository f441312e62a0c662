"""
Case-study sweeps: received power versus radar bearing (single radar, small IRS) and sum power
versus radar count (large IRS), each against the no-IRS and random-phase baselines.
"""
import hashlib
import json
import logging
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from config import DEFAULT_SOLVER, SolverConfig
from error_handling import DimensionError, ValidationError
from propagation import ReflectionPattern, synth_cascaded_channels, synth_surface_echo
from reflection_designer import (
    design_mmse_multi, design_null_zone, design_reverse_alignment, quantize_pattern, random_pattern,
)
from result_writer import render_frame_csv, render_json, write_bundle
from scene_model import default_scenario, place_radar, radar_bearings, validate_scenario
from schemas import (
    Algorithm, PlacementRule, RadarSpec, ReflectionMode, Scenario, dbm_to_watts, watts_to_dbm,
)
from seeding import derive_seed

logger = logging.getLogger(__name__)

POWER_COLUMNS = ['no_irs_dbm', 'random_dbm', 'optimized_dbm']
STRATEGIES = ['no-irs', 'random', 'optimized']
FLOOR_DBM = -400.0


def config_digest(config: Dict[str, Any]) -> str:
    canonical = json.dumps(config, sort_keys=True, separators=(',', ':'))
    return hashlib.sha256(canonical.encode('utf-8')).hexdigest()


@dataclass
class SweepTable:
    axis_label: str
    frame: pd.DataFrame
    metadata: Dict[str, Any] = field(default_factory=dict)

    def column(self, name: str) -> np.ndarray:
        return self.frame[name].to_numpy()

    def to_csv(self) -> str:
        return render_frame_csv(self.frame, float_format=None)

    def to_json(self) -> str:
        return render_json({'axis': self.axis_label,
                            'columns': list(self.frame.columns),
                            'rows': self.frame.to_dict(orient='records'),
                            'metadata': self.metadata})


def _power_dbm(tx_power_dbm: float, amplitude_squared: float) -> float:
    return watts_to_dbm(dbm_to_watts(tx_power_dbm) * amplitude_squared, FLOOR_DBM)


def _optimized_pattern(g: np.ndarray, H: np.ndarray, algorithm: Algorithm, mode: ReflectionMode,
                       config: SolverConfig) -> ReflectionPattern:
    if algorithm == Algorithm.REVERSE_ALIGNMENT:
        if g.size != 1:
            raise DimensionError("reverse alignment handles a single radar", expected=1, got=int(g.size))
        return design_reverse_alignment(g[0], H[:, 0], mode, config).pattern
    if algorithm == Algorithm.MMSE:
        return design_mmse_multi(g, H, mode, config=config).pattern
    raise ValidationError(f"algorithm {algorithm.value} cannot drive a power sweep", field="algorithm")


def _radar_channels(scenario: Scenario):
    g = np.array([synth_surface_echo(scenario, k) for k in range(scenario.n_radars)])
    H = np.column_stack([synth_cascaded_channels(scenario, k) for k in range(scenario.n_radars)])
    return g, H


def _repose(scenario: Scenario, bearings: Sequence[float], range_m: float,
            tx_power_dbm: float) -> Scenario:
    target = scenario.target
    radars = tuple(
        RadarSpec(position=place_radar(target.position, target.surface, b, range_m),
                  tx_power_dbm=tx_power_dbm)
        for b in bearings
    )
    return validate_scenario(replace(scenario, radars=radars))


def bearing_channels(scenario: Scenario, bearing_deg: float, range_m: float):
    """(g, h) for the first radar re-posed at a bearing around the target"""
    posed = _repose(scenario, [bearing_deg], range_m, scenario.radars[0].tx_power_dbm)
    return synth_surface_echo(posed, 0), synth_cascaded_channels(posed, 0)


def _angle_point(scenario: Scenario, bearing: float, range_m: float, tx_power_dbm: float,
                 random_theta: np.ndarray, optimized_theta: np.ndarray) -> List[float]:
    g, h = bearing_channels(scenario, bearing, range_m)
    return [
        _power_dbm(tx_power_dbm, abs(g) ** 2),
        _power_dbm(tx_power_dbm, abs(g + np.dot(random_theta, h)) ** 2),
        _power_dbm(tx_power_dbm, abs(g + np.dot(optimized_theta, h)) ** 2),
    ]


def default_angle_grid(step_deg: float = 1.0) -> List[float]:
    count = int(round(180.0 / step_deg)) + 1
    return [float(a) for a in np.round(np.linspace(-90.0, 90.0, count), 10)]


def angle_sweep(scenario: Scenario, algorithm: Algorithm = Algorithm.REVERSE_ALIGNMENT,
                angle_grid: Optional[Sequence[float]] = None,
                mode: ReflectionMode = ReflectionMode.UNIT_MODULUS, nominal_deg: float = 0.0,
                rerandomize: bool = False, n_jobs: int = 1,
                config: SolverConfig = DEFAULT_SOLVER,
                zone: Tuple[float, float] = (-5.0, 5.0), zone_step_deg: float = 1.0) -> SweepTable:
    """Received power versus radar bearing

    The optimized pattern is designed once, at the nominal angle (or over `zone` for the
    null-zone algorithm), and then held fixed while the radar moves.
    """
    scenario = validate_scenario(scenario)
    if scenario.n_radars != 1:
        raise DimensionError("angle sweep needs a single-radar scenario", expected=1,
                             got=scenario.n_radars)
    grid = default_angle_grid() if angle_grid is None else [float(a) for a in angle_grid]
    if not grid:
        raise ValidationError("angle grid must be nonempty", field="angle_grid")

    radar = scenario.radars[0]
    range_m = float(np.linalg.norm(np.subtract(radar.position, scenario.target.position)))
    tx = radar.tx_power_dbm
    n_elements = scenario.irs.n_elements

    if algorithm == Algorithm.NULL_ZONE:
        optimized = design_null_zone(lambda b: bearing_channels(scenario, b, range_m), zone,
                                     zone_step_deg, mode, config).pattern.coefficients()
    else:
        nominal = _repose(scenario, [nominal_deg], range_m, tx)
        g0, H0 = _radar_channels(nominal)
        optimized = _optimized_pattern(g0, H0, algorithm, mode, config).coefficients()

    def random_theta(bearing: float) -> np.ndarray:
        label = f"random-pattern:{bearing!r}" if rerandomize else "random-pattern"
        return random_pattern(n_elements, derive_seed(scenario.seed, label)).coefficients()

    rows = Parallel(n_jobs=n_jobs)(
        delayed(_angle_point)(scenario, b, range_m, tx, random_theta(b), optimized) for b in grid
    )
    frame = pd.DataFrame(rows, columns=POWER_COLUMNS)
    frame.insert(0, 'azimuth_deg', grid)

    sweep_config = {
        'kind': 'angle', 'scenario': scenario.to_dict(), 'angle_grid': grid,
        'algorithm': algorithm.value, 'mode': mode.value, 'nominal_deg': nominal_deg,
        'rerandomize': rerandomize, 'zone': [float(zone[0]), float(zone[1])],
        'zone_step_deg': zone_step_deg,
    }
    metadata = {
        'config': sweep_config, 'config_digest': config_digest(sweep_config), 'seed': scenario.seed,
        'strategies': STRATEGIES, 'n_elements': n_elements, 'range_m': range_m,
    }
    logger.info(f"Angle sweep over {len(grid)} bearings, N={n_elements}, {algorithm.value}")
    return SweepTable('azimuth_deg', frame, metadata)


def _with_irs_size(scenario: Scenario, n_elements: int) -> Scenario:
    if scenario.irs.n_elements == n_elements:
        return scenario
    array = replace(scenario.irs.array, rows=1, cols=int(n_elements))
    return replace(scenario, irs=replace(scenario.irs, array=array))


def _radar_count_seed(template: Scenario, k_values: Sequence[int], seed: int, range_m: float,
                      placement: PlacementRule, algorithm: Algorithm, mode: ReflectionMode,
                      config: SolverConfig) -> np.ndarray:
    """Sum powers (watts) per K for one seed; columns follow POWER_COLUMNS"""
    scenario = replace(template, target=replace(template.target, surface_seed=int(seed)), seed=int(seed))
    n_elements = scenario.irs.n_elements
    theta_random = random_pattern(n_elements, derive_seed(seed, "random-pattern")).coefficients()
    tx = template.radars[0].tx_power_dbm if template.radars else 15.0
    sums = np.zeros((len(k_values), 3))
    for row, k in enumerate(k_values):
        posed = _repose(scenario, radar_bearings(k, placement), range_m, tx)
        g, H = _radar_channels(posed)
        theta_opt = _optimized_pattern(g, H, algorithm, mode, config).coefficients()
        tx_w = np.array([dbm_to_watts(r.tx_power_dbm) for r in posed.radars])
        sums[row] = [
            np.sum(tx_w * np.abs(g) ** 2),
            np.sum(tx_w * np.abs(g + H.T @ theta_random) ** 2),
            np.sum(tx_w * np.abs(g + H.T @ theta_opt) ** 2),
        ]
    return sums


def slope_db_per_radar(k_values: Sequence[int], values_dbm: Sequence[float]) -> float:
    """Least-squares dB-per-radar slope over the points above the floor sentinel

    A column pinned at the floor for every K has not risen at all and reports 0.
    """
    k = np.asarray(k_values, dtype=float)
    values = np.asarray(values_dbm, dtype=float)
    live = values > FLOOR_DBM
    if np.count_nonzero(live) < 2:
        return 0.0
    return float(np.polyfit(k[live], values[live], 1)[0])


def radar_count_sweep(template: Scenario, k_values: Sequence[int] = (1, 2, 3, 4, 5, 6),
                      algorithm: Algorithm = Algorithm.MMSE, seeds: Sequence[int] = tuple(range(20)),
                      n_elements: int = 50, range_m: float = 2000.0,
                      placement: PlacementRule = PlacementRule.SPREAD,
                      mode: ReflectionMode = ReflectionMode.UNIT_MODULUS, n_jobs: int = 1,
                      config: SolverConfig = DEFAULT_SOLVER) -> SweepTable:
    """Median over seeds of the sum received power versus the number of radars

    Slopes come from slope_db_per_radar; K values pinned at the floor are listed under floored_k.
    """
    k_values = [int(k) for k in k_values]
    if not k_values or any(k < 1 for k in k_values) or any(b <= a for a, b in zip(k_values, k_values[1:])):
        raise ValidationError("K values must be positive and strictly increasing", field="k_values")
    if not seeds:
        raise ValidationError("at least one seed is required", field="seeds")
    template = _with_irs_size(validate_scenario(template), n_elements)

    per_seed = Parallel(n_jobs=n_jobs)(
        delayed(_radar_count_seed)(template, k_values, s, range_m, placement, algorithm, mode, config)
        for s in seeds
    )
    medians = np.median(np.stack(per_seed), axis=0)
    frame = pd.DataFrame([[watts_to_dbm(v, FLOOR_DBM) for v in row] for row in medians],
                         columns=POWER_COLUMNS)
    frame.insert(0, 'n_radars', k_values)

    slopes, floored = {}, {}
    for name, column in zip(STRATEGIES, POWER_COLUMNS):
        values = frame[column].to_numpy()
        slopes[name] = slope_db_per_radar(k_values, values)
        floored[name] = [k for k, v in zip(k_values, values) if v <= FLOOR_DBM]

    sweep_config = {
        'kind': 'radars', 'scenario': template.to_dict(), 'k_values': k_values,
        'seeds': [int(s) for s in seeds], 'algorithm': algorithm.value, 'mode': mode.value,
        'n_elements': n_elements, 'range_m': range_m, 'placement': placement.value,
    }
    metadata = {
        'config': sweep_config, 'config_digest': config_digest(sweep_config),
        'seed': int(seeds[0]), 'strategies': STRATEGIES, 'n_elements': n_elements,
        'slopes_db_per_radar': slopes, 'floored_k': floored,
    }
    logger.info(f"Radar-count sweep K={k_values}, {len(seeds)} seeds, N={n_elements}")
    return SweepTable('n_radars', frame, metadata)


def quantization_sweep(scenario: Scenario, bits_values: Sequence[int] = (1, 2, 3, 4),
                       seeds: Sequence[int] = tuple(range(20)),
                       config: SolverConfig = DEFAULT_SOLVER) -> SweepTable:
    """Median suppression at the designed angle for continuous and b-bit phase control"""
    scenario = validate_scenario(scenario)
    if scenario.n_radars != 1:
        raise DimensionError("quantization sweep needs a single-radar scenario", expected=1,
                             got=scenario.n_radars)
    labels = ['continuous'] + [str(int(b)) for b in bits_values]
    suppression = np.zeros((len(seeds), len(labels)))
    tx = scenario.radars[0].tx_power_dbm
    for i, seed in enumerate(seeds):
        seeded = replace(scenario, target=replace(scenario.target, surface_seed=int(seed)))
        g = synth_surface_echo(seeded, 0)
        h = synth_cascaded_channels(seeded, 0)
        pattern = design_reverse_alignment(g, h, ReflectionMode.UNIT_MODULUS, config).pattern
        baseline = _power_dbm(tx, abs(g) ** 2)
        variants = [pattern] + [quantize_pattern(pattern, int(b)) for b in bits_values]
        for j, variant in enumerate(variants):
            residual = abs(g + np.dot(variant.coefficients(), h)) ** 2
            suppression[i, j] = baseline - _power_dbm(tx, residual)

    frame = pd.DataFrame({'bits': labels, 'median_suppression_db': np.median(suppression, axis=0)})
    sweep_config = {'kind': 'quantization', 'scenario': scenario.to_dict(),
                    'bits': [int(b) for b in bits_values], 'seeds': [int(s) for s in seeds]}
    return SweepTable('bits', frame, {'config': sweep_config, 'config_digest': config_digest(sweep_config),
                                      'n_elements': scenario.irs.n_elements})


def replay_sweep(metadata: Dict[str, Any], n_jobs: int = 1) -> SweepTable:
    """Recompute a sweep from the configuration stored in its metadata"""
    sweep_config = metadata['config']
    if config_digest(sweep_config) != metadata.get('config_digest'):
        raise ValidationError("metadata digest does not match its configuration", field="config_digest")
    scenario = Scenario.from_dict(sweep_config['scenario'])
    kind = sweep_config['kind']
    if kind == 'angle':
        return angle_sweep(scenario, Algorithm(sweep_config['algorithm']), sweep_config['angle_grid'],
                           ReflectionMode(sweep_config['mode']), sweep_config['nominal_deg'],
                           sweep_config['rerandomize'], n_jobs,
                           zone=tuple(sweep_config['zone']), zone_step_deg=sweep_config['zone_step_deg'])
    if kind == 'radars':
        return radar_count_sweep(scenario, sweep_config['k_values'], Algorithm(sweep_config['algorithm']),
                                 sweep_config['seeds'], sweep_config['n_elements'],
                                 sweep_config['range_m'], PlacementRule(sweep_config['placement']),
                                 ReflectionMode(sweep_config['mode']), n_jobs)
    if kind == 'quantization':
        return quantization_sweep(scenario, sweep_config['bits'], sweep_config['seeds'])
    raise ValidationError(f"unknown sweep kind {kind!r}", field="kind")


@dataclass
class CaseStudyConfig:
    seed: int = 0
    out_dir: str = "results"
    angle_grid: Optional[List[float]] = None
    k_values: List[int] = field(default_factory=lambda: [1, 2, 3, 4, 5, 6])
    n_seeds: int = 20
    mode: ReflectionMode = ReflectionMode.UNIT_MODULUS
    n_jobs: int = 1
    placement: PlacementRule = PlacementRule.SPREAD


def _value_at(table: SweepTable, axis_value: float, column: str) -> float:
    axis = table.column(table.axis_label).astype(float)
    return float(table.column(column)[int(np.argmin(np.abs(axis - axis_value)))])


def case_study_tables(config: CaseStudyConfig, scenario: Optional[Scenario] = None,
                      solver: SolverConfig = DEFAULT_SOLVER):
    """Both case-study sweeps plus their summary record"""
    base = scenario if scenario is not None else default_scenario()
    small = replace(_with_irs_size(base, 8), seed=int(config.seed))
    small = replace(small, radars=small.radars[:1])
    fig4 = angle_sweep(small, Algorithm.REVERSE_ALIGNMENT, config.angle_grid, config.mode,
                       n_jobs=config.n_jobs, config=solver)

    seeds = [derive_seed(config.seed, f"radar-count:{i}") for i in range(config.n_seeds)]
    fig5 = radar_count_sweep(base, config.k_values, Algorithm.MMSE, seeds, 50,
                             placement=config.placement, mode=config.mode, n_jobs=config.n_jobs,
                             config=solver)

    suppression = _value_at(fig4, 0.0, 'no_irs_dbm') - _value_at(fig4, 0.0, 'optimized_dbm')
    digest = config_digest({'fig4': fig4.metadata['config_digest'],
                            'fig5': fig5.metadata['config_digest']})
    summary = {
        'config_digest': digest,
        'seed': int(config.seed),
        'suppression_db_at_0deg': suppression,
        'slopes_db_per_radar': fig5.metadata['slopes_db_per_radar'],
        'fig4': {k: v for k, v in fig4.metadata.items() if k != 'config'},
        'fig5': {k: v for k, v in fig5.metadata.items() if k != 'config'},
    }
    return fig4, fig5, summary


def case_study_report(config: CaseStudyConfig, scenario: Optional[Scenario] = None,
                      solver: SolverConfig = DEFAULT_SOLVER) -> Dict[str, str]:
    """Run both sweeps and write fig4_analog.csv, fig5_analog.csv and summary.json"""
    fig4, fig5, summary = case_study_tables(config, scenario, solver)
    files = {
        'fig4_analog.csv': fig4.to_csv(),
        'fig5_analog.csv': fig5.to_csv(),
        'summary.json': render_json(summary),
    }
    return write_bundle(config.out_dir, files)
