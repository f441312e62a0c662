"""
Command-line batch interface: scenario-file parsing, command dispatch and output writing.
"""
import argparse
import logging
import math
import sys
from dataclasses import dataclass, field, fields, replace
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
import yaml

from config import AppConfig, ConfigManager, setup_logging, validate_config
from covert_link import bob_rate, design_covert, synth_covert_channels, willie_min_error_prob
from error_handling import (
    EXIT_OK, ConfigSyntaxError, EmShieldError, IndexOutOfRangeError, UsageError, ValidationError,
    exit_code_for, format_error_line, handle_errors, log_error, require_positive,
)
from eval_harness import (
    CaseStudyConfig, angle_sweep, bearing_channels, case_study_tables, radar_count_sweep,
)
from propagation import ReflectionPattern, echo_and_power, synth_channel_set
from reconnaissance import sense_scenario
from reflection_designer import (
    brute_force_best, design_mmse_multi, design_null_zone, design_reverse_alignment, design_spoof,
    random_pattern, stealth_objective,
)
from result_writer import render_frame_csv, render_json, render_pattern, write_bundle
from scene_model import validate_scenario
from schemas import (
    Algorithm, Command, CovertGeometry, IrsSpec, OutputFormat, PlacementRule, PlanarArray, RadarSpec,
    ReflectionMode, Scatterer, Scenario, TargetSpec, dbm_to_watts, watts_to_dbm,
)
from seeding import derive_seed

logger = logging.getLogger(__name__)

SECTIONS = ('world', 'radars', 'target', 'irs', 'scatterers', 'covert', 'run')
ARRAY_KEYS = {'rows', 'cols', 'spacing', 'center', 'normal', 'axis'}
WORLD_KEYS = {'carrier_hz'}
RADAR_KEYS = {'position', 'array', 'tx_power_dbm'}
TARGET_KEYS = {'position', 'surface', 'absorb_eff', 'surface_mode', 'surface_seed'}
IRS_KEYS = {'array', 'element_amp_gain'}
SCATTERER_KEYS = {'position', 'reflectivity'}
COVERT_KEYS = {
    'alice', 'bob', 'willie', 'irs', 'element_amp_gain', 'carrier_hz', 'fading',
    'bob_direct_loss_db', 'willie_direct_loss_db', 'tx_power_dbm', 'noise_dbm_bob', 'noise_dbm_willie',
}
RUN_KEYS = {'command', 'algorithm', 'out', 'format', 'seed', 'mode'}

COMMAND_ALGORITHMS = {
    Command.DESIGN: (Algorithm.REVERSE_ALIGNMENT, Algorithm.MMSE, Algorithm.NULL_ZONE, Algorithm.SPOOF,
                     Algorithm.RANDOM, Algorithm.BRUTE_FORCE),
    Command.SWEEP_ANGLE: (Algorithm.REVERSE_ALIGNMENT, Algorithm.MMSE, Algorithm.NULL_ZONE),
    Command.SWEEP_RADARS: (Algorithm.MMSE,),
    Command.COVERT: (Algorithm.COVERT,),
    Command.DETECT: (Algorithm.COVERT, Algorithm.RANDOM),
}


@dataclass(frozen=True)
class RunOptions:
    """Per-command knobs; every field is a key of the `run` section"""
    radar: int = 0
    scatterer: int = 0
    zone: Tuple[float, float] = (-5.0, 5.0)
    zone_step_deg: float = 1.0
    suppression_db: float = 20.0
    bits: int = 3
    angle_start_deg: float = -90.0
    angle_stop_deg: float = 90.0
    angle_step_deg: float = 1.0
    nominal_deg: float = 0.0
    rerandomize: bool = False
    k_values: Tuple[int, ...] = (1, 2, 3, 4, 5, 6)
    n_seeds: int = 20
    n_elements: int = 50
    range_m: float = 2000.0
    placement: PlacementRule = PlacementRule.SPREAD
    snapshots: int = 64
    noise_power: float = 0.01
    grid_step_deg: float = 0.1
    epsilon_w: float = 1e-14
    samples: int = 100
    trials: int = 100_000

    def to_dict(self) -> Dict[str, Any]:
        data = {}
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, PlacementRule):
                value = value.value
            elif isinstance(value, tuple):
                value = list(value)
            data[f.name] = value
        return data


OPTION_KEYS = {f.name for f in fields(RunOptions)}


@dataclass(frozen=True)
class RunSpec:
    command: Command
    scenario: Scenario
    algorithm: Optional[Algorithm] = None
    out: str = "results"
    format: OutputFormat = OutputFormat.CSV
    seed: Optional[int] = None
    mode: ReflectionMode = ReflectionMode.UNIT_MODULUS
    covert: CovertGeometry = field(default_factory=CovertGeometry)
    options: RunOptions = field(default_factory=RunOptions)


def _reject_unknown(section: str, data: Dict[str, Any], allowed) -> None:
    for key in data:
        if key not in allowed:
            raise ValidationError(f"unknown key {section}.{key}", field=f"{section}.{key}")


def _mapping(section: str, value: Any) -> Dict[str, Any]:
    if value is None:
        return {}
    if not isinstance(value, dict):
        raise ValidationError(f"{section} must be a mapping", field=section)
    return value


def _float_fields(section: str, data: Dict[str, Any], names) -> Dict[str, Any]:
    # YAML 1.1 reads 6e9 as a string; accept it as a number
    out = dict(data)
    for name in names:
        if name in out and out[name] is not None:
            try:
                out[name] = float(out[name])
            except (TypeError, ValueError):
                raise ValidationError(f"{section}.{name} must be a number", field=f"{section}.{name}")
    return out


def _array(section: str, value: Any):
    data = _mapping(section, value)
    _reject_unknown(section, data, ARRAY_KEYS)
    data = _float_fields(section, data, ('spacing',))
    try:
        return PlanarArray.from_dict(data)
    except (TypeError, ValueError) as e:
        raise ValidationError(f"{section}: {e}", field=section) from e


def _build(section: str, builder, data: Dict[str, Any]):
    try:
        return builder(data)
    except EmShieldError:
        raise
    except (TypeError, ValueError, KeyError) as e:
        raise ValidationError(f"{section}: {e}", field=section) from e


def _radar(index: int, raw: Any) -> RadarSpec:
    section = f"radars[{index}]"
    data = _mapping(section, raw)
    _reject_unknown(section, data, RADAR_KEYS)
    if 'position' not in data:
        raise ValidationError(f"{section}.position is required", field=f"{section}.position")
    data = _float_fields(section, data, ('tx_power_dbm',))
    if data.get('array') is not None:
        data['array'] = _array(f"{section}.array", data['array'])
    return _build(section, RadarSpec.from_dict, data)


def _target(raw: Any) -> TargetSpec:
    data = _mapping('target', raw)
    _reject_unknown('target', data, TARGET_KEYS)
    data = _float_fields('target', data, ('absorb_eff',))
    if 'surface' in data:
        data['surface'] = _array('target.surface', data['surface'])
    return _build('target', TargetSpec.from_dict, data)


def _irs(raw: Any) -> IrsSpec:
    data = _mapping('irs', raw)
    _reject_unknown('irs', data, IRS_KEYS)
    data = _float_fields('irs', data, ('element_amp_gain',))
    if 'array' in data:
        data['array'] = _array('irs.array', data['array'])
    return _build('irs', IrsSpec.from_dict, data)


def _covert(raw: Any) -> CovertGeometry:
    data = _mapping('covert', raw)
    _reject_unknown('covert', data, COVERT_KEYS)
    data = _float_fields('covert', data, (
        'element_amp_gain', 'carrier_hz', 'bob_direct_loss_db', 'willie_direct_loss_db',
        'tx_power_dbm', 'noise_dbm_bob', 'noise_dbm_willie'))
    if 'irs' in data:
        data['irs'] = _array('covert.irs', data['irs'])
    return _build('covert', CovertGeometry.from_dict, data)


def _enum(section: str, enum_cls, value: Any):
    try:
        return enum_cls(value)
    except ValueError:
        choices = ', '.join(m.value for m in enum_cls)
        raise ValidationError(f"{section} must be one of {choices}, got {value!r}", field=section)


def _options(data: Dict[str, Any]) -> RunOptions:
    defaults = RunOptions()
    values = {}
    for name in OPTION_KEYS & set(data):
        raw = data[name]
        default = getattr(defaults, name)
        key = f"run.{name}"
        try:
            if isinstance(default, bool):
                if not isinstance(raw, bool):
                    raise ValueError("expected true or false")
                values[name] = raw
            elif isinstance(default, PlacementRule):
                values[name] = _enum(key, PlacementRule, raw)
            elif name == 'zone':
                lo, hi = (float(x) for x in raw)
                values[name] = (lo, hi)
            elif name == 'k_values':
                values[name] = tuple(int(k) for k in raw)
            elif isinstance(default, int):
                if float(raw) != int(float(raw)):
                    raise ValueError("expected an integer")
                values[name] = int(float(raw))
            else:
                values[name] = float(raw)
        except (TypeError, ValueError) as e:
            raise ValidationError(f"{key}: {e}", field=key) from e
    return replace(defaults, **values)


def _seed(raw: Any) -> int:
    value = require_positive(raw, "run.seed", allow_zero=True)
    if isinstance(raw, bool) or value != int(value):
        raise ValidationError(f"run.seed must be an integer, got {raw!r}", field="run.seed")
    return raw if isinstance(raw, int) else int(value)


def check_algorithm(command: Command, algorithm: Optional[Algorithm]) -> None:
    allowed = COMMAND_ALGORITHMS.get(command, ())
    if algorithm is not None and algorithm not in allowed:
        names = ', '.join(a.value for a in allowed) or 'none'
        raise ValidationError(f"algorithm {algorithm.value} is not valid for {command.value} "
                              f"(accepted: {names})", field="run.algorithm")


def parse_config(text: str) -> RunSpec:
    """Parse a YAML scenario file into a normalized RunSpec"""
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as e:
        mark = getattr(e, 'problem_mark', None) or getattr(e, 'context_mark', None)
        line = mark.line + 1 if mark is not None else None
        problem = getattr(e, 'problem', None) or str(e)
        raise ConfigSyntaxError(f"syntax error at line {line}: {problem}", line=line) from e
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigSyntaxError("scenario file must be a mapping of sections", line=1)
    _reject_unknown('config', raw, SECTIONS)

    world = _float_fields('world', _mapping('world', raw.get('world')), ('carrier_hz',))
    _reject_unknown('world', world, WORLD_KEYS)

    radars_raw = raw.get('radars', [{'position': [0.0, 0.0, 0.0]}])
    if not isinstance(radars_raw, list):
        raise ValidationError("radars must be a list", field="radars")
    scatterers_raw = raw.get('scatterers') or []
    if not isinstance(scatterers_raw, list):
        raise ValidationError("scatterers must be a list", field="scatterers")
    scatterers = []
    for s, item in enumerate(scatterers_raw):
        section = f"scatterers[{s}]"
        data = _mapping(section, item)
        _reject_unknown(section, data, SCATTERER_KEYS)
        scatterers.append(_build(section, Scatterer.from_dict, data))

    run_section = _mapping('run', raw.get('run'))
    _reject_unknown('run', run_section, RUN_KEYS | OPTION_KEYS)
    seed = run_section.get('seed')
    if seed is not None:
        seed = _seed(seed)

    scenario = validate_scenario(Scenario(
        carrier_hz=world.get('carrier_hz', 6e9),
        radars=tuple(_radar(k, r) for k, r in enumerate(radars_raw)),
        target=_target(raw.get('target')),
        irs=_irs(raw.get('irs')),
        scatterers=tuple(scatterers),
        seed=seed or 0,
    ))

    command = _enum('run.command', Command, run_section.get('command', Command.DESIGN.value))
    algorithm = run_section.get('algorithm')
    algorithm = _enum('run.algorithm', Algorithm, algorithm) if algorithm is not None else None
    check_algorithm(command, algorithm)

    return RunSpec(
        command=command,
        scenario=scenario,
        algorithm=algorithm,
        out=str(run_section.get('out', 'results')),
        format=_enum('run.format', OutputFormat, run_section.get('format', OutputFormat.CSV.value)),
        seed=seed,
        mode=_enum('run.mode', ReflectionMode, run_section.get('mode', ReflectionMode.UNIT_MODULUS.value)),
        covert=_covert(raw.get('covert')),
        options=_options(run_section),
    )


def serialize_config(spec: RunSpec) -> str:
    """YAML text that parse_config turns back into an equal RunSpec"""
    scenario = spec.scenario.to_dict()
    run = {
        'command': spec.command.value,
        'out': spec.out,
        'format': spec.format.value,
        'mode': spec.mode.value,
    }
    if spec.algorithm is not None:
        run['algorithm'] = spec.algorithm.value
    if spec.seed is not None:
        run['seed'] = spec.seed
    run.update(spec.options.to_dict())
    document = {
        'world': {'carrier_hz': scenario['carrier_hz']},
        'radars': scenario['radars'],
        'target': scenario['target'],
        'irs': scenario['irs'],
        'scatterers': scenario['scatterers'],
        'covert': spec.covert.to_dict(),
        'run': run,
    }
    return yaml.safe_dump(document, sort_keys=False, default_flow_style=None)


@dataclass
class RunOutcome:
    summary: str
    files: Dict[str, str] = field(default_factory=dict)


def _pattern_file(spec: RunSpec, pattern: ReflectionPattern) -> Dict[str, str]:
    ext = spec.format.value
    return {f'pattern.{ext}': render_pattern(pattern, ext)}


def _design_pattern(spec: RunSpec, scenario: Scenario, config: AppConfig):
    channels = synth_channel_set(scenario)
    opts = spec.options
    solver = config.solver
    algorithm = spec.algorithm or (Algorithm.REVERSE_ALIGNMENT if scenario.n_radars == 1 else Algorithm.MMSE)
    k = opts.radar
    if not 0 <= k < scenario.n_radars:
        raise IndexOutOfRangeError(f"radar index {k} out of range", index=k)

    if algorithm == Algorithm.REVERSE_ALIGNMENT:
        result = design_reverse_alignment(channels.g[k], channels.h(k), spec.mode, solver)
    elif algorithm == Algorithm.MMSE:
        result = design_mmse_multi(channels.g, channels.H, spec.mode, config=solver)
    elif algorithm == Algorithm.NULL_ZONE:
        radar = scenario.radars[k]
        range_m = float(np.linalg.norm(np.subtract(radar.position, scenario.target.position)))
        single = replace(scenario, radars=(radar,))
        result = design_null_zone(lambda b: bearing_channels(single, b, range_m), opts.zone,
                                  opts.zone_step_deg, spec.mode, solver)
    elif algorithm == Algorithm.SPOOF:
        s = opts.scatterer
        if not 0 <= s < channels.n_scatterers:
            raise IndexOutOfRangeError(f"scatterer index {s} out of range", index=s)
        budget = abs(channels.g[k]) ** 2 * 10.0 ** (-opts.suppression_db / 10.0)
        result = design_spoof(channels.g[k], channels.h(k), channels.T[:, k, s], budget, spec.mode,
                              scenario.seed, solver)
    elif algorithm == Algorithm.BRUTE_FORCE:
        result = brute_force_best(channels.g[k], channels.h(k), opts.bits, config=solver,
                                  n_jobs=config.monte_carlo.n_jobs)
    elif algorithm == Algorithm.RANDOM:
        pattern = random_pattern(channels.n_elements, derive_seed(scenario.seed, "random-pattern"))
        return algorithm, channels, pattern, {'objective': stealth_objective(channels.g, channels.H, pattern)}
    else:
        raise ValidationError(f"algorithm {algorithm.value} cannot design a stealth pattern",
                              field="run.algorithm")
    info = {'objective': result.objective, 'iterations': result.iterations,
            'converged': result.converged, 'details': result.details}
    if result.constraint_value is not None:
        info['constraint_value'] = result.constraint_value
    return algorithm, channels, result.pattern, info


def _run_design(spec: RunSpec, scenario: Scenario, config: AppConfig) -> RunOutcome:
    algorithm, channels, pattern, info = _design_pattern(spec, scenario, config)
    radars = []
    for k in range(channels.n_radars):
        tx = scenario.radars[k].tx_power_dbm
        received = echo_and_power(channels, pattern, k)
        radars.append({
            'radar': k,
            'no_irs_dbm': watts_to_dbm(dbm_to_watts(tx) * abs(channels.g[k]) ** 2),
            'received_dbm': max(received.power_dbm, -400.0),
        })
    k = spec.options.radar
    suppression = radars[k]['no_irs_dbm'] - radars[k]['received_dbm']
    record = {'algorithm': algorithm.value, 'mode': pattern.mode.value, 'seed': scenario.seed,
              'radars': radars, **info}
    files = {**_pattern_file(spec, pattern), 'design.json': render_json(record)}
    summary = (f"design {algorithm.value}: residual {radars[k]['received_dbm']:.2f} dBm, "
               f"suppression {suppression:.2f} dB, objective {info['objective']:.6e}")
    return RunOutcome(summary, files)


def _table_file(spec: RunSpec, name: str, table) -> Dict[str, str]:
    if spec.format == OutputFormat.JSON:
        return {f'{name}.json': table.to_json()}
    return {f'{name}.csv': table.to_csv()}


def _angle_grid(opts: RunOptions) -> List[float]:
    step = require_positive(opts.angle_step_deg, "run.angle_step_deg")
    if opts.angle_stop_deg < opts.angle_start_deg:
        raise ValidationError("run.angle_stop_deg must not be below run.angle_start_deg",
                              field="run.angle_stop_deg")
    count = int(math.floor((opts.angle_stop_deg - opts.angle_start_deg) / step + 1e-9)) + 1
    return [float(a) for a in np.round(opts.angle_start_deg + step * np.arange(count), 10)]


def _run_sweep_angle(spec: RunSpec, scenario: Scenario, config: AppConfig) -> RunOutcome:
    opts = spec.options
    table = angle_sweep(scenario, spec.algorithm or Algorithm.REVERSE_ALIGNMENT, _angle_grid(opts),
                        spec.mode, opts.nominal_deg, opts.rerandomize, config.monte_carlo.n_jobs,
                        config.solver, opts.zone, opts.zone_step_deg)
    axis = table.column('azimuth_deg')
    row = int(np.argmin(np.abs(axis - opts.nominal_deg)))
    suppression = table.column('no_irs_dbm')[row] - table.column('optimized_dbm')[row]
    summary = (f"sweep-angle: {len(axis)} bearings, suppression {suppression:.2f} dB at "
               f"{axis[row]:g} deg")
    return RunOutcome(summary, _table_file(spec, 'sweep_angle', table))


def _run_sweep_radars(spec: RunSpec, scenario: Scenario, config: AppConfig) -> RunOutcome:
    opts = spec.options
    seeds = [derive_seed(scenario.seed, f"radar-count:{i}") for i in range(opts.n_seeds)]
    table = radar_count_sweep(scenario, opts.k_values, spec.algorithm or Algorithm.MMSE, seeds,
                              opts.n_elements, opts.range_m, opts.placement, spec.mode,
                              config.monte_carlo.n_jobs, config.solver)
    slopes = table.metadata['slopes_db_per_radar']
    summary = ("sweep-radars: slopes " +
               ", ".join(f"{name} {slope:.3f} dB/radar" for name, slope in slopes.items()))
    return RunOutcome(summary, _table_file(spec, 'sweep_radars', table))


def _run_recon(spec: RunSpec, scenario: Scenario, config: AppConfig) -> RunOutcome:
    opts = spec.options
    report = sense_scenario(scenario, noise_power=opts.noise_power, n_snapshots=opts.snapshots,
                            seed=scenario.seed, grid_step_deg=opts.grid_step_deg)
    records = report.to_records()
    if spec.format == OutputFormat.JSON:
        files = {'recon.json': render_json({'sources': records, 'residual': report.estimate.residual})}
    else:
        files = {'recon.csv': render_frame_csv(pd.DataFrame(records))}
    worst = float(np.max(np.abs(report.angle_errors_deg)))
    summary = f"recon: {len(records)} radar(s) located, max AoA error {worst:.3f} deg"
    return RunOutcome(summary, files)


def _covert_record(channels, pattern: ReflectionPattern) -> Dict[str, Any]:
    bob_w = channels.tx_power * abs(channels.bob_amplitude(pattern)) ** 2
    return {
        'bob_power_dbm': watts_to_dbm(bob_w),
        'willie_power_dbm': watts_to_dbm(channels.willie_power(pattern)),
        'bob_rate_bps_hz': bob_rate(channels, pattern),
    }


def _run_covert(spec: RunSpec, scenario: Scenario, config: AppConfig) -> RunOutcome:
    channels = synth_covert_channels(spec.covert, seed=scenario.seed)
    result = design_covert(channels, spec.options.epsilon_w, spec.mode, seed=scenario.seed,
                           config=config.solver)
    record = {'epsilon_w': spec.options.epsilon_w, 'objective_w': result.objective,
              'constraint_w': result.constraint_value, 'converged': result.converged,
              **_covert_record(channels, result.pattern)}
    files = {**_pattern_file(spec, result.pattern), 'covert.json': render_json(record)}
    summary = (f"covert: Bob {record['bob_power_dbm']:.2f} dBm ({record['bob_rate_bps_hz']:.3f} "
               f"bit/s/Hz), Willie {record['willie_power_dbm']:.2f} dBm")
    return RunOutcome(summary, files)


def _run_detect(spec: RunSpec, scenario: Scenario, config: AppConfig) -> RunOutcome:
    opts = spec.options
    channels = synth_covert_channels(spec.covert, seed=scenario.seed)
    if spec.algorithm == Algorithm.RANDOM:
        pattern = random_pattern(channels.n_elements, derive_seed(scenario.seed, "random-pattern"))
    else:
        pattern = design_covert(channels, opts.epsilon_w, spec.mode, seed=scenario.seed,
                                config=config.solver).pattern
    report = willie_min_error_prob(channels, pattern, opts.samples, opts.trials, scenario.seed,
                                   config.monte_carlo)
    record = {**report.to_dict(), **_covert_record(channels, pattern)}
    if not math.isfinite(record['threshold']):
        record['threshold'] = None
    summary = (f"detect: xi={report.xi:.4f} (gaussian {report.xi_gaussian:.4f}, exact "
               f"{report.xi_exact:.4f}), L={report.samples}, trials={report.trials}")
    return RunOutcome(summary, {'detect.json': render_json(record)})


def _run_case_study(spec: RunSpec, scenario: Scenario, config: AppConfig) -> RunOutcome:
    opts = spec.options
    study = CaseStudyConfig(seed=scenario.seed, out_dir=spec.out, angle_grid=_angle_grid(opts),
                            k_values=list(opts.k_values), n_seeds=opts.n_seeds, mode=spec.mode,
                            n_jobs=config.monte_carlo.n_jobs, placement=opts.placement)
    fig4, fig5, record = case_study_tables(study, scenario, config.solver)
    files = {
        'fig4_analog.csv': fig4.to_csv(),
        'fig5_analog.csv': fig5.to_csv(),
        'summary.json': render_json(record),
    }
    slopes = record['slopes_db_per_radar']
    summary = (f"case-study: suppression {record['suppression_db_at_0deg']:.2f} dB at 0 deg, "
               f"optimized slope {slopes['optimized']:.3f} dB/radar")
    return RunOutcome(summary, files)


HANDLERS = {
    Command.DESIGN: _run_design,
    Command.SWEEP_ANGLE: _run_sweep_angle,
    Command.SWEEP_RADARS: _run_sweep_radars,
    Command.RECON: _run_recon,
    Command.COVERT: _run_covert,
    Command.DETECT: _run_detect,
    Command.CASE_STUDY: _run_case_study,
}


def execute(spec: RunSpec, config: Optional[AppConfig] = None) -> RunOutcome:
    """Compute every artifact, then write them all; raises on any failure"""
    config = config or ConfigManager.load_config()
    check_algorithm(spec.command, spec.algorithm)
    seed = spec.seed if spec.seed is not None else config.default_seed
    scenario = validate_scenario(replace(spec.scenario, seed=int(seed)))
    logger.info(f"Running {spec.command.value} with seed {seed}")
    outcome = HANDLERS[spec.command](spec, scenario, config)
    outcome.files = write_bundle(spec.out, outcome.files)
    return outcome


def run(spec: RunSpec, config: Optional[AppConfig] = None) -> int:
    """Execute a RunSpec; prints the one-line summary and returns the exit status"""
    try:
        outcome = execute(spec, config)
    except Exception as e:
        log_error(e, {'command': spec.command.value})
        print(format_error_line(e), file=sys.stderr)
        return exit_code_for(e)
    print(outcome.summary)
    return EXIT_OK


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(prog='emshield', description='IRS-aided radar stealth and covert-link toolkit')
    parser.add_argument('--config', help='YAML scenario file (see docs/config.md)')
    parser.add_argument('--command', choices=[c.value for c in Command], help='Overrides run.command')
    parser.add_argument('--seed', type=int, help='Master seed (unsigned 64-bit)')
    parser.add_argument('--out', help='Output directory')
    parser.add_argument('--format', choices=[f.value for f in OutputFormat], help='Table and pattern format')
    parser.add_argument('--algorithm', choices=[a.value for a in Algorithm], help='Design algorithm')
    parser.add_argument('--quiet', action='store_true', help='Only warnings and errors on stderr')
    return parser


def apply_overrides(spec: RunSpec, args: argparse.Namespace) -> RunSpec:
    changes = {}
    if args.command:
        changes['command'] = Command(args.command)
    if args.seed is not None:
        if not 0 <= args.seed < 2 ** 64:
            raise UsageError(f"--seed must be an unsigned 64-bit integer, got {args.seed}")
        changes['seed'] = args.seed
    if args.out:
        changes['out'] = args.out
    if args.format:
        changes['format'] = OutputFormat(args.format)
    if args.algorithm:
        changes['algorithm'] = Algorithm(args.algorithm)
    spec = replace(spec, **changes)
    try:
        check_algorithm(spec.command, spec.algorithm)
    except ValidationError as e:
        raise UsageError(e.message) from e
    return spec


def _read_config(path: Optional[str]) -> str:
    if path is None:
        return "radars:\n  - position: [0.0, 0.0, 0.0]\n"
    try:
        with open(path, 'r', encoding='utf-8') as f:
            return f.read()
    except OSError as e:
        raise UsageError(f"cannot read config {path}: {e}") from e


@handle_errors
def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    config = ConfigManager.load_config()
    setup_logging(config, quiet=args.quiet)
    for warning in validate_config(config):
        logger.warning(warning)

    spec = apply_overrides(parse_config(_read_config(args.config)), args)
    if args.out is None and spec.out == 'results':
        spec = replace(spec, out=config.output_dir)
    return run(spec, config)
