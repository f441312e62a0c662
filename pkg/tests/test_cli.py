import json
from dataclasses import replace
from pathlib import Path

import pytest

from cli import RunOptions, apply_overrides, build_parser, main, parse_config, run, serialize_config
from config import AppConfig, Environment
from error_handling import ConfigSyntaxError, GeometryError, UsageError, ValidationError
from schemas import Algorithm, Command, OutputFormat, PlacementRule, ReflectionMode

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"

MINIMAL = "radars:\n  - position: [0.0, 0.0, 0.0]\n"

ROUND_TRIP = """
world:
  carrier_hz: 5.8e+9
radars:
  - position: [0.0, 0.0, 0.0]
    tx_power_dbm: 20.0
  - position: [500.0, 0.0, 0.0]
target:
  absorb_eff: 0.9
  surface_mode: specular
irs:
  element_amp_gain: 2.0
scatterers:
  - position: [30.0, 0.0, 1000.0]
    reflectivity: [0.5, -0.25]
covert:
  fading: rayleigh
  willie: [70.0, -20.0, 0.0]
run:
  command: sweep-radars
  algorithm: mmse
  seed: 7
  format: json
  k_values: [1, 2, 4]
  n_seeds: 3
  zone: [-3, 3]
  rerandomize: true
  epsilon_w: 1.0e-15
"""


@pytest.fixture
def app_config(tmp_path):
    return AppConfig(environment=Environment.DEVELOPMENT, output_dir=str(tmp_path / "default-out"))


def _with_run(text: str, **run) -> str:
    lines = [text.rstrip("\n"), "run:"] + [f"  {key}: {value}" for key, value in run.items()]
    return "\n".join(lines) + "\n"


class TestParseConfig:

    def test_minimal_file_gives_defaults(self):
        spec = parse_config(MINIMAL)
        assert spec.command == Command.DESIGN
        assert spec.algorithm is None
        assert spec.format == OutputFormat.CSV
        assert spec.mode == ReflectionMode.UNIT_MODULUS
        assert spec.seed is None
        assert spec.options == RunOptions()
        assert spec.scenario.n_radars == 1
        assert spec.scenario.target.absorb_eff == 0.8
        assert spec.scenario.irs.n_elements == 8

    def test_missing_radars_section_places_one_at_the_origin(self):
        spec = parse_config("run:\n  command: covert\n")
        assert spec.scenario.radars[0].position == (0.0, 0.0, 0.0)

    def test_out_of_range_field_is_named(self):
        with pytest.raises(ValidationError) as info:
            parse_config(MINIMAL + "target:\n  absorb_eff: 1.5\n")
        assert info.value.details['field'] == 'absorb_eff'

    def test_unknown_key_rejected(self):
        with pytest.raises(ValidationError) as info:
            parse_config(MINIMAL + "target:\n  colour: grey\n")
        assert info.value.details['field'] == 'target.colour'

    def test_unknown_section_rejected(self):
        with pytest.raises(ValidationError):
            parse_config(MINIMAL + "weather: {}\n")

    def test_syntax_error_reports_the_line(self):
        with pytest.raises(ConfigSyntaxError) as info:
            parse_config("world:\n\tcarrier_hz: 6.0e+9\n")
        assert info.value.line == 2

    def test_document_must_be_a_mapping(self):
        with pytest.raises(ConfigSyntaxError):
            parse_config("- 1\n- 2\n")

    def test_radar_at_the_target_is_a_geometry_error(self):
        with pytest.raises(GeometryError):
            parse_config("radars:\n  - position: [0.0, 0.0, 1000.0]\n")

    def test_algorithm_must_suit_the_command(self):
        with pytest.raises(ValidationError) as info:
            parse_config(_with_run(MINIMAL, command="sweep-radars", algorithm="spoof"))
        assert info.value.details['field'] == 'run.algorithm'

    def test_integer_options_reject_fractions(self):
        with pytest.raises(ValidationError) as info:
            parse_config(_with_run(MINIMAL, bits=2.5))
        assert info.value.details['field'] == 'run.bits'

    @pytest.mark.parametrize("seed", ["1.5", "-3", "true"])
    def test_seed_must_be_a_non_negative_integer(self, seed):
        with pytest.raises(ValidationError) as info:
            parse_config(_with_run(MINIMAL, seed=seed))
        assert info.value.details['field'] == 'run.seed'

    def test_integral_float_seed_accepted(self):
        assert parse_config(_with_run(MINIMAL, seed="4.0")).seed == 4

    def test_radar_sweeps_spread_by_default(self):
        assert parse_config(MINIMAL).options.placement == PlacementRule.SPREAD
        nested = parse_config(_with_run(MINIMAL, command="sweep-radars", placement="nested"))
        assert nested.options.placement == PlacementRule.NESTED

    def test_round_trip(self):
        spec = parse_config(ROUND_TRIP)
        assert spec.seed == 7
        assert spec.options.k_values == (1, 2, 4)
        assert spec.scenario.scatterers[0].reflectivity == 0.5 - 0.25j
        assert parse_config(serialize_config(spec)) == spec

    @pytest.mark.parametrize("name", ["default.yaml", "spoof.yaml", "covert.yaml"])
    def test_shipped_scenarios_parse(self, name):
        parse_config((SCENARIOS / name).read_text())


class TestRun:

    def test_design_writes_pattern_and_record(self, tmp_path, app_config, capsys):
        out = tmp_path / "design"
        spec = replace(parse_config(MINIMAL), out=str(out), seed=1)
        assert run(spec, app_config) == 0
        lines = (out / "pattern.csv").read_text().splitlines()
        assert lines[0] == "element,beta,phi_rad"
        assert len(lines) == 9
        record = json.loads((out / "design.json").read_text())
        assert record['algorithm'] == 'reverse-alignment'
        assert record['seed'] == 1
        assert capsys.readouterr().out.startswith("design reverse-alignment:")

    def test_json_pattern(self, tmp_path, app_config):
        out = tmp_path / "design"
        spec = replace(parse_config(MINIMAL), out=str(out), format=OutputFormat.JSON,
                       algorithm=Algorithm.RANDOM)
        assert run(spec, app_config) == 0
        assert (out / "pattern.json").exists()

    def test_infeasible_spoof_writes_nothing(self, tmp_path, app_config, capsys):
        # a weak IRS cannot push the echo 20 dB down
        text = (SCENARIOS / "spoof.yaml").read_text().replace("irs:\n", "irs:\n  element_amp_gain: 1.0e-6\n")
        out = tmp_path / "spoof"
        spec = replace(parse_config(text), out=str(out))
        assert run(spec, app_config) == 1
        assert not out.exists()
        error = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
        assert error['category'] == 'INFEASIBLE'
        assert error['details']['bound'] > 0

    def test_missing_scatterer_index(self, tmp_path, app_config):
        spec = replace(parse_config(_with_run(MINIMAL, algorithm="spoof")), out=str(tmp_path / "x"))
        assert run(spec, app_config) == 1

    def test_detect_with_a_silent_channel(self, tmp_path, app_config):
        text = """
covert:
  willie_direct_loss_db: 2000.0
  element_amp_gain: 1.0e-30
run:
  command: detect
  algorithm: random
  samples: 10
  trials: 2000
"""
        out = tmp_path / "detect"
        spec = replace(parse_config(text), out=str(out))
        assert run(spec, app_config) == 0
        record = json.loads((out / "detect.json").read_text())
        assert record['xi'] == pytest.approx(1.0, abs=1e-9)
        assert record['xi_exact'] == 1.0


class TestCommandLine:

    def test_overrides(self):
        args = build_parser().parse_args(['--seed', '9', '--format', 'json', '--algorithm', 'mmse'])
        spec = apply_overrides(parse_config(MINIMAL), args)
        assert spec.seed == 9
        assert spec.format == OutputFormat.JSON
        assert spec.algorithm == Algorithm.MMSE

    def test_algorithm_override_must_suit_the_command(self):
        args = build_parser().parse_args(['--command', 'covert', '--algorithm', 'mmse'])
        with pytest.raises(UsageError):
            apply_overrides(parse_config(MINIMAL), args)

    def test_negative_seed(self):
        with pytest.raises(UsageError):
            apply_overrides(parse_config(MINIMAL), build_parser().parse_args(['--seed', '-1']))

    def test_unknown_flag_is_a_usage_error(self, capsys):
        assert main(['--colour', 'red']) == 2
        assert 'USAGE_ERROR' in capsys.readouterr().err

    def test_missing_config_file(self, tmp_path):
        assert main(['--config', str(tmp_path / 'absent.yaml')]) == 2

    def test_end_to_end(self, tmp_path, monkeypatch):
        monkeypatch.setenv('EMSHIELD_LOG_DIR', '')
        out = tmp_path / "cli"
        status = main(['--config', str(SCENARIOS / 'default.yaml'), '--out', str(out), '--quiet'])
        assert status == 0
        assert (out / 'pattern.csv').exists()
        assert (out / 'design.json').exists()
