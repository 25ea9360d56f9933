import json

from click.testing import CliRunner

from dyadic_cz.cli_interface import main


def _artifact(text):
    start = text.index("{\n")
    return json.JSONDecoder().raw_decode(text[start:])[0]


def test_cover_prints_the_covering_cube():
    result = CliRunner().invoke(main, ["cover", "--center", "1/2,1/2", "--radius", "1/100"])
    assert result.exit_code == 0
    artifact = _artifact(result.stdout)
    assert artifact["cube"] == {"m": 1, "k": 4, "j": [2, 2]}
    assert artifact["box"] == {"lower": ["11/24", "11/24"], "side": "1/16"}


def test_witness_on_the_line():
    result = CliRunner().invoke(main, ["witness", "--dim", "1", "--keep", "0"])
    assert result.exit_code == 0
    assert _artifact(result.stdout)["ball"]["center"] == ["0"]


def test_witness_with_an_excluded_filtration():
    result = CliRunner().invoke(main, ["witness", "--dim", "1", "--exclude", "1"])
    assert result.exit_code == 0
    artifact = _artifact(result.stdout)
    assert artifact["keep"] == [0]
    assert artifact["ball"]["center"] == ["0"]
    clash = CliRunner().invoke(main, ["witness", "--dim", "1", "--exclude", "1", "--keep", "0"])
    assert clash.exit_code == 2
    assert CliRunner().invoke(main, ["witness", "--dim", "1", "--exclude", "2"]).exit_code == 2


def test_output_file_replaces_stdout(tmp_path):
    target = tmp_path / "cover.json"
    result = CliRunner().invoke(main, ["cover", "--center", "0", "--radius", "1", "--output", str(target)])
    assert result.exit_code == 0
    assert json.loads(target.read_text(encoding="utf-8"))["k0"] == -3


def test_czd_renders_checks(tmp_path, three_atoms):
    source = tmp_path / "mu.json"
    source.write_text(json.dumps(three_atoms.to_json()), encoding="utf-8")
    report = tmp_path / "report.json"
    result = CliRunner().invoke(main, ["czd", "--input", str(source), "--lambda", "4", "--output", str(report)])
    assert result.exit_code == 0
    assert "gamma_bound" in result.output
    verified = CliRunner().invoke(main, ["verify", "--report", str(report)])
    assert verified.exit_code == 0


def test_randomized_command_needs_a_seed():
    result = CliRunner().invoke(main, ["annuli", "--trials", "1"])
    assert result.exit_code == 2
    assert _artifact(result.stdout)["error"] == "invalid configuration"


def test_bad_environment_parameter():
    result = CliRunner(env={"DYADIC_SELECTOR": "largest"}).invoke(main, ["cover", "--center", "0", "--radius", "1"])
    assert result.exit_code == 2


def test_unknown_selector_choice():
    result = CliRunner().invoke(main, ["suite", "--seed", "0", "--selector", "largest"])
    assert result.exit_code == 2
