"""Preset registry, config round-trip, CLI behavior, and artifact layout."""

import json
import os

import pytest

from gpinverse.cli import main
from gpinverse.errors import ConfigurationError
from gpinverse.presets import (
    PRESETS,
    config_from_text,
    config_to_text,
    get_preset,
    list_presets,
)

EXPECTED_PRESETS = {
    "forrester-inverse",
    "mixed1d-inverse",
    "levy1d-inverse",
    "griewank1d-inverse",
    "mixed2d-inverse",
    "rosenbrock2d-inverse",
    "compare-surrogates",
    "mixed1d-mcmc",
    "mixed1d-ei-demo",
}


def test_registry_has_exactly_the_expected_presets():
    assert set(PRESETS) == EXPECTED_PRESETS
    assert len(PRESETS) == 9


def test_every_preset_has_a_nonempty_description():
    for name, description in list_presets():
        assert name in EXPECTED_PRESETS
        assert len(description) > 40


def test_unknown_preset_rejected():
    with pytest.raises(ConfigurationError):
        get_preset("missing")


def test_config_round_trips_through_text_format():
    for name in EXPECTED_PRESETS:
        preset = get_preset(name)
        text = config_to_text(preset)
        parsed = config_from_text(text)
        assert parsed.benchmark == preset.benchmark
        assert parsed.bo == preset.bo
        assert parsed.inversion == preset.inversion
        assert parsed.mcmc == preset.mcmc
        assert parsed.compare_benchmarks == preset.compare_benchmarks


def test_malformed_config_lines_rejected():
    with pytest.raises(ConfigurationError):
        config_from_text("benchmark mixed1d\n")
    with pytest.raises(ConfigurationError):
        config_from_text("weird.section.key = 1\nbenchmark = mixed1d\n")
    with pytest.raises(ConfigurationError):
        config_from_text("bo.not_a_field = 3\nbenchmark = mixed1d\n")
    with pytest.raises(ConfigurationError):
        config_from_text("bo.n_init = 5\n")  # missing benchmark


def test_cli_list_presets_exits_zero(capsys):
    assert main(["list-presets"]) == 0
    out = capsys.readouterr().out
    for name in EXPECTED_PRESETS:
        assert name in out


def test_cli_malformed_config_exits_2_without_artifacts(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text("this is not a config\n")
    outdir = tmp_path / "out"
    code = main(["run", "--config", str(bad), "--out", str(outdir)])
    assert code == 2
    assert not outdir.exists()


def test_cli_missing_config_file_exits_2(tmp_path):
    code = main(["run", "--config", str(tmp_path / "none.cfg"), "--out", str(tmp_path / "o")])
    assert code == 2


def test_cli_unknown_preset_exits_2(tmp_path):
    assert main(["run", "--preset", "nope", "--out", str(tmp_path / "o")]) == 2


def test_cli_invalid_config_values_exit_2(tmp_path):
    cfg = tmp_path / "bad_values.cfg"
    cfg.write_text("benchmark = mixed1d\nbo.n_init = 1\n")
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2


def test_cli_runs_small_config_end_to_end(tmp_path, capsys):
    cfg = tmp_path / "small.cfg"
    cfg.write_text(
        "name = tiny\n"
        "benchmark = forrester1d\n"
        "description = tiny smoke experiment\n"
        "bo.n_init = 4\n"
        "bo.max_evaluations = 6\n"
        "bo.mse_threshold = 1000000.0\n"
        "bo.n_val = 100\n"
        "bo.seed = 0\n"
        "inversion.observed = -6.02\n"
        "inversion.obs_variance = 0.72\n"
        "inversion.n_starts = 4\n"
        "inversion.grid_resolution = 256\n"
    )
    outdir = tmp_path / "out"
    assert main(["run", "--config", str(cfg), "--out", str(outdir)]) == 0
    for artifact in ("manifest.json", "trace.json", "trace.csv", "posterior.json", "profiles.csv"):
        assert (outdir / artifact).exists()
    manifest = json.loads((outdir / "manifest.json").read_text())
    assert manifest["benchmark"] == "forrester1d"
    assert manifest["inversion"]["observed"] == -6.02


def test_cli_output_env_var_respected(tmp_path, monkeypatch):
    monkeypatch.setenv("GPINVERSE_OUT", str(tmp_path / "envroot"))
    cfg = tmp_path / "small.cfg"
    cfg.write_text(
        "name = tiny-env\n"
        "benchmark = forrester1d\n"
        "bo.n_init = 4\n"
        "bo.max_evaluations = 4\n"
        "bo.mse_threshold = 1000000.0\n"
        "bo.n_val = 100\n"
    )
    assert main(["run", "--config", str(cfg)]) == 0
    assert (tmp_path / "envroot" / "tiny-env" / "manifest.json").exists()
