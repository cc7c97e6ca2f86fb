import json
from pathlib import Path

import numpy as np
import pytest
from numpy.testing import assert_allclose

from aoreg.benchmarks import b1, b2, b3
from aoreg.cli import main
from aoreg.config import config_to_dict, load_config, parse_config
from aoreg.errors import ConfigError
from aoreg.experiment import compare_report, run_experiment

CONFIG_DIR = Path(__file__).resolve().parents[1] / "configs"


def _b2_raw():
    return config_to_dict(b2())


class TestParsing:
    def test_shipped_b1_loads(self):
        cfg = load_config(CONFIG_DIR / "b1.json")
        assert cfg.h == 0
        assert cfg.plant.n == 1
        assert_allclose(cfg.plant.A, [[-1.0]])

    def test_shipped_configs_match_builders(self):
        for name, builder in (("b1", b1), ("b2", b2), ("b3", b3)):
            shipped = load_config(CONFIG_DIR / f"{name}.json")
            built = builder()
            assert config_to_dict(shipped) == config_to_dict(built)

    def test_missing_r_names_field(self):
        raw = _b2_raw()
        del raw["weights"]["R"]
        with pytest.raises(ConfigError, match=r"weights\.R"):
            parse_config(raw)

    def test_non_square_e_rejected(self):
        raw = _b2_raw()
        raw["plant"]["E"] = [[0.0, 1.0]]
        with pytest.raises(ConfigError, match=r"plant\.E"):
            parse_config(raw)

    def test_wrong_k0_shape(self):
        raw = _b2_raw()
        raw["init"]["K0"] = [[0.0]]
        with pytest.raises(ConfigError, match=r"init\.K0"):
            parse_config(raw)

    def test_bad_algorithm(self):
        raw = _b2_raw()
        raw["algorithm"] = "fastest"
        with pytest.raises(ConfigError, match="algorithm"):
            parse_config(raw)

    def test_sample_count_floor(self):
        raw = _b2_raw()
        raw["schedule"]["sample_count"] = 5
        with pytest.raises(ConfigError, match="sample_count"):
            parse_config(raw)

    def test_zero_v0_refined_is_warning_not_error(self):
        raw = _b2_raw()
        raw["init"]["v0"] = [0.0, 0.0]
        cfg = parse_config(raw)
        assert any("v0" in w for w in cfg.warnings)

    def test_frequency_richness_warning(self):
        # b2 carries 8 frequencies; 9 are recommended for 9 unknowns
        cfg = b2()
        assert any("frequencies" in w for w in cfg.warnings)

    def test_roundtrip(self):
        cfg = b2()
        again = parse_config(config_to_dict(cfg))
        assert config_to_dict(again) == config_to_dict(cfg)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(tmp_path / "nope.json")

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        with pytest.raises(ConfigError):
            load_config(path)

    def test_integration_dt_defaults_to_twentieth(self):
        raw = _b2_raw()
        del raw["schedule"]["integration_dt"]
        cfg = parse_config(raw)
        assert cfg.schedule.integration_dt == pytest.approx(0.1 / 20.0)

    def test_generated_excitation_from_seed(self):
        raw = _b2_raw()
        del raw["excitation"]["amplitudes"]
        del raw["excitation"]["phases"]
        del raw["excitation"]["seed"]
        cfg_a = parse_config(raw, default_seed=5)
        cfg_b = parse_config(raw, default_seed=5)
        cfg_c = parse_config(raw, default_seed=6)
        assert np.array_equal(cfg_a.excitation.phases, cfg_b.excitation.phases)
        assert not np.array_equal(cfg_a.excitation.phases, cfg_c.excitation.phases)


class TestCli:
    def test_b1_end_to_end(self, tmp_path, capsys):
        out = tmp_path / "out"
        code = main(["--config", str(CONFIG_DIR / "b1.json"), "--out", str(out)])
        assert code == 0
        assert (out / "report.json").exists()
        assert (out / "iterations.csv").exists()
        assert (out / "tracking.csv").exists()
        assert not (out / "trajectory.csv").exists()
        captured = capsys.readouterr().out
        assert "[PASS]" in captured and "[FAIL]" not in captured

    def test_emit_trajectory(self, tmp_path):
        out = tmp_path / "out"
        code = main(
            ["--config", str(CONFIG_DIR / "b1.json"), "--out", str(out),
             "--emit-trajectory"]
        )
        assert code == 0
        header = (out / "trajectory.csv").read_text().splitlines()[0]
        assert header == "t,x1,u1,v1"

    def test_algorithm_flag_overrides(self, tmp_path):
        out = tmp_path / "out"
        code = main(
            ["--config", str(CONFIG_DIR / "b1.json"), "--out", str(out),
             "--algorithm", "refined"]
        )
        assert code == 0
        report = json.loads((out / "report.json").read_text())
        assert report["selected_algorithms"] == ["refined"]
        assert "original" not in report["algorithms"]
        assert "comparison" not in report

    def test_bad_config_exit_2(self, tmp_path):
        raw = _b2_raw()
        del raw["weights"]["R"]
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(raw))
        assert main(["--config", str(path), "--out", str(tmp_path / "o")]) == 2

    def test_missing_config_exit_2(self, tmp_path):
        assert main(["--config", str(tmp_path / "no.json"), "--out", str(tmp_path)]) == 2

    def test_iterations_csv_schema(self, tmp_path):
        out = tmp_path / "out"
        main(["--config", str(CONFIG_DIR / "b1.json"), "--out", str(out)])
        lines = (out / "iterations.csv").read_text().splitlines()
        assert lines[0] == "algorithm,j,dP,dK_vs_oracle,wallclock_ms,solve_cols"
        first = lines[1].split(",")
        assert first[0] == "original" and first[1] == "0"
        assert first[2] == ""  # no previous iterate at j=0
        assert int(first[5]) == 3


class TestReports:
    def test_compare_requires_both(self, b1_cfg):
        result = run_experiment(b1_cfg, algorithm="refined")
        with pytest.raises(ValueError):
            compare_report(result.report)

    def test_comparison_present_for_both(self, b1_cfg):
        result = run_experiment(b1_cfg)
        table = compare_report(result.report)
        assert table["rank_conditions"]["original"]["full"] == 2
        assert table["rank_conditions"]["refined"] == {"full": 1, "reduced": 1}

    def test_report_is_json_serializable(self, b1_cfg, tmp_path):
        result = run_experiment(b1_cfg)
        result.write(tmp_path)
        report = json.loads((tmp_path / "report.json").read_text())
        assert report["exit_code"] == 0
        assert {c["name"] for c in report["checks"]} >= {"assumptions", "oracle"}

    def test_b1_refined_report_gain_error(self, b1_cfg):
        result = run_experiment(b1_cfg, algorithm="refined")
        sec = result.report["algorithms"]["refined"]
        assert sec["errors_vs_oracle"]["K_rel"] <= 0.01
