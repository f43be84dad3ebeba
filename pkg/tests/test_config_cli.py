import json

import numpy as np
import pytest

from lightharvest.cli import ENV_CONFIG, main
from lightharvest.config import (
    apply_overrides,
    dbm_to_watts,
    default_config,
    flatten_config,
    load_config_file,
    optical_frontend,
    parse_override_pairs,
    room_geometry,
    slipt_instance,
    validate_config,
    wpcn_instance,
)
from lightharvest.experiments import read_rows_csv


# ---------------------------------------------------------------------------
# config values and coercion


def test_dbm_to_watts_frozen():
    assert dbm_to_watts(-90.0) == pytest.approx(1e-12, rel=1e-12)
    assert dbm_to_watts(0.0) == pytest.approx(1e-3, rel=1e-12)
    assert dbm_to_watts(30.0) == pytest.approx(1.0, rel=1e-12)


def test_default_config_spot_values():
    cfg = default_config()
    assert cfg.room.height == 3.0
    assert cfg.optical.semi_angle_deg == 60.0
    assert cfg.channel.path_loss_exponent == 2.7
    assert cfg.solver.wpcn_backend == "bisection"
    assert cfg.experiment.n_drops == 500
    validate_config(cfg)


def test_parse_override_pairs():
    assert parse_override_pairs(["a.b=1", " c.d = x=y "]) == {"a.b": "1", "c.d": "x=y"}
    assert parse_override_pairs(None) == {}
    with pytest.raises(ValueError):
        parse_override_pairs(["novalue"])


def test_apply_overrides_coerces_types():
    cfg, applied = apply_overrides(
        default_config(),
        {
            "slipt.max_led_power": "7.5",
            "experiment.n_drops": "25",
            "solver.cross_check": "false",
        },
    )
    assert cfg.slipt.max_led_power == 7.5
    assert cfg.experiment.n_drops == 25 and isinstance(cfg.experiment.n_drops, int)
    assert cfg.solver.cross_check is False
    assert applied == ["experiment.n_drops", "slipt.max_led_power", "solver.cross_check"]


def test_apply_overrides_rejects_bad_values():
    with pytest.raises(ValueError):
        apply_overrides(default_config(), {"solver.cross_check": "maybe"})
    with pytest.raises(ValueError):
        apply_overrides(default_config(), {"experiment.n_drops": 2.5})


def test_apply_overrides_dbm_alias():
    cfg, applied = apply_overrides(
        default_config(), {"slipt.vlc_noise_dbm": "-90", "wpcn.rf_noise_dbm": "0"}
    )
    assert cfg.slipt.vlc_noise_power == pytest.approx(1e-12, rel=1e-12)
    assert cfg.wpcn.rf_noise_power == pytest.approx(1e-3, rel=1e-12)
    # reported against the watts fields they actually set
    assert "slipt.vlc_noise_power" in applied and "wpcn.rf_noise_power" in applied


def test_apply_overrides_unknown_key_lists_valid():
    with pytest.raises(ValueError, match="room.length"):
        apply_overrides(default_config(), {"slipt.bogus": "1"})
    with pytest.raises(ValueError):
        apply_overrides(default_config(), {"nosection.field": "1"})
    with pytest.raises(ValueError):
        apply_overrides(default_config(), {"undotted": "1"})


def test_apply_overrides_validates_result():
    with pytest.raises(ValueError, match="semi_angle"):
        apply_overrides(default_config(), {"optical.semi_angle_deg": "95"})


def test_load_config_file_json(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(
        json.dumps({"slipt": {"max_led_power": 6}, "experiment": {"seed": 9}}),
        encoding="utf-8",
    )
    assert load_config_file(path) == {"slipt.max_led_power": 6, "experiment.seed": 9}


def test_load_config_file_rejects_json_array(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text("[1, 2]", encoding="utf-8")
    with pytest.raises(ValueError):
        load_config_file(path)


def test_load_config_file_text(tmp_path):
    path = tmp_path / "cfg.txt"
    path.write_text(
        "# comment line\n"
        "slipt.max_dc_offset = 3.0   # inline comment\n"
        "\n"
        "experiment.jobs = 2\n",
        encoding="utf-8",
    )
    assert load_config_file(path) == {"slipt.max_dc_offset": "3.0", "experiment.jobs": "2"}


def test_load_config_file_text_reports_line(tmp_path):
    path = tmp_path / "cfg.txt"
    path.write_text("slipt.max_dc_offset = 3.0\nbroken line\n", encoding="utf-8")
    with pytest.raises(ValueError, match="line 2"):
        load_config_file(path)


def test_flatten_config_covers_every_field():
    flat = flatten_config(default_config())
    assert flat["room.length"] == 5.0
    assert flat["solver.slipt_backend"] == "exact"
    assert len(flat) == 41


def test_validate_config_catches_section_errors():
    cfg = default_config()
    cfg.slipt.dc_offset = 99.0
    with pytest.raises(ValueError, match="dc_offset"):
        validate_config(cfg)
    cfg = default_config()
    cfg.experiment.front_points = 1
    with pytest.raises(ValueError, match="front_points"):
        validate_config(cfg)


def test_builders_reflect_config():
    cfg = default_config()
    room = room_geometry(cfg)
    assert room.led_position[2] == cfg.room.height
    frontend = optical_frontend(cfg)
    assert frontend.semi_angle_deg == cfg.optical.semi_angle_deg
    gains = np.array([1e-5, 2e-5])
    rf = np.array([0.5, 0.25])
    wp = wpcn_instance(cfg, gains, rf)
    assert wp.max_led_power == cfg.wpcn.max_led_power
    assert np.all(wp.vlc_gain == gains)
    sl = slipt_instance(cfg, gains, rf)
    assert sl.max_dc_offset == cfg.slipt.max_dc_offset
    assert np.all(sl.rf_power_gain == rf)


# ---------------------------------------------------------------------------
# CLI


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_cli_requires_subcommand():
    with pytest.raises(SystemExit):
        main([])


def test_cli_solve_a_report(capsys):
    code, out, _ = run_cli(capsys, "solve-a")
    assert code == 0
    report = json.loads(out)
    assert report["command"] == "solve-a"
    assert report["overridden_keys"] == []
    assert "experiment.seed" in report["defaulted_keys"]
    outputs = report["outputs"]
    assert outputs["sum_rate"] >= outputs["equal_share_rate"] - 1e-12
    assert outputs["converged"] is True
    assert sum(outputs["time_shares"]) == pytest.approx(1.0, abs=1e-9)


def test_cli_solve_a_deterministic(capsys):
    _, out1, _ = run_cli(capsys, "--seed", "5", "solve-a")
    _, out2, _ = run_cli(capsys, "--seed", "5", "solve-a")
    assert out1 == out2


def test_cli_seed_flag_marks_override(capsys):
    code, out, _ = run_cli(capsys, "--seed", "7", "solve-a")
    assert code == 0
    report = json.loads(out)
    assert "experiment.seed" in report["overridden_keys"]
    assert report["config"]["experiment.seed"] == 7


def test_cli_set_flag(capsys):
    code, out, _ = run_cli(capsys, "--set", "slipt.max_dc_offset=3", "solve-b-dl")
    assert code == 0
    report = json.loads(out)
    assert report["config"]["slipt.max_dc_offset"] == 3.0
    assert "slipt.max_dc_offset" in report["overridden_keys"]


def test_cli_bad_override_exits_2(capsys):
    code, _, err = run_cli(capsys, "--set", "slipt.bogus=1", "solve-a")
    assert code == 2
    assert "config error" in err


def test_cli_malformed_set_exits_2(capsys):
    code, _, err = run_cli(capsys, "--set", "novalue", "solve-a")
    assert code == 2
    assert "config error" in err


def test_cli_config_file_flag(tmp_path, capsys):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"experiment": {"seed": 31}}), encoding="utf-8")
    code, out, _ = run_cli(capsys, "--config", str(path), "solve-a")
    assert code == 0
    report = json.loads(out)
    assert report["config"]["experiment.seed"] == 31
    assert "experiment.seed" in report["overridden_keys"]


def test_cli_config_env_var(tmp_path, capsys, monkeypatch):
    path = tmp_path / "cfg.txt"
    path.write_text("experiment.seed = 77\n", encoding="utf-8")
    monkeypatch.setenv(ENV_CONFIG, str(path))
    code, out, _ = run_cli(capsys, "solve-a")
    assert code == 0
    assert json.loads(out)["config"]["experiment.seed"] == 77


def test_cli_flag_beats_env(tmp_path, capsys, monkeypatch):
    env_cfg = tmp_path / "env.txt"
    env_cfg.write_text("experiment.seed = 77\n", encoding="utf-8")
    flag_cfg = tmp_path / "flag.txt"
    flag_cfg.write_text("experiment.seed = 99\n", encoding="utf-8")
    monkeypatch.setenv(ENV_CONFIG, str(env_cfg))
    code, out, _ = run_cli(capsys, "--config", str(flag_cfg), "solve-a")
    assert code == 0
    assert json.loads(out)["config"]["experiment.seed"] == 99


def test_cli_missing_config_file_exits_2(capsys):
    code, _, err = run_cli(capsys, "--config", "/no/such/file.json", "solve-a")
    assert code == 2
    assert "config error" in err


def test_cli_solve_b_both_directions(capsys):
    code, out, _ = run_cli(capsys, "solve-b-dl")
    assert code == 0
    dl_report = json.loads(out)
    assert dl_report["outputs"]["converged"] is True
    assert dl_report["outputs"]["dl_sum_rate"] > 0.0
    code, out, _ = run_cli(capsys, "solve-b-ul")
    assert code == 0
    ul_report = json.loads(out)
    assert ul_report["outputs"]["ul_sum_rate"] >= 0.0
    assert ul_report["outputs"]["dl_sum_rate"] <= dl_report["outputs"]["dl_sum_rate"] + 1e-9


def test_cli_json_out_writes_report(tmp_path, capsys):
    path = tmp_path / "report.json"
    code, out, _ = run_cli(capsys, "--out", str(path), "solve-a")
    assert code == 0
    assert "report written" in out
    report = json.loads(path.read_text(encoding="utf-8"))
    assert report["command"] == "solve-a"


def test_cli_csv_needs_out(capsys):
    code, _, err = run_cli(capsys, "--format", "csv", "solve-a")
    assert code == 1
    assert "csv output needs --out" in err


def test_cli_solve_a_csv_artifact(tmp_path, capsys):
    path = tmp_path / "shares.csv"
    code, out, _ = run_cli(capsys, "--format", "csv", "--out", str(path), "solve-a")
    assert code == 0
    json.loads(out)  # report still printed
    rows = read_rows_csv(path)
    assert {r.scheme for r in rows} == {"time_share"}
    assert sum(r.mean for r in rows) == pytest.approx(1.0, abs=1e-9)


def test_cli_pareto_points(tmp_path, capsys):
    path = tmp_path / "front.csv"
    code, out, _ = run_cli(
        capsys, "--format", "csv", "--out", str(path), "pareto", "--points", "3"
    )
    assert code == 0
    report = json.loads(out)
    assert len(report["outputs"]["points"]) == 3
    rows = read_rows_csv(path)
    assert {r.scheme for r in rows} == {"front|dl", "front|ul"}
    assert len(rows) == 6


def test_cli_experiment_writes_csv_in_json_mode(tmp_path, capsys):
    path = tmp_path / "fig6.csv"
    code, out, _ = run_cli(
        capsys, "--out", str(path), "experiment", "fig6", "--drops", "2"
    )
    assert code == 0
    report = json.loads(out)
    assert report["outputs"]["failed_drops"] == 0
    assert report["outputs"]["schemes"] == ["equal", "optimal"]
    rows = read_rows_csv(path)
    assert all(r.n_drops == 2 for r in rows)


def test_cli_experiment_csv_bytes_reproducible(tmp_path, capsys):
    p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
    c1, _, _ = run_cli(capsys, "--out", str(p1), "experiment", "fig6", "--drops", "2")
    c2, _, _ = run_cli(capsys, "--out", str(p2), "experiment", "fig6", "--drops", "2")
    assert c1 == c2 == 0
    assert p1.read_bytes() == p2.read_bytes()


def test_cli_validate_selected_checks(capsys):
    code, out, _ = run_cli(
        capsys, "validate", "--check", "kernel_roundtrip", "--check", "fault_injection"
    )
    assert code == 0
    assert "PASS kernel_roundtrip" in out
    assert "PASS fault_injection" in out


def test_cli_validate_unknown_check(capsys):
    code, _, err = run_cli(capsys, "validate", "--check", "nope")
    assert code == 1
    assert "unknown checks" in err
