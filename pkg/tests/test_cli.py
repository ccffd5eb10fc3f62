import json
import shutil
import subprocess
import sys

import pytest

from flowbot.cli import _set_sim_key, main
from flowbot.scenario import bundled_dir, load_scenario
from flowbot.sim import read_csv


@pytest.fixture
def scenario(tmp_path):
    """Copy of the straight corridor with a fixed scale factor (no calibration pass)."""
    path = tmp_path / "corridor.scn"
    text = (bundled_dir() / "straight_corridor.scn").read_text()
    path.write_text(_set_sim_key(text, "scale_factor", "3.0"))
    return path


def test_run_one_step(scenario, tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["run", str(scenario), "--steps", "1", "--out", str(out)]) == 0
    lines = (out / "trajectory.csv").read_text().splitlines()
    assert len(lines) == 2
    report = json.loads(capsys.readouterr().out.split("\n", 1)[1])
    assert report["steps"] == 1


def test_run_with_overrides(scenario, tmp_path):
    out = tmp_path / "o"
    rc = main(["run", str(scenario), "--steps", "3", "--controller", "turn_at_threshold", "--flow", "lk",
               "--seed", "4", "--out", str(out), "--dump-flow"])
    assert rc == 0
    assert (out / "flow_000002.flo2").exists()


def test_run_missing_scenario(tmp_path, capsys):
    assert main(["run", "missing.scn", "--out", str(tmp_path)]) == 2
    assert "missing.scn" in capsys.readouterr().err


def test_unknown_flag_is_usage_error(capsys):
    assert main(["run", "straight_corridor", "--warp", "9"]) == 1
    assert "usage" in capsys.readouterr().err


def test_invalid_scenario_exit_1(tmp_path, capsys):
    bad = tmp_path / "bad.scn"
    bad.write_text("[wall]\np0 = 0 0\np1 = nope\n")
    assert main(["dump-controller", str(bad)]) == 1
    assert "bad.scn:3" in capsys.readouterr().err


def test_metrics_matches_run(scenario, tmp_path, capsys):
    out = tmp_path / "m"
    main(["run", str(scenario), "--steps", "5", "--out", str(out)])
    from_run = json.loads(capsys.readouterr().out.split("\n", 1)[1])
    assert main(["metrics", str(out / "trajectory.csv"), str(scenario)]) == 0
    assert json.loads(capsys.readouterr().out) == from_run
    assert len(read_csv(out / "trajectory.csv")["x"]) == 5


def test_dump_controller(capsys):
    assert main(["dump-controller", "narrowing"]) == 0
    text = capsys.readouterr().out
    assert "center_flying_speed" in text and "l_plus_r" in text


def test_calibrate_write(tmp_path, capsys):
    path = tmp_path / "c.scn"
    shutil.copy(bundled_dir() / "straight_corridor.scn", path)
    assert main(["calibrate", str(path), "--write"]) == 0
    printed = capsys.readouterr().out.splitlines()[0]
    _, config = load_scenario(path)
    assert printed == f"scale_factor = {config.scale_factor:.9g}"


def test_set_sim_key_appends_section():
    assert _set_sim_key("[wall]\np0 = 0 0\n", "scale_factor", "2") == "[wall]\np0 = 0 0\n\n[sim]\nscale_factor = 2\n"
    assert "steps = 9" in _set_sim_key("[sim]\nsteps = 3\n", "steps", "9")


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "flowbot", "--help"], capture_output=True, text=True)
    assert r.returncode == 0 and "dump-controller" in r.stdout
