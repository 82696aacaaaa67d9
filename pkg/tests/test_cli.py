import json

import pytest

from cli import EXIT_DATA, EXIT_IO, EXIT_OK, EXIT_USAGE, main
from data_processing import read_table
from pipeline import CAPTURE_INDEX, D_SERIES_FILE, LAG_PROFILE_FILE, PAIRS_FILE, RA_BINS_FILE, load_capture_index
from report import FIGURES_DIR


@pytest.fixture
def scenario(tmp_path, small_config_dict):
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps(small_config_dict), encoding="utf-8")
    return path


def test_usage_errors_exit_with_one(tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["detect"])
    assert exc.value.code == EXIT_USAGE
    with pytest.raises(SystemExit) as exc:
        main(["launch", "--out", str(tmp_path)])
    assert exc.value.code == EXIT_USAGE


def test_bad_configuration_exits_with_two(scenario, tmp_path):
    code = main(["detect", "--scenario", str(scenario), "--out", str(tmp_path / "out"), "--ra-of-interest", "30"])
    assert code == EXIT_DATA


def test_missing_scenario_exits_with_three(tmp_path):
    code = main(["detect", "--scenario", str(tmp_path / "missing.json"), "--out", str(tmp_path / "out")])
    assert code == EXIT_IO


def test_analyze_without_capture_is_an_io_error(scenario, tmp_path):
    assert main(["analyze", "--scenario", str(scenario), "--out", str(tmp_path / "empty")]) == EXIT_IO


def test_full_run(scenario, tmp_path):
    out = tmp_path / "out"
    code = main(["run", "--scenario", str(scenario), "--out", str(out), "--level", "first",
                 "--no-plots", "--ticks", "1", "-q"])
    assert code == EXIT_OK
    assert (out / CAPTURE_INDEX).exists()
    assert (out / PAIRS_FILE).exists()
    assert (out / LAG_PROFILE_FILE).exists()
    assert len(list((out / FIGURES_DIR).glob("*.csv"))) == 13


def test_same_seed_runs_are_byte_identical(tmp_path, small_config_dict):
    # a 5 dB threshold so every table has rows to compare
    scenario = {**small_config_dict, "excision": {"snr_threshold_db": 5.0}}
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps(scenario), encoding="utf-8")
    outs = [tmp_path / "a", tmp_path / "b"]
    for out in outs:
        assert main(["run", "--scenario", str(path), "--out", str(out), "--level", "first",
                     "--no-plots", "--seed", "5", "-q"]) == EXIT_OK
    a, b = outs
    files = [PAIRS_FILE, D_SERIES_FILE, RA_BINS_FILE, LAG_PROFILE_FILE]
    for captured in load_capture_index(a):
        files += [captured.cand_file, captured.rfi_file]
    files += [f"{FIGURES_DIR}/{p.name}" for p in sorted((a / FIGURES_DIR).glob("*.csv"))]
    assert len(files) == 4 + 2 + 13
    assert len(read_table(a / PAIRS_FILE)) > 0
    for name in files:
        assert (a / name).read_bytes() == (b / name).read_bytes(), name


def test_simulate_then_detect_the_dump(scenario, tmp_path):
    out = tmp_path / "sim"
    assert main(["simulate", "--scenario", str(scenario), "--out", str(out), "--ticks", "2", "--spectra"]) == EXIT_OK
    assert (out / "frames.bin").exists()
    assert (out / "spectra_east.bin").exists()
    detected = tmp_path / "det"
    code = main(["detect", "--scenario", str(scenario), "--out", str(detected), "--frames", str(out / "frames.bin")])
    assert code == EXIT_OK
    assert (detected / CAPTURE_INDEX).exists()
