import json
import subprocess
import sys

import pytest

from crimecast.cli import main

FAST = ["--epochs", "3", "--batch-size", "16"]


@pytest.fixture
def panel_csv(tmp_path):
    assert main(["synth", "--seed", "7", "--states", "5", "--years", "20", "--out", str(tmp_path)]) == 0
    return tmp_path / "panel.csv"


def test_synth_rows_and_determinism(tmp_path, panel_csv):
    lines = panel_csv.read_text().splitlines()
    assert len(lines) == 101
    again = tmp_path / "again"
    main(["synth", "--seed", "7", "--states", "5", "--years", "20", "--out", str(again)])
    assert (again / "panel.csv").read_bytes() == panel_csv.read_bytes()


def test_synth_too_many_states(tmp_path, capsys):
    assert main(["synth", "--states", "60", "--out", str(tmp_path)]) == 2
    assert "50" in capsys.readouterr().err


def test_validate_ok(panel_csv, capsys):
    assert main(["validate", str(panel_csv)]) == 0
    assert "0 errors" in capsys.readouterr().out


def test_validate_bad_gender_sum(panel_csv, capsys):
    lines = panel_csv.read_text().splitlines()
    fields = lines[3].split(",")
    header = lines[0].split(",")
    fields[header.index("pct_male")] = "60.0"
    lines[3] = ",".join(fields)
    panel_csv.write_text("\n".join(lines) + "\n")
    assert main(["validate", str(panel_csv)]) == 1
    out = capsys.readouterr().out
    assert "1 errors" in out
    assert "pct_male" in out or "pct_female" in out


def test_validate_malformed_row(panel_csv, capsys):
    with panel_csv.open("a") as fh:
        fh.write("CA,2030,abc\n")
    assert main(["validate", str(panel_csv)]) == 1


def test_validate_missing_file(tmp_path):
    assert main(["validate", str(tmp_path / "nope.csv")]) == 3


def test_train_writes_artifacts(tmp_path, panel_csv):
    out1, out2 = tmp_path / "r1", tmp_path / "r2"
    for out in (out1, out2):
        assert main(["train", "--data", str(panel_csv), "--out", str(out), "--seed", "2", *FAST]) == 0
    for name in ("model.ckpt", "train_log.csv", "predictions.csv"):
        assert (out1 / name).is_file()
    assert (out1 / "predictions.csv").read_bytes() == (out2 / "predictions.csv").read_bytes()
    assert (out1 / "model.ckpt").read_bytes() == (out2 / "model.ckpt").read_bytes()
    assert len((out1 / "predictions.csv").read_text().splitlines()) == 6


def test_train_bad_batch_size(tmp_path, panel_csv, capsys):
    code = main(["train", "--data", str(panel_csv), "--out", str(tmp_path / "o"), "--batch-size", "0"])
    assert code == 2
    assert "batch_size" in capsys.readouterr().err


def test_train_config_file(tmp_path, panel_csv):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"data_path": str(panel_csv), "out_dir": str(tmp_path / "c"),
                               "train": {"epochs": 2, "batch_size": 32}}))
    assert main(["train", "--config", str(cfg)]) == 0
    log = (tmp_path / "c" / "train_log.csv").read_text().splitlines()
    assert len(log) == 3


def test_bad_config_file(tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text("{not json")
    assert main(["train", "--config", str(cfg)]) == 2
    cfg.write_text(json.dumps({"colour": "blue"}))
    assert main(["train", "--config", str(cfg)]) == 2


def test_train_invalid_panel(tmp_path, panel_csv):
    lines = panel_csv.read_text().splitlines()
    del lines[5]  # leaves a year gap
    panel_csv.write_text("\n".join(lines) + "\n")
    assert main(["train", "--data", str(panel_csv), "--out", str(tmp_path / "o"), *FAST]) == 1


def test_trials_outputs(tmp_path, panel_csv):
    out = tmp_path / "t"
    assert main(["trials", "--data", str(panel_csv), "--out", str(out), "--n-trials", "3", *FAST]) == 0
    for name in ("trials.csv", "per_state.csv", "report.json", "error_bars.svg", "timings.json"):
        assert (out / name).is_file()
    lines = (out / "trials.csv").read_text().splitlines()
    assert len(lines) == 4
    assert lines[0] == "trial_id,seed,total_loss,test_mse,stopped_epoch"
    report = json.loads((out / "report.json").read_text())
    assert report["n_trials"] == 3 and "wall_time_s" not in report
    timings = json.loads((out / "timings.json").read_text())
    assert [t["trial_id"] for t in timings["trials"]] == [0, 1, 2]
    assert timings["wall_time_s"]["mean"] > 0


def test_trials_inline_timing(tmp_path, panel_csv):
    out = tmp_path / "t"
    assert main(["trials", "--data", str(panel_csv), "--out", str(out), "--n-trials", "2",
                 "--inline-timing", *FAST]) == 0
    header = (out / "trials.csv").read_text().splitlines()[0]
    assert header == "trial_id,seed,total_loss,test_mse,wall_time_s,cpu_time_s,stopped_epoch"
    report = json.loads((out / "report.json").read_text())
    assert set(report["cpu_time_s"]) == {"mean", "range", "std"}


def test_trials_unwritable_out(tmp_path, panel_csv):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert main(["trials", "--data", str(panel_csv), "--out", str(blocker / "sub"),
                 "--n-trials", "1", *FAST]) == 3


def test_help_lists_defaults():
    result = subprocess.run([sys.executable, "-m", "crimecast", "trials", "--help"],
                            capture_output=True, text=True)
    assert result.returncode == 0
    text = result.stdout
    for flag, default in (("--learning-rate", "0.001"), ("--epochs", "100"), ("--batch-size", "64"),
                          ("--es-patience", "10"), ("--lr-patience", "5"), ("--lr-factor", "0.5"),
                          ("--n-trials", "50"), ("--lag", "5")):
        assert flag in text
        assert f"(default: {default})" in text


def test_unknown_command_exits_2():
    with pytest.raises(SystemExit) as info:
        main(["frobnicate"])
    assert info.value.code == 2
