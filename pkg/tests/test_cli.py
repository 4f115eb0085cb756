"""Tests for the command-line interface: argument handling, config merging,
error exit codes, and the demo -> extract -> train -> eval loop."""

from __future__ import annotations

import json

import pytest

from talkerqa.cli import BUILTIN_DEFAULTS, load_config_file, main
from talkerqa.subjective import RatingRecord


@pytest.fixture(scope="module")
def cli_study(tmp_path_factory):
    """A small study produced entirely through the CLI."""
    root = tmp_path_factory.mktemp("cli-study")
    assert main(["demo", "--out", str(root), "--seed", "5",
                 "--clips", "6", "--pids", "3"]) == 0
    assert main(["extract",
                 "--dataset", str(root / "dataset"),
                 "--keypoints", str(root / "keypoints"),
                 "--out", str(root / "composites")]) == 0
    return root


# ------------------------------------------------------------------ happy path

def test_demo_writes_study_layout(cli_study, capsys):
    assert (cli_study / "dataset" / "clip005" / "manifest.json").exists()
    assert (cli_study / "keypoints" / "clip005.json").exists()
    assert (cli_study / "mos.csv").read_text().startswith("clip_id,mos,n_raters,")


def test_extract_reports_success(cli_study, tmp_path, capsys):
    assert main(["extract",
                 "--dataset", str(cli_study / "dataset"),
                 "--keypoints", str(cli_study / "keypoints"),
                 "--out", str(tmp_path / "comp")]) == 0
    out = capsys.readouterr().out
    assert "extracted 6 clip(s)" in out
    assert "extract.log" in out
    assert sorted(p.name for p in (tmp_path / "comp").glob("*.fscd")) == \
        [f"clip{i:03d}.fscd" for i in range(6)]


def test_train_writes_model_and_report(cli_study, tmp_path, capsys):
    assert main(["train",
                 "--composites", str(cli_study / "composites"),
                 "--mos", str(cli_study / "mos.csv"),
                 "--out", str(tmp_path / "out"),
                 "--k", "3"]) == 0
    assert (tmp_path / "out" / "model.json").exists()
    report = json.loads((tmp_path / "out" / "report.json").read_text())
    assert report["k"] == 3
    assert report["lambda"] == BUILTIN_DEFAULTS["ridge_lambda"]
    out = capsys.readouterr().out
    assert "model.json" in out and "report.json" in out and "srcc" in out


def test_eval_writes_report_only(cli_study, tmp_path):
    assert main(["eval",
                 "--composites", str(cli_study / "composites"),
                 "--mos", str(cli_study / "mos.csv"),
                 "--out", str(tmp_path / "out"),
                 "--k", "3", "--seed", "8"]) == 0
    assert not (tmp_path / "out" / "model.json").exists()
    assert json.loads((tmp_path / "out" / "report.json").read_text())["seed"] == 8


# --------------------------------------------------------------------- ingest

def _write_ratings(path, rows):
    lines = [RatingRecord(subject_id=s, clip_id=c, score=v,
                          distortions=frozenset(d)).to_json() for s, c, v, d in rows]
    path.write_text("\n".join(lines) + "\n")


def test_ingest_writes_mos_and_screening(tmp_path, capsys):
    ratings = tmp_path / "ratings.jsonl"
    rows = []
    for i, (a, b) in enumerate([(1, 5), (2, 4), (1, 4)]):
        rows.append((f"s{i}", "bad", a, ["NI"]))
        rows.append((f"s{i}", "good", b, []))
    _write_ratings(ratings, rows)

    assert main(["ingest", "--ratings", str(ratings), "--out", str(tmp_path / "out")]) == 0
    mos_lines = (tmp_path / "out" / "mos.csv").read_text().splitlines()
    assert mos_lines[0].startswith("clip_id,mos,n_raters,BL,NI")
    assert len(mos_lines) == 3
    screening = json.loads((tmp_path / "out" / "screening.json").read_text())
    assert set(screening) == {"subjects", "degenerate_subjects", "dropped_clips"}
    assert len(screening["subjects"]) == 3
    assert "rejected subjects: none" in capsys.readouterr().out


def test_ingest_duplicate_line_exits_two(tmp_path, capsys):
    ratings = tmp_path / "ratings.jsonl"
    line = RatingRecord(subject_id="s", clip_id="c", score=3).to_json()
    ratings.write_text(line + "\n" + line + "\n")
    assert main(["ingest", "--ratings", str(ratings), "--out", str(tmp_path / "out")]) == 2
    err = capsys.readouterr().err
    assert err.startswith("error:")
    assert "duplicate" in err


# --------------------------------------------------------------- config files

def test_json_config_fills_unset_flags(cli_study, tmp_path):
    config = tmp_path / "run.json"
    config.write_text(json.dumps({"k": 3, "seed": 4, "lambda": 0.5}))
    assert main(["eval",
                 "--composites", str(cli_study / "composites"),
                 "--mos", str(cli_study / "mos.csv"),
                 "--out", str(tmp_path / "out"),
                 "--config", str(config)]) == 0
    report = json.loads((tmp_path / "out" / "report.json").read_text())
    assert report["k"] == 3 and report["seed"] == 4 and report["lambda"] == 0.5


def test_explicit_flag_beats_config(cli_study, tmp_path):
    config = tmp_path / "run.json"
    config.write_text(json.dumps({"k": 2, "seed": 4}))
    assert main(["eval",
                 "--composites", str(cli_study / "composites"),
                 "--mos", str(cli_study / "mos.csv"),
                 "--out", str(tmp_path / "out"),
                 "--k", "3",
                 "--config", str(config)]) == 0
    report = json.loads((tmp_path / "out" / "report.json").read_text())
    assert report["k"] == 3 and report["seed"] == 4


def test_toml_config_supported(cli_study, tmp_path):
    config = tmp_path / "run.toml"
    config.write_text('k = 3\nseed = 9\n"lambda" = 0.25\n')
    assert main(["eval",
                 "--composites", str(cli_study / "composites"),
                 "--mos", str(cli_study / "mos.csv"),
                 "--out", str(tmp_path / "out"),
                 "--config", str(config)]) == 0
    report = json.loads((tmp_path / "out" / "report.json").read_text())
    assert report["k"] == 3 and report["seed"] == 9 and report["lambda"] == 0.25


def test_config_paths_can_supply_required_values(cli_study, tmp_path):
    config = tmp_path / "run.json"
    config.write_text(json.dumps({
        "composites": str(cli_study / "composites"),
        "mos": str(cli_study / "mos.csv"),
        "k": 3,
    }))
    assert main(["eval", "--out", str(tmp_path / "out"), "--config", str(config)]) == 0


def test_load_config_file_rejects_unknown_suffix(tmp_path):
    config = tmp_path / "run.yaml"
    config.write_text("k: 3\n")
    with pytest.raises(ValueError, match=r"\.json or \.toml"):
        load_config_file(config)


def test_bad_config_file_exits_two(cli_study, tmp_path, capsys):
    config = tmp_path / "run.json"
    config.write_text("{not json")
    rc = main(["eval",
               "--composites", str(cli_study / "composites"),
               "--mos", str(cli_study / "mos.csv"),
               "--out", str(tmp_path / "out"),
               "--config", str(config)])
    assert rc == 2
    assert capsys.readouterr().err.startswith("error:")


# ------------------------------------------------------------------- failures

def test_missing_required_flag_is_usage_error(tmp_path, capsys):
    with pytest.raises(SystemExit) as excinfo:
        main(["extract", "--dataset", str(tmp_path)])
    assert excinfo.value.code == 2
    assert "--keypoints is required" in capsys.readouterr().err


def test_too_few_pids_for_folds_exits_two(cli_study, tmp_path, capsys):
    rc = main(["eval",
               "--composites", str(cli_study / "composites"),
               "--mos", str(cli_study / "mos.csv"),
               "--out", str(tmp_path / "out"),
               "--k", "5"])
    assert rc == 2
    assert "distinct pids" in capsys.readouterr().err


def test_missing_dataset_exits_two(tmp_path, capsys):
    rc = main(["extract",
               "--dataset", str(tmp_path / "nowhere"),
               "--keypoints", str(tmp_path / "kp"),
               "--out", str(tmp_path / "comp")])
    assert rc == 2
    assert "error:" in capsys.readouterr().err
