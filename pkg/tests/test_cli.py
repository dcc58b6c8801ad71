import csv
import json

import pytest

from touchauth.cli import main
from touchauth.events import TouchEvent, TouchState, write_session


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    root = tmp_path_factory.mktemp("run")
    assert main(["synth", "--users", "3", "--duration", "20", "--seed", "5", "--out", str(root / "raw")]) == 0
    assert main(["extract", "--data", str(root / "raw"), "--out", str(root / "feat")]) == 0
    return root


def evaluate(corpus, out, *extra):
    return main(["evaluate", "--data", str(corpus / "feat"), "--out", str(out), "--trees", "8", *extra])


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_extract_outputs(corpus):
    feat = corpus / "feat"
    names = sorted(p.name for p in feat.glob("*.features.csv"))
    assert names == [f"0{u}_{g}.features.csv" for u in (1, 2, 3) for g in ("Minecraft", "Snake")]
    rows = read_rows(feat / "01_Snake.features.csv")
    assert len(rows[0]) == 36 + 4 and rows[0][0] == "x_speed_mean"
    summary = read_rows(feat / "extract_summary.csv")
    header, body = summary[0], summary[1:]
    assert len(body) == 6
    rec = dict(zip(header, body[0]))
    assert int(rec["gestures_f0"]) == int(rec["events_f0"]) // 10
    manifest = json.loads((feat / "extract_manifest.json").read_text())
    assert set(manifest["inputs"]) == {f"0{u}_{g}.csv" for u in (1, 2, 3) for g in ("Minecraft", "Snake")}
    assert manifest["config"]["window"] == 10


def test_evaluate_report_shape_and_determinism(corpus, tmp_path, capsys):
    assert evaluate(corpus, tmp_path / "a", "--format", "structured") == 0
    assert evaluate(corpus, tmp_path / "b", "--format", "structured") == 0
    a = (tmp_path / "a" / "report.csv").read_bytes()
    assert a == (tmp_path / "b" / "report.csv").read_bytes()
    assert (tmp_path / "a" / "report.json").read_bytes() == (tmp_path / "b" / "report.json").read_bytes()
    rows = read_rows(tmp_path / "a" / "report.csv")
    assert rows[0] == ["User", "Game", "Model", "Accuracy", "FPR", "FNR", "EER"]
    body = rows[1:]
    # 3 users x 2 games x 2 models, then Avg and Stdv per (game, model)
    assert len(body) == 12 + 4 + 4
    assert [r[0] for r in body[12:16]] == ["Avg"] * 4 and [r[0] for r in body[16:]] == ["Stdv"] * 4
    assert all(len(v.split(".")[1]) == 4 for r in body for v in r[3:])
    data = json.loads((tmp_path / "a" / "report.json").read_text())
    cell = data["cells"][0]
    assert cell["dataset"]["train_genuine"] == cell["dataset"]["train_imposter"]
    capsys.readouterr()
    assert main(["report", str(tmp_path / "a" / "report.json")]) == 0
    from_json = capsys.readouterr().out
    assert main(["report", str(tmp_path / "a" / "report.csv")]) == 0
    assert capsys.readouterr().out == from_json


def test_extract_is_byte_identical(corpus, tmp_path):
    assert main(["extract", "--data", str(corpus / "raw"), "--out", str(tmp_path)]) == 0
    for path in (corpus / "feat").glob("*.features.csv"):
        assert (tmp_path / path.name).read_bytes() == path.read_bytes()


def test_game_filter_and_single_model(corpus, tmp_path):
    assert evaluate(corpus, tmp_path, "--game", "snake", "--model", "knn") == 0
    body = read_rows(tmp_path / "report.csv")[1:]
    assert len(body) == 3 + 1 + 1
    assert {r[1] for r in body} == {"Snake"} and {r[2] for r in body} == {"KNN"}


def test_config_file_and_flag_precedence(corpus, tmp_path):
    cfg = tmp_path / "run.yaml"
    cfg.write_text("n_estimators: 3\nk: 3\nmodel: knn\n")
    out = tmp_path / "out"
    assert evaluate(corpus, out, "--config", str(cfg), "-k", "7") == 0
    config = json.loads((out / "evaluate_manifest.json").read_text())["config"]
    # --trees 8 and -k 7 beat the file; model comes from the file
    assert (config["n_estimators"], config["k"], config["model"]) == (8, 7, "knn")


def test_env_var_supplies_data_dir(corpus, tmp_path, monkeypatch):
    monkeypatch.setenv("TOUCHAUTH_DATA_DIR", str(corpus / "feat"))
    assert main(["evaluate", "--out", str(tmp_path), "--model", "knn", "--game", "Minecraft"]) == 0


@pytest.mark.parametrize(
    "argv",
    [
        ["synth", "--users", "1"],
        ["synth", "--duration", "0"],
        ["extract", "--window", "3"],
        ["evaluate", "--ratio", "1.5"],
    ],
)
def test_usage_errors(argv, tmp_path):
    assert main(argv + ["--out", str(tmp_path / "x")]) == 2


def test_bad_config_and_missing_input(tmp_path):
    cfg = tmp_path / "bad.yaml"
    cfg.write_text("trees_typo: 3\n")
    assert main(["extract", "--config", str(cfg), "--data", str(tmp_path)]) == 2
    assert main(["extract", "--data", str(tmp_path), "--out", str(tmp_path / "o")]) == 2
    assert main(["evaluate", "--data", str(tmp_path), "--out", str(tmp_path / "o")]) == 2
    assert main(["report", str(tmp_path / "nope.csv")]) == 2


def test_user_with_too_little_data_is_reported_na(corpus, tmp_path):
    raw = tmp_path / "raw"
    raw.mkdir()
    for path in (corpus / "raw").glob("*_Snake.csv"):
        (raw / path.name).write_bytes(path.read_bytes())
    events = [TouchEvent(0.01 * i, 100 + i, 200, TouchState.HELD, 10, 8, 0) for i in range(15)]
    write_session(raw / "09_Snake.csv", events)
    assert main(["extract", "--data", str(raw), "--out", str(tmp_path / "feat")]) == 0
    code = main(["evaluate", "--data", str(tmp_path / "feat"), "--out", str(tmp_path / "res"), "--trees", "4"])
    assert code == 1
    rows = {(r[0], r[2]): r for r in read_rows(tmp_path / "res" / "report.csv")[1:]}
    assert rows[("09", "RF")][3:] == ["NA"] * 4
    assert rows[("01", "RF")][3] != "NA" and ("Avg", "RF") in rows
