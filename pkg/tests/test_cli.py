import json

import pytest

from quorumforest.cli import main
from quorumforest.rules import parse_rule_text
from schemas import validator


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    assert main(["generate", "--n", "120", "--seed", "3", "--out", str(d / "d.csv")]) == 0
    assert main(["train", "--data", str(d / "d.csv"), "--schema", str(d / "d.schema.json"),
                 "--trees", "9", "--out", str(d / "f.json")]) == 0
    return d


def args(d, *extra):
    return ["explain", "--model", str(d / "f.json"), "--data", str(d / "d.csv"),
            "--schema", str(d / "d.schema.json"), *extra]


def test_train_prints_quorum(tmp_path, capsys):
    main(["generate", "--n", "60", "--out", str(tmp_path / "d.csv")])
    capsys.readouterr()
    assert main(["train", "--data", str(tmp_path / "d.csv"), "--schema", str(tmp_path / "d.schema.json"),
                 "--trees", "9", "--out", str(tmp_path / "f.json")]) == 0
    out = capsys.readouterr().out
    assert "trees: 9" in out and "quorum: 5" in out
    model = json.loads((tmp_path / "f.json").read_text())
    assert len(model["trees"]) == 9
    validator("forest.schema.json").validate(model)


def test_usage_errors(workdir, tmp_path, capsys):
    d = workdir
    assert main(["train", "--data", str(d / "d.csv"), "--schema", str(tmp_path / "none.json"),
                 "--out", str(tmp_path / "f.json")]) == 2
    assert "schema" in capsys.readouterr().err
    assert main(["train", "--data", str(d / "d.csv"), "--schema", str(d / "d.schema.json"),
                 "--trees", "0", "--out", str(tmp_path / "f.json")]) == 2
    assert main(["evaluate", "--data", str(d / "d.csv"), "--schema", str(d / "d.schema.json"),
                 "--folds", "1"]) == 2
    assert main(args(d, "--row", "5000")) == 2
    assert main(args(d, "--strategy", "nope", "--row", "0")) == 2
    assert main([]) == 2


def test_io_error(workdir, tmp_path):
    assert main(["train", "--data", str(tmp_path / "missing.csv"), "--schema",
                 str(workdir / "d.schema.json"), "--out", str(tmp_path / "f.json")]) == 3


def test_explain_all_with_check(workdir, tmp_path, capsys):
    out = tmp_path / "e.json"
    assert main(args(workdir, "--row", "0", "--strategy", "all", "--check", "1000",
                     "--emit-paths", "--out", str(out))) == 0
    text = capsys.readouterr().out.strip().splitlines()
    doc = json.loads(out.read_text())
    validator("explanation.schema.json").validate(doc)
    assert len(doc["rules"]) == 1 and all(c["holds"] for c in doc["conclusiveness"])
    assert len(doc["paths"]) == 1
    # text and JSON carry the same rule
    parsed = parse_rule_text(text[0])
    rule = doc["rules"][0]
    assert parsed["then"] == rule["then"] == doc["prediction"]
    assert [c.get("feature", c.get("cat")) for c in parsed["if"]] == \
        [c.get("feature", c.get("cat")) for c in rule["if"]]
    for a, b in zip(parsed["if"], rule["if"]):
        if "low" in a:
            assert a["low"] == pytest.approx(b["low"], rel=1e-3, abs=1e-9)
            assert a["high"] == pytest.approx(b["high"], rel=1e-3, abs=1e-9)


def test_explain_subsets_top_one(workdir, capsys):
    found = False
    for row in range(40):
        capsys.readouterr()
        assert main(args(workdir, "--row", str(row), "--strategy", "subsets", "--max-subsets", "1",
                         "--subset-min-size", "1", "--check", "200")) == 0
        out = capsys.readouterr().out
        doc = json.loads(out[out.index("{"):])
        validator("explanation.schema.json").validate(doc)
        assert len(doc["rules"]) <= 1
        found |= len(doc["rules"]) == 1
    assert found


def test_explain_inline_instance(workdir, capsys):
    inst = {"Type": 3, "Air temperature [K]": 300.7, "Process temperature [K]": 310.2,
            "Rotational speed [rpm]": 1364, "Torque [Nm]": 65.3, "Tool wear [min]": 208}
    code = main(["explain", "--model", str(workdir / "f.json"), "--instance", json.dumps(inst),
                 "--strategy", "label", "--check", "500"])
    assert code == 0
    assert main(["explain", "--model", str(workdir / "f.json"), "--instance", '{"Type": 1}']) == 2


def test_explain_deterministic(workdir, capsys):
    docs = []
    for _ in range(2):
        capsys.readouterr()
        main(args(workdir, "--row", "7", "--strategy", "label"))
        out = capsys.readouterr().out
        doc = json.loads(out[out.index("{"):])
        doc.pop("elapsed_seconds")
        docs.append(doc)
    assert docs[0] == docs[1]


def test_seed_from_environment(workdir, tmp_path, monkeypatch):
    monkeypatch.setenv("QF_SEED", "11")
    main(["generate", "--n", "30", "--out", str(tmp_path / "a.csv")])
    monkeypatch.delenv("QF_SEED")
    main(["generate", "--n", "30", "--seed", "11", "--out", str(tmp_path / "b.csv")])
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    monkeypatch.setenv("QF_SEED", "abc")
    assert main(["generate", "--n", "30", "--out", str(tmp_path / "c.csv")]) == 2


def test_evaluate_writes_tables_and_figure(workdir, tmp_path, capsys):
    out = tmp_path / "ev"
    assert main(["evaluate", "--data", str(workdir / "d.csv"), "--schema", str(workdir / "d.schema.json"),
                 "--folds", "3", "--trees", "9", "--out-dir", str(out)]) == 0
    lines = (out / "metrics.csv").read_text().splitlines()
    assert lines[0] == "strategy,L_mean,L_std,C_mean,C_std,P_mean,P_std,T_mean,T_std"
    assert [l.split(",")[0] for l in lines[1:]] == ["all", "label", "subsets"]
    assert (out / "metrics.md").exists()
    assert (out / "metrics.png").read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


def test_explain_plot(workdir, tmp_path):
    png = tmp_path / "r.png"
    assert main(args(workdir, "--row", "1", "--plot", str(png))) == 0
    assert png.read_bytes()[:4] == b"\x89PNG"
