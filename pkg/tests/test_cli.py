import json

import pytest

from menuhard import experiments
from menuhard.cli import main
from menuhard.experiments import ExperimentConfig, InvariantViolation, SchemaMismatch, execute, replay, run


def read_csv(path):
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# menuhard ") and "schema=1" in lines[0]
    header = lines[1].split(",")
    return [dict(zip(header, row.split(","))) for row in lines[2:]]


def test_identify_example(tmp_path):
    out = tmp_path / "id"
    assert main(["identify", "--m", "6", "--k", "2", "--size", "4", "--seed", "1", "--out", str(out)]) == 0
    rows = read_csv(tmp_path / "id.csv")
    scan = next(r for r in rows if r["strategy"] == "scan")
    assert int(scan["queries_used"]) >= 3 and scan["success"] == "true"
    assert all(r["success"] == "false" for r in rows if r["strategy"] == "short-scan")


def test_menu_example(tmp_path):
    out = tmp_path / "menu"
    assert main(["menu", "--m", "4", "--n", "2", "--mech", "vcg", "--seed", "2", "--out", str(out)]) == 0
    menu = json.loads((tmp_path / "menu.menu.json").read_text())
    assert len(menu["entries"]) <= 2 ** 4
    record = json.loads((tmp_path / "menu.json").read_text())
    for key in ("config", "seed", "library_version", "wall_time_s", "status"):
        assert key in record
    assert record["status"] == "ok"


def test_audit_example(capsys):
    assert main(["audit", "--claim", "4.4", "--m", "16", "--epsilon", "1/4"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[1].split(",") == ["claim_id", "m", "n", "epsilon", "exact_or_mc", "probability", "bound", "holds"]
    assert lines[2].endswith(",67/256,0.0183156,false")


def test_invalid_config_exit_1(capsys):
    assert main(["menu", "--m", "4"]) == 1
    diag = json.loads(capsys.readouterr().err)
    assert diag["status"] == "invalid-config"
    assert any("--seed" in e for e in diag["errors"])


def test_stochastic_kinds_need_seed():
    for kind in ("menu", "submenu", "identify", "cpp-distinguish", "tie", "goodness"):
        assert any("--seed" in p for p in ExperimentConfig(kind=kind).problems())


def test_non_square_rejected(capsys):
    assert main(["tie", "--m", "15", "--epsilon", "1/4", "--seed", "1", "--trials", "2"]) == 1


def test_config_file_with_flag_override(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"m": 4, "n": 2, "seed": 3, "mech": "greedy"}))
    out = tmp_path / "r"
    assert main(["menu", "--config", str(cfg), "--seed", "4", "--out", str(out)]) == 0
    record = json.loads((tmp_path / "r.json").read_text())
    assert record["config"]["seed"] == 4 and record["config"]["mech"] == "greedy"


def test_invariant_violation_exit_2_with_witness(tmp_path, monkeypatch):
    def broken(cfg):
        raise InvariantViolation("forced", {"bundle": "1010"})

    monkeypatch.setitem(experiments.RUNNERS, "menu", broken)
    out = tmp_path / "bad"
    assert main(["menu", "--m", "4", "--n", "2", "--seed", "1", "--out", str(out)]) == 2
    record = json.loads((tmp_path / "bad.json").read_text())
    assert record["status"] == "invariant-violation" and record["witness"] == {"bundle": "1010"}
    assert (tmp_path / "bad.csv").exists()


SEEDED = [
    ExperimentConfig("menu", m=4, n=3, seed=5),
    ExperimentConfig("submenu", m=4, n=2, seed=6),
    ExperimentConfig("identify", m=6, k=2, size=5, seed=7),
    ExperimentConfig("cpp-distinguish", m=16, epsilon="1/4", seed=8, trials=500),
    ExperimentConfig("tie", m=16, epsilon="1/4", seed=9, trials=5),
    ExperimentConfig("audit", claim="small-value", m=16, epsilon="1/4", method="mc", trials=1000, seed=10),
    ExperimentConfig("goodness", m=4, n=2, seed=11, trials=10, mech="greedy", alpha="2"),
]


@pytest.mark.parametrize("cfg", SEEDED, ids=lambda c: c.kind)
def test_replay_identical(tmp_path, cfg):
    cfg.out = str(tmp_path / cfg.kind)
    first = run(cfg)
    assert first.status == "ok"
    report = replay(tmp_path / f"{cfg.kind}.json")
    assert report.identical, report.divergences


def test_replay_names_tampered_row(tmp_path):
    cfg = ExperimentConfig("identify", m=6, k=2, size=4, seed=1, out=str(tmp_path / "id"))
    run(cfg)
    path = tmp_path / "id.json"
    record = json.loads(path.read_text())
    record["transcripts"][0]["queries"][0]["answer"] = "1/1"
    record["rows"][0][4] = "99"
    path.write_text(json.dumps(record))
    report = replay(path)
    assert not report.identical
    assert any(d.startswith("row 0:") for d in report.divergences)
    assert any(d.startswith("transcript 0 query 0:") for d in report.divergences)


def test_replay_rejects_newer_schema(tmp_path, capsys):
    cfg = ExperimentConfig("audit", claim="small-value", m=16, epsilon="1/4", out=str(tmp_path / "a"))
    run(cfg)
    path = tmp_path / "a.json"
    record = json.loads(path.read_text())
    record["schema_version"] = 2
    path.write_text(json.dumps(record))
    with pytest.raises(SchemaMismatch):
        replay(path)
    assert main(["replay", str(path)]) == 1
    assert "schema-mismatch" in capsys.readouterr().err


def test_execute_is_deterministic():
    cfg = ExperimentConfig("cpp-distinguish", m=16, epsilon="1/4", seed=3, trials=300, q="1,2")
    assert execute(cfg).rows == execute(cfg).rows
