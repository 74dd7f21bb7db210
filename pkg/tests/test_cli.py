import json

import pytest

from mixmom.cli import main


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def simulated(tmp_path, capsys):
    data, model = tmp_path / "d.csv", tmp_path / "m.json"
    code, out, err = run(capsys, "simulate", "--p", 12, "--k", 3, "--n", 800, "--seed", 2,
                         "--data-out", data, "--model-out", model)
    assert code == 0 and "seed 2" in err
    return data, model


def test_simulate_fit_eval(tmp_path, capsys, simulated):
    data, model = simulated
    est = tmp_path / "e.json"
    code, out, _ = run(capsys, "fit", "--data", data, "--k", 3, "--alpha0", 0.3, "--workers", 1,
                       "--truth", model, "--out", est, "--report", tmp_path / "r.json")
    assert code == 0
    report = json.loads(out)
    assert set(report) == {"command", "seed", "params", "metrics", "partition_reports"}
    assert report["metrics"]["rmse"] < 0.2
    assert json.loads((tmp_path / "r.json").read_text()) == report
    code, out, err = run(capsys, "eval", "--estimate", est, "--truth", model)
    assert code == 0 and "rmse" in err
    assert json.loads(out)["metrics"]["rmse"] == pytest.approx(report["metrics"]["rmse"])


def test_fit_is_deterministic(tmp_path, capsys, simulated):
    data, _ = simulated
    outs = []
    for name in ("a.json", "b.json"):
        code, _, _ = run(capsys, "fit", "--data", data, "--k", 3, "--alpha0", 0.3,
                         "--max-iters", 100, "--out", tmp_path / name)
        assert code == 0
        outs.append((tmp_path / name).read_text())
    assert outs[0] == outs[1]


def test_eval_self_is_zero(capsys, simulated):
    _, model = simulated
    code, out, _ = run(capsys, "eval", "--estimate", model, "--truth", model)
    assert code == 0 and json.loads(out)["metrics"]["rmse"] == 0.0


def test_negfrac(capsys, simulated):
    data, _ = simulated
    code, out, _ = run(capsys, "negfrac", "--data", data, "--alpha0", 0.3, "--sets", "0-3;4-7;8-11")
    frac = json.loads(out)["metrics"]["negative_fraction"]
    assert code == 0 and 0 <= frac <= 1


def test_bench_rows(capsys):
    code, out, _ = run(capsys, "bench", "--p", 30, "--k", 2, "--n", 200, "--partitions", "5,10,20",
                       "--repeats", 1, "--max-iters", 20, "--restarts", 1)
    assert code == 0
    rows = json.loads(out)["metrics"]["runtimes"]
    assert [r["partitions"] for r in rows] == [5, 10, 20]


def test_config_file(tmp_path, capsys, simulated):
    data, _ = simulated
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"k": 3, "alpha0": 0.3, "max-iters": 5, "rel_tol": 1e-12}))
    code, out, err = run(capsys, "fit", "--config", cfg, "--data", data, "--out", tmp_path / "e.json", "--strict")
    assert code == 4 and err.strip().endswith("error: solver: factorization did not converge")
    assert json.loads(out)["params"]["max_iters"] == 5


def test_exit_codes(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("d=4\n7\n")
    code, _, err = run(capsys, "negfrac", "--data", bad, "--alpha0", 1)
    assert code == 3 and "error: parse: line 2:" in err
    code, _, err = run(capsys, "negfrac", "--data", tmp_path / "missing.csv", "--alpha0", 1)
    assert code == 5 and "error: io:" in err
    good = tmp_path / "g.csv"
    good.write_text("d=2,d=2,d=2\n0,1,1\n1,0,0\n")
    code, _, err = run(capsys, "fit", "--data", good, "--k", 3, "--alpha0", 1, "--out", tmp_path / "x.json")
    assert code == 2 and "error: plan:" in err
    with pytest.raises(SystemExit) as exc:
        main(["fit", "--k", "x"])
    assert exc.value.code == 2
