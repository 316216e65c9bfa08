import json

import numpy as np
import pytest

from kernseq.cli import CliError, derive_seed, main, parse_csv


@pytest.fixture
def train_csv(tmp_path):
    rng = np.random.default_rng(123)
    path = tmp_path / "train.csv"
    np.savetxt(path, rng.standard_normal((200, 5)), delimiter=",")
    return str(path)


def _write(tmp_path, name, arr):
    path = tmp_path / name
    np.savetxt(path, np.atleast_2d(arr), delimiter=",")
    return str(path)


def test_derive_seed_stable_and_distinct():
    assert derive_seed(0, "critval") == derive_seed(0, "critval")
    assert derive_seed(0, "critval") != derive_seed(0, "retro")
    assert 0 <= derive_seed(12345, "monitor") < 2**32


def test_parse_csv_header_and_errors(tmp_path):
    p = tmp_path / "data.csv"
    p.write_text("a,b\n1,2\n3,4\n")
    assert np.array_equal(parse_csv(str(p)), [[1.0, 2.0], [3.0, 4.0]])
    p.write_text("1,2\n3\n")
    with pytest.raises(CliError, match="line 2"):
        parse_csv(str(p))
    p.write_text("1,2\n3,x\n")
    with pytest.raises(CliError, match="line 2"):
        parse_csv(str(p))
    p.write_text("\n\n")
    with pytest.raises(CliError, match="no data"):
        parse_csv(str(p))


def test_critval_pinned_regression(train_csv, tmp_path, capsys):
    args = ["critval", "--training", train_csv, "--kernel", "h2",
            "--beta", "0", "--alpha", "0.05", "--reps", "400",
            "--grid-n", "512", "--seed", "11"]
    assert main(args) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["kind"] == "gamma"
    assert out["critical_value"] == 2.4724996892547813
    # bit-identical on replay
    assert main(args) == 0
    again = json.loads(capsys.readouterr().out)
    assert again == out


def test_critval_constant_training(tmp_path, capsys):
    path = _write(tmp_path, "const.csv", np.ones((50, 2)))
    rc = main(["critval", "--training", path, "--reps", "150",
               "--grid-n", "128"])
    assert rc == 0
    out = json.loads(capsys.readouterr().out)
    assert out["critical_value"] == 0.0


def test_critval_spectrum_round_trip(train_csv, tmp_path, capsys):
    spec_path = str(tmp_path / "spec.json")
    assert main(["critval", "--training", train_csv, "--reps", "150",
                 "--grid-n", "128", "--spectrum-out", spec_path]) == 0
    a = json.loads(capsys.readouterr().out)
    assert main(["critval", "--spectrum-in", spec_path, "--reps", "150",
                 "--grid-n", "128"]) == 0
    b = json.loads(capsys.readouterr().out)
    assert b["critical_value"] == a["critical_value"]


def test_monitor_exit_codes_and_events(tmp_path, capsys):
    rng = np.random.default_rng(7)
    train = _write(tmp_path, "tr.csv", rng.standard_normal((40, 3)))
    calm = _write(tmp_path, "calm.csv", rng.standard_normal((30, 3)))
    shifted = _write(tmp_path, "hot.csv", rng.standard_normal((60, 3)) + 3.0)
    events = str(tmp_path / "ev.jsonl")
    rc = main(["monitor", "--training", train, "--stream", calm,
               "--c", "1000000", "--events", events])
    assert rc == 0
    assert "no alarm" in capsys.readouterr().out
    lines = [json.loads(l) for l in open(events)]
    assert len(lines) == 30
    assert all(set(l) == {"k", "stat", "bound", "alarm"} for l in lines)
    assert not any(l["alarm"] for l in lines)
    rc = main(["monitor", "--training", train, "--stream", shifted,
               "--c", "0.05", "--events", events])
    assert rc == 2
    assert "alarm at k=" in capsys.readouterr().out
    lines = [json.loads(l) for l in open(events)]
    assert lines[-1]["alarm"] and not any(l["alarm"] for l in lines[:-1])


def test_monitor_split_single_file(tmp_path, capsys):
    rng = np.random.default_rng(8)
    data = _write(tmp_path, "all.csv", rng.standard_normal((50, 2)))
    rc = main(["monitor", "--training", data, "--m", "30", "--c", "1e9"])
    assert rc == 0
    out = capsys.readouterr().out
    assert out.strip().splitlines()[-1] == "no alarm"


def test_monitor_missing_threshold(tmp_path, capsys):
    data = _write(tmp_path, "d.csv", np.ones((10, 2)))
    rc = main(["monitor", "--training", data, "--m", "5"])
    assert rc == 1
    assert "error" in capsys.readouterr().err


def test_monitor_critval_json_input(tmp_path, capsys):
    rng = np.random.default_rng(9)
    train = _write(tmp_path, "tr.csv", rng.standard_normal((20, 2)))
    stream = _write(tmp_path, "st.csv", rng.standard_normal((15, 2)))
    cv_path = tmp_path / "cv.json"
    cv_path.write_text(json.dumps({"critical_value": 1e8}))
    rc = main(["monitor", "--training", train, "--stream", stream,
               "--critval-json", str(cv_path)])
    assert rc == 0
    capsys.readouterr()


def test_retro_smoke(tmp_path, capsys):
    rng = np.random.default_rng(10)
    X = rng.standard_normal((60, 2))
    X[30:] += 2.0
    data = _write(tmp_path, "retro.csv", X)
    rc = main(["retro", "--data", data, "--grid-n", "256", "--reps", "200"])
    assert rc == 0
    out = json.loads(capsys.readouterr().out)
    assert set(out) == {"stat", "k_hat", "cv", "reject"}
    assert out["reject"] is True
    assert 20 <= out["k_hat"] <= 40


def test_diagnose_smoke(tmp_path, capsys):
    rng = np.random.default_rng(11)
    data = _write(tmp_path, "diag.csv", rng.standard_normal((800, 1)))
    rc = main(["diagnose", "--data", data, "--order", "4", "--B", "200"])
    assert rc == 0
    out = json.loads(capsys.readouterr().out)
    assert out["decide_infinite_moment"] is False
    heavy = _write(tmp_path, "heavy.csv", rng.standard_cauchy((800, 1)))
    rc = main(["diagnose", "--data", heavy, "--order", "4", "--B", "200"])
    assert rc == 0
    assert json.loads(capsys.readouterr().out)["decide_infinite_moment"] is True


def test_simulate_smoke(tmp_path, capsys):
    out_csv = str(tmp_path / "table.csv")
    rc = main(["simulate", "--m", "25", "--horizon", "100",
               "--alternative", "location", "--k-star", "10",
               "--reps", "4", "--cv-reps", "150", "--kernels", "h2",
               "--schemes", "d1", "--out", out_csv])
    assert rc == 0
    text = capsys.readouterr().out
    assert "h2" in text
    header = open(out_csv).readline()
    assert "rejection_rate" in header


def test_config_file_defaults(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"reps": 150, "grid_n": 128}))
    const = _write(tmp_path, "c.csv", np.ones((30, 2)))
    rc = main(["--config", str(cfg), "critval", "--training", const])
    assert rc == 0
    out = json.loads(capsys.readouterr().out)
    assert out["reps"] == 150 and out["grid_n"] == 128


def test_unreadable_file_is_exit_1(capsys):
    rc = main(["retro", "--data", "/nonexistent/x.csv"])
    assert rc == 1
    assert "error" in capsys.readouterr().err
