import csv
import json
import os

import pytest

from hlwnet import cli


def run(capsys, *argv):
    assert cli.main(list(argv)) == 0
    return capsys.readouterr().out


@pytest.fixture(scope="module")
def trained(tmp_path_factory):
    out = tmp_path_factory.mktemp("cli")
    data = str(out / "d.bin")
    cli.main(["dataset", "generate", "--users", "3,5", "--batches", "2", "--batch-size", "16",
              "--max-users", "5", "--path", data, "--out", str(out)])
    ck = str(out / "m.ckpt")
    cli.main(["train", "--data", data, "--epochs", "2", "--batch-size", "8", "--lr", "1e-3",
              "--checkpoint", ck, "--out", str(out)])
    return out, data, ck


def test_scenario_dump_lists_aps_then_users(capsys):
    text = run(capsys, "scenario", "dump", "--users", "4", "--seed", "3")
    ap_rows = [l for l in text.splitlines() if l and l[0].isdigit() and ("wifi" in l or "lifi" in l)]
    assert len(ap_rows) == 5
    assert text.splitlines()[0].startswith("# id")


def test_scenario_snr_shape(capsys):
    text = run(capsys, "scenario", "snr", "--users", "6", "--seed", "1")
    rows = [l for l in text.splitlines() if l and not l.startswith("#")]
    assert len(rows) == 5
    assert all(len(r.split()) >= 6 for r in rows)


@pytest.mark.parametrize("method", ["sss", "gt", "fl", "flopt"])
def test_assign_prints_table_and_summary(capsys, method):
    text = run(capsys, "assign", "--users", "8", "--method", method, "--seed", "2")
    lines = text.strip().splitlines()
    assert lines[-1].startswith(f"# method={method} throughput_bps=")
    assert len(lines) == 1 + 8 + 1


def test_assign_oracle_small(capsys):
    text = run(capsys, "assign", "--users", "5", "--method", "oracle")
    assert "# method=oracle" in text


def test_dataset_inspect_and_export(capsys, trained):
    out, data, _ = trained
    info = json.loads(run(capsys, "dataset", "inspect", data))
    assert info["n_samples"] == 32
    assert info["user_counts"] == {"3": 16, "5": 16}
    path = str(out / "d.csv")
    run(capsys, "dataset", "export", data, "--csv", path)
    with open(path) as f:
        assert len(list(csv.reader(f))) > 1


def test_train_writes_checkpoint_and_history(trained):
    out, _, ck = trained
    assert os.path.getsize(ck) > 0
    with open(out / "history.csv") as f:
        assert len(list(csv.DictReader(f))) == 2


def test_eval_and_predict(capsys, trained):
    out, data, ck = trained
    text = run(capsys, "eval", "--data", data, "--checkpoint", ck)
    assert "# checkpoint_epoch=2" in text
    assert {l.split("\t")[0] for l in text.splitlines()[1:-1]} == {"3", "5"}
    text = run(capsys, "predict", "--users", "4", "--checkpoint", ck)
    assert len(text.strip().splitlines()) == 5
    text = run(capsys, "assign", "--users", "4", "--method", "tcnn", "--checkpoint", ck)
    assert "# method=tcnn" in text


def test_predict_without_checkpoint_exits():
    with pytest.raises(SystemExit, match="--checkpoint"):
        cli.main(["predict", "--users", "4"])


def test_predict_too_many_users_exits(trained):
    _, _, ck = trained
    with pytest.raises(SystemExit, match="error"):
        cli.main(["predict", "--users", "9", "--checkpoint", ck])


def test_sweep_writes_outputs(capsys, tmp_path):
    text = run(capsys, "sweep", "--values", "5,10", "--trials", "2", "--method", "sss,gt",
               "--out", str(tmp_path))
    assert text.startswith("8 records")
    assert any(n.startswith("sweep_users") for n in os.listdir(tmp_path))


def test_sweep_tcnn_without_checkpoint_exits(tmp_path):
    with pytest.raises(SystemExit, match="checkpoint"):
        cli.main(["sweep", "--values", "5", "--trials", "1", "--method", "tcnn", "--out", str(tmp_path)])


def test_cluster_command(capsys, tmp_path):
    text = run(capsys, "cluster", "--values", "0,2", "--trials", "2", "--users", "20",
               "--method", "sss", "--out", str(tmp_path))
    assert "clusters" in text.splitlines()[0].split("\t")
    assert {"cluster_records.csv", "cluster_summary.csv", "cluster_manifest.txt"} <= set(os.listdir(tmp_path))


def test_bench_with_tcnn_and_no_checkpoint(capsys, tmp_path):
    text = run(capsys, "bench", "--users-list", "5,10", "--reps", "2", "--warmup", "1",
               "--method", "sss,tcnn", "--out", str(tmp_path))
    assert len(text.strip().splitlines()) == 1 + 4
    assert os.path.exists(tmp_path / "bench.csv")


def test_oracle_validate(capsys, tmp_path):
    text = run(capsys, "oracle-validate", "--instances", "5", "--max-users", "4", "--out", str(tmp_path))
    assert text.splitlines()[0] == "instances: 5"
    assert os.path.exists(tmp_path / "oracle_validation.csv")


def test_config_file_overrides_network(capsys, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"network": {"rates": {"mean_rate": 50e6}}}))
    a = run(capsys, "scenario", "dump", "--users", "3", "--seed", "4")
    b = run(capsys, "scenario", "dump", "--users", "3", "--seed", "4", "--config", str(cfg))
    assert a != b


def test_missing_dataset_exits(tmp_path):
    with pytest.raises(SystemExit, match="error"):
        cli.main(["dataset", "inspect", str(tmp_path / "nope.bin")])
