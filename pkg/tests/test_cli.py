import csv
import json

import pytest

from arnn_botnet.cli import main
from arnn_botnet.synth import SynthConfig, synthesize_botnet_trace
from arnn_botnet.traffic import write_packets


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    assert main(["--out", str(root / "syn"), "synth", "--seed", "3", "--nodes", "6", "--slots", "40",
                 "--initial", "0", "--onset-slot", "10", "--attack-rate-factor", "4",
                 "--susceptible-fraction", "0.4"]) == 0
    assert main(["--out", str(root / "ing"), "ingest", "--packets", str(root / "syn" / "packets.csv")]) == 0
    return root


def _tree(path):
    return {p.relative_to(path).as_posix(): p.read_bytes() for p in sorted(path.rglob("*")) if p.is_file()}


def test_ingest_outputs(workspace):
    rows = list(csv.reader((workspace / "ing" / "features.csv").open()))
    assert rows[0] == ["slot", "node", "A", "K", "G"]
    assert len(rows) == 1 + 40 * 6
    m = json.loads((workspace / "ing" / "manifest.json").read_text())
    assert m["command"] == "ingest" and m["params"]["tau"] == 10.0
    assert len(m["inputs"]["packets"]["sha256"]) == 64


def test_train_offline_and_manifest_rerun(workspace, tmp_path):
    feats = str(workspace / "ing" / "features.csv")
    out = tmp_path / "off"
    assert main(["--out", str(out), "train-offline", "--features", feats, "--epochs", "3"]) == 0
    for name in ("model.ckpt", "cost_trace.csv", "decisions.csv", "manifest.json", "report/per_node.csv"):
        assert (out / name).exists()
    assert len((out / "cost_trace.csv").read_text().splitlines()) == 4
    assert main(["--from-manifest", str(out / "manifest.json"), "--out", str(tmp_path / "again")]) == 0
    assert _tree(out) == _tree(tmp_path / "again")


def test_train_online_log_order(workspace, tmp_path):
    out = tmp_path / "on"
    assert main(["--out", str(out), "train-online", "--features", str(workspace / "ing" / "features.csv"),
                 "--epochs", "1"]) == 0
    rows = list(csv.reader((out / "online_log.csv").open()))[1:]
    trains = [int(s) for s, e in rows if e == "train"]
    assert trains == [6, 12, 18, 24, 30, 36]
    for k, (slot, event) in enumerate(rows):
        if event == "train":
            assert rows[k - 1] == [slot, "decide"]


def test_compare_and_sweep_and_report(workspace, tmp_path):
    feats = str(workspace / "ing" / "features.csv")
    out = tmp_path / "cmp"
    assert main(["--out", str(out), "compare", "--features", feats, "--epochs", "2", "--mlp-epochs", "5"]) == 0
    models = {r["model"] for r in csv.DictReader((out / "comparison" / "comparison.csv").open())}
    assert models == {"ARNN", "MLP"}
    assert main(["--out", str(tmp_path / "sw"), "sweep-gamma", "--features", feats,
                 "--checkpoint", str(out / "arnn" / "model.ckpt"), "--gammas", "0.5,1,2"]) == 0
    assert len((tmp_path / "sw" / "gamma_sweep.csv").read_text().splitlines()) == 4
    assert main(["--out", str(tmp_path / "rep"), "report", "--decisions", str(out / "mlp" / "decisions.csv")]) == 0
    assert (tmp_path / "rep" / "per_node.csv").read_bytes() == (out / "mlp" / "report" / "per_node.csv").read_bytes()


def test_sweep_rejects_mlp_checkpoint(workspace, tmp_path):
    feats = str(workspace / "ing" / "features.csv")
    assert main(["--out", str(tmp_path / "m"), "train-offline", "--model", "mlp", "--features", feats,
                 "--mlp-epochs", "2"]) == 0
    assert main(["--out", str(tmp_path / "s"), "sweep-gamma", "--features", feats,
                 "--checkpoint", str(tmp_path / "m" / "model.ckpt")]) == 3


def test_exit_codes(tmp_path):
    empty = tmp_path / "empty.csv"
    empty.write_text("")
    assert main(["--out", str(tmp_path / "x"), "ingest", "--packets", str(empty)]) == 3
    bad = tmp_path / "bad.csv"
    bad.write_text("t,src,dst,label\n1,A,B,7\n")
    assert main(["--out", str(tmp_path / "x"), "ingest", "--packets", str(bad)]) == 3
    assert main(["--out", str(tmp_path / "x"), "synth", "--seed", "1", "--nodes", "1"]) == 2
    with pytest.raises(SystemExit) as info:
        main(["synth"])
    assert info.value.code == 2


def test_benign_trace_aborts_with_window_error(tmp_path):
    records, _ = synthesize_botnet_trace(SynthConfig(seed=1, n_nodes=4, n_slots=10, initial_compromised=()))
    write_packets(tmp_path / "p.csv", records)
    assert main(["--out", str(tmp_path / "i"), "ingest", "--packets", str(tmp_path / "p.csv")]) == 0
    assert main(["--out", str(tmp_path / "c"), "compare", "--features", str(tmp_path / "i" / "features.csv")]) == 3


def test_numeric_error_exit(workspace, tmp_path, monkeypatch):
    from arnn_botnet import cli
    from arnn_botnet.errors import SingularMatrixError

    def boom(*a, **k):
        raise SingularMatrixError("forced", 0.0)

    monkeypatch.setattr(cli, "offline_arnn", boom)
    assert main(["--out", str(tmp_path / "n"), "train-offline", "--features",
                 str(workspace / "ing" / "features.csv")]) == 4


def test_manifest_digest_mismatch(workspace, tmp_path):
    pk = tmp_path / "p.csv"
    pk.write_bytes((workspace / "syn" / "packets.csv").read_bytes())
    assert main(["--out", str(tmp_path / "i"), "ingest", "--packets", str(pk)]) == 0
    pk.write_text("t,src,dst,label\n")
    assert main(["--from-manifest", str(tmp_path / "i" / "manifest.json")]) == 3
