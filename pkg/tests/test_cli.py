import json

import numpy as np
import pytest

from dagsurv.cli import EXIT_DATA, EXIT_USAGE, main
from dagsurv.metrics import CtdReport
from dagsurv.synthgen import read_dataset

QUICK = {"epochs": 2, "encoder_layers": 1, "encoder_hidden": 8, "decoder_layers": 1,
         "decoder_hidden": 8, "latent_samples": 2, "batch_size": 256}
SMALL_GEN = {"n_samples": 400, "num_covariates": 4}


def _write_json(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


@pytest.fixture(scope="module")
def generated(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    gen_cfg = _write_json(root / "gen.json", SMALL_GEN)
    assert main(["generate", "--config", gen_cfg, "--seed", "4", "--out-dir", str(root / "g")]) == 0
    train_cfg = _write_json(root / "train.json", QUICK)
    assert main(["train", "--data", str(root / "g/dataset.csv"),
                 "--adjacency", str(root / "g/adjacency.csv"), "--config", train_cfg,
                 "--out-dir", str(root / "t")]) == 0
    return root


def test_generate_outputs_and_manifest(generated):
    ds = read_dataset(generated / "g/dataset.csv")
    assert len(ds) == 400 and ds.num_covariates == 4
    assert int((ds.events == 0).sum()) == 200
    manifest = json.loads((generated / "g/manifest.json").read_text())
    assert manifest["command"] == "generate"
    assert set(manifest["seeds"]) == {"seed", "dag", "generate", "censor"}
    assert str(generated / "gen.json") in manifest["inputs"]
    assert len(manifest["inputs"][str(generated / "gen.json")]) == 64
    assert manifest["duration_seconds"] >= 0


def test_generate_is_byte_identical(generated, tmp_path):
    gen_cfg = str(generated / "gen.json")
    main(["generate", "--config", gen_cfg, "--seed", "4", "--out-dir", str(tmp_path / "a")])
    for name in ("dataset.csv", "adjacency.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (generated / "g" / name).read_bytes()


def test_generate_with_given_adjacency(generated, tmp_path):
    adj = str(generated / "g/adjacency.csv")
    assert main(["generate", "--adjacency", adj, "--config", str(generated / "gen.json"),
                 "--out-dir", str(tmp_path)]) == 0
    assert (tmp_path / "adjacency.csv").read_bytes() == (generated / "g/adjacency.csv").read_bytes()


def test_train_outputs(generated):
    hist = (generated / "t/history.csv").read_text().splitlines()
    assert hist[0] == "epoch,train_loss,val_ctd" and len(hist) == 3
    manifest = json.loads((generated / "t/manifest.json").read_text())
    assert manifest["config"]["split_sizes"] == [256, 64, 80]


def test_train_is_byte_identical(generated, tmp_path):
    main(["train", "--data", str(generated / "g/dataset.csv"),
          "--adjacency", str(generated / "g/adjacency.csv"),
          "--config", str(generated / "train.json"), "--out-dir", str(tmp_path)])
    for name in ("model.txt", "history.csv"):
        assert (tmp_path / name).read_bytes() == (generated / "t" / name).read_bytes()


def test_zero_dag_flag(generated, tmp_path):
    assert main(["train", "--data", str(generated / "g/dataset.csv"),
                 "--adjacency", str(generated / "g/adjacency.csv"), "--zero-dag",
                 "--config", str(generated / "train.json"), "--out-dir", str(tmp_path)]) == 0
    text = (tmp_path / "model.txt").read_text()
    meta = json.loads(text.splitlines()[1].split(" ", 1)[1])
    assert meta["zero_dag"] is True
    assert not np.any(meta["adjacency"])


def test_evaluate_report_round_trips(generated, tmp_path):
    args = ["evaluate", "--model", str(generated / "t/model.txt"),
            "--data", str(generated / "g/dataset.csv"), "--b", "50"]
    assert main(args + ["--out-dir", str(tmp_path / "a")]) == 0
    assert main(args + ["--out-dir", str(tmp_path / "b")]) == 0
    text = (tmp_path / "a/ctd_report.csv").read_text()
    assert text == (tmp_path / "b/ctd_report.csv").read_text()
    rep = CtdReport.from_csv(text)
    assert rep.b == 50 and 0 <= rep.point_estimate <= 1
    assert rep.notch_low <= rep.bootstrap_median <= rep.notch_high


def test_predict_survival_curves(generated, tmp_path):
    assert main(["predict", "--model", str(generated / "t/model.txt"),
                 "--data", str(generated / "g/dataset.csv"), "--subset", "all",
                 "--latent-samples", "2", "--out-dir", str(tmp_path)]) == 0
    rows = (tmp_path / "survival.csv").read_text().splitlines()
    assert len(rows) == 401
    s = np.array([[float(v) for v in r.split(",")] for r in rows[1:]])
    assert np.all(np.diff(s, axis=1) <= 1e-12)
    assert np.all((s >= -1e-12) & (s <= 1))


def test_subset_requires_training_data(generated, tmp_path):
    other = tmp_path / "other.csv"
    other.write_text((generated / "g/dataset.csv").read_text().replace(",1\n", ",0\n", 1))
    code = main(["evaluate", "--model", str(generated / "t/model.txt"), "--data", str(other),
                 "--out-dir", str(tmp_path / "o")])
    assert code == EXIT_USAGE


def test_propcheck_copy_chain_and_random(tmp_path):
    net = tmp_path / "copy.net"
    net.write_text("node A 2\nnode B 2 parents A\ncpt A : 0.5 0.5\n"
                   "cpt B 0 : 1 0\ncpt B 1 : 0 1\n")
    assert main(["propcheck", "--net", str(net), "--out-dir", str(tmp_path / "a")]) == 0
    row = (tmp_path / "a/gaps.csv").read_text().splitlines()[1].split(",")
    assert float(row[4]) == 1.0
    assert main(["propcheck", "--random", "100", "--out-dir", str(tmp_path / "b")]) == 0
    assert main(["propcheck", "--random", "100", "--out-dir", str(tmp_path / "c")]) == 0
    rows = (tmp_path / "b/gaps.csv").read_text()
    assert rows == (tmp_path / "c/gaps.csv").read_text()
    assert all(r.endswith(",1") for r in rows.splitlines()[1:])


def test_exit_codes(generated, tmp_path, capsys):
    with pytest.raises(SystemExit) as exc:
        main(["nonsense"])
    assert exc.value.code == EXIT_USAGE
    bad = tmp_path / "bad.csv"
    bad.write_text("x1,time,event\n1,2,1\n1,3,5\n")
    code = main(["train", "--data", str(bad), "--adjacency", str(generated / "g/adjacency.csv"),
                 "--out-dir", str(tmp_path / "x")])
    assert code == EXIT_DATA
    assert "bad.csv:3" in capsys.readouterr().err
    cfg = _write_json(tmp_path / "c.json", {"nope": 1})
    code = main(["generate", "--config", cfg, "--out-dir", str(tmp_path / "y")])
    assert code == EXIT_DATA
    assert "nope" in capsys.readouterr().err
