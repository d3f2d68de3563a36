import csv
import json

import pytest

from rpsgmm.cli import main
from rpsgmm.data import load_dataset


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    spec = d / "spec.json"
    spec.write_text(json.dumps({"n_per_class": 5, "noise": 1.0, "seed": 0}))
    assert main(["synth", "--spec", str(spec), "--out", str(d / "data.csv")]) == 0
    return d


FAST = ["--components", "3", "--n-init", "2", "--max-iter", "60"]


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_synth_output(workdir):
    ds = load_dataset(workdir / "data.csv")
    assert len(ds) == 15 and ds.channels == ("hv_anom", "p_water")


def test_grid_search_and_evaluate(workdir):
    out = workdir / "grid"
    rc = main(["--seed", "0", "grid-search", "--data", str(workdir / "data.csv"),
               "--range", "2:4", "--out", str(out)] + FAST)
    assert rc == 0
    rows = read_csv(out / "grid.csv")
    assert len(rows) == 9
    summary = json.loads((out / "summary.json").read_text())
    tau, d = summary["best"]["tau"], summary["best"]["d"]
    assert summary["best_accuracy"] == max(float(r["accuracy"]) for r in rows if r["accuracy"])

    bundle = workdir / "best.bundle"
    assert main(["--seed", "0", "train", "--data", str(workdir / "data.csv"), "--tau", str(tau),
                 "--dim", str(d), "--out", str(bundle)] + FAST) == 0
    assert main(["evaluate", "--bundle", str(bundle), "--data", str(workdir / "data.csv"),
                 "--out", str(workdir / "eval.json")]) == 0
    report = json.loads((workdir / "eval.json").read_text())
    assert report["accuracy"] == summary["best_accuracy"]
    assert report["accuracy"] >= 0.95


def test_grid_search_deterministic(workdir):
    outs = []
    for i in range(2):
        out = workdir / f"det{i}"
        assert main(["--seed", "3", "grid-search", "--data", str(workdir / "data.csv"),
                     "--range", "2:3", "--out", str(out)] + FAST) == 0
        rows = read_csv(out / "grid.csv")
        outs.append([{k: v for k, v in r.items() if k != "seconds"} for r in rows])
    assert outs[0] == outs[1]


def test_seed_env_fallback(workdir, monkeypatch):
    def bundle_text(name, argv):
        path = workdir / name
        assert main(argv + ["train", "--data", str(workdir / "data.csv"), "--tau", "2", "--dim", "2",
                            "--out", str(path)] + FAST) == 0
        return path.read_text()

    monkeypatch.setenv("RPSGMM_SEED", "11")
    from_env = bundle_text("env.bundle", [])
    monkeypatch.delenv("RPSGMM_SEED")
    assert from_env == bundle_text("flag.bundle", ["--seed", "11"])
    assert from_env != bundle_text("default.bundle", [])


def test_classify_and_plot_data(workdir):
    bundle = workdir / "b.bundle"
    data = str(workdir / "data.csv")
    assert main(["train", "--data", data, "--tau", "3", "--dim", "2", "--out", str(bundle)] + FAST) == 0
    assert main(["classify", "--bundle", str(bundle), "--data", data,
                 "--out", str(workdir / "pred.csv")]) == 0
    rows = read_csv(workdir / "pred.csv")
    assert len(rows) == 15
    assert set(rows[0]) == {"series_id", "label", "predicted",
                            "loglik_refreeze", "loglik_drain", "loglik_buried"}
    assert main(["plot-data", "--bundle", str(bundle), "--data", data, "--series", "drain-001",
                 "--out", str(workdir / "plot.csv")]) == 0
    rows = read_csv(workdir / "plot.csv")
    variables = {r["variable"] for r in rows}
    assert variables == {"hv_anom", "p_water", "loglik_cum:refreeze",
                         "loglik_cum:drain", "loglik_cum:buried"}
    cum = [r for r in rows if r["variable"] == "loglik_cum:drain"]
    assert len(cum) == 245 - 3 and cum[0]["day"] == "3"


def test_unknown_representative(workdir, capsys):
    rc = main(["grid-search", "--data", str(workdir / "data.csv"), "--reps",
               "drain=missing-lake,refreeze=refreeze-000", "--range", "2:2",
               "--out", str(workdir / "x")])
    assert rc == 2
    assert "missing-lake" in capsys.readouterr().err


def test_usage_errors(capsys):
    assert main([]) == 1
    assert main(["grid-search", "--data", "x.csv", "--range", "5:2", "--out", "o"]) == 1
    assert main(["train", "--data", "x.csv", "--tau", "two", "--dim", "2", "--out", "o"]) == 1


def test_missing_file_is_data_error(tmp_path):
    assert main(["evaluate", "--bundle", str(tmp_path / "nope"), "--data", "x",
                 "--out", str(tmp_path / "o")]) == 2


def test_corrupt_bundle(workdir, tmp_path):
    bundle = workdir / "c.bundle"
    data = str(workdir / "data.csv")
    assert main(["train", "--data", data, "--tau", "2", "--dim", "2", "--out", str(bundle)] + FAST) == 0
    text = bundle.read_text()
    i = text.index("covariances") + 20
    bad = tmp_path / "bad.bundle"
    bad.write_text(text[:i] + ("7" if text[i] != "7" else "8") + text[i + 1:])
    assert main(["classify", "--bundle", str(bad), "--data", data, "--out", str(tmp_path / "p")]) == 2


def test_preprocess(tmp_path):
    raw = tmp_path / "raw.csv"
    lines = ["series_id,day,channel,value,label"]
    for day in range(0, 245, 6):
        lines += [f"L1,{day},hv_lake,{-20 - (day % 30) / 10}",
                  f"L1,{day},hv_background,-15,refreeze",
                  f"L1,{day},n_water,{day % 50}",
                  f"L1,{day},n_total,50"]
    raw.write_text("\n".join(lines) + "\n")
    out = tmp_path / "daily.csv"
    assert main(["preprocess", "--raw", str(raw), "--out", str(out)]) == 0
    ds = load_dataset(out)
    s = ds["L1"]
    assert s.label == "refreeze" and len(s.timestamps) == 245
    assert (s.channel("p_water") >= 0).all() and (s.channel("p_water") <= 100).all()


def test_numerical_failure_exit_code(workdir):
    # 2 embedded points per class cannot carry 10 components
    rc = main(["grid-search", "--data", str(workdir / "data.csv"), "--range", "121:122",
               "--out", str(workdir / "fail")])
    assert rc == 3
