from __future__ import annotations

import csv
import io

import numpy as np
import pytest

from rebalance import harness
from rebalance.cli import main
from rebalance.data_io import bundled_path, load_dataset, partition_classes

HABERMAN = str(bundled_path("haberman"))


def _strip_time(text: str) -> list[list[str]]:
    rows = list(csv.reader(io.StringIO(text)))
    col = rows[0].index("time")
    return [r[:col] + r[col + 1:] for r in rows]


@pytest.mark.parametrize(
    "name, expected",
    [("vehicle3", ("846", "634", "212", "2.99")), ("yeast-0-5-6-7-9_vs_4", ("528", "477", "51", "9.35"))],
)
def test_inspect(capsys, name, expected):
    assert main(["inspect", str(bundled_path(name))]) == 0
    out = capsys.readouterr().out
    for label, val in zip(("#Samples", "Maj", "Min", "Imbalance ratio"), expected):
        assert f"{label}: {val}" in out


def test_inspect_malformed(tmp_path):
    bad = tmp_path / "bad.dat"
    bad.write_text("@relation r\n@attribute x real\n@attribute c {a, b}\n@data\n1, a\n2\n")
    with pytest.raises(SystemExit) as info:
        main(["inspect", str(bad)])
    assert info.value.code != 0
    assert "line 6" in str(info.value.code)


def test_eval_deterministic_except_time(tmp_path, capsys):
    outs = []
    for i in range(2):
        path = tmp_path / f"r{i}.csv"
        main(["eval", "--method", "bagging", "--data", HABERMAN, "--seed", "5", "--n-members", "5", "--out", str(path)])
        outs.append(_strip_time(path.read_text()))
    assert outs[0] == outs[1]
    assert outs[0][0] == [c for c in harness.RESULT_HEADER if c != "time"]
    assert "kappa=" in capsys.readouterr().out


def test_eval_separable_set_scores_one(tmp_path, capsys):
    rng = np.random.default_rng(0)
    lines = ["@relation sep", "@attribute x real", "@attribute c {p, n}", "@data"]
    for v in rng.random(60):
        lines.append(f"{float(v)!r}, {'n' if v > 0.8 else 'p'}")
    path = tmp_path / "sep.dat"
    path.write_text("\n".join(lines) + "\n")
    main(["eval", "--method", "dt", "--data", str(path), "--folds", "5"])
    assert "kappa=1.00" in capsys.readouterr().out


def test_eval_dt_on_extreme_imbalance(capsys):
    main(["eval", "--method", "dt", "--data", str(bundled_path("poker-8_vs_6"))])
    out = capsys.readouterr().out
    row = dict(zip(harness.RESULT_HEADER, out.strip().splitlines()[-1].split(",")))
    assert abs(float(row["kappa"])) < 0.1
    assert abs(float(row["ber"]) - 0.5) < 0.05


def test_sweep_grid(tmp_path):
    path = tmp_path / "sweep.csv"
    main(["sweep", "--data", HABERMAN, "--trials", "1", "--folds", "2", "--out", str(path)])
    rows = list(csv.DictReader(path.open()))
    assert len(rows) == 20
    assert float(rows[0]["rate"]) == 1.0 and float(rows[0]["integrity"]) == 1.0


def test_seed_precedence(tmp_path, monkeypatch):
    from rebalance.cli import build_config, build_parser

    cfg = tmp_path / "run.ini"
    cfg.write_text("[rebalance]\nseed = 11\npopulation = 7\n")
    parse = build_parser().parse_args
    monkeypatch.setenv("REBALANCE_SEED", "42")
    assert build_config(parse(["eval", "--method", "dt", "--data", "x"])).seed == 42
    args = parse(["eval", "--method", "dt", "--data", "x", "--config", str(cfg)])
    conf = build_config(args)
    assert conf.seed == 11 and conf.swarm.population == 7
    args = parse(["eval", "--method", "dt", "--data", "x", "--config", str(cfg), "--seed", "3", "--pop", "9"])
    conf = build_config(args)
    assert conf.seed == 3 and conf.swarm.population == 9
    monkeypatch.delenv("REBALANCE_SEED")
    assert build_config(parse(["eval", "--method", "dt", "--data", "x"])).seed == 0


def test_unknown_config_key(tmp_path):
    from rebalance.cli import read_config

    cfg = tmp_path / "run.ini"
    cfg.write_text("[rebalance]\ncolour = red\n")
    with pytest.raises(SystemExit):
        read_config(str(cfg))


def test_unknown_method():
    with pytest.raises(harness.UnknownMethod):
        harness.RunConfig(method="svm")
    with pytest.raises(SystemExit):
        main(["eval", "--method", "svm", "--data", HABERMAN])


def test_rebalance_writes_subset(tmp_path, capsys):
    out = tmp_path / "sub.dat"
    main(["rebalance", "--method", "bpsois_dt", "--data", str(bundled_path("glass-0-1-4-6_vs_2")),
          "--out", str(out), "--pop", "4", "--iter", "2"])
    sub = load_dataset(out)
    part = partition_classes(sub)
    assert part.n_minority == 17 and 1 <= part.n_majority <= 188
    assert "kept" in capsys.readouterr().out


def test_experiment_tables(tmp_path):
    main(["experiment", "--which", "2", "--datasets", "glass-0-1-4-6_vs_2", "--seeds", "0,1",
          "--methods", "dt,rusboost,bpsois_dt,psois_dt", "--pop", "3", "--iter", "1", "--folds", "3",
          "--n-members", "3", "--n-iterations", "3", "--out-dir", str(tmp_path)])
    results = list(csv.DictReader((tmp_path / "results_exp2.csv").open()))
    assert len(results) == 8 and all(r["error"] == "" for r in results)
    mean = list(csv.DictReader((tmp_path / "summary_mean.csv").open()))
    std = list(csv.DictReader((tmp_path / "summary_std.csv").open()))
    assert [r["method"] for r in mean] == ["dt", "rusboost", "bpsois_dt", "psois_dt"]
    # one dataset: the mean row is the seed average, the std is zero
    dt_rows = [r for r in results if r["method"] == "dt"]
    assert float(mean[0]["kappa"]) == pytest.approx(np.mean([float(r["kappa"]) for r in dt_rows]), abs=1e-9)
    assert float(std[0]["kappa"]) == 0.0
    arch = list(csv.DictReader((tmp_path / "archive_glass-0-1-4-6_vs_2_bpsois_dt.csv").open()))
    assert arch and set(arch[0]) == set(harness.ARCHIVE_HEADER)
    assert (tmp_path / "archive_glass-0-1-4-6_vs_2_psois_dt.csv").exists()
    assert (tmp_path / "trace_glass-0-1-4-6_vs_2_bpsois_dt.csv").exists()


def test_summary_recomputation():
    from rebalance.metrics import MetricReport

    def cell(ds, seed, k):
        vals = [k] + [0.5] * 11
        return harness.CellResult(ds, "dt", seed, MetricReport(*vals, elapsed_seconds=1.0))

    cells = [cell("a", 0, 0.2), cell("a", 1, 0.4), cell("b", 0, 0.9)]
    mean, std = harness.summarize(cells)
    assert float(mean[0][2]) == pytest.approx((0.3 + 0.9) / 2, abs=1e-12)
    assert float(std[0][2]) == pytest.approx(np.std([0.3, 0.9], ddof=1), abs=1e-12)


def test_failed_cell_is_recorded(tmp_path, monkeypatch):
    def boom(config):
        def train(ds, seed):
            raise RuntimeError("learner exploded")
        return train

    monkeypatch.setattr(harness, "trainer", boom)
    ds = load_dataset(HABERMAN)
    cells = harness.run_experiment(1, [ds], harness.RunConfig(folds=2), tmp_path, methods=("dt",))
    assert cells[0].report is None and "exploded" in cells[0].error
    row = list(csv.DictReader((tmp_path / "results_exp1.csv").open()))[0]
    assert "exploded" in row["error"] and row["kappa"] == ""
