import json
import os
import re

import numpy as np
import pytest

from nndensity import bench, cli, density
from nndensity import generators as G
from nndensity import solvers as S
from nndensity.core import Instance, Tour
from nndensity.tsplib_io import dump_json, write_tour


def small_cfg(tmp_path, **kw):
    base = dict(generator=G.RueConfig(15), count=6, master_seed=3, solver=S.SolveConfig(restarts=2), out_dir=tmp_path)
    base.update(kw)
    return bench.ExperimentConfig(**base)


def test_pipeline_writes_reports(tmp_path):
    res = bench.run_pipeline(small_cfg(tmp_path))
    assert {p.name for p in tmp_path.iterdir()} >= {"instances.csv", "summary.json", "rho_hist.csv"}
    csv_text = (tmp_path / "instances.csv").read_text()
    assert csv_text.splitlines()[0] == ",".join(bench.CSV_COLUMNS)
    summary = json.loads((tmp_path / "summary.json").read_text())
    for key in ("family", "n", "count", "rho_mean", "rho_sd", "mean_len", "defect_rate", "config", "master_seed"):
        assert key in summary
    assert summary["count"] == 6 and summary["completed"] == 6
    assert res.rows[0].name == "rue_n15_000000"


def test_summary_recomputes_from_csv(tmp_path):
    bench.run_pipeline(small_cfg(tmp_path))
    rows = bench.rows_from_csv((tmp_path / "instances.csv").read_text())
    again = bench.summarize_rows(rows, "rue", 15, density.DEFECT_THRESHOLD)
    summary = json.loads((tmp_path / "summary.json").read_text())
    for key, value in again.items():
        assert summary[key] == value


def test_pipeline_byte_identical_across_jobs(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    bench.run_pipeline(small_cfg(a, jobs=1))
    bench.run_pipeline(small_cfg(b, jobs=3))
    for f in a.iterdir():
        assert f.read_bytes() == (b / f.name).read_bytes()


def test_pipeline_records_failures(tmp_path):
    res = bench.run_pipeline(small_cfg(tmp_path, generator=G.RueConfig(30), count=2,
                                       solver=S.SolveConfig(algorithm="exact")))
    assert all(not r.ok for r in res.rows)
    assert res.summary["completed"] == 0 and len(res.summary["incomplete"]) == 2


def _write_batch(tmp_path, family_cfg, count, tour_fn):
    idir, tdir = tmp_path / "inst", tmp_path / "tours"
    idir.mkdir()
    tdir.mkdir()
    insts = G.gen_batch(family_cfg, count, 0)
    for inst in insts:
        (idir / f"{inst.name}.json").write_text(dump_json(inst))
        (tdir / f"{inst.name}.tour").write_text(write_tour(tour_fn(inst)))
    return idir, tdir, insts


def test_evaluate_identical_tours(tmp_path):
    idir, tdir, _ = _write_batch(tmp_path, G.RueConfig(20), 5, lambda i: S.local_search_tour(i))
    rep = bench.evaluate_external_tours(idir, tdir, tdir)
    assert rep["defect_rate"] == 0 and rep["scored"] == 5


def test_evaluate_nn_tours_are_defective(tmp_path):
    idir, tdir, insts = _write_batch(tmp_path, G.RueConfig(50), 20, lambda i: S.nn_tour(i))
    rdir = tmp_path / "refs"
    rdir.mkdir()
    for inst in insts:
        (rdir / f"{inst.name}.tour").write_text(write_tour(S.local_search_tour(inst, S.SolveConfig(restarts=5))))
    rep = bench.evaluate_external_tours(idir, tdir, rdir)
    assert rep["defect_rate"] > 0.5
    assert len(rep["by_rho"]) == 10


def test_nn_worse_on_counterexample_than_rue():
    def mean_gap(cfg):
        gaps = []
        for inst in G.gen_batch(cfg, 10, 1):
            gaps.append(S.nn_tour(inst).length / S.local_search_tour(inst, S.SolveConfig(restarts=3)).length - 1)
        return np.mean(gaps)

    assert mean_gap(G.ParallelConfig(50)) > mean_gap(G.RueConfig(50))


def test_evaluate_missing_tour_is_row_error(tmp_path):
    idir, tdir, insts = _write_batch(tmp_path, G.RueConfig(10), 3, lambda i: S.nn_tour(i))
    (tdir / f"{insts[1].name}.tour").unlink()
    rep = bench.evaluate_external_tours(idir, tdir)
    assert rep["scored"] == 2
    assert rep["rows"][1]["status"].startswith("error")


def test_render_triangle():
    tri = Instance("t", [[0, 0], [1, 0], [0, 1]])
    svg = bench.render_overlay(tri, [0, 1, 2])
    assert svg.startswith("<svg") and svg.count("<circle") == 3
    assert 'class="tour" data-edges="3"' in svg and 'class="nn-uncovered" data-edges="0"' in svg
    assert svg == bench.render_overlay(tri, [0, 1, 2])


def test_render_counterexample_and_typical():
    inst = G.generate(G.ParallelConfig(50, rotate=False), 0)
    svg = bench.render_overlay(inst, S.comb_tour(50))
    assert 'class="nn-uncovered" data-edges="24"' in svg
    rue = G.gen_rue(50, 0)
    svg = bench.render_overlay(rue, S.local_search_tour(rue))
    count = int(re.search(r'nn-uncovered" data-edges="(\d+)"', svg).group(1))
    assert count < 0.15 * 50


def test_calibrate_k_picks_closest():
    rep = bench.calibrate_k(20, [0.05, 0.2], 4, 0, target=0.75, solver=S.SolveConfig(restarts=1, max_no_improve=2))
    assert [r["k"] for r in rep["table"]] == [0.05, 0.2]
    best = min(rep["table"], key=lambda r: abs(r["rho_mean"] - 0.75))
    assert rep["best_k"] == best["k"]


# command line


def run(argv, capsys):
    code = cli.main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_cli_lower_bound(capsys):
    code, out, _ = run(["analytic", "lower-bound", "--beta", "0.7124"], capsys)
    assert code == 0 and out.strip() == "0.6005"


def test_cli_gen_writes_files(tmp_path, capsys):
    code, _, _ = run(["gen", "--family", "rue", "--n", "20", "--count", "10", "--seed", "1", "--out", str(tmp_path / "d")], capsys)
    assert code == 0
    assert len(list((tmp_path / "d").glob("*.json"))) == 10


def test_cli_density_mismatch(tmp_path, capsys):
    d, t = tmp_path / "d", tmp_path / "t"
    run(["gen", "--family", "rue", "--n", "8", "--count", "3", "--seed", "1", "--out", str(d)], capsys)
    run(["solve", "--instances", str(d), "--algo", "exact", "--out", str(t)], capsys)
    code, out, _ = run(["density", "--instances", str(d), "--tours", str(t)], capsys)
    assert code == 0 and len(out.splitlines()) == 4
    (t / "rue_n8_000002.tour").unlink()
    code, _, err = run(["density", "--instances", str(d), "--tours", str(t)], capsys)
    assert code != 0
    line = json.loads(err.strip().splitlines()[-1])
    assert "rue_n8_000002" in line["error"]


def test_cli_unknown_flag_exits_2(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["gen", "--bogus"])
    assert exc.value.code == 2


def test_cli_seed_precedence(tmp_path, monkeypatch):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"seed": 7}))
    assert cli.resolve_seed(None, None, 7) == 7
    assert cli.resolve_seed(None, "5", 7) == 5
    assert cli.resolve_seed(3, "5", 7) == 3
    assert cli.resolve_seed(None, None, None) == 0
    monkeypatch.setenv(cli.SEED_ENV, "5")
    args = cli.build_parser().parse_args(["gen", "--config", str(cfg)])
    cli._apply_config(args)
    assert args.seed == 5
    monkeypatch.delenv(cli.SEED_ENV)
    args = cli.build_parser().parse_args(["gen", "--config", str(cfg)])
    cli._apply_config(args)
    assert args.seed == 7


def test_cli_config_fills_options(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"family": "rue", "n": 6, "count": 2, "out": str(tmp_path / "o")}))
    code, _, _ = run(["gen", "--config", str(cfg)], capsys)
    assert code == 0 and len(list((tmp_path / "o").glob("*.json"))) == 2


def test_cli_stats_deterministic(tmp_path, capsys):
    outs = []
    for jobs in ("1", "2"):
        out = tmp_path / jobs
        code, _, _ = run(["stats", "--family", "rue", "--n", "12", "--count", "4", "--seed", "9", "--restarts", "2",
                          "--out", str(out), "--jobs", jobs], capsys)
        assert code == 0
        outs.append({p.name: p.read_bytes() for p in out.iterdir()})
    assert outs[0] == outs[1]


def test_cli_tsplib_and_render(data_dir, tmp_path, capsys):
    code, out, _ = run(["tsplib", str(data_dir / "berlin52.tsp"), "--tour", str(data_dir / "berlin52.opt.tour")], capsys)
    rep = json.loads(out)
    assert code == 0 and rep["length"] == 7542
    svg = tmp_path / "b.svg"
    code, _, _ = run(["render", "--instance", str(data_dir / "berlin52.tsp"), "--tour",
                      str(data_dir / "berlin52.opt.tour"), "--out", str(svg)], capsys)
    assert code == 0 and svg.read_text().startswith("<svg")


def test_cli_eval_and_calibrate(tmp_path, capsys):
    idir, tdir, _ = _write_batch(tmp_path, G.RueConfig(12), 3, lambda i: S.nn_tour(i))
    code, out, _ = run(["eval", "--instances", str(idir), "--tours", str(tdir)], capsys)
    assert code == 0 and json.loads(out)["defect_rate"] == 0
    code, out, _ = run(["calibrate", "--n", "15", "--count", "2", "--k", "0.1", "--restarts", "1"], capsys)
    assert code == 0 and json.loads(out)["best_k"] == 0.1


def test_cli_analytic_values(capsys):
    code, out, _ = run(["analytic", "e-rk", "--n", "100", "--k", "1", "--asymptotic"], capsys)
    assert float(out) == pytest.approx(0.05)
    code, out, _ = run(["analytic", "pdf", "--n", "10", "--r", "0.1", "0.9"], capsys)
    assert out.splitlines()[1].endswith(",0.0")
