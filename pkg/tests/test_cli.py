import os
import subprocess
import sys

import numpy as np
import pytest

from ranklab.cli import main, read_sample
from ranklab.errors import InputFormatError, QuadratureError
from ranklab.pbt import BREAK_REASONS


def run(*args):
    return main([str(a) for a in args])


@pytest.fixture
def small_toml(tmp_path):
    path = tmp_path / "exp.toml"
    path.write_text(
        'n = 300\nc = 0.85\nseed = 17\nreplications = 250\n'
        '[model]\nkind = "generalized_random_graph"\n'
        '[w_plus_law]\nkind = "pareto"\nshape = 1.5\nscale = 2.0\n'
        '[w_minus_law]\nkind = "pareto"\nshape = 2.5\nscale = 5.0\n')
    return path


def test_gen_graph_and_pagerank(tmp_path, small_toml):
    g = tmp_path / "g.txt"
    assert run("gen-graph", "--config", small_toml, "--out", g) == 0
    n, m = map(int, g.read_text().splitlines()[0].split())
    assert n == 300 and m == len(g.read_text().splitlines()) - 1
    r = tmp_path / "r.csv"
    assert run("pagerank", "--config", small_toml, "--out", r) == 0
    lines = r.read_text().splitlines()
    assert lines[0] == "vertex,rank" and len(lines) == 301


def test_rank_replications_deterministic_and_resumable(tmp_path, small_toml):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run("rank-replications", "--config", small_toml, "--out", a) == 0
    assert run("rank-replications", "--config", small_toml, "--out", b) == 0
    assert a.read_bytes() == b.read_bytes()
    lines = a.read_text().splitlines()
    assert lines[0].startswith("# seed=17 n=300") and lines[1] == "replication,rank"
    assert len(lines) == 252
    # cut mid-line inside the second chunk, then resume
    text = a.read_text()
    cut = text.index("\n150,") + 5
    b.write_text(text[:cut])
    assert run("rank-replications", "--config", small_toml, "--out", b, "--resume") == 0
    assert b.read_bytes() == a.read_bytes()


def test_resume_refuses_other_settings(tmp_path, small_toml):
    a = tmp_path / "a.csv"
    assert run("rank-replications", "--config", small_toml, "--reps", 5, "--out", a) == 0
    assert run("rank-replications", "--config", small_toml, "--reps", 5, "--seed", 3,
               "--out", a, "--resume") == 2


def test_thread_count_does_not_change_output(tmp_path, small_toml, monkeypatch):
    outs = []
    for threads in ("1", "2"):
        monkeypatch.setenv("RANKLAB_THREADS", threads)
        out = tmp_path / f"r{threads}.csv"
        assert run("rank-replications", "--config", small_toml, "--out", out) == 0
        c = tmp_path / f"c{threads}.csv"
        assert run("coupling", "--config", small_toml, "--reps", 120, "--out", c) == 0
        outs.append((out.read_bytes(), c.read_bytes()))
    assert outs[0] == outs[1]


def test_bad_thread_count(tmp_path, small_toml, monkeypatch):
    monkeypatch.setenv("RANKLAB_THREADS", "zero")
    assert run("rank-replications", "--config", small_toml, "--out", tmp_path / "x") == 2


def test_empty_weight_config_gives_q(tmp_path):
    cfg = tmp_path / "e.toml"
    cfg.write_text('n = 10\nc = 0.5\nreplications = 1\n[model]\nkind = "chung_lu"\n'
                   '[w_plus_law]\nkind = "constant"\nvalue = 0.0\n'
                   '[w_minus_law]\nkind = "constant"\nvalue = 0.0\n')
    out = tmp_path / "r.csv"
    assert run("rank-replications", "--config", cfg, "--out", out) == 0
    assert np.array_equal(read_sample(out), [0.5])


def test_popdyn_and_compare(tmp_path):
    p1, p2 = tmp_path / "p1.csv", tmp_path / "p2.csv"
    assert run("popdyn", "--preset", "fig2b", "--k", 4, "--m", 2000, "--seed", 1, "--out", p1) == 0
    assert run("popdyn", "--preset", "fig2b", "--k", 4, "--m", 2000, "--seed", 1, "--out", p2) == 0
    assert p1.read_bytes() == p2.read_bytes()
    assert p1.read_text().startswith("# k=4 m=2000 seed=1\n")
    cmp_ = tmp_path / "cmp.csv"
    assert run("compare", p1, p2, "--out", cmp_) == 0
    rows = dict(line.split(",") for line in cmp_.read_text().splitlines()[1:])
    assert float(rows["ks"]) == 0.0 and float(rows["w1"]) == 0.0
    assert rows["n_a"] == "2000"


def test_malformed_csv(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("value\n1.0\n2.0\nthree\n")
    with pytest.raises(InputFormatError, match=":4:"):
        read_sample(bad)
    assert run("compare", bad, bad, "--out", tmp_path / "o.csv") == 4
    assert run("compare", tmp_path / "missing.csv", bad, "--out", tmp_path / "o.csv") == 4


def test_coupling_output(tmp_path):
    out = tmp_path / "c.csv"
    assert run("coupling", "--preset", "fig2b", "--n", 1000, "--reps", 30, "--out", out) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "seed,tau,horizon,reason" and len(lines) == 31
    for line in lines[1:]:
        seed, tau, horizon, reason = line.split(",")
        assert horizon == "0" and reason in BREAK_REASONS
        assert (tau == "survived") == (reason == "none")


def test_single_graph_tail(tmp_path):
    out, ranks = tmp_path / "t.csv", tmp_path / "r.csv"
    assert run("single-graph-tail", "--preset", "fig4b", "--n", 2000, "--out", out,
               "--ranks-out", ranks) == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("# all n ranks come from one graph")
    assert lines[1] == "log10x,log10p"
    assert len(read_sample(ranks)) == 2000


def test_presets_listing(tmp_path):
    out = tmp_path / "p.csv"
    assert run("presets", "--out", out) == 0
    rows = out.read_text().splitlines()
    assert len(rows) == 9 and rows[1].startswith("fig2a,1.5,2.5,2.0,5.0,0.85,3.48837")


def test_config_errors(tmp_path, small_toml):
    out = tmp_path / "x"
    assert run("gen-graph", "--config", small_toml, "--preset", "fig2a", "--out", out) == 2
    assert run("gen-graph", "--out", out) == 2
    bad = tmp_path / "bad.toml"
    bad.write_text('n = 1\nc = 0.5\n[model]\nkind = "chung_lu"\n')
    assert run("gen-graph", "--config", bad, "--out", out) == 2


def test_infinite_mean_is_config_error(tmp_path):
    cfg = tmp_path / "heavy.toml"
    cfg.write_text('n = 50\nc = 0.5\n[model]\nkind = "chung_lu"\n'
                   '[w_plus_law]\nkind = "pareto"\nshape = 1.5\nscale = 1.0\n'
                   '[w_minus_law]\nkind = "pareto"\nshape = 0.9\nscale = 1.0\n')
    assert run("popdyn", "--config", cfg, "--out", tmp_path / "p.csv") == 2


def test_numeric_failure_exit_code(tmp_path, monkeypatch):
    import ranklab.cli as cli

    def boom(args):
        raise QuadratureError("did not converge", 1e-3)

    monkeypatch.setattr(cli, "cmd_presets", boom)
    assert run("presets") == 3


def test_console_script_runs(tmp_path):
    out = tmp_path / "p.csv"
    res = subprocess.run([sys.executable, "-m", "ranklab.cli", "presets", "--out", str(out)],
                         capture_output=True, env={**os.environ, "RANKLAB_THREADS": "1"})
    assert res.returncode == 0 and out.exists()
