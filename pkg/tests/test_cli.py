import csv
import json

import numpy as np
import pytest

import splithc as s
from splithc.cli import main


@pytest.fixture
def instance_files(tmp_path):
    gpath = tmp_path / "inst.graph"
    tpath = tmp_path / "inst.tree.json"
    rc = main(["generate", "--n", "32", "--seed", "7",
               "--out-graph", str(gpath), "--out-tree", str(tpath)])
    assert rc == 0
    return gpath, tpath


def test_generate_deterministic(tmp_path):
    paths = []
    for tag in ("a", "b"):
        g = tmp_path / f"{tag}.graph"
        t = tmp_path / f"{tag}.tree"
        assert main(["generate", "--n", "16", "--seed", "3",
                     "--out-graph", str(g), "--out-tree", str(t)]) == 0
        paths.append((g.read_bytes(), t.read_bytes()))
    assert paths[0] == paths[1]


def test_generate_rejects_n1(tmp_path):
    rc = main(["generate", "--n", "1", "--out-graph", str(tmp_path / "g"),
               "--out-tree", str(tmp_path / "t")])
    assert rc == 2


def test_generate_caterpillar_depth(tmp_path):
    t = tmp_path / "t.json"
    assert main(["generate", "--n", "32", "--shape", "caterpillar",
                 "--out-graph", str(tmp_path / "g"), "--out-tree", str(t)]) == 0
    tree = s.HCTree.from_json(t.read_text())
    assert int(tree.depth.max()) == 31


def test_build_mw_and_csv(instance_files, tmp_path):
    gpath, tpath = instance_files
    out_csv = tmp_path / "rows.csv"
    rc = main(["build", "--graph", str(gpath), "--tree", str(tpath),
               "--algo", "hc-mw", "--p", "1.0", "--preset", "desk",
               "--seed", "1..3", "--out-csv", str(out_csv)])
    assert rc == 0
    rows = list(csv.DictReader(out_csv.open()))
    assert len(rows) == 3
    assert all(r["consistency"] == "pass" for r in rows)
    assert [r["seed"] for r in rows] == ["1", "2", "3"]


def test_build_tau_guard(instance_files):
    gpath, tpath = instance_files
    rc = main(["build", "--graph", str(gpath), "--tree", str(tpath),
               "--algo", "hc-das", "--tau", "32", "--exact-limit", "20"])
    assert rc == 2


def test_build_das_writes_tree(instance_files, tmp_path):
    gpath, tpath = instance_files
    out_tree = tmp_path / "out.tree.json"
    rc = main(["build", "--graph", str(gpath), "--tree", str(tpath),
               "--algo", "hc-das", "--p", "1.0", "--tau", "12",
               "--exact-counters", "--out-tree", str(out_tree)])
    assert rc == 0
    tree = s.HCTree.from_json(out_tree.read_text())
    assert tree.n_leaves == 32


def test_stream_check_offline(instance_files, tmp_path):
    gpath, tpath = instance_files
    g = s.read_graph(gpath)
    stream_file = tmp_path / "updates.txt"
    with stream_file.open("w") as f:
        for u, v, w in g.edges():
            f.write(f"+ {u} {v} {w!r}\n")
        f.write(f"+ 0 1 2.0\n- 0 1 2.0\n")
    rc = main(["stream", "--tree", str(tpath), "--graph", str(gpath),
               "--stream", str(stream_file), "--tau", "12", "--p", "0.9",
               "--check-offline", "--out-tree", str(tmp_path / "st.json")])
    assert rc == 0


def test_stream_empty(instance_files, tmp_path):
    _, tpath = instance_files
    rc = main(["stream", "--tree", str(tpath), "--tau", "12", "--p", "1.0",
               "--out-tree", str(tmp_path / "st.json")])
    assert rc == 0
    tree = s.HCTree.from_json((tmp_path / "st.json").read_text())
    assert tree.n_leaves == 32


def test_eval_planted_ratio_one(instance_files, capsys):
    gpath, tpath = instance_files
    rc = main(["eval", "--graph", str(gpath), "--tree", str(tpath),
               "--planted", str(tpath)])
    assert rc == 0
    out = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
    assert out["cost_ratio_vs_planted"] == pytest.approx(1.0)
    assert out["rev_ratio_vs_planted"] == pytest.approx(1.0)


def test_bench_writes_rows(tmp_path):
    out = tmp_path / "bench.csv"
    rc = main(["bench", "--n", "7", "--seed", "0,1", "--algos", "hc-mw",
               "recursive-sparsest", "--p-sweep", "1.0", "--exact-counters",
               "--out", str(out)])
    assert rc == 0
    rows = list(csv.DictReader(out.open()))
    assert len(rows) == 4  # 2 seeds x (oracle algo + oblivious baseline)
    base = [r for r in rows if r["algo"] == "recursive-sparsest"]
    assert base and all(r["queries"] == "0" for r in base)
    # n <= 10: ratios are against the true brute-force optimum
    assert all(float(r["ratio"]) >= 0.999 for r in rows if r["algo"] == "recursive-sparsest")


def test_build_alt_tree_adversary(instance_files, tmp_path):
    gpath, tpath = instance_files
    alt = tmp_path / "alt.tree.json"
    alt.write_text(s.sample_tree_shape(32, 999).to_json())
    rc = main(["build", "--graph", str(gpath), "--tree", str(tpath),
               "--algo", "hc-mw", "--p", "0.8", "--adversary", "alt_tree",
               "--alt-tree", str(alt), "--seed", "4"])
    assert rc in (0, 3)  # build may legitimately abort under this adversary
    # missing file is a configuration error
    rc = main(["build", "--graph", str(gpath), "--tree", str(tpath),
               "--algo", "hc-mw", "--adversary", "alt_tree", "--seed", "4"])
    assert rc == 2


def test_build_worker_threads_deterministic(instance_files, tmp_path, monkeypatch):
    gpath, tpath = instance_files
    outs = []
    for workers in ("1", "3"):
        monkeypatch.setenv("SPLITHC_WORKERS", workers)
        out_csv = tmp_path / f"w{workers}.csv"
        rc = main(["build", "--graph", str(gpath), "--tree", str(tpath),
                   "--algo", "hc-mw", "--p", "0.95", "--seed", "1..4",
                   "--out-csv", str(out_csv)])
        assert rc == 0
        rows = list(csv.DictReader(out_csv.open()))
        for r in rows:
            r.pop("wall_ms")
        outs.append(rows)
    assert outs[0] == outs[1]
