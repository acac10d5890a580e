import csv
import io
import json
from pathlib import Path

import pytest

from wgverify.cli import CSV_COLUMNS, main

DATA = Path(__file__).resolve().parent.parent / "data"


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def write_manifest(tmp_path, **overrides):
    m = {"graph": str(DATA / "path3.graph"), "cover": [[1, 3], [2]], "protocol": "adaptive_exact",
         "N": 20, "beta": 0.1, "seed": 5, "trials": 30}
    m.update(overrides)
    p = tmp_path / "m.json"
    p.write_text(json.dumps(m))
    return p


class TestVerify:
    def test_honest_manifest(self, capsys):
        code, out, _ = run(["verify", "--manifest", str(DATA / "honest_adaptive.json"), "--trials", "200"], capsys)
        assert code == 0
        r = rows(out)
        assert list(r[0]) == list(CSV_COLUMNS)
        assert len(r) == 201
        agg = r[-1]
        assert agg["row"] == "aggregate" and float(agg["acceptance_rate"]) == 1.0
        assert all(row["seed"] == "2026" and row["manifest_hash"] == agg["manifest_hash"] for row in r)

    def test_iqp_manifest(self, capsys):
        code, out, _ = run(["verify", "--manifest", str(DATA / "iqp_nonadaptive.json"), "--trials", "5"], capsys)
        assert code == 0 and rows(out)[-1]["row"] == "aggregate"

    def test_json_lines_and_out(self, tmp_path, capsys):
        out = tmp_path / "r.jsonl"
        code, _, _ = run(["verify", "--manifest", str(write_manifest(tmp_path)), "--format", "json-lines",
                          "--out", str(out)], capsys)
        assert code == 0
        lines = [json.loads(x) for x in out.read_text().splitlines()]
        assert len(lines) == 31 and list(lines[0]) == list(CSV_COLUMNS)

    def test_rejections_still_exit_0(self, tmp_path, capsys):
        m = write_manifest(tmp_path, source={"kind": "depolarized", "p": 1.0})
        code, out, _ = run(["verify", "--manifest", str(m)], capsys)
        assert code == 0 and float(rows(out)[-1]["acceptance_rate"]) < 1.0

    def test_env_overrides_and_flag_wins(self, tmp_path, capsys, monkeypatch):
        m = str(write_manifest(tmp_path))
        monkeypatch.setenv("WGV_TRIALS", "4")
        monkeypatch.setenv("WGV_SEED", "99")
        _, out, _ = run(["verify", "--manifest", m], capsys)
        r = rows(out)
        assert len(r) == 5 and r[0]["seed"] == "99"
        _, out, _ = run(["verify", "--manifest", m, "--trials", "2", "--seed", "1"], capsys)
        r = rows(out)
        assert len(r) == 3 and r[0]["seed"] == "1"

    def test_deterministic(self, tmp_path, capsys):
        m = str(write_manifest(tmp_path, source={"kind": "depolarized", "p": 0.1}))
        a = run(["verify", "--manifest", m], capsys)[1]
        b = run(["verify", "--manifest", m], capsys)[1]
        assert a == b

    def test_workers_same_output(self, tmp_path, capsys):
        m = str(write_manifest(tmp_path, source={"kind": "depolarized", "p": 0.2}, trials=40))
        a = run(["verify", "--manifest", m], capsys)[1]
        b = run(["verify", "--manifest", m, "--workers", "2"], capsys)[1]
        assert a == b

    @pytest.mark.parametrize("content", ["{not json", "[]", '{"protocol": "adaptive_exact"}'])
    def test_malformed(self, tmp_path, capsys, content):
        p = tmp_path / "bad.json"
        p.write_text(content)
        code, _, err = run(["verify", "--manifest", str(p)], capsys)
        assert code == 2 and "error" in err

    def test_missing_file(self, capsys):
        assert run(["verify", "--manifest", "/nonexistent.json"], capsys)[0] == 2

    def test_bad_beta(self, tmp_path, capsys):
        code, _, err = run(["verify", "--manifest", str(write_manifest(tmp_path, beta=0.001))], capsys)
        assert code == 2 and "beta" in err

    def test_strict_flag(self, tmp_path, capsys):
        m = write_manifest(tmp_path, protocol="nonadaptive_h", h=2, trials=3)
        code, out, _ = run(["verify", "--manifest", str(m), "--strict-paper-f"], capsys)
        assert code == 0 and len(rows(out)) == 4


class TestGap:
    def test_adaptive(self, capsys):
        code, out, _ = run(["gap", "--graph", str(DATA / "path3.graph"), "--cover", "1,3;2",
                            "--kind", "adaptive"], capsys)
        assert code == 0
        assert "predicted=0.5 " in out and "result: pass" in out

    def test_nonadaptive(self, capsys):
        code, out, _ = run(["gap", "--graph", str(DATA / "path3.graph"), "--kind", "nonadaptive",
                            "--hvec", "4"], capsys)
        assert code == 0 and "predicted=0.125 " in out

    def test_hvec_map(self, capsys):
        code, out, _ = run(["gap", "--graph", str(DATA / "path3.graph"), "--kind", "nonadaptive",
                            "--hvec", "1:2,2:3,3:1"], capsys)
        assert code == 0 and "predicted=0.1666" in out

    def test_discretized(self, capsys):
        code, out, _ = run(["gap", "--graph", str(DATA / "path3.graph"), "--kind", "adaptive_h", "--h", "2"],
                           capsys)
        assert code == 0 and "overlap" in out and "perturbation_norm" in out

    def test_cap(self, tmp_path, capsys):
        g = tmp_path / "big.graph"
        g.write_text("n 11\nedge 1 2 pi/4\n")
        assert run(["gap", "--graph", str(g), "--kind", "adaptive"], capsys)[0] == 3

    def test_bad_cover(self, capsys):
        code = run(["gap", "--graph", str(DATA / "path3.graph"), "--cover", "1,2;3", "--kind", "adaptive"],
                   capsys)[0]
        assert code == 2

    def test_usage_error(self, capsys):
        assert run(["gap"], capsys)[0] == 2


class TestIqpCmd:
    def test_dist_all_zero(self, tmp_path, capsys):
        f = tmp_path / "z.txt"
        f.write_text("n 2\n")
        code, out, _ = run(["iqp", "dist", "--instance", str(f)], capsys)
        assert code == 0 and out.splitlines()[0] == "00 1.0"

    def test_zr(self, tmp_path, capsys):
        f = tmp_path / "v.txt"
        f.write_text("n 1\nv 1 4\n")
        code, out, _ = run(["iqp", "zr", "--instance", str(f)], capsys)
        assert code == 0 and out.startswith("Z_R: 0.0 0.0")

    def test_plan(self, tmp_path, capsys):
        f = tmp_path / "p.txt"
        f.write_text("n 10\n")
        code, out, _ = run(["iqp", "plan", "--instance", str(f), "--epsilon", "0.1", "--beta", "0.05"], capsys)
        assert code == 0 and "N: 3800" in out

    def test_state(self, capsys):
        code, out, _ = run(["iqp", "state", "--instance", str(DATA / "iqp4.txt")], capsys)
        assert code == 0 and len(out.splitlines()) == 16

    def test_bad_instance(self, tmp_path, capsys):
        f = tmp_path / "b.txt"
        f.write_text("n 2\nw 1 2 9\n")
        assert run(["iqp", "dist", "--instance", str(f)], capsys)[0] == 2
