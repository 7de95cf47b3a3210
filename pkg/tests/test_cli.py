import csv
import hashlib
import json
import subprocess
import sys

import pytest
import yaml

from setsum import __version__, cli
from setsum import diagnostics as dg


def test_version(capsys):
    assert cli.main(["version"]) == 0
    assert capsys.readouterr().out.strip() == __version__


def test_dry_run_prints_every_default(tmp_path, capsys):
    out = tmp_path / "x"
    assert cli.main(["fclt", "--dry-run", "--threads", "2", "--out", str(out)]) == 0
    plan = json.loads(capsys.readouterr().out)
    assert set(cli.DEFAULTS["fclt"]) | set(cli.COMMON) | {"experiment"} == set(plan)
    assert plan["threads"] == 2 and plan["law"] == "gaussian:1"
    assert not out.exists()


def test_plan_round_trips_through_config(tmp_path, capsys):
    cli.main(["lemma2", "--dry-run", "--reps", "77", "--ladder", "8,16", "--out", str(tmp_path)])
    echoed = capsys.readouterr().out
    cfg = tmp_path / "plan.yaml"
    cfg.write_text(yaml.safe_dump(json.loads(echoed)))
    cli.main(["lemma2", "--dry-run", "--config", str(cfg)])
    assert json.loads(capsys.readouterr().out) == json.loads(echoed)


def test_flags_override_config(tmp_path):
    cfg = tmp_path / "c.yaml"
    cfg.write_text("reps: 10\nseed: 3\n")
    plan = cli.resolve("counterexample", yaml.safe_load(cfg.read_text()), {"reps": 20})
    assert plan["reps"] == 20 and plan["seed"] == 3


@pytest.mark.parametrize("doc,key", [("lawz: gaussian:1\n", "lawz"), ("reps: -3\n", "reps"),
                                     ("law: cauchy\n", "law"), ("experiment: entropy\n", "entropy"),
                                     ("variance: sample\n", "variance")])
def test_malformed_config_names_key(tmp_path, capsys, doc, key):
    cfg = tmp_path / "bad.yaml"
    cfg.write_text(doc)
    assert cli.main(["fclt", "--config", str(cfg)]) == 1
    assert key in capsys.readouterr().err


def test_usage_errors():
    assert cli.main(["fclt", "--bogus", "1"]) == 1
    assert cli.main([]) == 1
    assert cli.main(["nosuch"]) == 1


def test_resource_cap_reports_product(tmp_path, capsys):
    assert cli.main(["fclt", "--n", "1000", "--reps", "2000", "--out", str(tmp_path)]) == 1
    assert "2000000000" in capsys.readouterr().err


def _files(path):
    return {p.name: p.read_bytes() for p in path.iterdir() if p.name != "runtime.json"}


def test_counterexample_schema_and_manifest(tmp_path):
    out = tmp_path / "ce"
    status = cli.main(["counterexample", "--p", "1", "--d", "1", "--r", "2..3", "--reps", "300",
                       "--seed", "7", "--out", str(out)])
    assert status in (0, 2)
    rows = list(csv.reader((out / "counterexample.csv").open()))
    assert rows[0][:9] == ["r", "n_r", "beta_r", "k_r", "eps_r", "f_r", "oracle", "se", "verdict"]
    assert [r[0] for r in rows[1:]] == ["2", "3"]
    # full round-trip decimal formatting
    assert float(rows[1][6]) == dg.binomial_upper_tail(16, 1 / 32, 1)
    summary = json.loads((out / "summary.json").read_text())
    assert summary["seed"] == 7 and summary["plan"]["r"] == "2..3"
    assert summary["reports"][0]["verdict"] in ("pass", "fail")
    assert "runtime" not in (out / "summary.json").read_text()
    for line in (out / "manifest.txt").read_text().splitlines():
        digest, name = line.split("  ")
        assert hashlib.sha256((out / name).read_bytes()).hexdigest() == digest
    assert "total" in json.loads((out / "runtime.json").read_text())


def test_outputs_identical_across_threads_and_reruns(tmp_path):
    args = ["fclt", "--reps", "200", "--n", "8", "--seed", "11"]
    for tag, threads in (("a", "1"), ("b", "3"), ("c", "1")):
        assert cli.main(args + ["--threads", threads, "--out", str(tmp_path / tag)]) in (0, 2)
    a, b, c = (_files(tmp_path / t) for t in "abc")
    assert a == b == c


def test_env_var_sets_output_root(tmp_path, monkeypatch):
    monkeypatch.setenv(cli.OUTPUT_ENV, str(tmp_path))
    plan = cli.resolve("orlicz")
    assert plan["output"] == str(tmp_path / "orlicz")
    assert cli.main(["orlicz"]) == 0
    assert (tmp_path / "orlicz" / "orlicz.csv").exists()


def test_exit_status_from_verdicts(tmp_path, monkeypatch):
    assert cli.main(["orlicz", "--rtol", "1e-16", "--out", str(tmp_path / "f")]) == 2

    def runner(plan, art):
        return [dg.TestReport("noisy", 0.0, 0.0, 0.1, se=0.2)], {}

    monkeypatch.setitem(cli.RUNNERS, "orlicz", runner)
    assert cli.main(["orlicz", "--out", str(tmp_path / "i")]) == 3


def test_entropy_artifacts(tmp_path):
    out = tmp_path / "ent"
    # tail terms from r = 8 are still above 1e-3, so the series check fails here
    assert cli.main(["entropy", "--R", "12", "--grid-m", "16", "--eps", "0.5,0.3",
                     "--tail-from", "8", "--out", str(out)]) == 2
    names = {p.name for p in out.iterdir()}
    assert {"series.csv", "bounds.csv", "cover.csv", "profile.csv", "reports.csv"} <= names


def test_module_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "setsum", "orlicz", "--out", str(tmp_path)],
                         capture_output=True, text=True)
    assert res.returncode == 0
    assert "PASS" in res.stdout
