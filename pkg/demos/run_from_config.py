"""
Running an experiment from a config file
========================================

Every experiment can be driven by a YAML document; flags given to the
command line win over the document.  The output directory holds
summary.json, one CSV per statistic and a manifest of SHA-256 hashes.
"""

from pathlib import Path
import tempfile

from setsum import cli

out = Path(tempfile.mkdtemp())
config = out / "counterexample.yaml"
config.write_text("p: 1\nd: 1\nr: 2..4\nreps: 1000\nseed: 7\n")

status = cli.main(["counterexample", "--config", str(config), "--dry-run"])
status = cli.main(["counterexample", "--config", str(config), "--reps", "800",
                   "--out", str(out / "run")])
print("exit status", status)
print((out / "run" / "counterexample.csv").read_text())
print((out / "run" / "manifest.txt").read_text())
