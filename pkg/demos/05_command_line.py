"""
Using the command-line interface
================================

Everything above is also reachable from the ``stochsearch`` command. This
script writes a small dataset, runs ``stochsearch fit`` on it and reads
back the JSON report and the per-candidate table.
"""

import csv
import json
import tempfile
from pathlib import Path

import numpy as np

from stochsearch.cli import main

workdir = Path(tempfile.mkdtemp())
rng = np.random.default_rng(5)
x = rng.uniform(0, 10, 150)
y = 3.0 + 0.5 * x + rng.gumbel(size=150)
np.savetxt(workdir / "data.csv", np.column_stack([x, y]), delimiter=",", header="x,y", comments="")

report_path = workdir / "fit.json"
status = main(["fit", "--input", str(workdir / "data.csv"), "--response", "y", "--add-intercept",
               "--B", "100", "--seed", "7", "--output", str(report_path)])
print("exit status", status)

report = json.loads(report_path.read_text())
print("columns:", report["columns"])
print("OLS:", np.round(report["ols"]["theta"], 3))
print("search estimate:", np.round(report["theta_hat"], 3), "from candidate", report["best_index"])

with open(f"{report_path}.candidates.csv") as fh:
    rows = list(csv.DictReader(fh))
print(f"{len(rows)} candidates; the table has columns {list(rows[0])}")
