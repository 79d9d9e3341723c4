"""
The full phase diagram
======================

Sample the simplex p_x + p_z + p_g = 1 on a coarse grid and print the mean TEE
as a triangle. The topological phase sits near the p_g = 1 corner.
"""

import csv
import tempfile
from pathlib import Path

from tricode.experiment import ExperimentSpec, cmd_phase_diagram

spec = ExperimentSpec(sizes=((8, 8),), line="simplex", resolution=10, trajectory_count=10, n_snapshots=2)
path = cmd_phase_diagram(spec, out=Path(tempfile.mkdtemp()))

tee = {}
with open(path) as fh:
    for row in csv.DictReader(fh):
        if row["observable"] == "tee":
            tee[round(float(row["p_x"]) * 10), round(float(row["p_g"]) * 10)] = float(row["mean"])

# rows: p_g from 1 down to 0; columns: p_x from 0; shown as -S_T
for g in range(10, -1, -1):
    cells = [f"{0.0 - tee[x, g]:5.2f}" for x in range(0, 11 - g)]
    print(f"p_g={g / 10:.1f} " + " ".join(cells))
