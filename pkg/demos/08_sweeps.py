"""
Sweeps
======

Vary one parameter over several seeds and summarize each point by its mean
and quartiles, as the ``sweep`` and ``report`` commands do.
"""

# %%
import tempfile
from dataclasses import replace
from pathlib import Path

from cvnetsim.cli import format_report, run_sweep
from cvnetsim.output import aggregate_columns, read_csv_dicts, write_csv
from cvnetsim.presets import install_preset

base = replace(install_preset("fig6-20cv-35mph"), duration=10.0)
runs, points = run_sweep(base, "cv_count", ["20", "40"], n_seeds=3)

out = Path(tempfile.mkdtemp())
write_csv(out / "aggregate.csv", aggregate_columns(), points)
header, rows = read_csv_dicts(out / "aggregate.csv")
print(format_report(header, rows))

# %%
# The same from a shell:
#   cvnetsim sweep --config fig6-20cv-35mph --axis cv_count --values 20,40 --seeds 5 --out sweep-cv
#   cvnetsim report sweep-cv/aggregate.csv
