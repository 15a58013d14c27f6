"""
The command-line pipeline
=========================

The same steps driven through ``hiercop``: cluster the columns, fit the
groups, report tail coefficients. Everything lands in a scratch directory.
"""

# %%
import csv
import tempfile
from pathlib import Path

import numpy as np

from hiercop import make_rng
from hiercop.cli import main
from hiercop.mle import sample_copula_data

work = Path(tempfile.mkdtemp())
rng = make_rng(5)
X = np.column_stack([sample_copula_data(0.7, 4, 2, 150, rng), sample_copula_data(0.4, None, 3, 150, rng)])
with open(work / "data.csv", "w", newline="") as fh:
    w = csv.writer(fh)
    w.writerow(["a", "b", "c", "d", "e"])
    w.writerows(X.tolist())

(work / "fit.toml").write_text("""
[mcmc]
chains = 2
scans = 3000
burn_in = 500
delta_gamma = 0.1
delta_xi = 0.5

[[groups]]
name = "ab"
family = "t"
columns = ["a", "b"]

[[groups]]
name = "cde"
family = "gaussian"
columns = ["c", "d", "e"]
""")

# %%
main(["cluster", str(work / "data.csv"), "--max-size", "3", "--out", str(work / "clusters")])
print((work / "clusters" / "partition.csv").read_text())

# %%
main(["fit", str(work / "data.csv"), "--config", str(work / "fit.toml"), "--seed", "9", "--out", str(work / "fit")])
main(["tail-report", str(work / "fit" / "chains"), "--out", str(work / "tail")])
print(sorted(p.name for p in (work / "fit").iterdir()))
