"""A small RMSE comparison at desk scale: a few alphas, one sample size,
k = 300 replications per cell.

Run: python demos/desk_rmse.py
"""
from qcvstable import evaluation

cfg = evaluation.MonteCarloConfig(k=300, sample_sizes=(500,), alphas=(1.2, 1.5, 1.8, 2.0),
                                  methods=("n1", "n2", "mch", "reg", "m1", "m2"))
report = evaluation.run_rmse_experiment(cfg)
alphas, methods, mat = report.matrix(500)
print("alpha  " + "  ".join(f"{m:>6}" for m in methods))
for a, row in zip(alphas, mat):
    best = row.argmin()
    cells = [f"{v:6.3f}{'*' if j == best else ' '}" for j, v in enumerate(row)]
    print(f"{a:5.1f}  " + " ".join(cells))
print("* smallest RMSE in the row")
