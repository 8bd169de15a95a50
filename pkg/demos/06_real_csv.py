"""Loading and normalizing a CSV table, then cross-validating a private run.

Pass a path to any numeric CSV with a header row (target in the last column);
without an argument a small table is generated first.
"""
import sys
import tempfile

import numpy as np

from dpswarm import BehaviorSpec, RunConfig, fork_stream, kfold, load_csv, normalize, run
from dpswarm.objective import rmse

if len(sys.argv) > 1:
    path = sys.argv[1]
else:
    rng = np.random.default_rng(6)
    X = rng.uniform([0, 10, -5], [40, 90, 5], (400, 3))
    y = 450 - 2.0 * X[:, 0] + 0.3 * X[:, 1] + rng.normal(0, 3, 400)
    path = tempfile.NamedTemporaryFile(suffix=".csv", delete=False).name
    np.savetxt(path, np.column_stack([X, y]), delimiter=",", header="temp,humidity,pressure,output", comments="")

table = load_csv(path)
data, fscales, tscale = normalize(table)
print(f"{table.n} rows, {table.d} features; target range {tscale.lo:.2f}..{tscale.hi:.2f}")

plan = kfold(data.n, 5, 1, fork_stream(6, "data"))
for fold in range(5):
    train, test = plan.split(0, fold)
    res = run(RunConfig(epsilon=1.0, iterations=40, population_size=30, behavior=BehaviorSpec("GWO"), seed=fold),
              data.subset(train))
    held = data.subset(test)
    pred = held.xs @ res.gbest
    print(f"fold {fold}: rmse {rmse(pred, held.ys):.4f} normalized, "
          f"{rmse(tscale.inverse(pred), tscale.inverse(held.ys)):.3f} in target units")
