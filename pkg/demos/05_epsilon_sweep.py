"""A small cross-validated sweep over the privacy budget, written as plot series.

Outputs land in ./sweep_out: results.csv, summary.csv and one TSV per series.
"""
from pathlib import Path

from dpswarm import ExperimentConfig, emit_plot_data, run_experiment, summarize
from dpswarm.experiment import write_summary

out = Path("sweep_out")
out.mkdir(exist_ok=True)
cfg = ExperimentConfig(synthetic=(1000, 4, 0.05), algorithms=("PSO", "GWO", "WOA", "SOA"),
                       epsilons=(0.1, 1.0, 10.0, 100.0), iterations=20, population=20, folds=3, repeats=1,
                       seed=5, results_path=str(out / "results.csv"))
summary = summarize(run_experiment(cfg))
write_summary(summary, out / "summary.csv")
emit_plot_data(summary, out / "plots")
for row in summary.values():
    print(f"{('DP' if row.private else '') + row.algorithm:6s} eps={row.epsilon:<6g} rmse={row.mean_rmse:.4f}")
