"""A single private optimization between a data holder and an outsourcer.

The outsourcer only ever sees positions and personal bests; the dataset stays
inside the user endpoint. The ledger shows every selection charged against
the total budget.
"""
from dpswarm import BehaviorSpec, RunConfig, fork_stream, run, synth_linear

data = synth_linear(500, 3, [0.2, -0.3, 0.1], 0.05, fork_stream(1, "data"))

for kind in ("PSO", "GWO", "WOA", "SOA"):
    for private in (True, False):
        cfg = RunConfig(epsilon=1.0, iterations=40, population_size=30, behavior=BehaviorSpec(kind),
                        seed=1, private=private)
        res = run(cfg, data)
        tag = ("DP" if private else "") + kind
        spent = f"spent {res.ledger.consumed:.6f} over {len(res.ledger)} selections" if private else "no budget"
        print(f"{tag:6s} final mse {res.gbest_fitness:.5f}  w={res.gbest.round(3)}  {spent}")
