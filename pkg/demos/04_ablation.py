"""Cognition-only and social-only PSO next to the full update, with and without privacy."""
from dpswarm import BehaviorSpec, RunConfig, fork_stream, run, synth_linear

data = synth_linear(500, 4, [0.1, -0.2, 0.15, 0.05], 0.05, fork_stream(3, "data"))
for kind in ("PSO", "CPSO", "SPSO"):
    row = []
    for eps in (0.1, 1.0, 10.0):
        res = run(RunConfig(epsilon=eps, iterations=50, population_size=30, behavior=BehaviorSpec(kind), seed=3), data)
        row.append(f"eps={eps:<5} {res.gbest_fitness:.5f}")
    base = run(RunConfig(iterations=50, population_size=30, behavior=BehaviorSpec(kind), seed=3, private=False), data)
    print(f"{kind:5s} non-private {base.gbest_fitness:.5f} | " + " | ".join(row))
