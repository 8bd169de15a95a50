"""The message format between the two parties.

Every request and reply can be pushed through a versioned binary encoding;
a run over the wire is identical to an in-process run. Strict disclosure
swaps fitness values for an index ranking.
"""
import numpy as np

from dpswarm import BehaviorSpec, EvaluationRequest, RunConfig, fork_stream, parse_message, run, serialize_message, synth_linear

req = EvaluationRequest(0, np.array([[0.1, -0.2], [0.5, 0.5]]))
wire = serialize_message(req)
print(f"request of 2 positions in 2 dimensions: {len(wire)} bytes, header {wire[:10].hex()}")
assert parse_message(wire) == req

data = synth_linear(300, 2, [0.3, -0.4], 0.05, fork_stream(2, "data"))
cfg = RunConfig(epsilon=5.0, iterations=30, population_size=20, behavior=BehaviorSpec("GWO"), seed=2)
a = run(cfg, data)
b = run(cfg, data, transport="wire")
print("in-process and wire runs agree:", a.per_iteration_gbest_fitness == b.per_iteration_gbest_fitness)

strict = run(RunConfig(epsilon=5.0, iterations=30, population_size=20, behavior=BehaviorSpec("GWO"), seed=2,
                       strict_disclosure=True), data, transport="wire")
print(f"strict disclosure final mse {strict.gbest_fitness:.5f} (faithful {a.gbest_fitness:.5f})")
