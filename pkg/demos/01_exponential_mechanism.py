"""Choosing between a new position and a personal best under differential privacy.

The user scores both candidates by negative mean squared error and samples
one with probability proportional to exp(eps * q / (2 dq)). Small budgets make
the choice close to a coin flip; large budgets make it greedy.
"""
import numpy as np

from dpswarm import fork_stream, exp_mech_select, sensitivity_bound, synth_linear
from dpswarm.objective import score

data = synth_linear(200, 2, [0.3, -0.4], 0.05, fork_stream(0, "data"))
good = np.array([0.3, -0.4])
poor = np.array([-0.5, 0.5])
q0, q1 = score(data, good), score(data, poor)
dq = sensitivity_bound([good, poor], a=1.0)
print(f"score of the good candidate {q0:.4f}, poor candidate {q1:.4f}, sensitivity {dq:.3f}")

rng = fork_stream(0, "mechanism")
for eps in (0.01, 1.0, 10.0, 100.0):
    picks = [exp_mech_select(q0, q1, dq, eps, rng) for _ in range(2000)]
    freq = np.mean([p.chosen_index == 0 for p in picks])
    print(f"eps_m={eps:>6}: P(good)={picks[0].prob_of_index0:.4f}, observed {freq:.4f}")
