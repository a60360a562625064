"""
Agent-based smooth regret matching
==================================

Two populations of 100 agents with positive-Normal initial regrets.  The
population variance of the regrets falls like 1/t^2 and the mean policy
settles on the logit equilibrium.
"""

import numpy as np

from pngdyn import experiments
from pngdyn.abm import RegretInit, SimulationConfig, run_simulation
from pngdyn.game import builtin_game
from pngdyn.qre import distance, enumerate_qre

g = builtin_game("PE")
cfg = SimulationConfig(g, agents_per_population=100, lam=1.0, steps=10_000,
                       init=RegretInit(1.0, 0.1, truncate=True), seed=0, record_every=10)
traj = run_simulation(cfg)

# variance decay, fitted on log-log axes
for i, s in enumerate(experiments.variance_slopes(traj, 10, 1000)):
    print(f"population {i}: fitted slopes {np.round(s, 4)}")

# Var * t^2 is flat once the first update has been made
k = [traj.at(t) for t in (10, 100, 1000)]
print("Var * t^2:", [traj.regret_variance[0][j, 0] * traj.t[j] ** 2 for j in k])

q = enumerate_qre(g, 1.0)[0]
print("terminal mean policies", [np.round(p, 4) for p in traj.final_policies()])
print("QRE                   ", [np.round(p, 4) for p in q.policies])
print("sup distance", distance(traj.final_policies(), q.policies))

# the whole trajectory round-trips through the CSV schema
text = traj.to_csv()
print(text.splitlines()[0])
