"""
Mean and variance model against the agents
==========================================

The moment model is started from the ensemble moments recorded after the
first update and integrated with RK4 in log-time.  Early steps of the
agent recursion are large in log-time, so the two curves separate at
small t and rejoin afterwards.
"""

import numpy as np

from pngdyn import experiments
from pngdyn.abm import RegretInit, softmax_policy
from pngdyn.game import builtin_game
from pngdyn.ode import MomentState, integrate

for name in ("PD", "PE"):
    res = experiments.compare(builtin_game(name), lam=1.0, agents=1000, steps=10_000,
                              init=RegretInit(1.0, 0.1, True), qre_starts=20)
    late = experiments.policy_gap(res.abm, res.ode, t_min=100)[0]
    print(f"{name}: sup gap {res.gap:.4f} at t={res.gap_time:g}; gap over t>=100 {late:.2e}; "
          f"terminal QRE residual {res.terminal_residual:.2e}")

# variance closed form: sigma^2 (t0/t)^2
sol = integrate("variance", np.array([9.0]), 1.0, 3.0, 200)
print("Var at t=3 from 9 at t=1:", sol.variance[0][-1, 0])

# The limit flow in regrets and the smooth Q-learning flow in policies
# describe the same motion.
g = builtin_game("BoS")
R0 = [np.array([0.2, -0.3]), np.array([0.5, 0.1])]
lim = integrate("limit_regret", R0, 0.0, 6.0, 6000, g, 1.0)
sql = integrate("sql", [softmax_policy(r, 1.0) for r in R0], 0.0, 6.0, 6000, g, 1.0)
print("max |softmax(R) - x|:", max(np.max(np.abs(a - b)) for a, b in zip(lim.policy, sql.policy)))

# the closure variants differ only in the correction term
st = MomentState.isotropic(g, 0.5, 0.3)
for closure in ("hessian", "squared_gradient", None):
    s = integrate("moments", st, 1.0, 10.0, 500, g, 1.0, closure)
    print(f"closure={closure}: policy at t=10 {np.round(s.policy[0][-1], 5)}")
