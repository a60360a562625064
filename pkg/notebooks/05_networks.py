"""
Games on a small-world network
==============================

One template game on every edge of a Watts-Strogatz graph.  A larger initial
spread of regrets takes longer to wash out.
"""

from pngdyn import experiments
from pngdyn.game import builtin_game
from pngdyn.network import GraphSpec, assign_payoffs, generate_graph

spec = GraphSpec("watts_strogatz", n=10, k=4, beta=0.3, seed=0)
edges = generate_graph(spec)
g = assign_payoffs(edges, builtin_game("PD"))
print(len(edges), "edges; degrees", [g.degree(i) for i in range(g.n_populations)])

rows, _ = experiments.sweep(builtin_game("PD"), spec, sds=[0.05, 0.1, 0.2], replicates=3, steps=1000)
for sd, t in experiments.mean_homogeneity_times(rows).items():
    print(f"sd={sd:g}: mean homogeneity time {t:g}")
for r in rows[:3]:
    print(r)
