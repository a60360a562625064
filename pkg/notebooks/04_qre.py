"""
Logit equilibria
================

Multistart Newton enumeration at lambda = 1 and the approach to the mixed
Nash equilibrium as lambda grows.
"""

import numpy as np

from pngdyn.game import BUILTIN_GAMES, builtin_game
from pngdyn.qre import enumerate_qre, qre_listing_csv, solve_qre

for name in BUILTIN_GAMES:
    sols = enumerate_qre(builtin_game(name), 1.0, n_starts=200)
    print(f"{name}: {len(sols)} QRE")
    for s in sols:
        print("   ", [np.round(p, 4) for p in s.policies], f"residual {s.residual:.1e}")

pe = builtin_game("PE")
for lam in (1.0, 10.0, 100.0):
    s = solve_qre(pe, lam, start=[np.full(2, 0.5)] * 2, method="newton")
    print(f"PE lambda={lam:g}:", [np.round(p, 4) for p in s.policies])
print("mixed Nash: (3/7, 4/7) / (2/7, 5/7) =", np.round([3 / 7, 4 / 7, 2 / 7, 5 / 7], 4))

print(qre_listing_csv(enumerate_qre(builtin_game("BoS"), 1.0, 200), builtin_game("BoS")))
