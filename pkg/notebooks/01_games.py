"""
Builtin games and payoff algebra
================================

The six two-population games, their class certificates and the averaged
payoff vector seen by a population.
"""

import numpy as np

from pngdyn import game

# every builtin is a NetworkGame on a single edge
for name in game.BUILTIN_GAMES:
    g = game.builtin_game(name)
    print(name, game.builtin_title(name))
    print("  A[0,1] =", g.payoff(0, 1).tolist())
    print("  A[1,0] =", g.payoff(1, 0).tolist())

# Weighted zero-sum certificates.  AMP needs unequal weights; a least-squares
# search recovers them from the payoff tables alone.
amp = game.builtin_game("AMP")
w = game.fit_zero_sum_weights(amp)
print("AMP weights", w, "residual", game.verify_weighted_zero_sum(amp, w))
print("PD zero-sum residual with unit weights", game.verify_weighted_zero_sum(game.builtin_game("PD"), (1, 1)))

# Potential certificates for the coordination-type games
for name in game.POTENTIAL_GAMES:
    spec = game.builtin_class_spec(name)
    print(name, "potential residual", game.verify_weighted_potential(game.builtin_game(name), spec.weights,
                                                                      spec.potential))

# Payoff vector of the PD row population against a pure cooperator
pd = game.builtin_game("PD")
print("u =", game.mean_payoff_vector(0, {1: np.array([1.0, 0.0])}, pd))
