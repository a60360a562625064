"""Regret-based learning dynamics in population network games.

Agent-based smooth regret matching, the moment (mean + variance) model of
its population dynamics, and logit quantal response equilibria.
"""

from .abm import (AgentEnsemble, RegretInit, SimulationConfig, Trajectory, average_trajectories,
                  homogeneity_time, init_regrets, instantaneous_regret, run_replicates, run_simulation,
                  simulation_step, softmax_policy, update_cumulative_regret)
from .errors import (ConfigError, DivergenceError, DomainError, GenerationError, IncompleteInputError,
                     InitializationError, NumericError, PngError, ShapeError, UnknownGameError)
from .game import (BUILTIN_GAMES, ActionSpace, GameClassSpec, NetworkGame, builtin_class_spec, builtin_game,
                   load_game, mean_payoff_vector, resolve_game, save_game, verify_weighted_potential,
                   verify_weighted_zero_sum)
from .network import GraphSpec, assign_payoffs, generate_graph
from .ode import (MomentState, OdeSolution, integrate, limit_regret_rhs, mean_field_regret, mean_regret_rhs,
                  smooth_q_learning_rhs, variance_correction, variance_rhs)
from .qre import QreSolution, enumerate_qre, qre_map, qre_residual, solve_qre

__version__ = "0.1.0"
