"""Experiment recipes shared by the command line, the notebooks and the acceptance suite."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .abm import (DEFAULT_HOMOGENEITY_THRESHOLD, RegretInit, SimulationConfig, Trajectory,
                  average_trajectories, homogeneity_time, run_replicates)
from .errors import DomainError
from .game import NetworkGame
from .network import GraphSpec, assign_payoffs, generate_graph
from .ode import MomentState, OdeSolution, integrate
from .qre import QreSolution, distance, enumerate_qre, qre_residual


def variance_slopes(traj: Trajectory, t_min: float = 10, t_max: float = 1000) -> list[np.ndarray]:
    """Least-squares slope of ``log Var`` against ``log t`` over ``[t_min, t_max]``, per population/action.

    Entries are NaN where the variance is not strictly positive throughout.
    """
    m = (traj.t >= t_min) & (traj.t <= t_max)
    lt = np.log(traj.t[m].astype(float))
    out = []
    for v in traj.regret_variance:
        s = np.full(v.shape[1], np.nan)
        for a in range(v.shape[1]):
            va = v[m, a]
            if va.size >= 2 and np.all(va > 0):
                s[a] = np.polyfit(lt, np.log(va), 1)[0]
        out.append(s)
    return out


def matched_moments(traj: Trajectory, t: int = 1) -> MomentState:
    """Ensemble moments at record ``t`` as an ODE initial state.

    The first update replaces the initial regrets by the first instantaneous
    regret, so the moments after step 1 are the ones the continuous model
    should start from at ``t = 1``.
    """
    k = traj.at(t)
    return MomentState([m[k].copy() for m in traj.mean_regret], [v[k].copy() for v in traj.regret_variance])


def policy_gap(traj: Trajectory, sol: OdeSolution, t_min: float = 1.0):
    """Sup-norm gap between ABM and model mean policies at the ABM record times ``>= t_min``.

    Returns ``(gap, t_at_max)``.
    """
    keep = traj.t >= t_min
    times = traj.t[keep].astype(float)
    s = sol.sample(times)
    per_t = np.max([np.max(np.abs(p[keep] - q), axis=1) for p, q in zip(traj.mean_policy, s.policy)], axis=0)
    k = int(np.argmax(per_t))
    return float(per_t[k]), float(times[k])


@dataclass
class CompareResult:
    abm: Trajectory
    ode: OdeSolution
    qres: list[QreSolution]
    gap: float
    gap_time: float
    terminal_residual: float
    nearest_qre: QreSolution | None
    terminal_qre_distance: float


def compare(game: NetworkGame, lam: float = 1.0, agents: int = 100, steps: int = 10_000,
            init=RegretInit(1.0, 0.1, True), seed: int = 0, replicates: int = 1,
            closure: str | None = "hessian", ode_steps: int | None = None, record_every: int = 1,
            qre_starts: int = 100, jobs: int = 1) -> CompareResult:
    """Agent-based runs against the moment model started from matched moments."""
    if steps < 2:
        raise DomainError("compare needs at least 2 steps")
    cfg = SimulationConfig(game, agents, lam, steps, init, seed, record_every=record_every)
    trajs = run_replicates(cfg, replicates, jobs)
    abm = trajs[0] if replicates == 1 else average_trajectories(trajs)
    state = matched_moments(abm, 1)
    if ode_steps is None:
        ode_steps = max(1000, int(1000 * np.log10(max(steps, 10))))
    ode = integrate("moments", state, 1.0, float(steps), ode_steps, game, lam, closure)
    gap, gap_t = policy_gap(abm, ode)
    qres = enumerate_qre(game, lam, qre_starts, seed=seed)
    final = abm.final_policies()
    nearest = min(qres, key=lambda s: distance(final, s.policies)) if qres else None
    return CompareResult(abm, ode, qres, gap, gap_t, qre_residual([p / p.sum() for p in final], game, lam),
                         nearest, distance(final, nearest.policies) if nearest else float("nan"))


def network_inits(game: NetworkGame, mean: float, spread: float, sd: float, seed: int,
                  truncate: bool = False) -> list[RegretInit]:
    """Per-population initial means ``mean + U(-spread, spread)`` per action with a shared ``sd``.

    The means depend only on ``seed``, so inits that differ in ``sd`` share them.
    """
    rng = np.random.default_rng([int(seed) & 0xFFFFFFFF, 0x5EED])
    return [RegretInit(tuple(mean + rng.uniform(-spread, spread, s)), sd, truncate) for s in game.sizes]


def sweep(template: NetworkGame, graph: GraphSpec, sds, replicates: int = 10, steps: int = 2000,
          lam: float = 1.0, agents: int = 100, mean: float = 1.0, spread: float = 0.5, seed: int = 0,
          threshold: float = DEFAULT_HOMOGENEITY_THRESHOLD, record_every: int = 1, jobs: int = 1):
    """Homogeneity time, terminal QRE residual and variance slope for each initial sd on a network.

    Returns ``(rows, trajectories)`` where ``rows`` is a list of dicts (one per
    sd and replicate) and ``trajectories[sd]`` the replicate trajectories.
    """
    game = assign_payoffs(generate_graph(graph), template)
    rows, trajs_by_sd = [], {}
    for sd in sds:
        cfg = SimulationConfig(game, agents, lam, steps, network_inits(game, mean, spread, sd, seed),
                               seed, record_every)
        trajs = run_replicates(cfg, replicates, jobs)
        trajs_by_sd[sd] = trajs
        for r, tr in enumerate(trajs):
            slopes = np.concatenate(variance_slopes(tr, 10, min(1000, steps)))
            finite = slopes[np.isfinite(slopes)]
            final = [p / p.sum() for p in tr.final_policies()]
            rows.append({
                "sd": float(sd),
                "replicate": r,
                "homogeneity_time": homogeneity_time(tr, threshold),
                "terminal_qre_residual": qre_residual(final, game, lam),
                "variance_slope_min": float(finite.min()) if finite.size else float("nan"),
                "variance_slope_max": float(finite.max()) if finite.size else float("nan"),
            })
    return rows, trajs_by_sd


def mean_homogeneity_times(rows):
    """Mean homogeneity time per sd (replicates that never homogenise count as ``inf``)."""
    out = {}
    for sd in sorted({r["sd"] for r in rows}):
        vals = [np.inf if r["homogeneity_time"] is None else r["homogeneity_time"] for r in rows if r["sd"] == sd]
        out[sd] = float(np.mean(vals))
    return out

