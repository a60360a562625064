"""Agent-based smooth regret matching on population network games.

Each population holds an ``N_i x |S_i|`` matrix of cumulative regrets, one
row per agent.  A step computes every population's mean policy, the
instantaneous regret of every agent against its neighbours' mean policies,
the running-average regret update, and finally the softmax policies.  No
actions are sampled, so a run is a deterministic function of its initial
regrets.
"""

from __future__ import annotations

import csv
import io
from collections.abc import Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DomainError, InitializationError, NumericError, ShapeError
from .game import NetworkGame, payoff_vectors

DEFAULT_HOMOGENEITY_THRESHOLD = 1e-4
_MAX_RESAMPLES = 1000


def softmax_policy(R, lam: float) -> np.ndarray:
    """Softmax of ``lam * R`` along the last axis (rows of a matrix are agents)."""
    R = np.asarray(R, dtype=float)
    if lam < 0:
        raise DomainError(f"temperature must be >= 0, got {lam}")
    if not np.all(np.isfinite(R)):
        raise NumericError("softmax of non-finite regrets")
    return _softmax(lam * R)


def _softmax(z):
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def instantaneous_regret(x, u) -> np.ndarray:
    """``r(a) = u(a) - x . u``; ``x`` may be a single policy or a matrix of policies."""
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    if u.ndim != 1 or x.shape[-1] != u.shape[0]:
        raise ShapeError(f"policy shape {x.shape} does not match payoff vector shape {u.shape}")
    return u - (x @ u)[..., None]


def update_cumulative_regret(R, r, t: int) -> np.ndarray:
    """Running average ``R + (r - R) / t``; at ``t = 1`` this is ``r`` itself."""
    if t < 1:
        raise DomainError(f"step index must be >= 1, got {t}")
    R = np.asarray(R, dtype=float)
    r = np.asarray(r, dtype=float)
    if t == 1:
        return r.copy()
    return R + (r - R) / t


@dataclass(frozen=True)
class RegretInit:
    """Per-population regret initialisation: i.i.d. ``Normal(mean, sd)`` entries.

    ``mean`` is a scalar or one value per action.  With ``truncate`` the
    distribution is the Normal conditioned on being positive (rejection
    sampling).
    """

    mean: float | tuple[float, ...] = 0.0
    sd: float = 0.0
    truncate: bool = False

    def __post_init__(self):
        if not self.sd >= 0:
            raise DomainError(f"initial standard deviation must be >= 0, got {self.sd}")
        if not np.isscalar(self.mean):
            object.__setattr__(self, "mean", tuple(float(m) for m in self.mean))

    def mean_vector(self, size: int) -> np.ndarray:
        m = np.broadcast_to(np.asarray(self.mean, dtype=float), (size,)) if np.isscalar(self.mean) \
            else np.asarray(self.mean, dtype=float)
        if m.shape != (size,):
            raise ShapeError(f"initial mean has {m.shape[0]} entries, population has {size} actions")
        return np.array(m)


@dataclass(frozen=True)
class SimulationConfig:
    game: NetworkGame
    agents_per_population: int = 100
    lam: float = 1.0
    steps: int = 10_000
    init: RegretInit | Sequence[RegretInit] = RegretInit()
    seed: int = 0
    record_every: int = 1
    snapshot_steps: tuple[int, ...] = ()

    def __post_init__(self):
        if self.agents_per_population < 1:
            raise DomainError("agents_per_population must be >= 1")
        if not self.lam >= 0:
            raise DomainError(f"temperature must be >= 0, got {self.lam}")
        if self.steps < 1:
            raise DomainError("steps must be >= 1")
        if self.record_every < 1:
            raise DomainError("record_every must be >= 1")
        if not isinstance(self.init, RegretInit):
            inits = tuple(self.init)
            if len(inits) != self.game.n_populations:
                raise ShapeError(f"need {self.game.n_populations} init specs, got {len(inits)}")
            object.__setattr__(self, "init", inits)
        object.__setattr__(self, "snapshot_steps", tuple(sorted(set(int(s) for s in self.snapshot_steps))))

    def init_for(self, i: int) -> RegretInit:
        return self.init if isinstance(self.init, RegretInit) else self.init[i]


@dataclass
class AgentEnsemble:
    """Regret matrices (agents x actions) and the softmax policies they induce."""

    regrets: list[np.ndarray]
    policies: list[np.ndarray]

    @classmethod
    def from_regrets(cls, regrets, lam):
        regrets = [np.array(R, dtype=float) for R in regrets]
        return cls(regrets, [softmax_policy(R, lam) for R in regrets])

    @property
    def sizes(self):
        return tuple(R.shape[0] for R in self.regrets)


def init_regrets(config: SimulationConfig) -> AgentEnsemble:
    rng = np.random.default_rng(config.seed)
    n = config.agents_per_population
    regrets = []
    for i, size in enumerate(config.game.sizes):
        spec = config.init_for(i)
        mean = spec.mean_vector(size)
        R = mean + spec.sd * rng.standard_normal((n, size))
        if spec.truncate:
            bad = R <= 0
            for _ in range(_MAX_RESAMPLES):
                if not bad.any():
                    break
                cols = np.nonzero(bad)[1]
                R[bad] = mean[cols] + spec.sd * rng.standard_normal(cols.size)
                bad = R <= 0
            else:
                if bad.any():
                    raise InitializationError(
                        f"population {i}: could not draw positive regrets from Normal({mean}, {spec.sd}) "
                        f"in {_MAX_RESAMPLES} resamples"
                    )
        regrets.append(R)
    return AgentEnsemble.from_regrets(regrets, config.lam)


def _pop_mean(M):
    # centred on the first agent so identical rows average to that row exactly
    return M[0] + (M - M[0]).mean(axis=0)


def simulation_step(ensemble: AgentEnsemble, game: NetworkGame, lam: float, t: int) -> AgentEnsemble:
    """One synchronous round: means, instantaneous regrets, regret update, policies."""
    if t < 1:
        raise DomainError(f"step index must be >= 1, got {t}")
    means = [_pop_mean(P) for P in ensemble.policies]
    us = payoff_vectors(game, means)
    regrets = []
    for R, P, u in zip(ensemble.regrets, ensemble.policies, us):
        r = u - (P * u).sum(axis=1, keepdims=True)
        regrets.append(r if t == 1 else R + (r - R) / t)
    policies = [_softmax(lam * R) for R in regrets]
    for P in policies:
        if not np.all(np.isfinite(P)):
            raise NumericError(f"non-finite policy at step {t}")
    return AgentEnsemble(regrets, policies)


def ensemble_statistics(ensemble: AgentEnsemble):
    """Mean regret, mean policy and per-action (1/N) regret variance of every population."""
    mean_regret = [_pop_mean(R) for R in ensemble.regrets]
    mean_policy = [_pop_mean(P) for P in ensemble.policies]
    variance = [(R - R[0]).var(axis=0) for R in ensemble.regrets]
    return mean_regret, mean_policy, variance


@dataclass
class Trajectory:
    """Sampled population statistics; arrays are ``(records, actions)`` per population."""

    t: np.ndarray
    actions: list[tuple[str, ...]]
    mean_policy: list[np.ndarray]
    mean_regret: list[np.ndarray]
    regret_variance: list[np.ndarray]
    snapshots: dict[int, list[np.ndarray]] = field(default_factory=dict)

    @property
    def n_populations(self):
        return len(self.actions)

    def final_policies(self):
        return [p[-1] for p in self.mean_policy]

    def at(self, t):
        """Index of the record with time ``t``."""
        idx = np.searchsorted(self.t, t)
        if idx >= len(self.t) or self.t[idx] != t:
            raise KeyError(f"no record at t={t}")
        return int(idx)

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "population", "action", "mean_policy", "mean_regret", "regret_variance"])
        for k, t in enumerate(self.t):
            for i, labels in enumerate(self.actions):
                for a, label in enumerate(labels):
                    w.writerow([_fmt_t(t), i, label, _fmt(self.mean_policy[i][k, a]),
                                _fmt(self.mean_regret[i][k, a]), _fmt(self.regret_variance[i][k, a])])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text

    @classmethod
    def from_csv(cls, source) -> "Trajectory":
        """Parse ``to_csv`` output (a path or the CSV text itself)."""
        text = _read_text(source)
        rows = list(csv.DictReader(io.StringIO(text)))
        times, labels, cols = _parse_rows(rows)
        return cls(times, labels, cols["mean_policy"], cols["mean_regret"], cols["regret_variance"])

    def snapshots_to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "population", "agent", "action", "regret"])
        for t in sorted(self.snapshots):
            for i, R in enumerate(self.snapshots[t]):
                for k in range(R.shape[0]):
                    for a, label in enumerate(self.actions[i]):
                        w.writerow([t, i, k, label, _fmt(R[k, a])])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text


def _fmt(v) -> str:
    return format(float(v), ".17g")


def _fmt_t(t) -> str:
    t = float(t)
    return str(int(t)) if t.is_integer() else format(t, ".17g")


def _read_text(source) -> str:
    if isinstance(source, str) and "\n" in source:
        return source
    with open(source, newline="") as fh:
        return fh.read()


def _parse_rows(rows):
    """Rebuild per-population arrays from long-format CSV rows."""
    times = []
    index = {}
    labels: dict[int, list[str]] = {}
    for row in rows:
        t = float(row["t"])
        if not times or times[-1] != t:
            times.append(t)
        i = int(row["population"])
        lab = labels.setdefault(i, [])
        if row["action"] not in lab:
            lab.append(row["action"])
    n_pop = len(labels)
    k_of = {t: k for k, t in enumerate(times)}
    names = ("mean_policy", "mean_regret", "regret_variance")
    cols = {c: [np.full((len(times), len(labels[i])), np.nan) for i in range(n_pop)] for c in names}
    for row in rows:
        k = k_of[float(row["t"])]
        i = int(row["population"])
        a = labels[i].index(row["action"])
        for c in names:
            cols[c][i][k, a] = float(row[c]) if row[c] != "" else np.nan
    t_arr = np.array(times)
    if np.all(t_arr == np.round(t_arr)):
        t_arr = t_arr.astype(np.int64)
    return t_arr, [tuple(labels[i]) for i in range(n_pop)], cols


def run_simulation(config: SimulationConfig) -> Trajectory:
    """Run steps ``t = 1..T``; record ``t = 0``, every ``record_every`` steps, and ``T``."""
    game, lam = config.game, config.lam
    ens = init_regrets(config)
    snap = set(config.snapshot_steps)
    times = []
    recs = ([], [], [])
    snapshots = {}

    def record(t):
        times.append(t)
        for store, vals in zip(recs, ensemble_statistics(ens)):
            store.append(vals)
        if t in snap:
            snapshots[t] = [R.copy() for R in ens.regrets]

    record(0)
    for t in range(1, config.steps + 1):
        ens = simulation_step(ens, game, lam, t)
        if t % config.record_every == 0 or t == config.steps:
            record(t)
        elif t in snap:
            snapshots[t] = [R.copy() for R in ens.regrets]
    n = game.n_populations
    stacked = [[np.array([r[i] for r in store]) for i in range(n)] for store in recs]
    mean_regret, mean_policy, variance = stacked
    return Trajectory(np.array(times, dtype=np.int64), [a.labels for a in game.actions],
                      mean_policy, mean_regret, variance, snapshots)


def replicate_seed(seed: int, replicate: int) -> int:
    """Independent 64-bit sub-seed for replicate ``replicate`` of a base seed."""
    ss = np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, int(replicate)])
    return int(ss.generate_state(1, np.uint64)[0])


def run_replicates(config: SimulationConfig, replicates: int, jobs: int = 1) -> list[Trajectory]:
    """Replicate runs that differ only by sub-seed; up to ``jobs`` run in parallel processes."""
    configs = [replace(config, seed=replicate_seed(config.seed, r)) for r in range(replicates)]
    if jobs <= 1 or replicates <= 1:
        return [run_simulation(c) for c in configs]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(run_simulation, configs))


def average_trajectories(trajs: Sequence[Trajectory]) -> Trajectory:
    """Replicate average of the recorded means and variances (records must align)."""
    first = trajs[0]
    for tr in trajs[1:]:
        if not np.array_equal(tr.t, first.t):
            raise ShapeError("replicate trajectories have different record times")
    n = first.n_populations

    def avg(name):
        return [np.mean([getattr(tr, name)[i] for tr in trajs], axis=0) for i in range(n)]

    return Trajectory(first.t.copy(), list(first.actions), avg("mean_policy"),
                      avg("mean_regret"), avg("regret_variance"))


def homogeneity_time(traj: Trajectory, threshold: float = DEFAULT_HOMOGENEITY_THRESHOLD):
    """First recorded ``t`` at which every per-action regret variance is below ``threshold``."""
    if threshold < 0:
        raise DomainError(f"threshold must be >= 0, got {threshold}")
    worst = np.max([v.max(axis=1) for v in traj.regret_variance], axis=0)
    hits = np.nonzero(worst < threshold)[0]
    return int(traj.t[hits[0]]) if hits.size else None
