"""Moment-closure dynamics of mean regret and regret variance.

State per population: mean regret ``Rbar_i`` and per-action variance
``Var_i``.  In real time ``t``::

    dRbar_i/dt = ( f_i(Rbar) - Rbar_i + c_i(Rbar, Var) ) / t
    dVar_i/dt  = -2 Var_i / t

where ``f_i`` is the instantaneous regret evaluated at the mean regrets and
``c_i`` the second-order (diagonal Hessian) closure correction.  With
``tau = ln t`` the ``1/t`` factors disappear; the limit system at zero
variance is ``dR/dtau = f(R) - R``, and its image under the softmax is the
smooth Q-learning flow on the simplex.

All systems are integrated with fixed-step classical RK4.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .abm import Trajectory, _softmax
from .errors import DivergenceError, DomainError, ShapeError
from .game import NetworkGame, payoff_vectors

CLOSURES = ("hessian", "squared_gradient")
STEPS_PER_DECADE = 10_000
SQL_FLOOR = 1e-300


@dataclass
class MomentState:
    mean: list[np.ndarray]
    variance: list[np.ndarray]
    initial_variance: list[np.ndarray] = field(default=None)

    def __post_init__(self):
        self.mean = [np.array(m, dtype=float) for m in self.mean]
        self.variance = [np.array(v, dtype=float) for v in self.variance]
        if len(self.mean) != len(self.variance):
            raise ShapeError("mean and variance must cover the same populations")
        for m, v in zip(self.mean, self.variance):
            if m.shape != v.shape:
                raise ShapeError(f"mean shape {m.shape} != variance shape {v.shape}")
            if np.any(v < 0):
                raise DomainError("variances must be >= 0")
        if self.initial_variance is None:
            self.initial_variance = [v.copy() for v in self.variance]

    @classmethod
    def isotropic(cls, game: NetworkGame, mean, sd):
        """Every population starts at ``mean`` (scalar or per-population vectors) with variance ``sd**2``."""
        means = []
        for i, s in enumerate(game.sizes):
            m = mean[i] if isinstance(mean, (list, tuple)) else mean
            means.append(np.broadcast_to(np.asarray(m, dtype=float), (s,)).copy())
        return cls(means, [np.full(s, float(sd) ** 2) for s in game.sizes])


@dataclass
class OdeSolution:
    """Integrated trajectory; ``time`` is in ``t`` or ``tau`` according to ``variable``."""

    time: np.ndarray
    variable: str
    policy: list[np.ndarray]
    mean_regret: list[np.ndarray] | None = None
    variance: list[np.ndarray] | None = None
    scheme: str = "rk4"
    step: float = 0.0
    system: str = ""

    def to_trajectory(self, actions) -> Trajectory:
        k = len(self.time)
        nan = [np.full((k, p.shape[1]), np.nan) for p in self.policy]
        return Trajectory(np.asarray(self.time, dtype=float), [tuple(a) for a in actions], self.policy,
                          self.mean_regret if self.mean_regret is not None else nan,
                          self.variance if self.variance is not None else nan)

    def to_csv(self, actions, path=None) -> str:
        """Same long-format schema as ``Trajectory.to_csv``."""
        return self.to_trajectory(actions).to_csv(path)

    def sample(self, times):
        """Linear interpolation of policies (and moments) at ``times``."""
        times = np.asarray(times, dtype=float)

        def interp(arrs):
            if arrs is None:
                return None
            return [np.column_stack([np.interp(times, self.time, a[:, c]) for c in range(a.shape[1])])
                    for a in arrs]

        return OdeSolution(times, self.variable, interp(self.policy), interp(self.mean_regret),
                           interp(self.variance), self.scheme, self.step, self.system)


# --- softmax derivative identities -------------------------------------------

def softmax_jacobian(x, lam):
    """``d x_b / d R_s = lam x_b (delta_bs - x_s)``."""
    return lam * (np.diag(x) - np.outer(x, x))


def softmax_second_diag(x, lam):
    """``d^2 x_b / d R_s^2 = lam^2 x_b [(delta_bs - x_s)^2 - x_s (1 - x_s)]`` as a ``[b, s]`` matrix."""
    d = np.eye(x.size) - x[None, :]
    return lam ** 2 * x[:, None] * (d ** 2 - (x * (1 - x))[None, :])


# --- right-hand sides ----------------------------------------------------------

def _policies(means, lam):
    return [_softmax(lam * np.asarray(m, dtype=float)) for m in means]


def _check_means(means, game):
    if len(means) != game.n_populations:
        raise ShapeError(f"expected mean regrets for {game.n_populations} populations, got {len(means)}")
    for m, s in zip(means, game.sizes):
        if np.shape(m) != (s,):
            raise ShapeError(f"mean regret shape {np.shape(m)} does not match {s} actions")


def _field(xs, us):
    return [u - x @ u for x, u in zip(xs, us)]


def mean_field_regret(i: int, means, game: NetworkGame, lam: float) -> np.ndarray:
    """Instantaneous regret of population ``i`` with every population at its mean regret."""
    _check_means(means, game)
    xs = _policies(means, lam)
    u = payoff_vectors(game, xs)[i]
    return u - xs[i] @ u


def regret_jacobian(i, means, game, lam):
    """``{h: d f_i / d R_h}`` for ``h`` in ``{i} + V_i``; each block is ``|S_i| x |S_h|``."""
    xs = _policies(means, lam)
    xi = xs[i]
    u = payoff_vectors(game, xs)[i]
    proj = np.eye(xi.size) - np.outer(np.ones(xi.size), xi)
    d = game.degree(i)
    out = {i: np.tile(-(u @ softmax_jacobian(xi, lam)), (xi.size, 1))}
    for j in game.neighbors[i]:
        out[j] = proj @ game.payoff(i, j) @ softmax_jacobian(xs[j], lam) / d
    return out


def regret_second_derivatives(i, means, game, lam):
    """``{h: d^2 f_i / d R_hs^2}`` (diagonal of the Hessian) with the same block layout as the Jacobian."""
    xs = _policies(means, lam)
    xi = xs[i]
    u = payoff_vectors(game, xs)[i]
    proj = np.eye(xi.size) - np.outer(np.ones(xi.size), xi)
    d = game.degree(i)
    out = {i: np.tile(-(u @ softmax_second_diag(xi, lam)), (xi.size, 1))}
    for j in game.neighbors[i]:
        out[j] = proj @ game.payoff(i, j) @ softmax_second_diag(xs[j], lam) / d
    return out


def _corrections(xs, us, variances, game, lam, closure):
    out = []
    deriv = softmax_second_diag if closure == "hessian" else softmax_jacobian
    blocks = [deriv(x, lam) for x in xs]
    if closure == "squared_gradient":
        for i, nbrs in enumerate(game.neighbors):
            xi = xs[i]
            proj = np.eye(xi.size) - xi[None, :]
            own = (us[i] @ blocks[i]) ** 2 @ variances[i]
            c = np.full(xi.size, own)
            for j in nbrs:
                m = proj @ game.payoff(i, j) @ blocks[j] / len(nbrs)
                c = c + (m ** 2) @ variances[j]
            out.append(0.5 * c)
        return out
    for i, nbrs in enumerate(game.neighbors):
        xi = xs[i]
        own = -(us[i] @ blocks[i]) @ variances[i]
        w = game.payoff(i, nbrs[0]) @ (blocks[nbrs[0]] @ variances[nbrs[0]])
        for j in nbrs[1:]:
            w = w + game.payoff(i, j) @ (blocks[j] @ variances[j])
        w = w / len(nbrs)
        out.append(0.5 * (own + w - xi @ w))
    return out


def variance_correction(i, means, variances, game, lam, closure="hessian") -> np.ndarray:
    """Second-order closure correction to the mean instantaneous regret of population ``i``.

    ``closure="hessian"`` uses ``1/2 sum_h sum_s d^2 f_i/dR_hs^2 Var_hs``;
    ``"squared_gradient"`` replaces the second derivative by the squared
    first derivative.
    """
    if closure not in CLOSURES:
        raise DomainError(f"unknown closure {closure!r}")
    _check_means(means, game)
    variances = [np.asarray(v, dtype=float) for v in variances]
    xs = _policies(means, lam)
    us = payoff_vectors(game, xs)
    return _corrections(xs, us, variances, game, lam, closure)[i]


def _moment_tau_rhs(means, variances, game, lam, closure):
    xs = _policies(means, lam)
    us = payoff_vectors(game, xs)
    f = _field(xs, us)
    if closure is None:
        return [fi - m for fi, m in zip(f, means)]
    corr = _corrections(xs, us, variances, game, lam, closure)
    return [fi - m + c for fi, m, c in zip(f, means, corr)]


def mean_regret_rhs(state: MomentState, t: float, game: NetworkGame, lam: float, closure="hessian"):
    """``dRbar/dt`` for every population."""
    if not t > 0:
        raise DomainError(f"t must be > 0, got {t}")
    if closure not in CLOSURES:
        raise DomainError(f"unknown closure {closure!r}")
    _check_means(state.mean, game)
    return [d / t for d in _moment_tau_rhs(state.mean, state.variance, game, lam, closure)]


def variance_rhs(variances, t: float):
    """``dVar/dt = -2 Var / t`` (accepts an array or a list of arrays)."""
    if not t > 0:
        raise DomainError(f"t must be > 0, got {t}")
    if isinstance(variances, (list, tuple)):
        return [-2.0 * np.asarray(v, dtype=float) / t for v in variances]
    return -2.0 * np.asarray(variances, dtype=float) / t


def limit_regret_rhs(R, game: NetworkGame, lam: float):
    """``dR/dtau = f(R) - R`` (homogeneous populations)."""
    _check_means(R, game)
    xs = _policies(R, lam)
    return [fi - np.asarray(r, dtype=float) for fi, r in zip(_field(xs, payoff_vectors(game, xs)), R)]


def smooth_q_learning_rhs(x, game: NetworkGame, lam: float):
    """Smooth Q-learning flow ``x_a [lam (u_a - x.u) - ln x_a + x . ln x]`` on interior policies."""
    xs = [np.asarray(p, dtype=float) for p in x]
    for p in xs:
        if np.any(~(p > 0)):
            raise DomainError("smooth Q-learning dynamics need strictly interior policies")
    return _sql(xs, game, lam)


def _sql(xs, game, lam):
    out = []
    for x, u in zip(xs, payoff_vectors(game, xs)):
        lx = np.log(x)
        out.append(x * (lam * (u - x @ u) - lx + x @ lx))
    return out


# --- integration -----------------------------------------------------------------

def rk4(fun, y0, s0, s1, steps, record_every=1, check=None):
    """Fixed-step classical Runge-Kutta; returns the recorded grid and states.

    ``check(y)`` may return an error message for an out-of-domain state.
    """
    if not s0 < s1:
        raise DomainError(f"need s0 < s1, got {s0} >= {s1}")
    if steps < 1:
        raise DomainError("steps must be >= 1")
    h = (s1 - s0) / steps
    y = np.array(y0, dtype=float)
    grid, states = [s0], [y.copy()]
    for n in range(steps):
        s = s0 + n * h
        k1 = fun(s, y)
        k2 = fun(s + h / 2, y + h / 2 * k1)
        k3 = fun(s + h / 2, y + h / 2 * k2)
        k4 = fun(s + h, y + h * k3)
        y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        s_next = s0 + (n + 1) * h if n + 1 < steps else s1
        msg = None if np.all(np.isfinite(y)) else "non-finite state"
        if msg is None and check is not None:
            msg = check(y)
        if msg is not None:
            raise DivergenceError(f"{msg} at step {n + 1} (s={s_next:.6g})", step=n + 1, time=s_next)
        if (n + 1) % record_every == 0 or n + 1 == steps:
            grid.append(s_next)
            states.append(y.copy())
    return np.array(grid), np.array(states), h


def _pack(arrs):
    return np.concatenate([np.asarray(a, dtype=float) for a in arrs])


def _unpack(y, sizes):
    out, k = [], 0
    for s in sizes:
        out.append(y[k:k + s])
        k += s
    return out


def _columns(states, sizes, offset=0):
    cols, k = [], offset
    for s in sizes:
        cols.append(states[:, k:k + s].copy())
        k += s
    return cols


def _t_grid(tau, t0, t1):
    # exp(log(t)) is not always t; pin the endpoints
    t = np.exp(tau)
    t[0], t[-1] = t0, t1
    return t


def default_steps(t0, t1):
    """``STEPS_PER_DECADE`` steps per decade of ``t`` (at least 1)."""
    return max(1, math.ceil(STEPS_PER_DECADE * math.log10(t1 / t0)))


SYSTEMS = ("moments", "moments_t", "variance", "limit_regret", "sql")


def integrate(system: str, state0, t0: float, t1: float, steps: int | None = None, game: NetworkGame = None,
              lam: float = 1.0, closure: str | None = "hessian", record_every: int = 1) -> OdeSolution:
    """Integrate one of the model systems with fixed-step RK4.

    ``system``:

    ``"moments"``
        coupled mean-regret + variance system from a ``MomentState`` at
        real time ``t0 > 0``; integrated in ``tau = ln t``, grid reported
        in ``t``.  ``closure=None`` drops the variance correction.
    ``"moments_t"``
        the same system stepped uniformly in ``t`` itself.
    ``"variance"``
        variance-only system (``state0`` a list of arrays or an array);
        in ``tau``, reported in ``t``.
    ``"limit_regret"``
        ``dR/dtau = f(R) - R`` from a list of regret vectors; ``t0, t1``
        are values of ``tau``.
    ``"sql"``
        smooth Q-learning from a list of interior policies; ``t0, t1`` in
        ``tau``.
    """
    if system not in SYSTEMS:
        raise DomainError(f"unknown system {system!r}; choose from {SYSTEMS}")
    if closure is not None and closure not in CLOSURES:
        raise DomainError(f"unknown closure {closure!r}")
    if system in ("moments", "moments_t", "variance") and not t0 > 0:
        raise DomainError(f"real-time systems need t0 > 0, got {t0}")
    if not t0 < t1:
        raise DomainError(f"need t0 < t1, got {t0} >= {t1}")

    if system == "variance":
        single = not isinstance(state0, (list, tuple, MomentState))
        vs = state0.variance if isinstance(state0, MomentState) else ([state0] if single else state0)
        sizes = [np.size(v) for v in vs]
        steps = steps or default_steps(t0, t1)
        grid, states, h = rk4(lambda s, y: -2.0 * y, _pack([np.ravel(v) for v in vs]),
                              math.log(t0), math.log(t1), steps, record_every)
        var = _columns(states, sizes)
        pol = [np.full_like(v, np.nan) for v in var]
        return OdeSolution(_t_grid(grid, t0, t1), "t", pol, None, var, "rk4", h, system)

    if game is None:
        raise DomainError(f"system {system!r} needs a game")
    sizes = list(game.sizes)
    n = sum(sizes)

    if system in ("moments", "moments_t"):
        if not isinstance(state0, MomentState):
            raise DomainError("moment systems need a MomentState")
        _check_means(state0.mean, game)
        y0 = _pack(state0.mean + state0.variance)
        if system == "moments":
            def fun(s, y):
                m, v = _unpack(y[:n], sizes), _unpack(y[n:], sizes)
                return np.concatenate([_pack(_moment_tau_rhs(m, v, game, lam, closure)), -2.0 * y[n:]])

            steps = steps or default_steps(t0, t1)
            grid, states, h = rk4(fun, y0, math.log(t0), math.log(t1), steps, record_every)
            times = _t_grid(grid, t0, t1)
        else:
            def fun(s, y):
                m, v = _unpack(y[:n], sizes), _unpack(y[n:], sizes)
                return np.concatenate([_pack(_moment_tau_rhs(m, v, game, lam, closure)), -2.0 * y[n:]]) / s

            steps = steps or default_steps(t0, t1)
            times, states, h = rk4(fun, y0, t0, t1, steps, record_every)
        means = _columns(states, sizes)
        var = _columns(states, sizes, n)
        pol = [_softmax(lam * m) for m in means]
        return OdeSolution(times, "t", pol, means, var, "rk4", h, system)

    if system == "limit_regret":
        _check_means(state0, game)

        def fun(s, y):
            R = _unpack(y, sizes)
            xs = _policies(R, lam)
            return _pack([f - r for f, r in zip(_field(xs, payoff_vectors(game, xs)), R)])

        steps = steps or default_steps(1.0, math.exp(t1 - t0))
        grid, states, h = rk4(fun, _pack(state0), t0, t1, steps, record_every)
        means = _columns(states, sizes)
        return OdeSolution(grid, "tau", [_softmax(lam * m) for m in means], means, None, "rk4", h, system)

    # sql
    xs0 = [np.asarray(p, dtype=float) for p in state0]
    if [p.size for p in xs0] != sizes:
        raise ShapeError("initial policies do not match the game's action spaces")
    for p in xs0:
        if np.any(~(p > 0)):
            raise DomainError("smooth Q-learning needs strictly interior initial policies")

    def fun(s, y):
        return _pack(_sql(_unpack(y, sizes), game, lam))

    def check(y):
        return None if np.all(y >= SQL_FLOOR) else "policy coordinate fell below 1e-300"

    steps = steps or default_steps(1.0, math.exp(t1 - t0))
    grid, states, h = rk4(fun, _pack(xs0), t0, t1, steps, record_every, check)
    return OdeSolution(grid, "tau", _columns(states, sizes), None, None, "rk4", h, system)


def derivative_check(point, game: NetworkGame, lam: float, h: float = 1e-4) -> float:
    """Max relative error of the analytic first and diagonal second derivatives of ``f``.

    Central finite differences with step ``h`` are the reference; the error
    of each entry is ``|analytic - fd| / max(1, |analytic|)``.
    """
    point = [np.asarray(p, dtype=float) for p in point]
    _check_means(point, game)
    worst = 0.0
    for i in range(game.n_populations):
        jac = regret_jacobian(i, point, game, lam)
        hes = regret_second_derivatives(i, point, game, lam)
        f0 = mean_field_regret(i, point, game, lam)
        for hh, blk in jac.items():
            for s in range(game.sizes[hh]):
                up = [p.copy() for p in point]
                dn = [p.copy() for p in point]
                up[hh][s] += h
                dn[hh][s] -= h
                fu = mean_field_regret(i, up, game, lam)
                fd = mean_field_regret(i, dn, game, lam)
                d1 = (fu - fd) / (2 * h)
                d2 = (fu - 2 * f0 + fd) / h ** 2
                e1 = np.abs(blk[:, s] - d1) / np.maximum(1.0, np.abs(blk[:, s]))
                e2 = np.abs(hes[hh][:, s] - d2) / np.maximum(1.0, np.abs(hes[hh][:, s]))
                worst = max(worst, float(e1.max()), float(e2.max()))
    return worst
