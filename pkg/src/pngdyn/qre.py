"""Quantal response equilibria of network games.

A QRE at temperature ``lam`` is a fixed point of the logit response map
``x_i -> softmax(lam * u_i(xbar))``.  Two solvers are provided: damped
fixed-point iteration (the default for a single solve) and Newton's method
in log-odds coordinates, which also converges to unstable equilibria such
as the mixed QRE of the battle of the sexes and is therefore what
``enumerate_qre`` uses.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass

import numpy as np

from .abm import _softmax
from .errors import DomainError, ShapeError
from .game import NetworkGame, check_policy, payoff_vectors, uniform_policies


@dataclass
class QreSolution:
    policies: list[np.ndarray]
    residual: float
    lam: float
    iterations: int
    converged: bool
    start_id: int = 0
    method: str = "fixed_point"

    def to_record(self, game_name: str = "") -> dict:
        return {
            "game": game_name,
            "lambda": self.lam,
            "policies": [p.tolist() for p in self.policies],
            "residual": self.residual,
            "iterations": self.iterations,
            "converged": self.converged,
            "start_id": self.start_id,
        }

    def to_json(self, game_name: str = "") -> str:
        return json.dumps(self.to_record(game_name), indent=2)


def _check_profile(x, game):
    if len(x) != game.n_populations:
        raise ShapeError(f"expected {game.n_populations} policies, got {len(x)}")
    return [check_policy(p, s) for p, s in zip(x, game.sizes)]


def qre_map(x, game: NetworkGame, lam: float) -> list[np.ndarray]:
    """Logit response of every population to the profile ``x``."""
    x = _check_profile(x, game)
    return [_softmax(lam * u) for u in payoff_vectors(game, x)]


def qre_residual(x, game: NetworkGame, lam: float) -> float:
    """Sup-norm defect ``max_i ||x_i - qre_map(x)_i||``."""
    x = _check_profile(x, game)
    y = qre_map(x, game, lam)
    return float(max(np.max(np.abs(a - b)) for a, b in zip(x, y)))


def _fixed_point(game, lam, x, damping, tol, max_iters):
    # damping is halved whenever the defect grows, which breaks the 2-cycles
    # and slow spirals of matching-pennies-like games
    best = np.inf
    for it in range(1, max_iters + 1):
        y = [_softmax(lam * u) for u in payoff_vectors(game, x)]
        res = max(np.max(np.abs(a - b)) for a, b in zip(y, x))
        if res < tol:
            return x, it
        if res > best:
            damping = max(0.5 * damping, 1e-3)
        best = min(best, res)
        x = [(1 - damping) * a + damping * b for a, b in zip(x, y)]
        x = [p / p.sum() for p in x]
    return x, max_iters


def _split(z, sizes):
    out, k = [], 0
    for s in sizes:
        out.append(z[k:k + s - 1])
        k += s - 1
    return out


def _logit_policies(y, sizes):
    return [_softmax(np.concatenate(([0.0], yi))) for yi in _split(y, sizes)]


def _newton_residual(y, game, lam):
    x = _logit_policies(y, game.sizes)
    us = payoff_vectors(game, x)
    return np.concatenate([yi - lam * (u[1:] - u[0]) for yi, u in zip(_split(y, game.sizes), us)]), x


def _newton_jacobian(x, game, lam):
    sizes = game.sizes
    offs = np.concatenate(([0], np.cumsum([s - 1 for s in sizes])))
    J = np.eye(offs[-1])
    for i, nbrs in enumerate(game.neighbors):
        d = len(nbrs)
        for j in nbrs:
            xj = x[j]
            dx = (np.diag(xj) - np.outer(xj, xj))[:, 1:]  # dx_j / dy_j
            du = game.payoff(i, j) @ dx / d
            J[offs[i]:offs[i + 1], offs[j]:offs[j + 1]] -= lam * (du[1:] - du[0])
    return J


def _newton(game, lam, x, tol, max_iters):
    y = np.concatenate([np.log(p[1:]) - np.log(p[0]) for p in x])
    F, xs = _newton_residual(y, game, lam)
    norm = np.max(np.abs(F))
    for it in range(1, max_iters + 1):
        try:
            dy = np.linalg.solve(_newton_jacobian(xs, game, lam), -F)
        except np.linalg.LinAlgError:
            return xs, it, False
        step = 1.0
        while True:
            y_new = y + step * dy
            F_new, xs_new = _newton_residual(y_new, game, lam)
            n_new = np.max(np.abs(F_new))
            if n_new < norm or step < 1e-10:
                break
            step *= 0.5
        y, F, xs, norm = y_new, F_new, xs_new, n_new
        if norm < tol:
            return xs, it, True
        if not np.all(np.isfinite(y)):
            return xs, it, False
    return xs, max_iters, False


def solve_qre(game: NetworkGame, lam: float, start=None, damping: float = 0.5, tol: float = 1e-10,
              max_iters: int = 100_000, method: str = "fixed_point", start_id: int = 0) -> QreSolution:
    """Solve for a QRE from ``start`` (uniform if omitted).

    ``method="fixed_point"`` iterates ``x <- (1 - damping) x + damping * qre_map(x)``
    until the update is below ``tol``.  ``method="newton"`` runs damped Newton
    on the log-odds form of the fixed-point condition.  Non-converged
    results are returned with ``converged=False``.
    """
    if not 0 < damping <= 1:
        raise DomainError(f"damping must lie in (0, 1], got {damping}")
    if not tol > 0:
        raise DomainError(f"tol must be > 0, got {tol}")
    if lam < 0:
        raise DomainError(f"temperature must be >= 0, got {lam}")
    x = uniform_policies(game) if start is None else _check_profile(start, game)
    x = [np.array(p) for p in x]
    if method == "fixed_point":
        x, iters = _fixed_point(game, lam, x, damping, tol, max_iters)
    elif method == "newton":
        if any(np.any(p <= 0) for p in x):
            raise DomainError("Newton QRE solver needs an interior start")
        x, iters, _ = _newton(game, lam, x, tol * 1e-2, min(max_iters, 500))
    else:
        raise DomainError(f"unknown QRE method {method!r}")
    res = qre_residual(x, game, lam)
    return QreSolution(x, res, lam, iters, bool(res < tol), start_id, method)


def random_starts(game: NetworkGame, n_starts: int, seed: int = 0):
    """Interior starts drawn from a symmetric Dirichlet(1) per population."""
    rng = np.random.default_rng(seed)
    starts = []
    for _ in range(n_starts):
        prof = []
        for s in game.sizes:
            p = rng.dirichlet(np.ones(s))
            p = np.maximum(p, 1e-12)
            prof.append(p / p.sum())
        starts.append(prof)
    return starts


def enumerate_qre(game: NetworkGame, lam: float, n_starts: int = 100, seed: int = 0, tol: float = 1e-10,
                  merge_radius: float = 1e-4, method: str = "newton") -> list[QreSolution]:
    """Multistart QRE search; converged solutions closer than ``merge_radius`` are merged.

    Returns one representative per cluster (the lowest-residual member),
    sorted by residual.
    """
    if n_starts < 1:
        raise DomainError("n_starts must be >= 1")
    clusters: list[list[QreSolution]] = []
    for k, start in enumerate(random_starts(game, n_starts, seed)):
        sol = solve_qre(game, lam, start, tol=tol, method=method, start_id=k)
        if not sol.converged:
            continue
        for cl in clusters:
            if _distance(cl[0].policies, sol.policies) < merge_radius:
                cl.append(sol)
                break
        else:
            clusters.append([sol])
    reps = [min(cl, key=lambda s: s.residual) for cl in clusters]
    return sorted(reps, key=lambda s: (s.residual, s.start_id))


def _distance(x, y):
    return float(max(np.max(np.abs(a - b)) for a, b in zip(x, y)))


def distance(x, y) -> float:
    """Sup-norm distance between two policy profiles."""
    return _distance(x, y)


def qre_listing_csv(solutions, game: NetworkGame, path=None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["qre", "population", "action", "probability", "residual", "iterations", "lambda"])
    for k, sol in enumerate(solutions):
        for i, (p, acts) in enumerate(zip(sol.policies, game.actions)):
            for a, label in enumerate(acts.labels):
                w.writerow([k, i, label, format(p[a], ".17g"), format(sol.residual, ".17g"),
                            sol.iterations, format(sol.lam, ".17g")])
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    return text
