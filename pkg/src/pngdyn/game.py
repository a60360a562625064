"""Population network games: graph, action spaces and edge payoff matrices.

Every edge ``(i, j)`` carries two matrices stored in *row form* for their own
population: ``payoff(i, j)`` is ``|S_i| x |S_j|`` with population ``i`` as the
row player, and ``payoff(j, i)`` is ``|S_j| x |S_i|`` with ``j`` as the row
player.  The payoff vector of population ``i`` against neighbour mean
policies is the degree-averaged sum ``(1/|V_i|) sum_j A_ij xbar_j``.
"""

from __future__ import annotations

import json
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DomainError, IncompleteInputError, ShapeError, UnknownGameError

SIMPLEX_TOL = 1e-12


@dataclass(frozen=True)
class ActionSpace:
    labels: tuple[str, ...]

    def __post_init__(self):
        labels = tuple(str(a) for a in self.labels)
        object.__setattr__(self, "labels", labels)
        if len(labels) < 2:
            raise ShapeError(f"an action space needs at least 2 actions, got {labels}")
        if len(set(labels)) != len(labels):
            raise ShapeError(f"action labels must be distinct, got {labels}")

    @property
    def size(self) -> int:
        return len(self.labels)


def _frozen_matrix(m) -> np.ndarray:
    a = np.array(m, dtype=float)
    if a.ndim != 2:
        raise ShapeError(f"payoff matrix must be 2-d, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ShapeError("payoff matrix entries must be finite")
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class NetworkGame:
    """Immutable population network game.

    Parameters
    ----------
    actions : sequence of ActionSpace
        One action space per population; population ids are ``0..n-1``.
    matrices : mapping ``(i, j) -> array``
        Payoff matrix of ``i`` against ``j`` in row form for ``i``.  Both
        directions of every edge must be present.
    name : str
        Optional display name.
    """

    actions: tuple[ActionSpace, ...]
    matrices: Mapping[tuple[int, int], np.ndarray]
    name: str = ""
    edges: tuple[tuple[int, int], ...] = field(init=False)
    neighbors: tuple[tuple[int, ...], ...] = field(init=False)

    def __post_init__(self):
        actions = tuple(a if isinstance(a, ActionSpace) else ActionSpace(tuple(a)) for a in self.actions)
        n = len(actions)
        if n < 2:
            raise ShapeError("a network game needs at least 2 populations")
        mats = {}
        for (i, j), m in self.matrices.items():
            i, j = int(i), int(j)
            if i == j:
                raise ShapeError(f"self-loop on population {i}")
            if not (0 <= i < n and 0 <= j < n):
                raise ShapeError(f"edge ({i}, {j}) references an unknown population")
            a = _frozen_matrix(m)
            if a.shape != (actions[i].size, actions[j].size):
                raise ShapeError(
                    f"A[{i},{j}] has shape {a.shape}, expected {(actions[i].size, actions[j].size)}"
                )
            mats[(i, j)] = a
        for i, j in mats:
            if (j, i) not in mats:
                raise ShapeError(f"edge ({i}, {j}) is missing its reverse matrix A[{j},{i}]")
        edges = tuple(sorted((i, j) for i, j in mats if i < j))
        nbrs = tuple(tuple(sorted(j for (a, j) in mats if a == i)) for i in range(n))
        for i, v in enumerate(nbrs):
            if not v:
                raise ShapeError(f"population {i} has no neighbours")
        object.__setattr__(self, "actions", actions)
        object.__setattr__(self, "matrices", mats)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "neighbors", nbrs)

    @classmethod
    def from_edges(cls, actions, edges, name=""):
        """Build from ``(i, j, A_ij, A_ji)`` tuples."""
        mats = {}
        for i, j, a_ij, a_ji in edges:
            if (i, j) in mats or (j, i) in mats:
                raise ShapeError(f"duplicate edge ({i}, {j})")
            mats[(i, j)] = a_ij
            mats[(j, i)] = a_ji
        return cls(tuple(actions), mats, name=name)

    @property
    def n_populations(self) -> int:
        return len(self.actions)

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(a.size for a in self.actions)

    def payoff(self, i: int, j: int) -> np.ndarray:
        try:
            return self.matrices[(i, j)]
        except KeyError:
            raise ShapeError(f"no edge between populations {i} and {j}") from None

    def degree(self, i: int) -> int:
        return len(self.neighbors[i])

    def __repr__(self):
        return f"NetworkGame(name={self.name!r}, sizes={self.sizes}, edges={list(self.edges)})"


@dataclass(frozen=True)
class GameClassSpec:
    """Certificate for the weighted zero-sum / weighted potential checks.

    ``potential`` maps each stored edge ``(i, j)`` (``i < j``) to the
    potential restricted to pure profiles, indexed ``[a_i, a_j]``.
    """

    weights: tuple[float, ...]
    potential: Mapping[tuple[int, int], np.ndarray] | None = None

    def __post_init__(self):
        w = tuple(float(x) for x in self.weights)
        if any(not x > 0 for x in w):
            raise DomainError(f"class weights must be positive, got {w}")
        object.__setattr__(self, "weights", w)


def check_policy(x, size=None) -> np.ndarray:
    """Validate a point of the probability simplex and return it as an array."""
    p = np.asarray(x, dtype=float)
    if p.ndim != 1:
        raise ShapeError(f"policy must be 1-d, got shape {p.shape}")
    if size is not None and p.shape[0] != size:
        raise ShapeError(f"policy has {p.shape[0]} entries, expected {size}")
    if not np.all(np.isfinite(p)) or np.any(p < 0) or abs(p.sum() - 1.0) > SIMPLEX_TOL * max(1, p.size):
        raise DomainError(f"not a probability vector: {p}")
    return p


def uniform_policies(game: NetworkGame) -> list[np.ndarray]:
    return [np.full(s, 1.0 / s) for s in game.sizes]


def mean_payoff_vector(i: int, neighbor_means, game: NetworkGame) -> np.ndarray:
    """Per-action expected payoff of population ``i``.

    ``neighbor_means`` is a mapping ``j -> policy`` (or a sequence indexed by
    population) that must contain every neighbour of ``i``.
    """
    u = np.zeros(game.actions[i].size)
    for j in game.neighbors[i]:
        try:
            xj = neighbor_means[j]
        except (KeyError, IndexError):
            raise IncompleteInputError(f"missing mean policy for neighbour {j} of population {i}") from None
        xj = check_policy(xj, game.actions[j].size)
        u += game.payoff(i, j) @ xj
    return u / game.degree(i)


def payoff_vectors(game: NetworkGame, means: Sequence[np.ndarray]) -> list[np.ndarray]:
    """Unchecked ``mean_payoff_vector`` for all populations at once (hot loop helper)."""
    out = []
    for i, nbrs in enumerate(game.neighbors):
        u = game.matrices[(i, nbrs[0])] @ means[nbrs[0]]
        for j in nbrs[1:]:
            u = u + game.matrices[(i, j)] @ means[j]
        out.append(u / len(nbrs))
    return out


def _check_weights(game, weights):
    w = np.asarray(weights, dtype=float)
    if w.shape != (game.n_populations,):
        raise ShapeError(f"expected {game.n_populations} weights, got shape {w.shape}")
    if np.any(~(w > 0)):
        raise DomainError(f"weights must be positive, got {w}")
    return w


def verify_weighted_zero_sum(game: NetworkGame, weights) -> float:
    """Max-norm of ``w_i A_ij + w_j A_ji^T`` over all edges (0 for weighted zero-sum)."""
    w = _check_weights(game, weights)
    res = 0.0
    for i, j in game.edges:
        m = w[i] * game.payoff(i, j) + w[j] * game.payoff(j, i).T
        res = max(res, float(np.max(np.abs(m))))
    return res


def _edge_potential(potential, i, j, shape):
    if (i, j) in potential:
        u = np.asarray(potential[(i, j)], dtype=float)
    elif (j, i) in potential:
        u = np.asarray(potential[(j, i)], dtype=float).T
    else:
        raise IncompleteInputError(f"no potential given for edge ({i}, {j})")
    if u.shape != shape:
        raise ShapeError(f"potential on edge ({i}, {j}) has shape {u.shape}, expected {shape}")
    return u


def verify_weighted_potential(game: NetworkGame, weights, potential) -> float:
    """Largest violation of the weighted-potential difference identity.

    For every edge and both roles, deviations
    ``A(a, b) - A(a', b) - w [U(a, b) - U(a', b)]`` are taken over all pure
    profiles; the maximum absolute deviation is returned.
    """
    w = _check_weights(game, weights)
    res = 0.0
    for i, j in game.edges:
        u = _edge_potential(potential, i, j, (game.actions[i].size, game.actions[j].size))
        for row, a, pot in ((i, game.payoff(i, j), u), (j, game.payoff(j, i), u.T)):
            d = a - w[row] * pot
            # max over (a, a', b) of d[a, b] - d[a', b]
            res = max(res, float(np.max(d.max(axis=0) - d.min(axis=0))))
    return res


def fit_zero_sum_weights(game: NetworkGame) -> np.ndarray:
    """Least-squares weights for the weighted zero-sum identity.

    Solves the homogeneous system ``w_i A_ij[a, b] + w_j A_ji[b, a] = 0`` in the
    least-squares sense (smallest right singular vector) and scales the
    result so that the first weight is 1.  The weights are only a
    certificate if all are positive and ``verify_weighted_zero_sum`` is 0.
    """
    n = game.n_populations
    rows = []
    for i, j in game.edges:
        a_ij, a_ji = game.payoff(i, j), game.payoff(j, i)
        for a in range(a_ij.shape[0]):
            for b in range(a_ij.shape[1]):
                r = np.zeros(n)
                r[i] = a_ij[a, b]
                r[j] = a_ji[b, a]
                rows.append(r)
    _, _, vt = np.linalg.svd(np.array(rows))
    w = vt[-1]
    if abs(w[0]) < 1e-300:
        return w
    return w / w[0]


# --- builtin two-population games -------------------------------------------

_BUILTIN = {
    "PE": {
        "title": "Presidential election",
        "actions": (("E", "S"), ("M", "T")),
        "A12": [[3, -1], [-2, 1]],
        "A21": [[-3, 2], [1, -1]],
    },
    "RPS": {
        "title": "Rock-paper-scissors",
        "actions": (("R", "P", "S"), ("R", "P", "S")),
        "A12": [[0, 1, -1], [-1, 0, 1], [1, -1, 0]],
        "A21": [[0, 1, -1], [-1, 0, 1], [1, -1, 0]],
    },
    "AMP": {
        "title": "Asymmetric matching pennies",
        "actions": (("H", "T"), ("H", "T")),
        "A12": [[2, -2], [0, 2]],
        "A21": [[-4, 0], [4, -4]],
    },
    "PD": {
        "title": "Prisoner's dilemma",
        "actions": (("C", "D"), ("C", "D")),
        "A12": [[6, 2], [8, 2]],
        "A21": [[6, 2], [8, 2]],
    },
    "SH": {
        "title": "Stag hunt",
        "actions": (("S", "H"), ("S", "H")),
        "A12": [[10, 1], [8, 5]],
        "A21": [[10, 1], [8, 5]],
    },
    "BoS": {
        "title": "Battle of the sexes",
        "actions": (("F", "B"), ("F", "B")),
        "A12": [[10, 0], [0, 5]],
        "A21": [[5, 0], [0, 10]],
    },
}

BUILTIN_GAMES = tuple(_BUILTIN)
ZERO_SUM_GAMES = ("PE", "AMP", "RPS")
POTENTIAL_GAMES = ("PD", "SH", "BoS")

# Weighted zero-sum weights / weighted potentials verified in the test-suite.
_CLASS_SPECS = {
    "PE": ((1.0, 1.0), None),
    "RPS": ((1.0, 1.0), None),
    "AMP": ((1.0, 0.5), None),
    "PD": ((1.0, 1.0), [[-2, 0], [0, 0]]),
    "SH": ((1.0, 1.0), [[2, 0], [0, 4]]),
    "BoS": ((1.0, 1.0), [[0, -5], [-10, 0]]),
}


def builtin_game(name: str) -> NetworkGame:
    """One of the six two-population bimatrix games PE, RPS, AMP, PD, SH, BoS."""
    try:
        spec = _BUILTIN[name]
    except KeyError:
        raise UnknownGameError(f"unknown builtin game {name!r}; choose from {', '.join(BUILTIN_GAMES)}") from None
    return NetworkGame.from_edges(
        [ActionSpace(a) for a in spec["actions"]],
        [(0, 1, spec["A12"], spec["A21"])],
        name=name,
    )


def builtin_class_spec(name: str) -> GameClassSpec:
    """Known class certificate (weights and, for potential games, ``U``) of a builtin game."""
    if name not in _CLASS_SPECS:
        raise UnknownGameError(f"unknown builtin game {name!r}")
    w, u = _CLASS_SPECS[name]
    return GameClassSpec(w, None if u is None else {(0, 1): np.array(u, dtype=float)})


def builtin_title(name: str) -> str:
    return _BUILTIN[name]["title"]


# --- game definition files ---------------------------------------------------

def game_to_dict(game: NetworkGame) -> dict:
    return {
        "name": game.name,
        "populations": [{"id": i, "actions": list(a.labels)} for i, a in enumerate(game.actions)],
        "edges": [
            {
                "i": i,
                "j": j,
                "matrix_ij": game.payoff(i, j).tolist(),
                "matrix_ji": game.payoff(j, i).tolist(),
            }
            for i, j in game.edges
        ],
    }


def game_from_dict(doc: Mapping) -> NetworkGame:
    try:
        pops = sorted(doc["populations"], key=lambda p: int(p["id"]))
        ids = [int(p["id"]) for p in pops]
        if ids != list(range(len(ids))):
            raise ShapeError(f"population ids must be 0..n-1, got {ids}")
        actions = [ActionSpace(tuple(p["actions"])) for p in pops]
        edges = [(int(e["i"]), int(e["j"]), e["matrix_ij"], e["matrix_ji"]) for e in doc["edges"]]
    except (KeyError, TypeError) as exc:
        raise ShapeError(f"malformed game definition: {exc!r}") from None
    return NetworkGame.from_edges(actions, edges, name=str(doc.get("name", "")))


def load_game(path) -> NetworkGame:
    with open(path) as fh:
        return game_from_dict(json.load(fh))


def save_game(game: NetworkGame, path) -> None:
    Path(path).write_text(json.dumps(game_to_dict(game), indent=2) + "\n")


def resolve_game(ref: str) -> NetworkGame:
    """Builtin name, or path to a JSON game definition."""
    if ref in _BUILTIN:
        return builtin_game(ref)
    if Path(ref).exists():
        return load_game(ref)
    raise UnknownGameError(f"{ref!r} is neither a builtin game nor an existing file")
