"""Population graphs and the assignment of one bimatrix game to every edge."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import networkx as nx

from .errors import DomainError, GenerationError, ShapeError
from .game import NetworkGame

GRAPH_KINDS = ("edge", "complete", "ring", "watts_strogatz")
MAX_CONNECT_TRIES = 100


@dataclass(frozen=True)
class GraphSpec:
    kind: str = "watts_strogatz"
    n: int = 10
    k: int = 4
    beta: float = 0.3
    seed: int = 0

    def __post_init__(self):
        if self.kind not in GRAPH_KINDS:
            raise DomainError(f"unknown graph kind {self.kind!r}; choose from {GRAPH_KINDS}")
        if self.n < 2:
            raise DomainError("a graph needs n >= 2 populations")
        if self.kind == "edge" and self.n != 2:
            raise DomainError("kind='edge' is the single edge between 2 populations")
        if self.kind == "watts_strogatz":
            if self.k % 2 or not 2 <= self.k < self.n:
                raise DomainError(f"Watts-Strogatz needs an even k with 2 <= k < n, got k={self.k}, n={self.n}")
            if not 0 <= self.beta <= 1:
                raise DomainError(f"rewiring probability must be in [0, 1], got {self.beta}")


def generate_graph(spec: GraphSpec) -> list[tuple[int, int]]:
    """Sorted edge list ``(i, j)`` with ``i < j``; always connected, deterministic given the seed."""
    n = spec.n
    if spec.kind == "edge":
        return [(0, 1)]
    if spec.kind == "complete":
        return list(itertools.combinations(range(n), 2))
    if spec.kind == "ring":
        return sorted({tuple(sorted((i, (i + 1) % n))) for i in range(n)})
    try:
        g = nx.connected_watts_strogatz_graph(n, spec.k, spec.beta, tries=MAX_CONNECT_TRIES,
                                              seed=spec.seed)
    except nx.NetworkXError as exc:
        raise GenerationError(f"no connected Watts-Strogatz graph after {MAX_CONNECT_TRIES} tries: {exc}") from None
    return sorted(tuple(sorted(e)) for e in g.edges())


def assign_payoffs(edges, template: NetworkGame, name: str | None = None) -> NetworkGame:
    """Play ``template`` (a 2-population game) on every edge, lower id as the row player."""
    if template.n_populations != 2 or template.edges != ((0, 1),):
        raise ShapeError("payoff template must be a single-edge 2-population game")
    if template.sizes[0] != template.sizes[1]:
        raise ShapeError("a shared action space needs a template with equal action counts")
    edges = sorted({tuple(sorted(e)) for e in edges})
    if any(i == j for i, j in edges):
        raise ShapeError("self-loops are not allowed")
    nodes = sorted({v for e in edges for v in e})
    if nodes != list(range(len(nodes))):
        raise ShapeError(f"edge list must cover populations 0..n-1, got {nodes}")
    a12, a21 = template.payoff(0, 1), template.payoff(1, 0)
    actions = [template.actions[0]] * len(nodes)
    return NetworkGame.from_edges(actions, [(i, j, a12, a21) for i, j in edges],
                                  name=name if name is not None else f"{template.name}-network")
