import numpy as np
import pytest

from pngdyn.errors import DomainError, ShapeError
from pngdyn.game import builtin_game
from pngdyn.network import GraphSpec, assign_payoffs, generate_graph


def test_single_edge():
    assert generate_graph(GraphSpec("edge", 2)) == [(0, 1)]


def test_complete():
    assert len(generate_graph(GraphSpec("complete", 4))) == 6


def test_ws_without_rewiring_is_ring_lattice():
    edges = generate_graph(GraphSpec("watts_strogatz", 10, 4, 0.0, seed=3))
    expected = sorted({tuple(sorted((i, (i + m) % 10))) for i in range(10) for m in (1, 2)})
    assert edges == expected


def test_ws_reproducible_and_connected():
    spec = GraphSpec("watts_strogatz", 10, 4, 0.3, seed=11)
    a, b = generate_graph(spec), generate_graph(spec)
    assert a == b
    assert len(a) == 20
    # connectivity via union-find
    parent = list(range(10))

    def find(v):
        while parent[v] != v:
            v = parent[v]
        return v

    for i, j in a:
        parent[find(i)] = find(j)
    assert len({find(v) for v in range(10)}) == 1


def test_ws_full_rewiring_changes_lattice():
    lattice = generate_graph(GraphSpec("watts_strogatz", 10, 4, 0.0))
    assert generate_graph(GraphSpec("watts_strogatz", 10, 4, 1.0, seed=1)) != lattice


def test_invalid_specs():
    with pytest.raises(DomainError):
        GraphSpec("watts_strogatz", 10, 3, 0.3)
    with pytest.raises(DomainError):
        GraphSpec("watts_strogatz", 10, 4, 1.5)
    with pytest.raises(DomainError):
        GraphSpec("star", 4)


def test_single_edge_template_is_builtin():
    pd = builtin_game("PD")
    g = assign_payoffs(generate_graph(GraphSpec("edge", 2)), pd)
    assert g.edges == pd.edges
    np.testing.assert_array_equal(g.payoff(0, 1), pd.payoff(0, 1))
    np.testing.assert_array_equal(g.payoff(1, 0), pd.payoff(1, 0))


def test_ring_rps_degrees():
    g = assign_payoffs(generate_graph(GraphSpec("ring", 3)), builtin_game("RPS"))
    assert [g.degree(i) for i in range(3)] == [2, 2, 2]


def test_complete_pd():
    g = assign_payoffs(generate_graph(GraphSpec("complete", 3)), builtin_game("PD"))
    assert len(g.edges) == 3
    assert [g.degree(i) for i in range(3)] == [2, 2, 2]


def test_lower_id_is_row_player():
    pe = builtin_game("PE")
    g = assign_payoffs([(2, 0), (1, 2)], pe)
    np.testing.assert_array_equal(g.payoff(0, 2), pe.payoff(0, 1))
    np.testing.assert_array_equal(g.payoff(2, 0), pe.payoff(1, 0))


def test_bad_edge_lists():
    with pytest.raises(ShapeError):
        assign_payoffs([(0, 2)], builtin_game("PD"))
    with pytest.raises(ShapeError):
        assign_payoffs([(0, 0), (0, 1)], builtin_game("PD"))
