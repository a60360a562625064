import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pngdyn import game as G
from pngdyn.errors import DomainError, IncompleteInputError, ShapeError, UnknownGameError

# hand-evaluated payoff tables (row form for each population)
PD = np.array([[6.0, 2.0], [8.0, 2.0]])
RPS = np.array([[0.0, 1.0, -1.0], [-1.0, 0.0, 1.0], [1.0, -1.0, 0.0]])
PE_12 = np.array([[3.0, -1.0], [-2.0, 1.0]])
PE_21 = np.array([[-3.0, 2.0], [1.0, -1.0]])


def test_builtin_pd_matrices():
    g = G.builtin_game("PD")
    np.testing.assert_array_equal(g.payoff(0, 1), PD)
    np.testing.assert_array_equal(g.payoff(1, 0), PD)


def test_builtin_rps_is_antisymmetric():
    g = G.builtin_game("RPS")
    np.testing.assert_array_equal(g.payoff(0, 1), RPS)
    np.testing.assert_array_equal(g.payoff(1, 0), -RPS.T)


def test_builtin_pe_matrices():
    g = G.builtin_game("PE")
    np.testing.assert_array_equal(g.payoff(0, 1), PE_12)
    np.testing.assert_array_equal(g.payoff(1, 0), PE_21)


@pytest.mark.parametrize("name", G.BUILTIN_GAMES)
def test_builtin_dimensions(name):
    g = G.builtin_game(name)
    for (i, j), a in g.matrices.items():
        assert a.shape == (g.actions[i].size, g.actions[j].size)
    assert not g.payoff(0, 1).flags.writeable


def test_unknown_builtin():
    with pytest.raises(UnknownGameError):
        G.builtin_game("chicken")


def test_pd_payoff_against_cooperator():
    g = G.builtin_game("PD")
    np.testing.assert_allclose(G.mean_payoff_vector(0, {1: [1.0, 0.0]}, g), [6.0, 8.0])


def test_rps_uniform_payoff_is_zero():
    g = G.builtin_game("RPS")
    np.testing.assert_allclose(G.mean_payoff_vector(0, {1: np.full(3, 1 / 3)}, g), 0.0, atol=1e-15)


def test_missing_neighbour_and_shape():
    g = G.builtin_game("PD")
    with pytest.raises(IncompleteInputError):
        G.mean_payoff_vector(0, {}, g)
    with pytest.raises(ShapeError):
        G.mean_payoff_vector(0, {1: [1 / 3, 1 / 3, 1 / 3]}, g)
    with pytest.raises(DomainError):
        G.mean_payoff_vector(0, {1: [0.7, 0.7]}, g)


def test_two_identical_neighbours_average_to_one():
    s = G.ActionSpace(("C", "D"))
    g3 = G.NetworkGame.from_edges([s, s, s], [(0, 1, PD, PD), (0, 2, PD, PD)])
    g2 = G.builtin_game("PD")
    x = np.array([0.3, 0.7])
    np.testing.assert_allclose(G.mean_payoff_vector(0, {1: x, 2: x}, g3), G.mean_payoff_vector(0, {1: x}, g2))


@settings(max_examples=50, deadline=None)
@given(st.sampled_from(G.BUILTIN_GAMES), st.floats(0, 1), st.integers(0, 2**31))
def test_payoff_linear_in_neighbour_mean(name, alpha, seed):
    g = G.builtin_game(name)
    rng = np.random.default_rng(seed)
    x, y = rng.dirichlet(np.ones(g.sizes[1]), 2)
    lhs = G.mean_payoff_vector(0, {1: alpha * x + (1 - alpha) * y}, g)
    rhs = alpha * G.mean_payoff_vector(0, {1: x}, g) + (1 - alpha) * G.mean_payoff_vector(0, {1: y}, g)
    np.testing.assert_allclose(lhs, rhs, atol=1e-12)


def test_zero_sum_residuals():
    assert G.verify_weighted_zero_sum(G.builtin_game("PE"), (1, 1)) == 0.0
    assert G.verify_weighted_zero_sum(G.builtin_game("RPS"), (1, 1)) == 0.0
    assert G.verify_weighted_zero_sum(G.builtin_game("PD"), (1, 1)) == 12.0
    assert G.verify_weighted_zero_sum(G.builtin_game("PE"), (3.5, 3.5)) == 0.0


def test_amp_weights_found_by_least_squares():
    g = G.builtin_game("AMP")
    w = G.fit_zero_sum_weights(g)
    assert np.all(w > 0)
    np.testing.assert_allclose(w, [1.0, 0.5], atol=1e-12)
    assert G.verify_weighted_zero_sum(g, w) < 1e-12
    assert G.verify_weighted_zero_sum(g, G.builtin_class_spec("AMP").weights) < 1e-12


def test_pd_potential():
    g = G.builtin_game("PD")
    U = np.array([[-2.0, 0.0], [0.0, 0.0]])
    assert G.verify_weighted_potential(g, (1, 1), {(0, 1): U}) == 0.0
    assert G.verify_weighted_potential(g, (1, 1), {(0, 1): U + 17.0}) == 0.0


def test_rps_is_not_potential():
    g = G.builtin_game("RPS")
    assert G.verify_weighted_potential(g, (1, 1), {(0, 1): np.zeros((3, 3))}) > 0


@pytest.mark.parametrize("name", G.POTENTIAL_GAMES)
def test_builtin_potential_certificates(name):
    spec = G.builtin_class_spec(name)
    assert G.verify_weighted_potential(G.builtin_game(name), spec.weights, spec.potential) < 1e-12


@pytest.mark.parametrize("name", G.ZERO_SUM_GAMES)
def test_builtin_zero_sum_certificates(name):
    spec = G.builtin_class_spec(name)
    assert G.verify_weighted_zero_sum(G.builtin_game(name), spec.weights) < 1e-12


def test_weights_must_be_positive():
    with pytest.raises(DomainError):
        G.verify_weighted_zero_sum(G.builtin_game("PE"), (1, -1))
    with pytest.raises(ShapeError):
        G.verify_weighted_zero_sum(G.builtin_game("PE"), (1, 1, 1))


def test_invalid_games():
    s = G.ActionSpace(("a", "b"))
    with pytest.raises(ShapeError):
        G.NetworkGame.from_edges([s, s], [(0, 1, PD, np.ones((3, 2)))])
    with pytest.raises(ShapeError):
        G.NetworkGame.from_edges([s, s, s], [(0, 1, PD, PD)])  # isolated population
    with pytest.raises(ShapeError):
        G.ActionSpace(("a", "a"))


def test_json_roundtrip(tmp_path):
    g = G.builtin_game("BoS")
    p = tmp_path / "bos.json"
    G.save_game(g, p)
    h = G.load_game(p)
    assert h.sizes == g.sizes and h.edges == g.edges
    for k in g.matrices:
        np.testing.assert_array_equal(h.matrices[k], g.matrices[k])
    assert G.resolve_game(str(p)).edges == g.edges
    doc = json.loads(p.read_text())
    assert {"populations", "edges"} <= set(doc)


def test_resolve_unknown():
    with pytest.raises(UnknownGameError):
        G.resolve_game("no-such-game")
