import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pngdyn.abm import (AgentEnsemble, RegretInit, SimulationConfig, Trajectory, average_trajectories,
                        ensemble_statistics, homogeneity_time, init_regrets, instantaneous_regret,
                        run_replicates, run_simulation, simulation_step, softmax_policy,
                        update_cumulative_regret)
from pngdyn.errors import DomainError, InitializationError, NumericError, ShapeError
from pngdyn.game import BUILTIN_GAMES, builtin_game, mean_payoff_vector
from pngdyn.qre import distance, solve_qre


def test_softmax_examples():
    np.testing.assert_allclose(softmax_policy([0.0, 0.0], 1.0), [0.5, 0.5])
    np.testing.assert_allclose(softmax_policy([np.log(2.0), 0.0], 1.0), [2 / 3, 1 / 3], rtol=1e-15)
    np.testing.assert_array_equal(softmax_policy([5.0, -3.0, 1e3], 0.0), np.full(3, 1 / 3))


def test_softmax_errors():
    with pytest.raises(NumericError):
        softmax_policy([np.nan, 0.0], 1.0)
    with pytest.raises(NumericError):
        softmax_policy([np.inf, 0.0], 1.0)
    with pytest.raises(DomainError):
        softmax_policy([0.0, 0.0], -1.0)


def test_softmax_large_regrets_stay_finite():
    p = softmax_policy([1e4, 0.0], 10.0)
    np.testing.assert_array_equal(p, [1.0, 0.0])


def test_instantaneous_regret_examples():
    g = builtin_game("PD")
    u = mean_payoff_vector(0, {1: [1.0, 0.0]}, g)
    np.testing.assert_allclose(instantaneous_regret([1.0, 0.0], u), [0.0, 2.0])
    np.testing.assert_allclose(instantaneous_regret([0.2, 0.8], [3.0, 3.0]), [0.0, 0.0], atol=1e-15)
    np.testing.assert_allclose(instantaneous_regret([0.5, 0.5], [1.0, -1.0]), [1.0, -1.0])
    with pytest.raises(ShapeError):
        instantaneous_regret([0.5, 0.5], [1.0, 0.0, 2.0])


def test_cumulative_regret_recursion():
    np.testing.assert_allclose(update_cumulative_regret([1.0, -1.0], [0.0, 0.0], 2), [0.5, -0.5])
    np.testing.assert_array_equal(update_cumulative_regret([9.0, 9.0], [0.25, -3.0], 1), [0.25, -3.0])
    R = np.array([5.0, -2.0])
    r = np.array([0.3, -0.7])
    for t in range(1, 101):
        R = update_cumulative_regret(R, r, t)
    np.testing.assert_allclose(R, r, rtol=0, atol=1e-15)
    with pytest.raises(DomainError):
        update_cumulative_regret(R, r, 0)


def test_init_zero_sd():
    cfg = SimulationConfig(builtin_game("PD"), 7, init=RegretInit((0.0, 0.0), 0.0))
    ens = init_regrets(cfg)
    for R, P in zip(ens.regrets, ens.policies):
        np.testing.assert_array_equal(R, 0.0)
        np.testing.assert_array_equal(P, 0.5)


def test_init_matches_distribution():
    cfg = SimulationConfig(builtin_game("PD"), 10_000, init=RegretInit(1.0, 0.1))
    for R in init_regrets(cfg).regrets:
        assert np.all(np.abs(R.mean(axis=0) - 1) < 0.01)
        assert np.all(np.abs(R.var(axis=0) - 0.01) < 0.001)


def test_init_deterministic_and_truncated():
    cfg = SimulationConfig(builtin_game("SH"), 500, init=RegretInit(0.1, 1.0, truncate=True), seed=5)
    a, b = init_regrets(cfg), init_regrets(cfg)
    for Ra, Rb in zip(a.regrets, b.regrets):
        np.testing.assert_array_equal(Ra, Rb)
        assert np.all(Ra > 0)


def test_init_truncation_failure():
    cfg = SimulationConfig(builtin_game("PD"), 10, init=RegretInit(-60.0, 1.0, truncate=True))
    with pytest.raises(InitializationError):
        init_regrets(cfg)


def test_init_mean_shape_error():
    cfg = SimulationConfig(builtin_game("RPS"), 10, init=RegretInit((1.0, 0.5), 0.1))
    with pytest.raises(ShapeError):
        init_regrets(cfg)


def test_homogeneous_step_equals_single_agent():
    g = builtin_game("PE")
    many = AgentEnsemble.from_regrets([np.tile([0.3, -0.1], (50, 1)), np.tile([1.0, 2.0], (50, 1))], 1.0)
    one = AgentEnsemble.from_regrets([[[0.3, -0.1]], [[1.0, 2.0]]], 1.0)
    for t in range(1, 6):
        many = simulation_step(many, g, 1.0, t)
        one = simulation_step(one, g, 1.0, t)
        for Rm, Ro in zip(many.regrets, one.regrets):
            np.testing.assert_array_equal(Rm, np.broadcast_to(Ro, Rm.shape))


def test_rps_uniform_is_stationary():
    g = builtin_game("RPS")
    ens = AgentEnsemble.from_regrets([np.zeros((4, 3)), np.zeros((4, 3))], 1.0)
    for t in range(1, 4):
        ens = simulation_step(ens, g, 1.0, t)
    for R, P in zip(ens.regrets, ens.policies):
        np.testing.assert_allclose(R, 0.0, atol=1e-15)
        np.testing.assert_allclose(P, 1 / 3, atol=1e-15)


def test_ensemble_statistics_examples():
    ens = AgentEnsemble.from_regrets([[[0.0, 0.0], [2.0, 0.0]], [[1.0, 1.0]]], 1.0)
    m, p, v = ensemble_statistics(ens)
    np.testing.assert_allclose(m[0], [1.0, 0.0])
    np.testing.assert_allclose(v[0], [1.0, 0.0])
    np.testing.assert_array_equal(v[1], [0.0, 0.0])
    np.testing.assert_allclose(p[1], ens.policies[1][0])


@settings(max_examples=25, deadline=None)
@given(st.sampled_from(BUILTIN_GAMES), st.integers(0, 2**31), st.floats(0.0, 5.0))
def test_simplex_and_zero_projection_each_step(name, seed, lam):
    g = builtin_game(name)
    rng = np.random.default_rng(seed)
    ens = AgentEnsemble.from_regrets([rng.normal(0, 2, (20, s)) for s in g.sizes], lam)
    for t in range(1, 30):
        prev = ens.policies
        means = [P.mean(axis=0) for P in prev]
        nxt = simulation_step(ens, g, lam, t)
        for i, P in enumerate(prev):
            u = mean_payoff_vector(i, means, g)
            r = instantaneous_regret(P, u)
            assert np.max(np.abs(np.einsum("ka,ka->k", P, r))) < 1e-12
        for P in nxt.policies:
            assert np.max(np.abs(P.sum(axis=1) - 1)) < 1e-12
        ens = nxt


def test_exchangeability():
    g = builtin_game("BoS")
    rng = np.random.default_rng(1)
    regs = [rng.normal(1, 0.3, (30, 2)) for _ in range(2)]
    perm = [rng.permutation(30) for _ in range(2)]
    a = AgentEnsemble.from_regrets(regs, 1.0)
    b = AgentEnsemble.from_regrets([R[p] for R, p in zip(regs, perm)], 1.0)
    for t in range(1, 20):
        a, b = simulation_step(a, g, 1.0, t), simulation_step(b, g, 1.0, t)
    for sa, sb in zip(ensemble_statistics(a), ensemble_statistics(b)):
        for x, y in zip(sa, sb):
            np.testing.assert_allclose(x, y, rtol=1e-13, atol=1e-15)


def test_run_is_bit_identical():
    cfg = SimulationConfig(builtin_game("AMP"), 50, steps=300, init=RegretInit(1.0, 0.2, True), seed=9)
    a, b = run_simulation(cfg), run_simulation(cfg)
    assert a.to_csv() == b.to_csv()


def test_replicates_parallel_equal_serial():
    cfg = SimulationConfig(builtin_game("PD"), 20, steps=50, init=RegretInit(1.0, 0.1), seed=3)
    serial = run_replicates(cfg, 3, jobs=1)
    parallel = run_replicates(cfg, 3, jobs=2)
    assert [t.to_csv() for t in serial] == [t.to_csv() for t in parallel]
    assert serial[0].to_csv() != serial[1].to_csv()


def test_one_step_run():
    cfg = SimulationConfig(builtin_game("PD"), 10, steps=1, init=RegretInit(1.0, 0.1), seed=0)
    tr = run_simulation(cfg)
    np.testing.assert_array_equal(tr.t, [0, 1])


def test_zero_sd_has_zero_variance_and_immediate_homogeneity():
    cfg = SimulationConfig(builtin_game("RPS"), 20, steps=200, init=RegretInit((1.0, 0.5, 0.0), 0.0))
    tr = run_simulation(cfg)
    for v in tr.regret_variance:
        np.testing.assert_array_equal(v, 0.0)
    assert homogeneity_time(tr) == 0
    assert homogeneity_time(tr, 0.0) is None


def test_zero_threshold_never_reached():
    cfg = SimulationConfig(builtin_game("PD"), 20, steps=200, init=RegretInit(1.0, 0.1))
    assert homogeneity_time(run_simulation(cfg), 0.0) is None
    with pytest.raises(DomainError):
        homogeneity_time(run_simulation(cfg), -1.0)


def test_larger_sd_homogenises_later():
    g = builtin_game("SH")
    times = []
    for sd in (0.05, 0.1):
        cfg = SimulationConfig(g, 100, steps=500, init=RegretInit((1.0, 0.6), sd), seed=4)
        times.append(homogeneity_time(run_simulation(cfg)))
    assert times[1] >= times[0]


def test_variance_times_t_squared_is_constant():
    # small spread around a common regret: agents (nearly) share one policy
    g = builtin_game("PE")
    rng = np.random.default_rng(0)
    regs = [np.array([0.4, -0.2]) + rng.normal(0, 1e-3, (40, 2)) for _ in range(2)]
    ens = AgentEnsemble.from_regrets(regs, 1.0)
    vals = {}
    for t in range(1, 1001):
        ens = simulation_step(ens, g, 1.0, t)
        if t in (10, 100, 1000):
            vals[t] = ensemble_statistics(ens)[2][0] * t ** 2
    np.testing.assert_allclose(vals[100], vals[10], rtol=1e-2)
    np.testing.assert_allclose(vals[1000], vals[10], rtol=1e-2)


def test_csv_roundtrip_exact(tmp_path):
    cfg = SimulationConfig(builtin_game("RPS"), 30, steps=100, record_every=7,
                           init=RegretInit(1.0, 0.3, True), seed=2, snapshot_steps=(5, 50))
    tr = run_simulation(cfg)
    assert sorted(tr.snapshots) == [5, 50]
    path = tmp_path / "t.csv"
    tr.to_csv(path)
    back = Trajectory.from_csv(path)
    np.testing.assert_array_equal(back.t, tr.t)
    assert back.actions == tr.actions
    for name in ("mean_policy", "mean_regret", "regret_variance"):
        for x, y in zip(getattr(back, name), getattr(tr, name)):
            np.testing.assert_array_equal(x, y)
    assert back.to_csv() == tr.to_csv()
    assert tr.t[-1] == 100


def test_pd_run_reaches_qre():
    g = builtin_game("PD")
    tr = run_simulation(SimulationConfig(g, 100, 1.0, 10_000, RegretInit(1.0, 0.1, True), seed=0,
                                         record_every=100))
    q = solve_qre(g, 1.0, method="newton", start=[np.full(2, 0.5)] * 2)
    assert distance(tr.final_policies(), q.policies) < 1e-3


def test_pe_run_reaches_qre():
    g = builtin_game("PE")
    tr = run_simulation(SimulationConfig(g, 100, 1.0, 10_000, RegretInit(1.0, 0.1, True), seed=0,
                                         record_every=100))
    q = solve_qre(g, 1.0)
    assert distance(tr.final_policies(), q.policies) < 1e-2


def test_average_trajectories():
    cfg = SimulationConfig(builtin_game("PD"), 10, steps=20, init=RegretInit(1.0, 0.1))
    trs = run_replicates(cfg, 2)
    avg = average_trajectories(trs)
    np.testing.assert_allclose(avg.mean_policy[0], (trs[0].mean_policy[0] + trs[1].mean_policy[0]) / 2)
