import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import seeds
from qrewind.classical import (
    ClassicalStrategy,
    average_fidelity,
    budget,
    optimize_baseline,
    strategy_operator,
    write_baseline_csv,
)
from qrewind.gateset import input_state, input_states, make_pair, select_pairs
from qrewind.qalg import I2, DomainError, adjugate_inverse, expm_su2, random_hermitian, random_unitary


@pytest.fixture(scope="module")
def grid():
    return select_pairs(0.9), input_states()


def test_strategy_validation():
    with pytest.raises(DomainError):
        ClassicalStrategy(1, (1.0,))
    with pytest.raises(DomainError):
        ClassicalStrategy(0, (-1.0,))
    s = ClassicalStrategy(2, (1.0, 1.0, 1.0))
    assert s.duration == 5.0
    with pytest.raises(DomainError):
        s.check_budget(0)
    s.check_budget(1)
    assert budget(3) == 7


def test_strategy_operator_trivial(rng):
    h = random_hermitian(rng)
    v = random_unitary(rng)
    assert np.allclose(strategy_operator(ClassicalStrategy(0, (0.0,)), h, v), I2)
    assert np.allclose(strategy_operator(ClassicalStrategy(0, (1.3,)), h, v), expm_su2(h, 1.3))


@given(seeds, st.lists(st.floats(0, 2), min_size=3, max_size=3))
def test_strategy_operator_matches_fold(seed, times):
    rng = np.random.default_rng(seed)
    h, v = random_hermitian(rng), random_unitary(rng)
    oracle = expm_su2(h, times[0])
    for t in times[1:]:
        oracle = expm_su2(h, t) @ (v @ oracle)
    assert np.allclose(strategy_operator(ClassicalStrategy(2, tuple(times)), h, v), oracle, atol=1e-12)


def test_strategy_operator_budget():
    pair = make_pair(5, 5)
    with pytest.raises(DomainError):
        strategy_operator(ClassicalStrategy(0, (6.0,)), pair.hamiltonian, pair.V, n=1)


def test_exact_inverse_scores_one(grid):
    pairs, states = grid
    f = average_fidelity(lambda pair: adjugate_inverse(np.linalg.matrix_power(pair.U, 2)), pairs, states, 2)
    assert f == pytest.approx(1.0, abs=1e-12)


def test_identity_strategy_against_closed_form(grid):
    pairs, states = grid
    f = average_fidelity(ClassicalStrategy(0, (0.0,)), pairs, states, 1)
    mult = {4: 4, 5: 6, 6: 8, 7: 8, 8: 8, 9: 8, 10: 8}
    per_p = {p: (1 + 3 * np.cos(np.arcsin(p / 10)) ** 2) / 4 for p in mult}
    oracle = sum(mult[p] * per_p[p] for p in mult) / sum(mult.values())
    assert sum(mult.values()) == len(pairs)
    assert f == pytest.approx(oracle, abs=1e-12)
    assert f == pytest.approx(0.5719, abs=1e-4)


def test_batch_objective_matches_per_pair_loop(grid, rng):
    pairs, states = grid
    s = ClassicalStrategy(2, (0.4, 1.1, 0.7))
    loop = []
    for pair in pairs:
        op = np.linalg.matrix_power(pair.U, 2) @ strategy_operator(s, pair.hamiltonian, pair.V)
        loop += [abs(np.vdot(x.vector, op @ x.vector)) ** 2 for x in states]
    assert average_fidelity(s, pairs, states, 2) == pytest.approx(np.mean(loop), abs=1e-12)


@given(st.floats(0, 2 * np.pi))
def test_global_phase_invariance(phi):
    pairs = [make_pair(7, 3), make_pair(9, 5)]
    states = input_states()
    s = ClassicalStrategy(1, (0.5, 1.5))
    base = average_fidelity(s, pairs, states, 1)
    shifted = average_fidelity(s, pairs, [np.exp(1j * phi) * x.vector for x in states], 1)
    assert shifted == pytest.approx(base, abs=1e-12)


def test_stated_v_free_strategy(grid):
    pairs, states = grid
    for n in (1, 2, 3):
        f = average_fidelity(ClassicalStrategy(0, (5.91507 - n,)), pairs, states, n)
        assert f == pytest.approx(0.733713, abs=1e-3)


def test_v_free_optimizer_matches_dense_scan(grid):
    pairs, states = grid
    res = optimize_baseline(pairs, states, 1, k_max=0)
    ts = np.arange(0, 5.0 + 1e-9, 1e-3)
    scan = max(average_fidelity(ClassicalStrategy(0, (t,)), pairs, states, 1) for t in ts[::10])
    assert res.F >= scan - 1e-6
    assert res.F == pytest.approx(0.733713, abs=1e-4)
    assert res.best_strategy.k == 0
    assert res.F == pytest.approx(average_fidelity(res.best_strategy, pairs, states, 1), abs=1e-12)


def test_optimizer_single_pair_phase_matching():
    pair = make_pair(10, 5)
    res = optimize_baseline([pair], [input_state("+")], 1, k_max=0)
    assert res.F == pytest.approx(1.0, abs=1e-9)


def test_zero_budget_forces_identity(grid):
    pairs, states = grid
    res = optimize_baseline(pairs, states, 1, budget_total=0.0)
    assert res.best_strategy == ClassicalStrategy(0, (0.0,))
    assert res.F == pytest.approx(average_fidelity(ClassicalStrategy(0, (0.0,)), pairs, states, 1))


def test_optimizer_with_insertions_respects_budget(grid, tmp_path):
    pairs, states = grid
    res = optimize_baseline(pairs, states, 1, n_starts=8)
    assert set(res.per_k) == {0, 1}
    for k, (strategy, f) in res.per_k.items():
        strategy.check_budget(1)
        assert f == pytest.approx(average_fidelity(strategy, pairs, states, 1), abs=1e-9)
    assert res.F >= 0.7337 - 1e-4
    path = write_baseline_csv([res], tmp_path / "b.csv")
    assert path.read_text().splitlines()[0] == "n,k,times,F"
