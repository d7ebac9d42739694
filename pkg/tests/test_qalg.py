import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import naive_matmul, seeds
from qrewind.gateset import make_u, make_v, nc_closed_form
from qrewind.qalg import (
    I2,
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    DomainError,
    adjugate_inverse,
    anticommutator,
    commutativity_nc,
    commutator,
    expm_su2,
    expm_su2_batch,
    expm_taylor,
    matrix_power,
    mixed_state_fidelity,
    normalize,
    projector,
    proportional_states,
    proportionality,
    random_hermitian,
    random_state,
    random_unitary,
    singular_values,
    spectral_norm,
    state_fidelity,
)


def test_pauli_commutators():
    assert np.allclose(commutator(SIGMA_Z, SIGMA_Z), 0)
    assert np.allclose(commutator(SIGMA_Z, SIGMA_Y), -2j * SIGMA_X)
    assert np.allclose(anticommutator(SIGMA_Z, SIGMA_Y), 0)
    v = make_v(3)
    assert np.allclose(anticommutator(I2, v), 2 * v)


def test_grid_commutator_against_entrywise_products():
    u, v = make_u(6), make_v(2)
    oracle = naive_matmul(u, v) - naive_matmul(v, u)
    assert np.allclose(commutator(u, v), oracle, atol=1e-14)
    assert np.allclose(oracle, -2 * 0.6 * np.sin(2 * np.pi / 11) * SIGMA_X, atol=1e-14)
    assert oracle[0, 1].real == pytest.approx(-0.64877, abs=1e-5)


def test_anticommutator_u10_v5():
    u, v = make_u(10), make_v(5)
    assert np.allclose(u, -1j * SIGMA_Z)
    oracle = naive_matmul(u, v) + naive_matmul(v, u)
    assert np.allclose(anticommutator(u, v), oracle)
    assert np.allclose(oracle, -2j * np.cos(5 * np.pi / 11) * I2)


def test_spectral_norm_examples():
    assert spectral_norm(SIGMA_X) == pytest.approx(1.0)
    assert spectral_norm(2 * I2) == pytest.approx(2.0)
    c = commutator(make_u(6), make_v(2))
    assert spectral_norm(c) == pytest.approx(np.linalg.svd(c, compute_uv=False)[0], abs=1e-14)
    assert spectral_norm(c) == pytest.approx(0.648769, abs=1e-6)


@given(seeds)
def test_singular_values_match_svd(seed):
    rng = np.random.default_rng(seed)
    m = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    s = np.linalg.svd(m, compute_uv=False)
    assert np.allclose(singular_values(m), s, rtol=1e-10, atol=1e-12)


def test_commutativity_examples():
    u = make_u(4)
    assert commutativity_nc(u, u) == 1.0
    assert commutativity_nc(make_u(6), make_v(2)) == pytest.approx(0.8947747, abs=1e-7)
    assert commutativity_nc(make_u(10), make_v(5)) == pytest.approx(0.0202535, abs=1e-7)
    for p in range(1, 11):
        for q in range(1, 11):
            u, v = make_u(p), make_v(q)
            oracle = 1 - (np.linalg.svd(commutator(u, v), compute_uv=False)[0] / 2) ** 2
            assert commutativity_nc(u, v) == pytest.approx(oracle, abs=1e-12)
            assert commutativity_nc(u, v) == pytest.approx(nc_closed_form(p, q), abs=1e-12)


def test_commutativity_rejects_non_unitary():
    with pytest.raises(DomainError):
        commutativity_nc(2 * I2, SIGMA_X)


@given(seeds)
def test_commutativity_in_unit_interval(seed):
    rng = np.random.default_rng(seed)
    nc = commutativity_nc(random_unitary(rng), random_unitary(rng))
    assert 0.0 <= nc <= 1.0


def test_expm_examples():
    assert np.allclose(expm_su2(np.zeros((2, 2)), 3.0), I2)
    th = 0.37
    assert np.allclose(expm_su2(th * SIGMA_Z, 1.0), np.diag([np.exp(-1j * th), np.exp(1j * th)]))


@given(seeds, st.floats(-4, 4))
def test_expm_matches_taylor_oracle(seed, t):
    rng = np.random.default_rng(seed)
    h = random_hermitian(rng)
    assert np.allclose(expm_su2(h, t), expm_taylor(h, t, order=40), atol=1e-12)


@given(seeds)
def test_expm_non_hermitian_and_tiny(seed):
    rng = np.random.default_rng(seed)
    h = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    assert np.allclose(expm_su2(h, 0.7), expm_taylor(h, 0.7, order=40), atol=1e-10)
    tiny = 1e-5 * random_hermitian(rng)
    assert np.allclose(expm_su2(tiny, 1.0), expm_taylor(tiny, 1.0), atol=1e-15)


@given(seeds, st.floats(-3, 3), st.floats(-3, 3))
def test_expm_group_property(seed, s, t):
    h = random_hermitian(np.random.default_rng(seed))
    assert np.allclose(expm_su2(h, s) @ expm_su2(h, t), expm_su2(h, s + t), atol=1e-10)


def test_expm_batch_matches_scalar(rng):
    hs = np.stack([random_hermitian(rng) for _ in range(5)])
    ts = rng.uniform(0, 5, size=(7, 1))
    batch = expm_su2_batch(hs, ts)
    assert batch.shape == (7, 5, 2, 2)
    for i in range(7):
        for j in range(5):
            assert np.allclose(batch[i, j], expm_su2(hs[j], ts[i, 0]), atol=1e-13)


@given(seeds)
def test_commutator_traceless_and_square(seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    b = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    c = commutator(a, b)
    assert abs(np.trace(c)) < 1e-12
    assert np.allclose(c @ c, -np.linalg.det(c) * I2, atol=1e-10)


def test_adjugate_inverse_and_negative_powers(rng):
    for _ in range(20):
        m = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        assert np.allclose(adjugate_inverse(m), np.linalg.inv(m))
        assert np.allclose(matrix_power(m, -3) @ matrix_power(m, 3), I2)
    with pytest.raises(DomainError):
        adjugate_inverse(np.ones((2, 2)))


def test_fidelity_examples():
    h = np.array([1, 0])
    assert state_fidelity(projector(h), h) == pytest.approx(1.0)
    plus, minus = normalize([1, 1]), normalize([1, -1])
    assert state_fidelity(I2 / 2, random_state(np.random.default_rng(0))) == pytest.approx(0.5)
    rho = 0.9 * projector(plus) + 0.1 * projector(minus)
    assert state_fidelity(rho, plus) == pytest.approx(0.9)


@given(seeds, st.floats(0, 2 * np.pi))
def test_fidelity_phase_invariant_and_linear(seed, phi):
    rng = np.random.default_rng(seed)
    psi, a, b = random_state(rng), random_state(rng), random_state(rng)
    w = rng.uniform()
    rho = w * projector(a) + (1 - w) * projector(b)
    f = state_fidelity(rho, psi)
    assert f == pytest.approx(state_fidelity(rho, np.exp(1j * phi) * psi), abs=1e-12)
    lin = w * state_fidelity(projector(a), psi) + (1 - w) * state_fidelity(projector(b), psi)
    assert f == pytest.approx(lin, abs=1e-12)


def _sqrtm_psd(m):
    w, v = np.linalg.eigh(m)
    return (v * np.sqrt(np.clip(w, 0, None))) @ v.conj().T


@given(seeds)
def test_mixed_state_fidelity_matches_uhlmann(seed):
    rng = np.random.default_rng(seed)

    def rand_rho():
        z = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        r = z @ z.conj().T
        return r / np.trace(r)

    rho, sigma = rand_rho(), rand_rho()
    s = _sqrtm_psd(rho)
    oracle = np.trace(_sqrtm_psd(s @ sigma @ s)).real ** 2
    assert mixed_state_fidelity(rho, sigma) == pytest.approx(oracle, abs=1e-9)


def test_proportionality_examples(rng):
    assert proportionality(3j * SIGMA_X, SIGMA_X) == pytest.approx(3j)
    assert proportionality(SIGMA_X, SIGMA_Z) is None
    with pytest.raises(DomainError):
        proportionality(SIGMA_X, np.zeros((2, 2)))
    for _ in range(100):
        c = commutator(random_unitary(rng), random_unitary(rng))
        lam = proportionality(c @ c, I2)
        assert lam == pytest.approx(-np.linalg.det(c), abs=1e-10)


def test_proportionality_with_vanishing_entries():
    m = np.array([[0, 2], [0, 0]])
    assert proportionality(5 * m, m) == pytest.approx(5)


def test_proportional_states(rng):
    psi = random_state(rng)
    assert proportional_states(psi, 1j * 2.5 * psi)
    assert not proportional_states([1, 0], [0, 1])
