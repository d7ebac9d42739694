"""Quantum SWITCH realized with scattered probes.

Joint space ordering is ancilla (2) x probe (3) x target (2), flattened
row-major into a 12-vector.  The probe basis is ``|Phi>`` (stays in the lab),
``|Xi>`` (lab state that scattered probes are filtered into) and ``|Psi_P>``
(the scattering state).

Evolution over one time step is block-wise.  Components with the probe in
the lab evolve as ``W (x) U`` with ``W = exp(-i H_P dt)`` and
``U = exp(-i H_0 dt)``.  Components with the probe in the scattering mode
evolve as ``exp(-i H_I dt)``, where ``H_I`` lives on ``span{Xi, Psi_P} (x)
target`` so that a scattered probe can return to the lab state ``|Xi>``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .qalg import DomainError, as_matrix, expm_su2, require_normalized

PHI, XI, PSI_P = 0, 1, 2
LAB = (PHI, XI)
DIM_A, DIM_P, DIM_T = 2, 3, 2
DIM = DIM_A * DIM_P * DIM_T


def probe_ket(index: int) -> np.ndarray:
    e = np.zeros(DIM_P, dtype=complex)
    e[index] = 1.0
    return e


def _lab_projector() -> np.ndarray:
    return np.diag([1.0, 1.0, 0.0]).astype(complex)


@dataclass(frozen=True)
class ScatteringModel:
    H0: np.ndarray
    HP: np.ndarray
    HI: np.ndarray
    dt: float = 1.0

    def __post_init__(self):
        h0 = as_matrix(self.H0)
        hp = np.asarray(self.HP, dtype=complex)
        hi = np.asarray(self.HI, dtype=complex)
        if hp.shape == (2, 2):
            full = np.zeros((DIM_P, DIM_P), dtype=complex)
            full[:2, :2] = hp
            hp = full
        if hp.shape != (DIM_P, DIM_P) or hi.shape != (DIM_P * DIM_T, DIM_P * DIM_T):
            raise DomainError("HP must be 2x2 (lab block) or 3x3; HI must be 6x6")
        if not np.allclose(hp, hp.conj().T, atol=1e-12) or not np.allclose(hi, hi.conj().T, atol=1e-12):
            raise DomainError("HP and HI must be Hermitian")
        object.__setattr__(self, "H0", h0)
        object.__setattr__(self, "HP", hp)
        object.__setattr__(self, "HI", hi)

    @property
    def U(self) -> np.ndarray:
        return expm_su2(self.H0, self.dt)

    @property
    def W(self) -> np.ndarray:
        return expm(-1j * self.HP * self.dt)

    @property
    def scattering_propagator(self) -> np.ndarray:
        return expm(-1j * self.HI * self.dt)

    def block_condition(self, tol: float = 1e-12) -> bool:
        """``H_P`` stays in the lab and ``H_I`` never touches ``|Phi>``."""
        hp_ok = np.all(np.abs(self.HP[PSI_P, :]) <= tol) and np.all(np.abs(self.HP[:, PSI_P]) <= tol)
        hi = self.HI.reshape(DIM_P, DIM_T, DIM_P, DIM_T)
        hi_ok = np.all(np.abs(hi[PHI]) <= tol) and np.all(np.abs(hi[:, :, PHI]) <= tol)
        return bool(hp_ok and hi_ok)

    def effective_v(self) -> np.ndarray:
        """``V = (<Xi| (x) 1) exp(-i H_I dt) (|Psi_P> (x) 1)``."""
        prop = self.scattering_propagator.reshape(DIM_P, DIM_T, DIM_P, DIM_T)
        return prop[XI, :, PSI_P, :].copy()


@dataclass(frozen=True)
class JointState:
    amplitudes: np.ndarray

    @property
    def tensor(self) -> np.ndarray:
        return self.amplitudes.reshape(DIM_A, DIM_P, DIM_T)

    @property
    def norm2(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    @classmethod
    def from_tensor(cls, t: np.ndarray) -> "JointState":
        return cls(np.asarray(t, dtype=complex).reshape(DIM))

    def branch(self, ancilla: int) -> np.ndarray:
        """Probe (x) target block for one ancilla value, shape ``(3, 2)``."""
        return self.tensor[ancilla].copy()

    def reduced_ancilla(self) -> np.ndarray:
        t = self.tensor.reshape(DIM_A, DIM_P * DIM_T)
        return t @ t.conj().T


def prepare_omega(model: ScatteringModel, psi_target) -> JointState:
    """``(|0>|Phi> + |1>|Psi_P>)/sqrt(2) (x) psi``."""
    psi = require_normalized(psi_target)
    anc_probe = (np.kron([1, 0], probe_ket(PHI)) + np.kron([0, 1], probe_ket(PSI_P))) / np.sqrt(2)
    return JointState(np.kron(anc_probe, psi))


def probe_target_propagator(model: ScatteringModel) -> np.ndarray:
    """One-step map on probe (x) target (6x6): lab block ``W (x) U``, scattering block ``exp(-i H_I dt)``."""
    lab = np.kron(model.W @ _lab_projector(), model.U)
    scat_proj = np.kron(np.outer(probe_ket(PSI_P), probe_ket(PSI_P)), np.eye(DIM_T))
    return lab + model.scattering_propagator @ scat_proj


def evolve_dt(state: JointState, model: ScatteringModel) -> JointState:
    prop = probe_target_propagator(model)
    t = state.tensor.reshape(DIM_A, DIM_P * DIM_T)
    return JointState.from_tensor(t @ prop.T)


def _ancilla_controlled(op0: np.ndarray, op1: np.ndarray) -> np.ndarray:
    """``|0><0| (x) op0 + |1><1| (x) op1``, each probe operator extended by the target identity."""
    p0, p1 = np.diag([1, 0]).astype(complex), np.diag([0, 1]).astype(complex)
    eye_t = np.eye(DIM_T)
    return np.kron(p0, np.kron(op0, eye_t)) + np.kron(p1, np.kron(op1, eye_t))


def lab_operation_1(state: JointState, model: ScatteringModel, scattered: int = 1) -> tuple[JointState, float]:
    """Filter the scattered branch onto ``|Xi>`` and park it in ``W|Phi>``.

    Applies ``|s><s| (x) W|Phi><Xi| + |s'><s'| (x) 1`` where ``s`` is the
    ancilla value whose probe was sent to the scattering region.  Returns the
    unnormalized state and the postselection probability relative to the
    input norm.
    """
    if scattered not in (0, 1):
        raise ValueError("scattered must be 0 or 1")
    filt = model.W @ np.outer(probe_ket(PHI), probe_ket(XI).conj())
    ops = [np.eye(DIM_P, dtype=complex), np.eye(DIM_P, dtype=complex)]
    ops[scattered] = filt
    out = JointState(_ancilla_controlled(*ops) @ state.amplitudes)
    before = state.norm2
    return out, (out.norm2 / before if before > 0 else 0.0)


def lab_operation_2(state: JointState, model: ScatteringModel) -> JointState:
    """``|0><0| (x) |Psi_P><Phi| W^{-1} + |1><1| (x) W^{-1}``."""
    w_inv = np.linalg.inv(model.W)
    send_out = np.outer(probe_ket(PSI_P), probe_ket(PHI).conj()) @ w_inv
    return JointState(_ancilla_controlled(send_out, w_inv) @ state.amplitudes)


@dataclass
class ProbeSwitchResult:
    plus_branch: np.ndarray
    minus_branch: np.ndarray
    V: np.ndarray
    heralding_probabilities: tuple[float, float]
    final_state: JointState

    @property
    def herald_probability(self) -> float:
        return self.heralding_probabilities[0] * self.heralding_probabilities[1]

    @property
    def p_plus(self) -> float:
        return float(np.vdot(self.plus_branch, self.plus_branch).real)

    @property
    def p_minus(self) -> float:
        return float(np.vdot(self.minus_branch, self.minus_branch).real)


def run_probe_switch(model: ScatteringModel, psi_target) -> ProbeSwitchResult:
    """prepare -> evolve -> op1 -> op2 -> evolve -> op1 -> measure the ancilla in ``|+/->``.

    The second filtering acts on ancilla value 0, whose probe was sent out by
    ``lab_operation_2``.  The returned target branches are unnormalized and
    equal ``(V U +/- U V) psi / 2``; the probe factors out as ``W|Phi>``.
    """
    state = prepare_omega(model, psi_target)
    state = evolve_dt(state, model)
    state, h1 = lab_operation_1(state, model, scattered=1)
    state = lab_operation_2(state, model)
    state = evolve_dt(state, model)
    state, h2 = lab_operation_1(state, model, scattered=0)
    # project the probe onto W|Phi> (it factors out on both branches)
    probe_out = model.W @ probe_ket(PHI)
    targets = np.einsum("p,apt->at", probe_out.conj(), state.tensor)
    plus = (targets[0] + targets[1]) / np.sqrt(2)
    minus = (targets[0] - targets[1]) / np.sqrt(2)
    return ProbeSwitchResult(plus, minus, model.effective_v(), (h1, h2), state)


def swap_coupling(g, dt: float = 1.0) -> np.ndarray:
    """``H_I`` whose propagator maps ``|Psi_P> psi`` to ``-i |Xi> G psi`` for a unitary ``G``."""
    g = as_matrix(g)
    x = np.outer(probe_ket(XI), probe_ket(PSI_P).conj())
    h = np.kron(x, g) + np.kron(x.conj().T, g.conj().T)
    return (np.pi / (2 * dt)) * h


def random_model(rng: np.random.Generator, isometric: bool = False, dt: float = 1.0) -> ScatteringModel:
    """Random scattering model obeying the block condition."""
    from .qalg import random_hermitian, random_unitary

    h0 = random_hermitian(rng)
    hp = random_hermitian(rng)
    if isometric:
        hi = swap_coupling(random_unitary(rng), dt)
    else:
        z = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        block = 0.5 * (z + z.conj().T)
        hi = np.zeros((DIM_P * DIM_T, DIM_P * DIM_T), dtype=complex)
        idx = [XI * DIM_T, XI * DIM_T + 1, PSI_P * DIM_T, PSI_P * DIM_T + 1]
        hi[np.ix_(idx, idx)] = block
    return ScatteringModel(h0, hp, hi, dt)
