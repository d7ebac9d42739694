"""Experimental gate families, pair selection, input states and wave-plate optics."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.optimize import least_squares

from .qalg import (
    DomainError,
    SIGMA_Y,
    SIGMA_Z,
    as_matrix,
    commutativity_nc,
    expm_su2,
    is_unitary,
    normalize,
)

GRID = range(1, 11)
NC_THRESHOLD = 0.9


@dataclass(frozen=True)
class GateParams:
    p: int
    q: int

    def __post_init__(self):
        if self.p not in GRID or self.q not in GRID:
            raise DomainError(f"gate parameters out of range: p={self.p}, q={self.q}")

    @property
    def alpha(self) -> float:
        return self.p / 10

    @property
    def theta(self) -> float:
        return self.q * np.pi / 11


@dataclass(frozen=True)
class ExperimentPair:
    params: GateParams
    U: np.ndarray
    V: np.ndarray
    nc: float

    @property
    def p(self) -> int:
        return self.params.p

    @property
    def q(self) -> int:
        return self.params.q

    @property
    def hamiltonian(self) -> np.ndarray:
        """Free Hamiltonian with ``U = exp(-i H)`` (unit time step)."""
        return u_hamiltonian(self.p)


def _check(value: int, name: str) -> int:
    if int(value) != value or value not in GRID:
        raise DomainError(f"{name} must be an integer in 1..10, got {value!r}")
    return int(value)


def u_hamiltonian(p: int) -> np.ndarray:
    return np.arcsin(_check(p, "p") / 10) * SIGMA_Z


def make_u(p: int) -> np.ndarray:
    """``U_p = exp(-i arcsin(p/10) sigma_z)``."""
    return expm_su2(u_hamiltonian(p), 1.0)


def make_v(q: int) -> np.ndarray:
    """``V_q = cos(q pi/11) sigma_z + sin(q pi/11) sigma_y``."""
    theta = _check(q, "q") * np.pi / 11
    return np.cos(theta) * SIGMA_Z + np.sin(theta) * SIGMA_Y


def nc_closed_form(p: int, q: int) -> float:
    return 1.0 - (p / 10) ** 2 * np.sin(q * np.pi / 11) ** 2


def make_pair(p: int, q: int) -> ExperimentPair:
    u, v = make_u(p), make_v(q)
    return ExperimentPair(GateParams(p, q), u, v, commutativity_nc(u, v))


def select_pairs(threshold: float = NC_THRESHOLD) -> list[ExperimentPair]:
    """All grid pairs with commutativity at most ``threshold``, sorted by ``(p, q)``."""
    if not 0.0 <= threshold <= 1.0:
        raise DomainError("threshold must lie in [0, 1]")
    pairs = [make_pair(p, q) for p in GRID for q in GRID]
    # 1e-12 slack keeps membership identical to the closed form at the boundary
    return [pair for pair in pairs if pair.nc <= threshold + 1e-12 and threshold > 0]


def write_pairs_csv(pairs: list[ExperimentPair], path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["p", "q", "nc"])
        for pair in pairs:
            writer.writerow([pair.p, pair.q, f"{pair.nc:.9g}"])
    return path


# ---------------------------------------------------------------- input states

INPUT_STATES: dict[str, np.ndarray] = {
    "H": np.array([1, 0], dtype=complex),
    "+": normalize([1, 1]),
    "-": normalize([1, -1]),
    "R": normalize([1, 1j]),
}
STATE_LABELS = tuple(INPUT_STATES)
_ALIASES = {"−": "-", "plus": "+", "minus": "-", "D": "+", "A": "-"}


@dataclass(frozen=True)
class InputState:
    label: str
    vector: np.ndarray


def input_state(label: str) -> InputState:
    key = _ALIASES.get(label, label)
    if key not in INPUT_STATES:
        raise DomainError(f"unknown input state {label!r}")
    return InputState(key, INPUT_STATES[key].copy())


def input_states(labels=STATE_LABELS) -> list[InputState]:
    return [input_state(lab) for lab in labels]


# ---------------------------------------------------------------- Jones calculus

QWP = "QWP"
HWP = "HWP"
RETARDANCE = {QWP: np.pi / 2, HWP: np.pi}


@dataclass(frozen=True)
class WavePlate:
    kind: str
    axis_angle: float

    def __post_init__(self):
        if self.kind not in RETARDANCE:
            raise ValueError(f"unknown wave plate {self.kind!r}")

    @property
    def retardance(self) -> float:
        return RETARDANCE[self.kind]


def _rotation(theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, s], [-s, c]], dtype=complex)


def jones_retarder(plate: WavePlate) -> np.ndarray:
    """Jones matrix ``R(-theta) diag(e^{-i d/2}, e^{i d/2}) R(theta)`` of a linear retarder."""
    half = plate.retardance / 2
    core = np.diag([np.exp(-1j * half), np.exp(1j * half)])
    return _rotation(-plate.axis_angle) @ core @ _rotation(plate.axis_angle)


def qwp_hwp_qwp(theta1: float, theta2: float, theta3: float) -> np.ndarray:
    """Matrix product ``QWP(theta1) @ HWP(theta2) @ QWP(theta3)``.

    Light traverses the plates right to left, i.e. ``theta3`` first.
    """
    return (
        jones_retarder(WavePlate(QWP, theta1))
        @ jones_retarder(WavePlate(HWP, theta2))
        @ jones_retarder(WavePlate(QWP, theta3))
    )


def phase_residual(m, target) -> float:
    """``min_phi ||m - e^{i phi} target||_F``."""
    m, target = as_matrix(m), as_matrix(target)
    overlap = np.vdot(target, m)
    phase = overlap / abs(overlap) if abs(overlap) > 0 else 1.0
    return float(np.linalg.norm(m - phase * target))


def _plate_residuals(x, target):
    diff = qwp_hwp_qwp(x[0], x[1], x[2]) - np.exp(1j * x[3]) * target
    return np.concatenate([diff.real.ravel(), diff.imag.ravel()])


def decompose_qwp_hwp_qwp(target, tol: float = 1e-10, n_starts: int = 27) -> tuple[float, float, float]:
    """Wave-plate angles reproducing ``target`` up to a global phase.

    Deterministic multi-start Levenberg-Marquardt over the three angles and
    the free phase; stops at the first start whose residual is below 1e-12.
    """
    target = as_matrix(target)
    if not is_unitary(target, tol):
        raise DomainError("target must be unitary")
    grid = np.linspace(0.1, np.pi - 0.1, int(round(n_starts ** (1 / 3))))
    best, best_res = None, np.inf
    for t1 in grid:
        for t2 in grid:
            for t3 in grid:
                x0 = np.array([t1, t2, t3, 0.0])
                x0[3] = np.angle(np.vdot(target, qwp_hwp_qwp(t1, t2, t3)))
                sol = least_squares(_plate_residuals, x0, args=(target,), method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15)
                res = phase_residual(qwp_hwp_qwp(*sol.x[:3]), target)
                if res < best_res:
                    best, best_res = sol.x[:3], res
                if best_res < 1e-12:
                    return tuple(float(a) % np.pi for a in best)
    return tuple(float(a) % np.pi for a in best)


def counterpropagation_reverse(uf) -> np.ndarray:
    """Jones matrix seen by light travelling backwards: ``sigma_z Uf^T sigma_z``."""
    uf = as_matrix(uf)
    return SIGMA_Z @ uf.T @ SIGMA_Z
