"""Exact 2x2 complex linear algebra for qubit gates and states.

Matrices are plain ``numpy`` arrays of shape ``(2, 2)`` and dtype
``complex128``; pure states are length-2 complex vectors.  Everything here is a
pure function, so it is safe to call from worker threads or processes.
"""
from __future__ import annotations

import numpy as np

DEFAULT_TOL = 1e-10

I2 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (SIGMA_X, SIGMA_Y, SIGMA_Z)


class DomainError(ValueError):
    """An argument lies outside the domain of an operation."""


def as_matrix(m) -> np.ndarray:
    """Coerce to a finite 2x2 complex array."""
    arr = np.asarray(m, dtype=complex)
    if arr.shape != (2, 2):
        raise DomainError(f"expected a 2x2 matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DomainError("matrix has non-finite entries")
    return arr


def as_state(psi) -> np.ndarray:
    arr = np.asarray(psi, dtype=complex)
    if arr.shape != (2,):
        raise DomainError(f"expected a 2-vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DomainError("state has non-finite amplitudes")
    return arr


def normalize(psi) -> np.ndarray:
    psi = as_state(psi)
    nrm = np.linalg.norm(psi)
    if nrm == 0.0:
        raise DomainError("cannot normalize the zero vector")
    return psi / nrm


def is_normalized(psi, tol: float = 1e-12) -> bool:
    return abs(np.vdot(psi, psi).real - 1.0) <= tol


def require_normalized(psi, tol: float = 1e-12) -> np.ndarray:
    psi = as_state(psi)
    if not is_normalized(psi, tol):
        raise DomainError("state must be normalized")
    return psi


def dagger(m: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(m, -1, -2))


def is_unitary(m, tol: float = DEFAULT_TOL) -> bool:
    m = as_matrix(m)
    return bool(np.max(np.abs(dagger(m) @ m - I2)) <= tol)


def is_invertible(m, tol: float = DEFAULT_TOL) -> bool:
    m = as_matrix(m)
    return bool(abs(np.linalg.det(m)) > tol * max(1.0, frobenius_norm(m) ** 2))


def is_traceless(m, tol: float = DEFAULT_TOL) -> bool:
    return bool(abs(np.trace(as_matrix(m))) <= tol)


def is_hermitian(m, tol: float = DEFAULT_TOL) -> bool:
    m = as_matrix(m)
    return bool(np.max(np.abs(m - dagger(m))) <= tol)


def commutator(a, b) -> np.ndarray:
    a, b = as_matrix(a), as_matrix(b)
    return a @ b - b @ a


def anticommutator(a, b) -> np.ndarray:
    a, b = as_matrix(a), as_matrix(b)
    return a @ b + b @ a


def frobenius_norm(m) -> float:
    return float(np.sqrt(np.sum(np.abs(m) ** 2)))


def singular_values(m) -> tuple[float, float]:
    """Closed-form singular values ``(s_max, s_min)`` of a 2x2 matrix.

    The squares are the roots of ``x**2 - ||M||_F**2 x + |det M|**2``.
    """
    m = as_matrix(m)
    fro2 = float(np.sum(np.abs(m) ** 2))
    det2 = abs(m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]) ** 2
    disc = np.sqrt(max(fro2 * fro2 - 4.0 * det2, 0.0))
    big = 0.5 * (fro2 + disc)
    # avoid cancellation in the small root
    small = det2 / big if big > 0.0 else 0.0
    return float(np.sqrt(big)), float(np.sqrt(max(small, 0.0)))


def spectral_norm(m) -> float:
    return singular_values(m)[0]


def commutativity_nc(u, v, tol: float = DEFAULT_TOL) -> float:
    """Commutativity ``1 - (||[U, V]||_2 / 2)**2`` of two unitaries.

    Equals 1 for commuting gates and 0 when the commutator has maximal norm.
    """
    u, v = as_matrix(u), as_matrix(v)
    if not (is_unitary(u, tol) and is_unitary(v, tol)):
        raise DomainError("commutativity is defined for unitary inputs only")
    half = spectral_norm(commutator(u, v)) / 2.0
    return float(min(max(1.0 - half * half, 0.0), 1.0))


def expm_su2(h, t: float = 1.0) -> np.ndarray:
    """Return ``exp(-1j * H * t)`` for a 2x2 generator ``H``.

    The generator is split into trace and traceless parts,
    ``H = c I + K`` with ``K**2 = -det(K) I``, so that
    ``exp(-i t K) = cos(w) I - i t sinc(w) K`` with ``w = t sqrt(-det K)``.
    The formula is analytic in ``w**2`` and covers non-Hermitian generators as
    well; near ``w = 0`` a truncated series keeps full precision.
    """
    h = as_matrix(h)
    c = 0.5 * (h[0, 0] + h[1, 1])
    k = h - c * I2
    w2 = -(k[0, 0] * k[1, 1] - k[0, 1] * k[1, 0]) * t * t
    if abs(w2) < 1e-6:
        # cos(w) and sin(w)/w as series in w**2
        cos_w = 1 - w2 / 2 + w2 * w2 / 24 - w2**3 / 720
        sinc_w = 1 - w2 / 6 + w2 * w2 / 120 - w2**3 / 5040
    else:
        w = np.sqrt(w2 + 0j)
        cos_w = np.cos(w)
        sinc_w = np.sin(w) / w
    return np.exp(-1j * c * t) * (cos_w * I2 - 1j * t * sinc_w * k)


def expm_taylor(h, t: float = 1.0, order: int = 30) -> np.ndarray:
    """Scaling-and-squaring Taylor evaluation of ``exp(-1j * H * t)``."""
    a = -1j * t * as_matrix(h)
    nrm = max(frobenius_norm(a), 1e-300)
    squarings = max(0, int(np.ceil(np.log2(nrm))) + 1)
    a = a / 2**squarings
    out = I2.copy()
    term = I2.copy()
    for j in range(1, order + 1):
        term = term @ a / j
        out = out + term
    for _ in range(squarings):
        out = out @ out
    return out


def adjugate_inverse(m) -> np.ndarray:
    m = as_matrix(m)
    det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
    if det == 0:
        raise DomainError("matrix is singular")
    return np.array([[m[1, 1], -m[0, 1]], [-m[1, 0], m[0, 0]]]) / det


def matrix_power(m, n: int) -> np.ndarray:
    """Integer power; negative ``n`` uses the adjugate inverse."""
    m = as_matrix(m)
    if n < 0:
        return np.linalg.matrix_power(adjugate_inverse(m), -n)
    return np.linalg.matrix_power(m, n)


def projector(psi) -> np.ndarray:
    psi = as_state(psi)
    return np.outer(psi, psi.conj())


def check_density_matrix(rho, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Validate and return ``rho`` as a density matrix (Hermitian, trace 1, PSD)."""
    rho = as_matrix(rho)
    if not is_hermitian(rho, tol):
        raise DomainError("density matrix must be Hermitian")
    if abs(np.trace(rho) - 1.0) > tol:
        raise DomainError("density matrix must have unit trace")
    if np.linalg.eigvalsh(0.5 * (rho + dagger(rho)))[0] < -tol:
        raise DomainError("density matrix must be positive semidefinite")
    return rho


def is_density_matrix(rho, tol: float = DEFAULT_TOL) -> bool:
    try:
        check_density_matrix(rho, tol)
    except DomainError:
        return False
    return True


def state_fidelity(rho, psi, tol: float = 1e-12) -> float:
    """Fidelity ``<psi|rho|psi>`` of a density matrix with a pure target, clamped to [0, 1]."""
    psi = require_normalized(psi, tol)
    rho = as_matrix(rho)
    f = float(np.real(np.vdot(psi, rho @ psi)))
    return min(max(f, 0.0), 1.0)


def mixed_state_fidelity(rho, sigma) -> float:
    """Uhlmann fidelity of two qubit density matrices.

    For 2x2 operators ``F = tr(rho sigma) + 2 sqrt(det rho det sigma)``.
    """
    rho, sigma = as_matrix(rho), as_matrix(sigma)
    overlap = float(np.real(np.trace(rho @ sigma)))
    dets = max(float(np.real(np.linalg.det(rho))), 0.0) * max(float(np.real(np.linalg.det(sigma))), 0.0)
    return min(max(overlap + 2.0 * np.sqrt(dets), 0.0), 1.0)


def proportionality(a, b, tol: float = 1e-9) -> complex | None:
    """Least-squares scalar ``lam`` with ``A ~= lam B``, or ``None`` if no such scalar fits.

    The fit uses all four entries.  The fit is accepted when
    ``||A - lam B||_F <= tol * max(1, ||A||_F)``.
    """
    a, b = as_matrix(a), as_matrix(b)
    bb = np.vdot(b, b).real
    if bb <= 1e-300 or np.sqrt(bb) <= 1e-14:
        raise DomainError("reference matrix is numerically zero")
    lam = complex(np.vdot(b, a) / bb)
    resid = frobenius_norm(a - lam * b)
    if resid <= tol * max(1.0, frobenius_norm(a)):
        return lam
    return None


def proportional_states(a, b, tol: float = 1e-9) -> bool:
    """True if two vectors are equal up to a complex scalar."""
    a, b = as_state(a), as_state(b)
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        return na == nb
    return abs(abs(np.vdot(a, b)) / (na * nb) - 1.0) <= tol


def random_unitary(rng: np.random.Generator) -> np.ndarray:
    """Haar-random 2x2 unitary (QR of a complex Ginibre matrix, phase-fixed)."""
    z = (rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_state(rng: np.random.Generator) -> np.ndarray:
    return normalize(rng.normal(size=2) + 1j * rng.normal(size=2))


def random_hermitian(rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    z = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    return scale * 0.5 * (z + dagger(z))


def expm_su2_batch(h: np.ndarray, t) -> np.ndarray:
    """Vectorized :func:`expm_su2` over a stack of generators of shape ``(..., 2, 2)``.

    ``t`` broadcasts against the leading dimensions.
    """
    h = np.asarray(h, dtype=complex)
    t = np.asarray(t, dtype=float)[..., None, None]
    c = 0.5 * (h[..., 0, 0] + h[..., 1, 1])[..., None, None]
    k = h - c * I2
    det_k = (k[..., 0, 0] * k[..., 1, 1] - k[..., 0, 1] * k[..., 1, 0])[..., None, None]
    w2 = -det_k * t * t
    w = np.sqrt(w2 + 0j)
    small = np.abs(w2) < 1e-6
    safe_w = np.where(small, 1.0, w)
    cos_w = np.where(small, 1 - w2 / 2 + w2 * w2 / 24, np.cos(w))
    sinc_w = np.where(small, 1 - w2 / 6 + w2 * w2 / 120, np.sin(safe_w) / safe_w)
    return np.exp(-1j * c * t) * (cos_w * I2 - 1j * t * sinc_w * k)
