"""Measurement noise, maximum-likelihood tomography and Monte-Carlo fidelity errors.

Polarization tomography uses the three mutually unbiased bases H/V, D/A and
R/L.  Each record holds the counts of the transmitted and reflected detector
for one basis.  Counts may be non-integer: noiseless expected counts and
convex combinations of records are valid inputs to the likelihood.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.optimize import minimize
from scipy.stats import norm

from .qalg import (
    DomainError,
    I2,
    as_matrix,
    as_state,
    check_density_matrix,
    matrix_power,
    mixed_state_fidelity,
    normalize,
    projector,
    state_fidelity,
)

SETTINGS = ("HV", "DA", "RL")
BASIS_KETS = {
    "HV": (np.array([1, 0], complex), np.array([0, 1], complex)),
    "DA": (normalize([1, 1]), normalize([1, -1])),
    "RL": (normalize([1, 1j]), normalize([1, -1j])),
}
PROJECTORS = {s: (projector(a), projector(b)) for s, (a, b) in BASIS_KETS.items()}

CI_HALF_WIDTH = 2e-3
MC_SAMPLE_CAP = 10**6


class ReconstructionError(RuntimeError):
    """The records carry no information to reconstruct from."""


@dataclass(frozen=True)
class NoiseModel:
    """Experimental imperfections.  The defaults describe a perfect setup.

    ``polarization_contrast_db=None`` means infinite contrast.
    """

    visibility: float = 1.0
    dark_count_mean: float = 0.0
    polarization_contrast_db: float | None = None
    loss_per_pass_db: float = 0.0
    shots_per_setting: int = 10_000

    def __post_init__(self):
        if not 0.0 <= self.visibility <= 1.0:
            raise DomainError("visibility must lie in [0, 1]")
        if self.dark_count_mean < 0:
            raise DomainError("dark_count_mean must be non-negative")
        if self.shots_per_setting <= 0:
            raise DomainError("shots_per_setting must be positive")

    @classmethod
    def calibrated(cls, dark_count_mean: float = 2.0, shots_per_setting: int = 10_000) -> "NoiseModel":
        """Visibility 0.99 and 40 dB polarization contrast; dark counts user-set."""
        return cls(0.99, dark_count_mean, 40.0, 0.0, shots_per_setting)

    @property
    def leakage(self) -> float:
        return (1.0 - self.visibility) / 2.0

    @property
    def contrast_error(self) -> float:
        if self.polarization_contrast_db is None:
            return 0.0
        return 10.0 ** (-self.polarization_contrast_db / 10.0)

    def transmission(self, passes: int) -> float:
        return 10.0 ** (-self.loss_per_pass_db * passes / 10.0)

    @property
    def is_ideal(self) -> bool:
        return self.visibility == 1.0 and self.dark_count_mean == 0.0 and self.contrast_error == 0.0


@dataclass(frozen=True)
class MeasurementRecord:
    setting: str
    counts: tuple[float, float]

    def __post_init__(self):
        if self.setting not in SETTINGS:
            raise DomainError(f"unknown setting {self.setting!r}")
        c = tuple(float(x) for x in self.counts)
        if len(c) != 2 or not all(np.isfinite(c)) or min(c) < 0:
            raise DomainError("counts must be two finite non-negative numbers")
        object.__setattr__(self, "counts", c)


@dataclass
class TomographyResult:
    rho: np.ndarray
    fidelity_mean: float
    fidelity_std: float
    mc_samples: int
    half_width: float = 0.0
    capped: bool = False


# ---------------------------------------------------------------- noise


def mix_noise(signal: np.ndarray, leak: np.ndarray, model: NoiseModel, expected_signal: float | None = None) -> np.ndarray:
    """Combine unnormalized signal and wrong-port operators into a noisy state.

    ``(1 - lam) * signal + lam * leak`` is the optical output, with
    ``lam = (1 - visibility) / 2``.  Finite polarization contrast and the
    dark-count fraction ``d / (d + S)`` each mix in white noise, where ``S``
    is the expected number of signal counts per setting.
    """
    lam = model.leakage
    optical = (1.0 - lam) * as_matrix(signal) + lam * as_matrix(leak)
    weight = float(np.trace(optical).real)
    if weight <= 0.0 and model.dark_count_mean == 0.0:
        raise DomainError("no signal and no background: the state is undefined")
    if expected_signal is None:
        expected_signal = model.shots_per_setting * weight
    rho = optical / weight if weight > 0.0 else I2 / 2
    eps = model.contrast_error
    rho = (1.0 - eps) * rho + eps * I2 / 2
    d = model.dark_count_mean
    mu = d / (d + expected_signal) if d > 0.0 else 0.0
    rho = (1.0 - mu) * rho + mu * I2 / 2
    return 0.5 * (rho + rho.conj().T)


def apply_noise(commutator_branch, anticommutator_branch, model: NoiseModel, expected_signal: float | None = None) -> np.ndarray:
    """Noisy output state of a SWITCH pass postselected on the commutator port.

    The wrong (anticommutator) port leaks in with weight ``(1 - V)/2``
    relative to its branch intensity, so nearly commuting pairs, whose
    commutator branch is weak, are affected the most.
    """
    c = as_state(commutator_branch)
    a = as_state(anticommutator_branch)
    return mix_noise(np.outer(c, c.conj()), np.outer(a, a.conj()), model, expected_signal)


def leaky_switch(rho: np.ndarray, c: np.ndarray, a: np.ndarray, visibility: float) -> np.ndarray:
    """Unnormalized commutator-port output of one SWITCH pass with finite visibility."""
    lam = (1.0 - visibility) / 2.0
    return ((1.0 - lam) * c @ rho @ c.conj().T + lam * a @ rho @ a.conj().T) / 4.0


# ---------------------------------------------------------------- counts


def expected_counts(rho, intensity: float, dark_count_mean: float = 0.0) -> list[MeasurementRecord]:
    """Noise-free expected counts ``intensity * <P> + dark`` for all settings."""
    rho = as_matrix(rho)
    out = []
    for s in SETTINGS:
        pt, pr = PROJECTORS[s]
        out.append(
            MeasurementRecord(
                s,
                (
                    intensity * max(np.trace(rho @ pt).real, 0.0) + dark_count_mean,
                    intensity * max(np.trace(rho @ pr).real, 0.0) + dark_count_mean,
                ),
            )
        )
    return out


def simulate_counts(rho, model: NoiseModel, seed=None, intensity: float | None = None) -> list[MeasurementRecord]:
    """Poisson counts for each setting, with Poisson dark counts on each detector.

    ``intensity`` defaults to ``model.shots_per_setting``.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    rho = check_density_matrix(rho, 1e-8)
    lam = model.shots_per_setting if intensity is None else intensity
    means = np.array([r.counts for r in expected_counts(rho, lam)])
    counts = rng.poisson(means)
    if model.dark_count_mean > 0:
        counts = counts + rng.poisson(model.dark_count_mean, size=counts.shape)
    return [MeasurementRecord(s, tuple(int(x) for x in row)) for s, row in zip(SETTINGS, counts)]


def records_array(records) -> tuple[list[str], np.ndarray, np.ndarray]:
    """Settings, stacked projectors ``(m, 2, 2)`` and counts ``(m,)``."""
    settings, projs, counts = [], [], []
    for rec in records:
        pt, pr = PROJECTORS[rec.setting]
        settings.append(rec.setting)
        projs.extend([pt, pr])
        counts.extend(rec.counts)
    return settings, np.array(projs), np.array(counts, dtype=float)


def write_records_csv(records, path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["setting", "count_t", "count_r"])
        for rec in records:
            writer.writerow([rec.setting, f"{rec.counts[0]:.9g}", f"{rec.counts[1]:.9g}"])
    return path


def read_records_csv(path) -> list[MeasurementRecord]:
    with Path(path).open(newline="") as fh:
        reader = csv.DictReader(fh)
        missing = {"setting", "count_t", "count_r"} - set(reader.fieldnames or ())
        if missing:
            raise DomainError(f"records CSV lacks columns {sorted(missing)}")
        return [MeasurementRecord(row["setting"], (float(row["count_t"]), float(row["count_r"]))) for row in reader]


# ---------------------------------------------------------------- MLE


def _cholesky_matrix(x: np.ndarray) -> np.ndarray:
    return np.array([[x[0], 0.0], [x[2] + 1j * x[3], x[1]]], dtype=complex)


def _params_from_state(rho: np.ndarray, scale: float) -> np.ndarray:
    # lower-triangular T with T^dag T = scale * rho
    m = scale * rho
    # T^dag T = [[|t0|^2 + |t2|^2, conj(t2) t1], [t1 t2 ..., t1^2]]
    t1 = np.sqrt(max(m[1, 1].real, 1e-12))
    t2 = np.conj(m[0, 1]) / t1
    t0 = np.sqrt(max(m[0, 0].real - abs(t2) ** 2, 1e-12))
    return np.array([t0, t1, t2.real, t2.imag])


def _linear_inversion(projs: np.ndarray, counts: np.ndarray) -> tuple[np.ndarray, float]:
    """Least-squares Bloch vector and intensity, shrunk into the Bloch ball."""
    paulis = np.array([[[0, 1], [1, 0]], [[0, -1j], [1j, 0]], [[1, 0], [0, -1]]], dtype=complex)
    # each projector is (I + n.sigma)/2
    dirs = np.einsum("kij,mji->mk", paulis, projs).real
    total = counts.sum()
    intensity = max(total / (len(counts) / 2), 1e-12)
    y = 2 * counts / intensity - 1
    r, *_ = np.linalg.lstsq(dirs, y, rcond=None)
    nr = np.linalg.norm(r)
    if nr > 0.98:
        r *= 0.98 / nr
    rho = 0.5 * (I2 + np.einsum("k,kij->ij", r, paulis))
    return rho, intensity


def mle_reconstruct(records) -> np.ndarray:
    """Maximum-likelihood density matrix for Poisson-distributed counts.

    The estimate is parameterized as ``T^dag T / tr(T^dag T)`` with ``T``
    lower triangular, so every iterate is physical; the intensity is absorbed
    into the scale of ``T``.  The optimizer starts from the (shrunk) linear
    inversion estimate, so the result is a deterministic function of the
    records.
    """
    settings, projs, counts = records_array(records)
    if len(set(settings)) < 3:
        raise ReconstructionError("need all three tomography settings")
    total = counts.sum()
    if total <= 0:
        raise ReconstructionError("records contain no counts")
    # rescale for conditioning; the argmax is invariant under count scaling
    c = counts / total * len(counts)
    rho0, intensity = _linear_inversion(projs, c)
    x0 = _params_from_state(rho0, intensity)

    def nll(x):
        t = _cholesky_matrix(x)
        m = t.conj().T @ t
        mu = np.einsum("mij,ji->m", projs, m).real
        mu = np.maximum(mu, 1e-300)
        val = mu.sum() - np.dot(c, np.log(mu))
        g = np.einsum("m,mij->ij", 1.0 - c / mu, projs)
        gt = g @ t.conj().T  # dL/dT_ab = 2 (G T^dag)_{ba}
        grad = 2.0 * np.array([gt[0, 0].real, gt[1, 1].real, gt[0, 1].real, -gt[0, 1].imag])
        return val, grad

    res = minimize(nll, x0, jac=True, method="BFGS", options={"gtol": 1e-11, "maxiter": 2000})
    t = _cholesky_matrix(res.x)
    m = t.conj().T @ t
    rho = m / np.trace(m).real
    return 0.5 * (rho + rho.conj().T)


def fidelity_to_target(rho, target) -> float:
    target = np.asarray(target, dtype=complex)
    if target.shape == (2,):
        return state_fidelity(rho, normalize(target))
    return mixed_state_fidelity(rho, target)


# ---------------------------------------------------------------- Monte Carlo


def monte_carlo_fidelity(
    records,
    background_mean: float,
    target,
    confidence: float = 0.95,
    seed=0,
    half_width: float = CI_HALF_WIDTH,
    min_samples: int = 30,
    batch: int = 25,
    max_samples: int = MC_SAMPLE_CAP,
) -> TomographyResult:
    """Fidelity mean and spread by resampling background-subtracted counts.

    The mean background is removed from every detector at the expected-count
    level; each Monte-Carlo sample then draws Poisson counts around the
    subtracted values and reconstructs by MLE.  Sampling stops once the
    normal-approximation confidence interval on the mean fidelity has a
    half-width below ``half_width``, or at ``max_samples`` (``capped=True``).
    """
    if background_mean < 0:
        raise DomainError("background_mean must be non-negative")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    settings = [r.setting for r in records]
    signal = np.maximum(np.array([r.counts for r in records]) - background_mean, 0.0)
    rho = mle_reconstruct([MeasurementRecord(s, tuple(row)) for s, row in zip(settings, signal)])
    z = norm.ppf(0.5 + confidence / 2.0)
    n = 0
    s1 = s2 = 0.0
    hw = np.inf
    while n < max_samples:
        for _ in range(min(batch, max_samples - n)):
            draw = rng.poisson(signal)
            try:
                rho_k = mle_reconstruct([MeasurementRecord(s, tuple(row)) for s, row in zip(settings, draw)])
            except ReconstructionError:
                rho_k = I2 / 2
            f = fidelity_to_target(rho_k, target)
            n += 1
            s1 += f
            s2 += f * f
        if n >= min_samples:
            var = max(s2 / n - (s1 / n) ** 2, 0.0) * n / (n - 1)
            hw = z * np.sqrt(var / n)
            if hw < half_width:
                break
    mean = s1 / n
    std = float(np.sqrt(max(s2 / n - mean * mean, 0.0) * n / max(n - 1, 1)))
    return TomographyResult(rho, float(mean), std, n, float(hw), bool(hw >= half_width))


# ---------------------------------------------------------------- mixed states


def default_alphas(count: int = 23) -> np.ndarray:
    return np.linspace(0.0, 1.0, count + 2)[1:-1]


def mixed_state_analysis(records_plus, records_minus, alphas, u, n: int) -> list[tuple[float, float]]:
    """Fidelity of reconstructions from count-level mixtures of the |+> and |-> data.

    The target for mixing weight ``a`` is ``U^{-n} rho_a U^{-n dag}`` with
    ``rho_a = a |+><+| + (1 - a) |-><-|``.
    """
    plus = {r.setting: np.array(r.counts) for r in records_plus}
    minus = {r.setting: np.array(r.counts) for r in records_minus}
    if set(plus) != set(minus) or len(plus) != len(records_plus) or len(minus) != len(records_minus):
        raise DomainError("record sets must share the same settings")
    u_back = matrix_power(as_matrix(u), -n)
    p_plus = projector(normalize([1, 1]))
    p_minus = projector(normalize([1, -1]))
    out = []
    for a in np.asarray(alphas, dtype=float):
        if not 0.0 <= a <= 1.0:
            raise DomainError("mixing weights must lie in [0, 1]")
        mixed = [MeasurementRecord(s, tuple(a * plus[s] + (1 - a) * minus[s])) for s in plus]
        rho = mle_reconstruct(mixed)
        target = u_back @ (a * p_plus + (1 - a) * p_minus) @ u_back.conj().T
        out.append((float(a), mixed_state_fidelity(rho, target)))
    return out
