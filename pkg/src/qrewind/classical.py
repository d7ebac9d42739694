"""Best classical rewinding strategy: sequential free and perturbed evolutions.

A strategy with ``k`` insertions of ``V`` is
``C = e^{-i H t_k} V ... e^{-i H t_1} V e^{-i H t_0}``; each ``V`` costs one
time step, so a strategy targeting ``n`` steps must satisfy
``k + sum(t) <= 4 + n``.  Its figure of merit is the fidelity with the
rewound state, averaged over gate pairs and input states.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import minimize, minimize_scalar

from .gateset import ExperimentPair, InputState
from .qalg import DomainError, as_matrix, expm_su2, expm_su2_batch

BUDGET_OVERHEAD = 4


@dataclass(frozen=True)
class ClassicalStrategy:
    k: int
    times: tuple[float, ...]

    def __post_init__(self):
        if self.k < 0 or len(self.times) != self.k + 1:
            raise DomainError("a strategy with k insertions needs k + 1 durations")
        if any(t < 0 for t in self.times):
            raise DomainError("durations must be non-negative")

    @property
    def duration(self) -> float:
        return self.k + float(sum(self.times))

    def check_budget(self, n: int, tol: float = 1e-9) -> None:
        if self.duration > budget(n) + tol:
            raise DomainError(f"strategy lasts {self.duration:.6g} > budget {budget(n)}")


@dataclass
class BaselineResult:
    best_strategy: ClassicalStrategy
    F: float
    n: int
    per_k: dict[int, tuple[ClassicalStrategy, float]] = field(default_factory=dict)


def budget(n: int) -> float:
    return float(BUDGET_OVERHEAD + n)


def strategy_operator(strategy: ClassicalStrategy, h0, v, n: int | None = None) -> np.ndarray:
    """Ordered product of the strategy for one gate pair (time step = 1)."""
    if n is not None:
        strategy.check_budget(n)
    h0, v = as_matrix(h0), as_matrix(v)
    out = expm_su2(h0, strategy.times[0])
    for t in strategy.times[1:]:
        out = expm_su2(h0, t) @ v @ out
    return out


class _PairBatch:
    """Stacked Hamiltonians, gates and states for fast objective evaluation."""

    def __init__(self, pairs, states, n: int):
        if not pairs or not states:
            raise DomainError("need at least one pair and one state")
        self.h = np.stack([as_matrix(p.hamiltonian) for p in pairs])
        self.v = np.stack([as_matrix(p.V) for p in pairs])
        un = np.stack([np.linalg.matrix_power(as_matrix(p.U), n) for p in pairs])
        self.psi = np.stack([s.vector if isinstance(s, InputState) else np.asarray(s, complex) for s in states])
        # <psi| U^n is fixed per pair and state
        self.bra = np.einsum("si,pij->psj", self.psi.conj(), un)

    def fidelity(self, times) -> float:
        return float(self.fidelity_many(np.asarray(times, dtype=float)[None, :])[0])

    def fidelity_many(self, times: np.ndarray) -> np.ndarray:
        """Objective for a stack of duration vectors of shape ``(G, k + 1)``."""
        times = np.asarray(times, dtype=float)
        ops = expm_su2_batch(self.h, times[:, :1])
        for j in range(1, times.shape[1]):
            ops = expm_su2_batch(self.h, times[:, j : j + 1]) @ self.v @ ops
        amp = np.einsum("psj,gpjk,sk->gps", self.bra, ops, self.psi)
        return np.mean(np.abs(amp) ** 2, axis=(1, 2))


def average_fidelity(strategy, pairs: list[ExperimentPair], states, n: int) -> float:
    """Mean of ``|<psi| U^n C |psi>|^2`` over all pairs and states.

    ``strategy`` is a :class:`ClassicalStrategy` or, for hypothetical
    strategies, a callable mapping a pair to its 2x2 operator.
    """
    if callable(strategy):
        total = 0.0
        for pair in pairs:
            op = np.linalg.matrix_power(as_matrix(pair.U), n) @ as_matrix(strategy(pair))
            for s in states:
                psi = s.vector if isinstance(s, InputState) else np.asarray(s, complex)
                total += abs(np.vdot(psi, op @ psi)) ** 2
        return total / (len(pairs) * len(states))
    return _PairBatch(pairs, states, n).fidelity(strategy.times)


def _free_evolution_scan(batch: _PairBatch, span: float, step: float = 1e-3) -> tuple[float, float]:
    """Dense scan of the V-free strategy over ``t0 in [0, span]`` plus local refinement."""
    if span <= 0:
        return 0.0, batch.fidelity([0.0])
    grid = np.linspace(0.0, span, int(np.ceil(span / step)) + 1)
    vals = batch.fidelity_many(grid[:, None])
    i = int(np.argmax(vals))
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
    best_t, best_f = float(grid[i]), float(vals[i])
    if hi > lo:
        res = minimize_scalar(lambda t: -batch.fidelity([t]), bounds=(lo, hi), method="bounded", options={"xatol": 1e-10})
        if -res.fun >= best_f:
            best_t, best_f = float(res.x), float(-res.fun)
    return best_t, best_f


def _simplex_times(z: np.ndarray, span: float, k: int) -> np.ndarray:
    # softmax over k + 1 durations and one slack variable
    w = np.exp(z - z.max())
    w /= w.sum()
    return span * w[: k + 1]


def _simplex_grid(k: int, span: float, step: float) -> np.ndarray:
    """All duration vectors on a lattice of spacing ``step`` with ``sum <= span``."""
    m = int(np.floor(span / step + 1e-9))
    axes = np.meshgrid(*[np.arange(m + 1)] * (k + 1), indexing="ij")
    pts = np.stack([a.ravel() for a in axes], axis=1)
    return pts[pts.sum(axis=1) <= m] * step


def _logits_for(times: np.ndarray, span: float) -> np.ndarray:
    slack = max(span - times.sum(), 0.0)
    w = np.append(times, slack) / span
    return np.log(np.maximum(w, 1e-6))


def _optimize_k(batch: _PairBatch, k: int, span: float, n_starts: int, rng) -> tuple[np.ndarray, float]:
    best_t, best_f = None, -np.inf
    step = span / max(4, int(np.ceil(12 / (k + 1))))
    grid = _simplex_grid(k, span, step)
    vals = np.concatenate([batch.fidelity_many(chunk) for chunk in np.array_split(grid, max(1, len(grid) // 2000))])
    top = grid[np.argsort(-vals, kind="stable")[: n_starts // 2]]
    starts = [_logits_for(t, span) for t in top]
    starts += [rng.normal(scale=2.0, size=k + 2) for _ in range(n_starts - len(starts))]
    for z0 in starts:
        res = minimize(
            lambda z: -batch.fidelity(_simplex_times(z, span, k)),
            z0,
            method="Nelder-Mead",
            options={"xatol": 1e-9, "fatol": 1e-13, "maxiter": 400 * (k + 2), "maxfev": 600 * (k + 2)},
        )
        if -res.fun > best_f + 1e-13:
            best_t, best_f = _simplex_times(res.x, span, k), float(-res.fun)
    return best_t, best_f


def optimize_baseline(
    pairs: list[ExperimentPair],
    states,
    n: int,
    budget_total: float | None = None,
    k_max: int | None = None,
    n_starts: int = 24,
    seed: int = 0,
) -> BaselineResult:
    """Maximize :func:`average_fidelity` over strategies within the time budget.

    Every insertion count ``k = 0..k_max`` (default ``n``) is optimized
    separately and reported in ``per_k``.  ``k = 0`` uses a dense 1-D scan; the
    others use multi-start Nelder-Mead over a softmax parameterization of the
    duration simplex.  Ties go to the smaller ``k``.
    """
    total = budget(n) if budget_total is None else float(budget_total)
    k_max = n if k_max is None else k_max
    batch = _PairBatch(pairs, states, n)
    rng = np.random.default_rng(seed)
    per_k: dict[int, tuple[ClassicalStrategy, float]] = {}
    t0, f0 = _free_evolution_scan(batch, max(total, 0.0))
    per_k[0] = (ClassicalStrategy(0, (t0,)), f0)
    for k in range(1, k_max + 1):
        span = total - k
        if span < 0:
            break
        times, f = _optimize_k(batch, k, span, n_starts, rng)
        per_k[k] = (ClassicalStrategy(k, tuple(float(t) for t in times)), f)
    best_k = min(per_k, key=lambda k: (-round(per_k[k][1], 12), k, per_k[k][0].times[0]))
    strategy, f = per_k[best_k]
    return BaselineResult(strategy, batch.fidelity(strategy.times), n, per_k)


def write_baseline_csv(results: list[BaselineResult], path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["n", "k", "times", "F"])
        for res in results:
            for k, (strategy, f) in sorted(res.per_k.items()):
                times = ";".join(f"{t:.9g}" for t in strategy.times)
                writer.writerow([res.n, k, times, f"{f:.9g}"])
    return path
