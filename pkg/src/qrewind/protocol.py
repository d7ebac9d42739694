"""Quantum SWITCH channel, single-shot rewinding and recursive error correction.

Notation used throughout: ``C = [U, V]`` and ``A = {U, V}``.  A SWITCH pass
maps ``psi`` to the pair of unnormalized branches ``A psi / 2`` and
``C psi / 2``.  Words over ``{A, C}`` are stored as matrix products, i.e. the
rightmost letter is the first operator applied.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .qalg import (
    DomainError,
    I2,
    anticommutator,
    as_matrix,
    commutator,
    is_unitary,
    matrix_power,
    normalize,
    require_normalized,
    spectral_norm,
)

COMMUTATOR_TOL = 1e-8
LABEL_C = "C"
LABEL_A = "A"


class CommutatorVanishes(DomainError):
    """``[U, V]`` is numerically zero, so no rewinding is possible."""


class MaxDepthExceeded(RuntimeError):
    """A correction block did not reach a commutator word within the allowed passes."""


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


@dataclass(frozen=True)
class SwitchOutcome:
    commutator_branch: np.ndarray
    anticommutator_branch: np.ndarray
    p_commutator: float
    p_anticommutator: float


def switch_apply(u, v, psi, renormalize: bool | None = None) -> SwitchOutcome:
    """One pass through the quantum SWITCH.

    Parameters
    ----------
    u, v : array_like
        The two 2x2 evolutions.
    psi : array_like
        Normalized input state.
    renormalize : bool, optional
        Rescale the two branch weights to sum to one.  Defaults to ``True``
        only when ``u`` or ``v`` is not unitary, where the branch norms carry
        no probabilistic meaning on their own.
    """
    u, v = as_matrix(u), as_matrix(v)
    psi = require_normalized(psi)
    c_branch = commutator(u, v) @ psi / 2
    a_branch = anticommutator(u, v) @ psi / 2
    pc = float(np.vdot(c_branch, c_branch).real)
    pa = float(np.vdot(a_branch, a_branch).real)
    if renormalize is None:
        renormalize = not (is_unitary(u) and is_unitary(v))
    if renormalize:
        total = pc + pa
        if total == 0.0:
            raise DomainError("both SWITCH branches vanish")
        pc, pa = pc / total, pa / total
    return SwitchOutcome(c_branch, a_branch, pc, pa)


def _check_commutator(u, v) -> np.ndarray:
    c = commutator(u, v)
    if spectral_norm(c) <= COMMUTATOR_TOL:
        raise CommutatorVanishes("[U, V] vanishes; the pair cannot rewind")
    return c


# ---------------------------------------------------------------- words


@dataclass(frozen=True)
class ReducedWord:
    """``A^{a0} C A^{a1} C ... C A^{ak}`` stored as the block list ``(a0, ..., ak)``."""

    blocks: tuple[int, ...] = (0,)
    scalar_dropped: bool = False

    def __post_init__(self):
        if len(self.blocks) == 0 or any(b < 0 for b in self.blocks):
            raise ValueError("blocks must be a nonempty list of non-negative integers")

    @property
    def n_commutators(self) -> int:
        return len(self.blocks) - 1

    @property
    def is_commutator(self) -> bool:
        return self.blocks == (0, 0)

    @property
    def is_identity(self) -> bool:
        return self.blocks == (0,)

    def letters(self) -> str:
        out = []
        for i, b in enumerate(self.blocks):
            if i:
                out.append(LABEL_C)
            out.append(LABEL_A * b)
        return "".join(out)

    @classmethod
    def from_letters(cls, word: str) -> "ReducedWord":
        blocks = [0]
        for ch in word:
            if ch == LABEL_A:
                blocks[-1] += 1
            elif ch == LABEL_C:
                blocks.append(0)
            else:
                raise ValueError(f"unknown letter {ch!r}")
        return cls(tuple(blocks))

    def prepend(self, label: str) -> "ReducedWord":
        """Word after one more operator is applied (it multiplies from the left)."""
        blocks = list(self.blocks)
        if label == LABEL_A:
            blocks[0] += 1
        elif label == LABEL_C:
            blocks.insert(0, 0)
        else:
            raise ValueError(f"unknown label {label!r}")
        return ReducedWord(tuple(blocks), self.scalar_dropped)

    def matrix(self, a, c) -> np.ndarray:
        """Literal product of the word for concrete ``A`` and ``C``."""
        out = I2.copy()
        for ch in self.letters():
            out = out @ (a if ch == LABEL_A else c)
        return out


def reduce_word(word: ReducedWord) -> ReducedWord:
    """Rewrite ``word`` to a fixpoint of the two proportionality rules.

    * equal flanks: ``A^m C A^m -> C`` for ``m > 0`` (innermost C first);
    * ``C C -> 1``: an interior zero block removes its two neighbouring C's
      and merges the outer blocks.

    Each rewrite shortens the word, so the loop terminates.  Dropped scalar
    prefactors are recorded in ``scalar_dropped``.
    """
    blocks = list(word.blocks)
    dropped = word.scalar_dropped
    while True:
        # CC merge takes precedence; scan from the innermost (rightmost,
        # earliest applied) end of the word.
        for i in range(len(blocks) - 2, 0, -1):
            if blocks[i] == 0:
                blocks[i - 1 : i + 2] = [blocks[i - 1] + blocks[i + 1]]
                dropped = True
                break
        else:
            for i in range(len(blocks) - 2, -1, -1):
                if blocks[i] > 0 and blocks[i] == blocks[i + 1]:
                    blocks[i] = blocks[i + 1] = 0
                    dropped = True
                    break
            else:
                return ReducedWord(tuple(blocks), dropped)


# ---------------------------------------------------------------- single shot


@dataclass
class Trajectory:
    outcomes: tuple[str, ...]
    word: ReducedWord
    net_operator: np.ndarray
    probability: float
    elapsed_time: int

    @property
    def success(self) -> bool:
        return self.word.is_commutator


@dataclass
class RewindResult:
    output_state: np.ndarray
    success_probability: float
    elapsed_time: int
    trajectory: Trajectory
    blocks: list[Trajectory] = field(default_factory=list)


def single_shot_rewind(u, v, psi, n: int) -> RewindResult:
    """Postselected rewind ``[U, V] U^n [U, V] psi`` (both SWITCH passes succeed).

    The success probability is the squared norm of the branch,
    ``||C U^n C psi||**2 / 16``; the output is the normalized branch.
    """
    if n < 1:
        raise ValueError("n must be a positive integer")
    u, v = as_matrix(u), as_matrix(v)
    psi = require_normalized(psi)
    c = _check_commutator(u, v)
    net = c @ matrix_power(u, n) @ c / 4
    branch = net @ psi
    prob = float(np.vdot(branch, branch).real)
    if not (is_unitary(u) and is_unitary(v)):
        # Non-unitary gates: each pass renormalizes the two branch weights.
        first = switch_apply(u, v, psi)
        mid = matrix_power(u, n) @ normalize(first.commutator_branch)
        second = switch_apply(u, v, normalize(mid))
        prob = first.p_commutator * second.p_commutator
    traj = Trajectory(
        outcomes=(LABEL_C, LABEL_C),
        word=ReducedWord((0, 0)),
        net_operator=net,
        probability=prob,
        elapsed_time=n + 4,
    )
    return RewindResult(normalize(branch), min(max(prob, 0.0), 1.0), n + 4, traj)


# ---------------------------------------------------------------- correction tree


@dataclass
class TreeNode:
    """Node in the outcome tree of repeated SWITCH passes."""

    trajectory: Trajectory
    state: np.ndarray
    children: list["TreeNode"] = field(default_factory=list)

    def leaves(self) -> list[Trajectory]:
        if not self.children:
            return [self.trajectory]
        out = []
        for child in self.children:
            out.extend(child.leaves())
        return out

    def walk(self):
        yield self
        for child in self.children:
            yield from child.walk()


@dataclass
class CorrectionTree:
    root: TreeNode
    max_depth: int

    @property
    def leaves(self) -> list[Trajectory]:
        return self.root.leaves()

    @property
    def success_leaves(self) -> list[Trajectory]:
        return [t for t in self.leaves if t.success]

    @property
    def success_probability(self) -> float:
        return float(sum(t.probability for t in self.success_leaves))


def error_corrected_commutator(u, v, psi, max_depth: int) -> CorrectionTree:
    """Explore every outcome sequence of up to ``max_depth`` SWITCH passes.

    A branch stops growing once its reduced word is ``C``.  Probabilities are
    exact: each child carries its parent's probability times the branch
    weight of its outcome computed from the current (normalized) state.
    """
    if max_depth < 1:
        raise ValueError("max_depth must be positive")
    u, v = as_matrix(u), as_matrix(v)
    psi = require_normalized(psi)
    c = _check_commutator(u, v)
    a = anticommutator(u, v)
    root = TreeNode(Trajectory((), ReducedWord(), I2.copy(), 1.0, 0), psi)
    stack = [(root, 0)]
    while stack:
        node, depth = stack.pop()
        if node.trajectory.success or depth == max_depth:
            continue
        out = switch_apply(u, v, node.state)
        for label, op, branch, p in (
            (LABEL_C, c, out.commutator_branch, out.p_commutator),
            (LABEL_A, a, out.anticommutator_branch, out.p_anticommutator),
        ):
            t = node.trajectory
            prob = t.probability * p
            state = normalize(branch) if p > 0 else node.state
            child = TreeNode(
                Trajectory(
                    outcomes=t.outcomes + (label,),
                    word=reduce_word(t.word.prepend(label)),
                    net_operator=op @ t.net_operator,
                    probability=prob,
                    elapsed_time=t.elapsed_time + 2,
                ),
                state,
            )
            node.children.append(child)
            if prob > 0:
                stack.append((child, depth + 1))
    return CorrectionTree(root, max_depth)


def success_probability_by_depth(u, v, psi, max_depth: int) -> np.ndarray:
    """Cumulative success probability after 1..max_depth passes."""
    tree = error_corrected_commutator(u, v, psi, max_depth)
    out = np.zeros(max_depth)
    for leaf in tree.success_leaves:
        out[len(leaf.outcomes) - 1 :] += leaf.probability
    return out


def sample_correction_block(u, v, psi, max_depth: int, rng) -> tuple[Trajectory, np.ndarray]:
    """Sample SWITCH outcomes until the reduced word is ``C``.

    Returns the sampled trajectory and the normalized output state.  Raises
    :class:`MaxDepthExceeded` if ``max_depth`` passes do not suffice.
    """
    rng = _rng(rng)
    u, v = as_matrix(u), as_matrix(v)
    c = _check_commutator(u, v)
    a = anticommutator(u, v)
    state = require_normalized(psi)
    word = ReducedWord()
    net = I2.copy()
    outcomes: list[str] = []
    prob = 1.0
    for _ in range(max_depth):
        out = switch_apply(u, v, state)
        if rng.random() < out.p_commutator:
            label, op, branch, p = LABEL_C, c, out.commutator_branch, out.p_commutator
        else:
            label, op, branch, p = LABEL_A, a, out.anticommutator_branch, out.p_anticommutator
        outcomes.append(label)
        prob *= p
        net = op @ net
        word = reduce_word(word.prepend(label))
        state = normalize(branch)
        if word.is_commutator:
            traj = Trajectory(tuple(outcomes), word, net, prob, 2 * len(outcomes))
            return traj, state
    raise MaxDepthExceeded(f"no commutator word within {max_depth} passes (outcomes {''.join(outcomes)})")


def full_rewind_with_correction(u, v, psi, n: int, max_depth: int, seed=None) -> RewindResult:
    """Sampled rewind with a correction block on each side of the free evolution.

    Both blocks are treated independently: the first acts on ``psi``, the
    second on the state after ``U^n``.
    """
    if n < 1:
        raise ValueError("n must be a positive integer")
    rng = _rng(seed)
    u = as_matrix(u)
    first, state = sample_correction_block(u, v, psi, max_depth, rng)
    state = normalize(matrix_power(u, n) @ state)
    second, state = sample_correction_block(u, v, state, max_depth, rng)
    net = second.net_operator @ matrix_power(u, n) @ first.net_operator
    passes = len(first.outcomes) + len(second.outcomes)
    traj = Trajectory(
        outcomes=first.outcomes + ("U",) * n + second.outcomes,
        word=ReducedWord((0, 0)),
        net_operator=net,
        probability=first.probability * second.probability,
        elapsed_time=n + 2 * passes,
    )
    return RewindResult(state, traj.probability, n + 2 * passes, traj, [first, second])


# ---------------------------------------------------------------- identity checks


def _relative_residual(x: np.ndarray, ref: np.ndarray) -> float:
    bb = np.vdot(ref, ref).real
    lam = np.vdot(ref, x) / bb
    return float(np.linalg.norm(x - lam * ref) / max(1.0, np.linalg.norm(x)))


def identity_suite(seed: int = 0, n_pairs: int = 1000, n_values=range(1, 6), m_values=range(1, 5), n_nonunitary: int = 100) -> dict[str, float]:
    """Worst relative residuals of the rewinding identities on seeded random gates.

    Keys: ``rewind`` (``C U^n C U^n ~ 1``), ``flank`` (``A^m C A^m ~ C``),
    ``square`` (``C^2 ~ 1``) for Haar-random unitary pairs, and
    ``rewind_nonunitary`` for random invertible non-unitary ``U``.
    """
    from .qalg import random_unitary

    rng = np.random.default_rng(seed)
    worst = {"rewind": 0.0, "flank": 0.0, "square": 0.0, "rewind_nonunitary": 0.0}
    for _ in range(n_pairs):
        u, v = random_unitary(rng), random_unitary(rng)
        c, a = commutator(u, v), anticommutator(u, v)
        for n in n_values:
            un = np.linalg.matrix_power(u, n)
            worst["rewind"] = max(worst["rewind"], _relative_residual(c @ un @ c @ un, I2))
        if spectral_norm(c) > 1e-6:
            for m in m_values:
                am = np.linalg.matrix_power(a, m)
                worst["flank"] = max(worst["flank"], _relative_residual(am @ c @ am, c))
        worst["square"] = max(worst["square"], _relative_residual(c @ c, I2))
    for _ in range(n_nonunitary):
        u = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        v = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        c = commutator(u, v)
        for n in n_values:
            un = np.linalg.matrix_power(u, n)
            worst["rewind_nonunitary"] = max(worst["rewind_nonunitary"], _relative_residual(c @ un @ c @ un, I2))
    return worst
