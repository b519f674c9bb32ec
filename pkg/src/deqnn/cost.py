"""Disentangling cost functions built from swap-test overlaps on the discarded system."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .circuit import Ansatz, evolve
from .linalg import (
    ArrayLike,
    QubitPartition,
    apply_local,
    as_matrix,
    hermitian_eigendecomposition,
    partial_trace,
    purification_columns,
    reduce_columns,
    reduce_qubits,
    unitarity_residual,
)

FULL_PAIRWISE = "full_pairwise"
DIAGONAL_ONLY = "diagonal_only"


@dataclass(frozen=True)
class Sampled:
    """Finite-shot swap-test evaluation."""

    shots: int
    seed: int | None = None

    def __post_init__(self) -> None:
        if self.shots < 1:
            raise ValueError("shots must be >= 1")


@dataclass(frozen=True, eq=False)
class CostSpec:
    """States to disentangle jointly, the partition, and how the cost is formed.

    ``mode`` is ``"full_pairwise"`` (all ordered pairs, normalized by m²) or
    ``"diagonal_only"`` (self-overlaps only, normalized by m). ``evaluation`` is
    ``"exact"`` or a :class:`Sampled` instance.
    """

    states: tuple[np.ndarray, ...]
    partition: QubitPartition
    mode: str = FULL_PAIRWISE
    evaluation: object = "exact"
    _stack: np.ndarray = field(init=False, repr=False)
    _columns: np.ndarray = field(init=False, repr=False)
    _owners: tuple = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if len(self.states) == 0:
            raise ValueError("need at least one state")
        mats = tuple(as_matrix(s) for s in self.states)
        dim = 2**self.partition.n
        for m in mats:
            if m.shape != (dim, dim):
                raise ValueError(f"state shape {m.shape} does not match the {self.partition.n}-qubit partition")
        if self.mode not in (FULL_PAIRWISE, DIAGONAL_ONLY):
            raise ValueError(f"unknown cost mode {self.mode!r}")
        if self.evaluation != "exact" and not isinstance(self.evaluation, Sampled):
            raise ValueError(f"unknown evaluation {self.evaluation!r}")
        object.__setattr__(self, "states", mats)
        object.__setattr__(self, "_stack", np.stack(mats))
        cols = [purification_columns(m) for m in mats]
        edges = np.cumsum([0] + [c.shape[1] for c in cols])
        object.__setattr__(self, "_columns", np.hstack(cols))
        object.__setattr__(self, "_owners", tuple(slice(a, b) for a, b in zip(edges[:-1], edges[1:])))

    @property
    def m(self) -> int:
        return len(self.states)

    @property
    def qubits(self) -> int:
        return self.partition.n

    @property
    def stack(self) -> np.ndarray:
        return self._stack

    @property
    def columns(self) -> np.ndarray:
        """Purification columns of all states side by side (d × Σ rank)."""
        return self._columns

    @property
    def owners(self) -> tuple[slice, ...]:
        """Column range belonging to each state."""
        return self._owners

    def pairs(self) -> list[tuple[int, int]]:
        if self.mode == FULL_PAIRWISE:
            return [(i, j) for i in range(self.m) for j in range(self.m)]
        return [(i, i) for i in range(self.m)]

    @property
    def weight(self) -> float:
        return 1.0 / self.m**2 if self.mode == FULL_PAIRWISE else 1.0 / self.m


def swap_expectation(rho: ArrayLike, sigma: ArrayLike, partition: QubitPartition) -> float:
    """``Tr[(S_A ⊗ I_BB') (ρ ⊗ σ)]``, evaluated as ``Tr(ρ_A σ_A)``."""
    a, b = as_matrix(rho), as_matrix(sigma)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    ra = partial_trace(a, partition, keep="discarded")
    sa = partial_trace(b, partition, keep="discarded")
    return _overlap(ra, sa)


def _overlap(a: np.ndarray, b: np.ndarray) -> float:
    # Tr(AB) for Hermitian A, B
    return float(np.real(np.sum(a * b.T)))


def sampled_swap_test(rho: ArrayLike, sigma: ArrayLike, partition: QubitPartition, shots: int, seed=None) -> float:
    """Finite-shot swap test on the discarded subsystem.

    The ancilla reads 0 with probability ``(1 + Tr(S_A ρ⊗σ)) / 2``; the estimate is
    ``2·(fraction of zeros) − 1``.
    """
    if shots < 1:
        raise ValueError("shots must be >= 1")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    p0 = min(max(0.5 * (1.0 + swap_expectation(rho, sigma, partition)), 0.0), 1.0)
    zeros = rng.binomial(shots, p0)
    return 2.0 * zeros / shots - 1.0


def discarded_reductions(evolved: np.ndarray, partition: QubitPartition) -> list[np.ndarray]:
    return [reduce_qubits(r, partition.discarded) for r in evolved]


def preserved_reductions(evolved: np.ndarray, partition: QubitPartition) -> list[np.ndarray]:
    return [reduce_qubits(r, partition.preserved) for r in evolved]


def column_reductions(x: np.ndarray, spec: CostSpec, keep: str = "discarded") -> list[np.ndarray]:
    """Reduced states of every input from evolved purification columns."""
    qubits = spec.partition.select(keep)
    return [reduce_columns(x[:, sl], qubits, spec.qubits) for sl in spec.owners]


def overlap_sum(left: Sequence[np.ndarray], right: Sequence[np.ndarray], spec: CostSpec,
                rng=None, exact: bool = False) -> float:
    """Σ over the spec's pairs of ``Tr(left_i right_j)``.

    Under sampled evaluation each term is replaced by a swap-test estimate drawn
    from ``rng`` unless ``exact`` is set.
    """
    total = 0.0
    ev = None if exact else spec.evaluation
    for i, j in spec.pairs():
        value = _overlap(left[i], right[j])
        if isinstance(ev, Sampled):
            p0 = min(max(0.5 * (1.0 + value), 0.0), 1.0)
            total += 2.0 * rng.binomial(ev.shots, p0) / ev.shots - 1.0
        else:
            total += value
    return total


def _sampling_rng(spec: CostSpec, rng):
    if rng is not None or not isinstance(spec.evaluation, Sampled):
        return rng
    return np.random.default_rng(spec.evaluation.seed)


def cost(theta, ansatz: Ansatz, spec: CostSpec, rng=None) -> float:
    """Disentangling cost ``1 − w Σ_(i,j) Tr(S_A ρ_i(θ) ⊗ ρ_j(θ))``.

    ``w`` is 1/m² for the full pairwise form and 1/m for the diagonal form.
    """
    return two_copy_cost(theta, theta, ansatz, spec, rng=rng)


def two_copy_cost(theta_left, theta_right, ansatz: Ansatz, spec: CostSpec, rng=None) -> float:
    """Cost with independent parameters on the two swap-test copies.

    ``cost(θ) = two_copy_cost(θ, θ)``; the form is symmetric in its two
    arguments, which is what makes per-copy parameter shifts exact.
    """
    _check_ansatz(ansatz, spec)
    left = discarded_reductions(evolve(ansatz, theta_left, spec.stack), spec.partition)
    if theta_right is theta_left:
        right = left
    else:
        right = discarded_reductions(evolve(ansatz, theta_right, spec.stack), spec.partition)
    return 1.0 - spec.weight * overlap_sum(left, right, spec, _sampling_rng(spec, rng))


def cost_from_reductions(reductions: Sequence[np.ndarray], spec: CostSpec) -> float:
    return 1.0 - spec.weight * overlap_sum(reductions, reductions, spec, exact=True)


def apply_observables(x: np.ndarray, reductions: Sequence[np.ndarray], spec: CostSpec) -> np.ndarray:
    """``O_i`` applied to each state's columns, with ``O_i`` chosen so that
    ``Σ_i Tr(O_i ρ_i(θ')) = Σ_(i,j) Tr(ρ_A^i(θ') ρ_A^j(θ))`` over the spec's pairs.

    ``O_i = (Σ_j ρ_A^j) ⊗ I`` for the full pairwise form and ``ρ_A^i ⊗ I`` for the
    diagonal form.
    """
    part = spec.partition
    if spec.mode == FULL_PAIRWISE:
        return apply_local(sum(reductions), part.discarded, x, part.n)
    out = np.empty_like(x)
    for sl, r in zip(spec.owners, reductions):
        out[:, sl] = apply_local(r, part.discarded, x[:, sl], part.n)
    return out


def _check_ansatz(ansatz: Ansatz, spec: CostSpec) -> None:
    if ansatz.qubits != spec.qubits:
        raise ValueError(f"ansatz has {ansatz.qubits} qubits, states have {spec.qubits}")


def disentanglement_error(u: ArrayLike, rho: ArrayLike, partition: QubitPartition) -> float:
    """``1 − Tr(UρU† |0⟩⟨0|_A ⊗ I_B)``."""
    u = as_matrix(u)
    if unitarity_residual(u) > 1e-8:
        raise ValueError("U is not unitary")
    out = u @ as_matrix(rho) @ u.conj().T
    ra = partial_trace(out, partition, keep="discarded")
    return float(min(max(1.0 - ra[0, 0].real, 0.0), 1.0))


def witness_error(u: ArrayLike, rho: ArrayLike, partition: QubitPartition, witness: np.ndarray) -> float:
    """``1 − ⟨w|ρ_A|w⟩`` for the discarded reduction of ``UρU†``."""
    u = as_matrix(u)
    out = u @ as_matrix(rho) @ u.conj().T
    ra = partial_trace(out, partition, keep="discarded")
    w = np.asarray(witness, dtype=complex)
    return float(min(max(1.0 - np.real(w.conj() @ ra @ w), 0.0), 1.0))


def _fix_phase(v: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    idx = int(np.argmax(np.abs(v) > tol))
    ph = v[idx] / abs(v[idx])
    return v / ph


def purity_witness(rho_a: ArrayLike, sigma_a: ArrayLike) -> tuple[np.ndarray, float, float]:
    """Dominant eigenvector ``ψ`` of ``rho_a`` and the overlaps ``⟨ψ|ρ_A|ψ⟩``, ``⟨ψ|σ_A|ψ⟩``.

    The phase is fixed so the first nonzero component is real and positive.
    """
    a, b = as_matrix(rho_a), as_matrix(sigma_a)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    _, v = hermitian_eigendecomposition(a)
    psi = _fix_phase(v[:, 0])
    return psi, float(np.real(psi.conj() @ a @ psi)), float(np.real(psi.conj() @ b @ psi))


def common_witness(reductions: Sequence[np.ndarray]) -> np.ndarray:
    """Dominant eigenvector of the averaged discarded reductions."""
    avg = sum(as_matrix(r) for r in reductions) / len(reductions)
    _, v = hermitian_eigendecomposition(avg)
    return _fix_phase(v[:, 0])


def overlap_thresholds(epsilon: float, m: int = 2) -> tuple[float, float]:
    """Lower bounds on the witness overlaps when the full pairwise cost is below ``epsilon``.

    Returns ``(self_overlap, cross_overlap)``: ``1 − m²ε`` and ``1 − 3.5 m²ε``,
    which are ``1 − 4ε`` and ``1 − 14ε`` for two states.
    """
    return 1.0 - m * m * epsilon, 1.0 - 3.5 * m * m * epsilon
