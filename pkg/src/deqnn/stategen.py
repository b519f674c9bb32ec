"""Random input states and constructive perfect disentanglers."""
from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .linalg import (
    EIG_CUTOFF,
    ArrayLike,
    DensityMatrix,
    QubitPartition,
    as_matrix,
    embed_operator,
    hermitian_eigendecomposition,
    reduce_qubits,
)

SPAN_CUTOFF = 1e-10


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def haar_random_unitary(dim: int, seed=None) -> np.ndarray:
    """Haar-distributed unitary via QR of a complex Ginibre matrix.

    The phases of diag(R) are divided out so the result is exactly Haar rather
    than biased by the QR sign convention.
    """
    if dim < 1:
        raise ValueError("dim must be positive")
    rng = _rng(seed)
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / math.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_mixed_state(n: int, rank: int = 1, seed=None) -> DensityMatrix:
    """Reduced state of a Haar-random pure state on ``n + log2(rank)`` qubits.

    The ancilla qubits are the trailing ones and are traced out, so the result
    has numerical rank ``rank`` with probability one.
    """
    if rank < 1 or rank & (rank - 1):
        raise ValueError(f"rank must be a power of 2, got {rank}")
    if rank > 2**n:
        raise ValueError(f"rank {rank} exceeds dimension {2**n}")
    k = rank.bit_length() - 1
    u = haar_random_unitary(2 ** (n + k), seed)
    psi = u[:, 0]
    rho = np.outer(psi, psi.conj())
    if k:
        rho = reduce_qubits(rho, list(range(n)))
    rho = 0.5 * (rho + rho.conj().T)
    rho /= np.trace(rho).real
    return DensityMatrix(rho)


def support_vectors(rho: ArrayLike, cutoff: float = EIG_CUTOFF) -> np.ndarray:
    """Eigenvectors (as columns) whose eigenvalues exceed ``cutoff``."""
    w, v = hermitian_eigendecomposition(rho)
    return v[:, w > cutoff]


def joint_support_basis(states: Sequence[ArrayLike], cutoff: float = SPAN_CUTOFF) -> tuple[np.ndarray, int]:
    """Orthonormal completion of the joint eigenvector span.

    Returns a unitary whose first ``k`` columns span the union of the states'
    supports, and ``k``. An SVD is used instead of Gram-Schmidt so the basis stays
    orthonormal to machine precision.
    """
    if not states:
        raise ValueError("need at least one state")
    vecs = np.hstack([support_vectors(s) for s in states])
    dim = as_matrix(states[0]).shape[0]
    if vecs.shape[1] == 0:
        return np.eye(dim, dtype=complex), 0
    u, s, _ = np.linalg.svd(vecs, full_matrices=True)
    k = int(np.sum(s > cutoff * max(s[0], 1.0)))
    return u, k


def required_preserved_qubits(states: Sequence[ArrayLike]) -> int:
    """Smallest preserved-register size admitting a perfect disentangler.

    This is ``ceil(log2 r)`` for ``r`` the dimension of the joint support. A
    single pure state gives 0 mathematically; the result is clamped to 1 so the
    preserved register is never empty.
    """
    _, k = joint_support_basis(states)
    return max(1, math.ceil(math.log2(max(k, 1))))


def perfect_disentangler(states: Sequence[ArrayLike], partition: QubitPartition) -> np.ndarray:
    """Unitary sending every state to ``|0⟩⟨0|_A ⊗ ρ_B``.

    The joint support basis is mapped onto basis states with all discarded
    qubits at 0; the orthogonal complement fills the remaining basis states.
    """
    n = partition.n
    dim = 2**n
    for s in states:
        if as_matrix(s).shape != (dim, dim):
            raise ValueError(f"state dimension does not match a {n}-qubit partition")
    basis, k = joint_support_basis(states)
    nb = len(partition.preserved)
    if k > 2**nb:
        need = math.ceil(math.log2(k))
        raise ValueError(
            f"joint support has dimension {k}; the preserved system needs at least "
            f"{need} qubits but has {nb}"
        )
    targets = _ground_first_order(partition)
    phi = np.zeros((dim, dim), dtype=complex)
    phi[targets, np.arange(dim)] = 1.0
    return phi @ basis.conj().T


def _ground_first_order(partition: QubitPartition) -> np.ndarray:
    """Basis indices ordered with the A=0 block first, enumerated by B value."""
    n = partition.n
    a, b = list(partition.discarded), list(partition.preserved)
    order = []
    for a_val in range(2 ** len(a)):
        for b_val in range(2 ** len(b)):
            idx = 0
            for pos, q in enumerate(a):
                bit = (a_val >> (len(a) - 1 - pos)) & 1
                idx |= bit << (n - 1 - q)
            for pos, q in enumerate(b):
                bit = (b_val >> (len(b) - 1 - pos)) & 1
                idx |= bit << (n - 1 - q)
            order.append(idx)
    return np.array(order)


def product_with_ground(rho_b: ArrayLike, partition: QubitPartition) -> np.ndarray:
    """Assemble ``|0⟩⟨0|_A ⊗ ρ_B`` on the full register of ``partition``."""
    rho_b = as_matrix(rho_b)
    dim = 2**partition.n
    nb = 2 ** len(partition.preserved)
    if rho_b.shape != (nb, nb):
        raise ValueError("reduced state does not match the preserved system")
    idx = _ground_first_order(partition)[:nb]
    out = np.zeros((dim, dim), dtype=complex)
    out[np.ix_(idx, idx)] = rho_b
    return out


def product_with_pure(witness: np.ndarray, rho_b: ArrayLike, partition: QubitPartition) -> np.ndarray:
    """``|w⟩⟨w|_A ⊗ ρ_B`` for a pure state ``w`` on the discarded qubits."""
    w = np.asarray(witness, dtype=complex).reshape(-1)
    pa = np.outer(w, w.conj())
    order = list(partition.discarded) + list(partition.preserved)
    return embed_operator(np.kron(pa, as_matrix(rho_b)), order, partition.n)
