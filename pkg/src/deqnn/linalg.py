"""Dense density-matrix primitives.

Qubit ordering is big-endian throughout: qubit 0 is the most significant
tensor factor, so a basis index ``i`` of an n-qubit register has qubit ``k``
at bit ``n - 1 - k``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np

EIG_CUTOFF = 1e-10
LOG_CUTOFF = 1e-12
HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-10

ArrayLike = Union[np.ndarray, "DensityMatrix"]


class DensityMatrixError(ValueError):
    """Raised when an array fails the density-matrix invariants."""


def _qubits_for_dim(dim: int) -> int:
    n = int(dim).bit_length() - 1
    if dim < 1 or 1 << n != dim:
        raise ValueError(f"dimension {dim} is not a power of 2")
    return n


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """A validated, read-only density matrix on ``qubits`` qubits.

    Construction checks Hermiticity, unit trace and positivity (eigenvalues
    above ``-EIG_CUTOFF``). The wrapped array is marked read-only and the
    object converts transparently with ``np.asarray``.
    """

    matrix: np.ndarray

    def __post_init__(self) -> None:
        m = np.array(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DensityMatrixError(f"expected a square matrix, got shape {m.shape}")
        try:
            _qubits_for_dim(m.shape[0])
        except ValueError as exc:
            raise DensityMatrixError(str(exc)) from None
        if np.max(np.abs(m - m.conj().T), initial=0.0) > HERMITIAN_TOL:
            raise DensityMatrixError("matrix is not Hermitian")
        tr = np.trace(m).real
        if abs(tr - 1.0) > TRACE_TOL:
            raise DensityMatrixError(f"trace is {tr!r}, expected 1")
        lam_min = np.linalg.eigvalsh(m)[0]
        if lam_min < -EIG_CUTOFF:
            raise DensityMatrixError(f"negative eigenvalue {lam_min!r}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def qubits(self) -> int:
        return _qubits_for_dim(self.dim)

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self.matrix
        return self.matrix.astype(dtype)

    def __repr__(self) -> str:
        return f"DensityMatrix(qubits={self.qubits})"


@dataclass(frozen=True)
class QubitPartition:
    """Split of an n-qubit register into discarded (A) and preserved (B) qubits."""

    discarded: tuple[int, ...]
    preserved: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "discarded", tuple(int(q) for q in self.discarded))
        object.__setattr__(self, "preserved", tuple(int(q) for q in self.preserved))
        both = self.discarded + self.preserved
        if len(set(both)) != len(both):
            raise ValueError("discarded and preserved qubits overlap")
        if sorted(both) != list(range(len(both))):
            raise ValueError(f"partition {both} does not cover 0..{len(both) - 1}")

    @property
    def n(self) -> int:
        return len(self.discarded) + len(self.preserved)

    @classmethod
    def leading(cls, n: int, discard: int) -> "QubitPartition":
        """Discard the first ``discard`` qubits and keep the rest."""
        if not 0 <= discard <= n:
            raise ValueError(f"cannot discard {discard} of {n} qubits")
        return cls(tuple(range(discard)), tuple(range(discard, n)))

    def select(self, keep: str) -> tuple[int, ...]:
        if keep in ("preserved", "B"):
            return self.preserved
        if keep in ("discarded", "A"):
            return self.discarded
        raise ValueError(f"unknown subsystem selector {keep!r}")


def as_matrix(x: ArrayLike) -> np.ndarray:
    return np.asarray(x, dtype=complex)


def tensor_product(a: ArrayLike, b: ArrayLike) -> np.ndarray:
    """Kronecker product ``a ⊗ b`` (``a`` is the more significant factor)."""
    return np.kron(as_matrix(a), as_matrix(b))


def reduce_qubits(rho: ArrayLike, keep: Sequence[int]) -> np.ndarray:
    """Trace out every qubit not in ``keep``; output qubits follow ``keep`` order."""
    m = as_matrix(rho)
    n = _qubits_for_dim(m.shape[0])
    keep = [int(q) for q in keep]
    if len(set(keep)) != len(keep) or any(q < 0 or q >= n for q in keep):
        raise ValueError(f"invalid qubit selection {keep} for {n} qubits")
    drop = [q for q in range(n) if q not in keep]
    t = m.reshape((2,) * (2 * n))
    k = len(keep)
    t = t.transpose(keep + drop + [n + q for q in keep] + [n + q for q in drop])
    t = t.reshape(2**k, 2 ** (n - k), 2**k, 2 ** (n - k))
    return np.einsum("ajbj->ab", t)


def partial_trace(rho: ArrayLike, partition: QubitPartition, keep: str = "preserved") -> np.ndarray:
    """Reduced state on the ``keep`` side of ``partition`` (``"preserved"`` or ``"discarded"``)."""
    m = as_matrix(rho)
    if _qubits_for_dim(m.shape[0]) != partition.n:
        raise ValueError(f"partition covers {partition.n} qubits, state has {_qubits_for_dim(m.shape[0])}")
    return reduce_qubits(m, partition.select(keep))


def embed_operator(op: ArrayLike, targets: Sequence[int], n: int) -> np.ndarray:
    """Lift ``op`` acting on ``targets`` (in that order) to the full n-qubit space."""
    op = as_matrix(op)
    targets = [int(q) for q in targets]
    k = len(targets)
    if op.shape != (2**k, 2**k):
        raise ValueError(f"operator shape {op.shape} does not match {k} target qubits")
    rest = [q for q in range(n) if q not in targets]
    full = np.kron(op, np.eye(2 ** (n - k)))
    order = targets + rest
    inv = np.argsort(order)
    t = full.reshape((2,) * (2 * n)).transpose(list(inv) + [n + i for i in inv])
    return t.reshape(2**n, 2**n)


def purification_columns(rho: ArrayLike, cutoff: float = 1e-14) -> np.ndarray:
    """Columns ``V`` (d × rank) with ``V V† = ρ``, dropping eigenvalues below ``cutoff``."""
    w, v = hermitian_eigendecomposition(rho)
    keep = w > cutoff
    if not keep.any():
        raise ValueError("state has no eigenvalue above the cutoff")
    return v[:, keep] * np.sqrt(w[keep])


def reduce_columns(x: np.ndarray, keep: Sequence[int], n: int) -> np.ndarray:
    """Reduced state on ``keep`` of ``Σ_c |x_c⟩⟨x_c|`` for the columns of ``x``."""
    keep = [int(q) for q in keep]
    drop = [q for q in range(n) if q not in keep]
    t = x.reshape((2,) * n + (x.shape[1],)).transpose(keep + drop + [n])
    t = t.reshape(2 ** len(keep), -1)
    return t @ t.conj().T


def apply_local(op: np.ndarray, targets: Sequence[int], x: np.ndarray, n: int) -> np.ndarray:
    """``(op ⊗ I) x`` for the columns of ``x``, with ``op`` acting on ``targets``."""
    targets = [int(q) for q in targets]
    k = len(targets)
    t = x.reshape((2,) * n + (x.shape[1],))
    o = np.asarray(op).reshape((2,) * (2 * k))
    out = np.tensordot(o, t, axes=(list(range(k, 2 * k)), targets))
    return np.moveaxis(out, list(range(k)), targets).reshape(x.shape)


def ground_projector(partition: QubitPartition) -> np.ndarray:
    """``|0⟩⟨0|_A ⊗ I_B`` as a full-register operator."""
    k = len(partition.discarded)
    p0 = np.zeros((2**k, 2**k), dtype=complex)
    p0[0, 0] = 1.0
    return embed_operator(p0, partition.discarded, partition.n)


def hermitian_eigendecomposition(h: ArrayLike, tol: float = 1e-8) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues in descending order and the matching orthonormal eigenvector columns."""
    m = as_matrix(h)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("expected a square matrix")
    if np.max(np.abs(m - m.conj().T), initial=0.0) > tol:
        raise ValueError("matrix is not Hermitian")
    w, v = np.linalg.eigh(0.5 * (m + m.conj().T))
    return w[::-1].copy(), v[:, ::-1].copy()


def spectrum(rho: ArrayLike) -> np.ndarray:
    """Eigenvalues of a Hermitian matrix, descending."""
    m = as_matrix(rho)
    return np.linalg.eigvalsh(0.5 * (m + m.conj().T))[::-1]


def _scalar_function(f) -> tuple[Callable[[np.ndarray], np.ndarray], bool]:
    """Return (vectorized function, needs_nonnegative)."""
    if callable(f):
        return f, False
    if f == "sqrt":
        return np.sqrt, True
    if f == "log2":
        def log2(w):
            out = np.zeros_like(w)
            mask = w > LOG_CUTOFF
            out[mask] = np.log2(w[mask])
            return out
        return log2, True
    if isinstance(f, tuple) and f[0] == "power":
        p = float(f[1])
        if p == int(p) and p >= 0:
            return (lambda w: w**p), False
        def power(w):
            out = np.zeros_like(w)
            mask = w > 0
            out[mask] = w[mask] ** p
            return out
        return power, True
    raise ValueError(f"unknown matrix function {f!r}")


def power(p: float) -> tuple[str, float]:
    return ("power", float(p))


def matrix_function(rho: ArrayLike, f) -> np.ndarray:
    """Apply ``f`` to the spectrum of ``rho``.

    ``f`` is ``"sqrt"``, ``"log2"``, ``power(p)`` or any vectorized callable.
    For ``log2`` eigenvalues at or below ``LOG_CUTOFF`` contribute zero, which
    realizes ``0·log 0 = 0`` in ``Tr(ρ log ρ)``.
    """
    fn, nonneg = _scalar_function(f)
    w, v = hermitian_eigendecomposition(rho)
    if nonneg:
        if w[-1] < -EIG_CUTOFF:
            raise DensityMatrixError(f"negative eigenvalue {w[-1]!r}")
        w = np.clip(w, 0.0, None)
    fw = fn(w)
    return (v * fw) @ v.conj().T


def purity(rho: ArrayLike) -> float:
    m = as_matrix(rho)
    # Tr(ρ²) = Σ|ρ_ij|² for Hermitian ρ
    return float(np.sum(np.abs(m) ** 2))


def numerical_rank(rho: ArrayLike, tol: float = EIG_CUTOFF) -> int:
    return int(np.sum(spectrum(rho) > tol))


def is_unitary(u: ArrayLike, tol: float = 1e-10) -> bool:
    return unitarity_residual(u) <= tol


def unitarity_residual(u: ArrayLike) -> float:
    m = as_matrix(u)
    return float(np.max(np.abs(m @ m.conj().T - np.eye(m.shape[0]))))


def basis_projector(index: int, dim: int) -> np.ndarray:
    p = np.zeros((dim, dim), dtype=complex)
    p[index, index] = 1.0
    return p


def maximally_mixed(n: int) -> np.ndarray:
    return np.eye(2**n, dtype=complex) / 2**n
