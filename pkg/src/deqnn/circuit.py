"""Layered rotation/CNOT ansatz and its action on density matrices.

A layer is Rz·Ry·Rz on every qubit, a ring of CNOTs (i → i+1 mod n; a single
0 → 1 for two qubits; none for one qubit), then Rz·Ry·Rz on every qubit again,
for 6n rotation angles per layer. Rotations are ``exp(-iθP/2)``.

Gates are applied as local index operations on batches of d×d matrices or on
d×K blocks of state columns, never as full 2^n × 2^n gate matrices.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .linalg import ArrayLike, DensityMatrix, as_matrix


class Gate(NamedTuple):
    kind: str  # "rz", "ry" or "cnot"
    target: int
    control: int | None = None
    param: int | None = None


@dataclass(frozen=True)
class Ansatz:
    qubits: int
    layers: int
    gates: tuple[Gate, ...]

    @property
    def num_params(self) -> int:
        return 6 * self.qubits * self.layers

    @property
    def dim(self) -> int:
        return 2**self.qubits

    def rotation_count(self) -> int:
        return sum(g.kind != "cnot" for g in self.gates)

    def cnot_count(self) -> int:
        return sum(g.kind == "cnot" for g in self.gates)


def entangler_pairs(n: int) -> list[tuple[int, int]]:
    if n == 1:
        return []
    if n == 2:
        return [(0, 1)]
    return [(i, (i + 1) % n) for i in range(n)]


def build_ansatz(n: int, layers: int) -> Ansatz:
    if n < 1 or layers < 1:
        raise ValueError("need n >= 1 and layers >= 1")
    gates: list[Gate] = []
    p = 0

    def rotations():
        nonlocal p
        for q in range(n):
            for kind in ("rz", "ry", "rz"):
                gates.append(Gate(kind, q, None, p))
                p += 1

    for _ in range(layers):
        rotations()
        for c, t in entangler_pairs(n):
            gates.append(Gate("cnot", t, c))
        rotations()
    return Ansatz(n, layers, tuple(gates))


def default_layers(n: int) -> int:
    """Depth that trains reliably at the default discard sizes (4 and 6 qubits measured).

    Exact disentangling needs roughly twice as many angles as the codimension
    of the target set, ``2 r (2^n - 2^(n-k))`` for joint support ``r`` and
    ``k`` discarded qubits, so two or three layers are far too shallow.
    """
    return 20 if n <= 4 else 40


def initialize_parameters(ansatz: Ansatz, seed=None) -> np.ndarray:
    """Independent uniform angles in [0, 2π)."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return rng.uniform(0.0, 2.0 * np.pi, size=ansatz.num_params)


def rotation_matrix(kind: str, angle: float) -> np.ndarray:
    c, s = np.cos(angle / 2), np.sin(angle / 2)
    if kind == "ry":
        return np.array([[c, -s], [s, c]], dtype=complex)
    if kind == "rz":
        return np.array([[c - 1j * s, 0], [0, c + 1j * s]], dtype=complex)
    raise ValueError(f"not a rotation: {kind}")


def gate_matrix(gate: Gate, theta: Sequence[float], n: int) -> np.ndarray:
    """Full-register matrix of ``gate`` built from Kronecker products."""
    eye = np.eye(2, dtype=complex)
    if gate.kind == "cnot":
        p0 = np.diag([1, 0]).astype(complex)
        p1 = np.diag([0, 1]).astype(complex)
        x = np.array([[0, 1], [1, 0]], dtype=complex)
        a = [eye] * n
        b = [eye] * n
        a[gate.control] = p0
        b[gate.control] = p1
        b[gate.target] = x
        return _kron_all(a) + _kron_all(b)
    ops = [eye] * n
    ops[gate.target] = rotation_matrix(gate.kind, theta[gate.param])
    return _kron_all(ops)


def _kron_all(ops) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for o in ops:
        out = np.kron(out, o)
    return out


def _check_theta(ansatz: Ansatz, theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (ansatz.num_params,):
        raise ValueError(f"expected {ansatz.num_params} parameters, got shape {theta.shape}")
    return theta


class _Kernel:
    """Precomputed index data for applying one gate to batched d×d matrices."""

    def __init__(self, gate: Gate, n: int):
        self.gate = gate
        self.n = n
        q = gate.target
        self.shape_left = (2**q, 2, 2 ** (n - q - 1))
        d = 2**n
        if gate.kind == "cnot":
            idx = np.arange(d)
            cbit = (idx >> (n - 1 - gate.control)) & 1
            self.perm = idx ^ (cbit << (n - 1 - gate.target))
        elif gate.kind == "rz":
            bits = (np.arange(d) >> (n - 1 - q)) & 1
            self.sign = 1.0 - 2.0 * bits  # +1 for |0>, -1 for |1>

    def conjugate(self, m: np.ndarray, angle: float, adjoint: bool = False) -> np.ndarray:
        """``G m G†`` (or ``G† m G`` when ``adjoint``) for a batch ``m`` of shape (B, d, d)."""
        kind = self.gate.kind
        if kind == "cnot":
            return m[:, self.perm][:, :, self.perm]
        if adjoint:
            angle = -angle
        if kind == "rz":
            ph = np.exp(-0.5j * angle * self.sign)
            return m * np.outer(ph, ph.conj())
        g = rotation_matrix(kind, angle)
        return self._right(self._left(m, g), g.conj().T)

    def apply(self, x: np.ndarray, angle: float) -> np.ndarray:
        """``G x`` for a d × K block of columns. CNOT is its own inverse, rotations invert with ``-angle``."""
        kind = self.gate.kind
        if kind == "cnot":
            return x[self.perm]
        if kind == "rz":
            return x * np.exp(-0.5j * angle * self.sign)[:, None]
        c, s = np.cos(angle / 2), np.sin(angle / 2)
        t = x.reshape(self.shape_left[:2] + (-1,))
        out = np.empty_like(t)
        out[:, 0] = c * t[:, 0] - s * t[:, 1]
        out[:, 1] = s * t[:, 0] + c * t[:, 1]
        return out.reshape(x.shape)

    def generator_overlap(self, lam: np.ndarray, x: np.ndarray) -> complex:
        """``Σ_c ⟨λ_c|P|x_c⟩`` for the rotation's Pauli generator ``P``."""
        if self.gate.kind == "rz":
            return complex(np.sum(self.sign * np.einsum("ik,ik->i", lam.conj(), x)))
        a = lam.reshape(self.shape_left[:2] + (-1,))
        b = x.reshape(self.shape_left[:2] + (-1,))
        # Y = [[0, -i], [i, 0]]
        return -1j * np.vdot(a[:, 0], b[:, 1]) + 1j * np.vdot(a[:, 1], b[:, 0])

    def left(self, m: np.ndarray, angle: float) -> np.ndarray:
        """``G m`` for a batch of shape (B, d, k)."""
        kind = self.gate.kind
        if kind == "cnot":
            return m[:, self.perm]
        if kind == "rz":
            ph = np.exp(-0.5j * angle * self.sign)
            return m * ph[:, None]
        return self._left(m, rotation_matrix(kind, angle))

    def _left(self, m, g):
        b, d, k = m.shape
        t = m.reshape((b,) + self.shape_left + (k,))
        return np.einsum("ab,xibjk->xiajk", g, t).reshape(b, d, k)

    def _right(self, m, g):
        # m @ g on the target qubit of the column index
        b, k, d = m.shape
        t = m.reshape((b, k) + self.shape_left)
        return np.einsum("xkibj,ba->xkiaj", t, g).reshape(b, k, d)


_CACHE: dict[Ansatz, list[_Kernel]] = {}


def kernels(ansatz: Ansatz) -> list[_Kernel]:
    ks = _CACHE.get(ansatz)
    if ks is None:
        ks = [_Kernel(g, ansatz.qubits) for g in ansatz.gates]
        _CACHE[ansatz] = ks
    return ks


def _angle(gate: Gate, theta: np.ndarray) -> float:
    return 0.0 if gate.param is None else float(theta[gate.param])


def circuit_unitary(ansatz: Ansatz, theta) -> np.ndarray:
    """``U(θ)``: the product of the gate matrices in list order (first gate rightmost)."""
    theta = _check_theta(ansatz, theta)
    u = np.eye(ansatz.dim, dtype=complex)[None]
    for k in kernels(ansatz):
        u = k.left(u, _angle(k.gate, theta))
    return u[0]


def evolve(ansatz: Ansatz, theta, states) -> np.ndarray:
    """``U(θ) ρ U(θ)†`` for a batch of matrices of shape (B, d, d)."""
    theta = _check_theta(ansatz, theta)
    m = np.asarray(states, dtype=complex)
    if m.ndim != 3 or m.shape[1:] != (ansatz.dim, ansatz.dim):
        raise ValueError(f"expected states of shape (B, {ansatz.dim}, {ansatz.dim}), got {m.shape}")
    for k in kernels(ansatz):
        m = k.conjugate(m, _angle(k.gate, theta))
    return m


def conjugate(ansatz: Ansatz, theta, rho: ArrayLike) -> DensityMatrix:
    m = as_matrix(rho)
    if m.shape != (ansatz.dim, ansatz.dim):
        raise ValueError(f"state dimension {m.shape} does not match {ansatz.qubits} qubits")
    out = evolve(ansatz, theta, m[None])[0]
    return DensityMatrix(0.5 * (out + out.conj().T))


def shift_differences(ansatz: Ansatz, theta, columns, observe, shift: float = np.pi / 2):
    """Parameter-shift differences of a linear expectation in one adjoint sweep.

    For ``f(θ) = Σ_c ⟨c|U(θ)† O U(θ)|c⟩`` over the columns ``c`` of ``columns``
    (a purification of the input states) returns ``f(θ + s e_j) − f(θ − s e_j)``
    for every parameter ``j``, together with the evolved columns. ``observe``
    maps the evolved columns to ``O`` applied to them, so the observable may
    depend on the unshifted circuit output.

    With ``s = π/2``, ``R(a ± π/2) = (I ∓ iP) R(a) / √2`` gives the difference
    ``2 Im⟨λ|P|ψ⟩`` at the gate's cut, with ``ψ`` the state after the gate and
    ``λ = U_suffix† O U_suffix ψ``. Both are walked back gate by gate.
    """
    if not np.isclose(shift, np.pi / 2):
        raise ValueError("the adjoint sweep implements the π/2 shift only")
    theta = _check_theta(ansatz, theta)
    x = np.asarray(columns, dtype=complex)
    if x.ndim != 2 or x.shape[0] != ansatz.dim:
        raise ValueError(f"expected columns of shape ({ansatz.dim}, K), got {x.shape}")
    ks = kernels(ansatz)
    for k in ks:
        x = k.apply(x, _angle(k.gate, theta))
    final = x
    width = x.shape[1]
    y = np.concatenate([x, observe(final)], axis=1)
    diff = np.zeros(ansatz.num_params)
    for k in reversed(ks):
        g = k.gate
        if g.param is not None:
            diff[g.param] = 2.0 * k.generator_overlap(y[:, width:], y[:, :width]).imag
        y = k.apply(y, -_angle(g, theta))
    return diff, final


def evolve_columns(ansatz: Ansatz, theta, columns) -> np.ndarray:
    """``U(θ) x`` for a d × K block of column vectors."""
    theta = _check_theta(ansatz, theta)
    x = np.asarray(columns, dtype=complex)
    for k in kernels(ansatz):
        x = k.apply(x, _angle(k.gate, theta))
    return x
