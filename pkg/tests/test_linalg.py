import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import ket, proj, random_density
from deqnn.linalg import (
    DensityMatrix,
    DensityMatrixError,
    QubitPartition,
    apply_local,
    embed_operator,
    hermitian_eigendecomposition,
    matrix_function,
    numerical_rank,
    partial_trace,
    power,
    purification_columns,
    purity,
    reduce_columns,
    reduce_qubits,
    tensor_product,
)


def index_sum_trace_middle(rho):
    # 3 qubits, trace out qubit 1 by explicit summation
    t = rho.reshape(2, 2, 2, 2, 2, 2)
    out = np.zeros((4, 4), dtype=complex)
    for a in range(2):
        for c in range(2):
            for a2 in range(2):
                for c2 in range(2):
                    out[2 * a + c, 2 * a2 + c2] = sum(t[a, b, c, a2, b, c2] for b in range(2))
    return out


def test_tensor_product_examples(rng):
    np.testing.assert_allclose(tensor_product(np.eye(2), np.eye(2)), np.eye(4))
    np.testing.assert_allclose(tensor_product(proj(ket([0])), proj(ket([1]))), np.diag([0, 1, 0, 0]))
    a = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    b = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    out = tensor_product(a, b)
    for i in range(2):
        for j in range(2):
            for k in range(2):
                for l in range(2):
                    assert out[2 * i + k, 2 * j + l] == pytest.approx(a[i, j] * b[k, l], abs=1e-14)


def test_partial_trace_bell_state():
    bell = proj((ket([0, 0]) + ket([1, 1])) / np.sqrt(2))
    for keep in ("preserved", "discarded"):
        np.testing.assert_allclose(partial_trace(bell, QubitPartition.leading(2, 1), keep), np.eye(2) / 2,
                                   atol=1e-15)


def test_partial_trace_product_and_index_oracle(rng):
    rho, sigma = random_density(1, rng=rng), random_density(2, rng=rng)
    part = QubitPartition((1, 2), (0,))
    np.testing.assert_allclose(partial_trace(np.kron(rho, sigma), part), rho, atol=1e-12)
    r3 = random_density(3, rng=rng)
    np.testing.assert_allclose(reduce_qubits(r3, [0, 2]), index_sum_trace_middle(r3), atol=1e-13)
    out = partial_trace(r3, QubitPartition((1,), (0, 2)))
    assert np.trace(out).real == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_allclose(out, out.conj().T, atol=1e-14)


def test_partial_trace_partition_mismatch():
    with pytest.raises(ValueError):
        partial_trace(np.eye(8) / 8, QubitPartition.leading(2, 1))


@given(st.floats(0, 1), st.integers(0, 2**31))
def test_partial_trace_is_linear(lam, seed):
    rng = np.random.default_rng(seed)
    a, b = random_density(3, rng=rng), random_density(3, rng=rng)
    part = QubitPartition((0,), (1, 2))
    lhs = partial_trace(lam * a + (1 - lam) * b, part)
    rhs = lam * partial_trace(a, part) + (1 - lam) * partial_trace(b, part)
    assert np.max(np.abs(lhs - rhs)) <= 1e-12


def test_tensor_then_trace_recovers_first_factor(rng):
    a, b = random_density(2, rng=rng), random_density(1, rng=rng)
    np.testing.assert_allclose(reduce_qubits(tensor_product(a, b), [0, 1]), a, atol=1e-12)


def test_density_matrix_validation():
    DensityMatrix(np.eye(2) / 2)
    with pytest.raises(DensityMatrixError):
        DensityMatrix(np.eye(2))  # trace 2
    with pytest.raises(DensityMatrixError):
        DensityMatrix(np.array([[0.5, 0.1], [0.2, 0.5]]))  # not Hermitian
    with pytest.raises(DensityMatrixError):
        DensityMatrix(np.diag([1.5, -0.5]))  # negative eigenvalue
    with pytest.raises(DensityMatrixError):
        DensityMatrix(np.eye(3) / 3)  # not a qubit register
    dm = DensityMatrix(np.eye(4) / 4)
    assert dm.qubits == 2 and dm.dim == 4
    with pytest.raises(ValueError):
        dm.matrix[0, 0] = 1.0


def test_partition_validation():
    with pytest.raises(ValueError):
        QubitPartition((0, 1), (1, 2))
    with pytest.raises(ValueError):
        QubitPartition((0,), (2,))
    p = QubitPartition.leading(4, 1)
    assert p.discarded == (0,) and p.preserved == (1, 2, 3) and p.n == 4


def test_eigendecomposition_examples(rng):
    w, v = hermitian_eigendecomposition(np.diag([0.3, 0.7]))
    np.testing.assert_allclose(w, [0.7, 0.3])
    np.testing.assert_allclose(np.abs(v), [[0, 1], [1, 0]], atol=1e-15)
    w, v = hermitian_eigendecomposition(np.array([[0, 1], [1, 0]]))
    np.testing.assert_allclose(w, [1, -1], atol=1e-15)
    plus = np.array([1, 1]) / np.sqrt(2)
    assert abs(np.vdot(plus, v[:, 0])) == pytest.approx(1.0)
    g = rng.standard_normal((8, 8)) + 1j * rng.standard_normal((8, 8))
    h = g + g.conj().T
    w, v = hermitian_eigendecomposition(h)
    assert np.all(np.diff(w) <= 0)
    assert np.max(np.abs(v @ np.diag(w) @ v.conj().T - h)) <= 1e-9
    with pytest.raises(ValueError):
        hermitian_eigendecomposition(g)


def test_matrix_function_examples(rng):
    np.testing.assert_allclose(matrix_function(np.eye(2) / 2, power(0.5)), np.eye(2) / np.sqrt(2), atol=1e-15)
    p0 = proj(ket([0]))
    np.testing.assert_allclose(matrix_function(p0, "sqrt"), p0, atol=1e-15)
    rho = random_density(2, rank=2, rng=rng)
    w = np.linalg.eigvalsh(rho)
    assert np.trace(matrix_function(rho, power(2))).real == pytest.approx(np.sum(w**2), abs=1e-12)
    np.testing.assert_allclose(matrix_function(rho, power(1)), rho, atol=1e-10)
    with pytest.raises(DensityMatrixError):
        matrix_function(np.diag([1.2, -0.2]), "sqrt")


def test_purity_and_rank(rng):
    assert purity(np.eye(2) / 2) == pytest.approx(0.5)
    assert purity(proj(ket([1, 0]))) == pytest.approx(1.0)
    assert purity(np.diag([0.7, 0.3])) == pytest.approx(0.58)
    assert numerical_rank(np.eye(4) / 4) == 4
    assert numerical_rank(proj(ket([0, 1]))) == 1
    psi = rng.standard_normal(16) + 1j * rng.standard_normal(16)
    psi /= np.linalg.norm(psi)
    assert numerical_rank(reduce_qubits(proj(psi), [0, 1, 2])) == 2


@given(st.integers(1, 3), st.integers(0, 2**31))
def test_purity_range_and_spectrum(n, seed):
    rho = random_density(n, rng=seed)
    p = purity(rho)
    assert 1 / 2**n - 1e-12 <= p <= 1 + 1e-12
    assert p == pytest.approx(np.sum(np.linalg.eigvalsh(rho) ** 2), abs=1e-10)


def test_embed_operator_matches_kron(rng):
    a = rng.standard_normal((2, 2))
    np.testing.assert_allclose(embed_operator(a, [1], 3), np.kron(np.kron(np.eye(2), a), np.eye(2)))
    b = rng.standard_normal((4, 4))
    swap = np.eye(4)[[0, 2, 1, 3]]
    # b acting on (qubit 1, qubit 0) is the swap-conjugate of b on (0, 1)
    np.testing.assert_allclose(embed_operator(b, [1, 0], 2), swap @ b @ swap)


def test_column_helpers_match_dense(rng):
    rho = random_density(3, rank=3, rng=rng)
    x = purification_columns(rho)
    assert x.shape == (8, 3)
    np.testing.assert_allclose(x @ x.conj().T, rho, atol=1e-13)
    for keep in ([0], [2, 0], [1, 2]):
        np.testing.assert_allclose(reduce_columns(x, keep, 3), reduce_qubits(rho, keep), atol=1e-13)
    op = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    np.testing.assert_allclose(apply_local(op, [2, 0], x, 3), embed_operator(op, [2, 0], 3) @ x, atol=1e-13)
