import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nonlocality.quantum_core import (
    ConvergenceError,
    DimensionError,
    NotHermitianError,
    QuantumError,
    dagger,
    eig_hermitian,
    expectation,
    frobenius_distance,
    is_projector,
    is_psd,
    kron,
    matmul,
    projector_from_kets,
    random_hermitian,
    trace,
)

SZ = np.diag([1.0, -1.0])
SX = np.array([[0.0, 1.0], [1.0, 0.0]])
S12 = np.array([0, 1, -1, 0]) / np.sqrt(2)


def block_kron_oracle(a, b):
    a, b = np.asarray(a), np.asarray(b)
    out = np.zeros((a.shape[0] * b.shape[0], a.shape[1] * b.shape[1]), dtype=complex)
    for i in range(a.shape[0]):
        for j in range(a.shape[1]):
            for k in range(b.shape[0]):
                for l in range(b.shape[1]):
                    out[i * b.shape[0] + k, j * b.shape[1] + l] = a[i, j] * b[k, l]
    return out


def test_kron_identity():
    assert np.array_equal(kron(np.eye(2), np.eye(2)), np.eye(4))


def test_kron_diagonal():
    assert np.array_equal(kron(np.diag([1, 2]), np.diag([3, 4])), np.diag([3, 4, 6, 8]))


def test_kron_sz_sx_hand_expansion():
    expected = np.array(
        [
            [0, 1, 0, 0],
            [1, 0, 0, 0],
            [0, 0, 0, -1],
            [0, 0, -1, 0],
        ]
    )
    assert np.array_equal(kron(SZ, SX), expected)
    assert np.array_equal(kron(SZ, SX), block_kron_oracle(SZ, SX))


def test_kron_rectangular_matches_block_oracle(rng):
    a = rng.normal(size=(2, 3)) + 1j * rng.normal(size=(2, 3))
    b = rng.normal(size=(3, 2))
    assert frobenius_distance(kron(a, b), block_kron_oracle(a, b)) == 0


def test_kron_overflow():
    with pytest.raises(DimensionError):
        kron(np.eye(100), np.eye(100), max_entries=10**7)


def test_basic_ops():
    assert trace(np.eye(4)) == 4
    m = np.array([[1 + 2j, 3], [4j, 5 - 1j]])
    assert np.array_equal(dagger(dagger(m)), m)
    assert frobenius_distance(m, m) == 0
    assert frobenius_distance(np.zeros((2, 2)), np.array([[3, 0], [0, 4]])) == 5


def test_dimension_errors():
    with pytest.raises(DimensionError):
        matmul(np.eye(2), np.eye(3))
    with pytest.raises(DimensionError):
        trace(np.ones((2, 3)))
    with pytest.raises(DimensionError):
        frobenius_distance(np.eye(2), np.eye(3))
    with pytest.raises(QuantumError):
        trace(np.array([[np.nan]]))


def test_eig_diagonal():
    w, _ = eig_hermitian(np.diag([3.0, 1.0, 2.0]))
    assert np.array_equal(w, [1.0, 2.0, 3.0])


def test_eig_sigma_x():
    # lambda^2 - 1 = 0
    w, v = eig_hermitian(SX)
    assert np.allclose(w, [-1, 1], atol=1e-14)
    assert np.allclose(SX @ v, v * w, atol=1e-14)


def test_eig_singlet_projector():
    w, _ = eig_hermitian(np.outer(S12, S12))
    assert np.allclose(w, [0, 0, 0, 1], atol=1e-14)


def test_eig_rejects_non_hermitian():
    with pytest.raises(NotHermitianError):
        eig_hermitian(np.array([[0, 1], [0, 0]]))


def test_eig_sweep_limit(rng):
    with pytest.raises(ConvergenceError):
        eig_hermitian(random_hermitian(8, rng), max_sweeps=1)


@given(seed=st.integers(0, 2**32 - 1), dim=st.integers(2, 12))
def test_eig_reconstruction(seed, dim):
    m = random_hermitian(dim, np.random.default_rng(seed))
    w, v = eig_hermitian(m)
    assert np.all(np.diff(w) >= 0)
    assert frobenius_distance(m, (v * w) @ v.conj().T) <= 1e-8 * dim
    assert np.max(np.abs(v.conj().T @ v - np.eye(dim))) <= 1e-8


def test_eig_degenerate_and_block_structured(rng):
    u, _ = np.linalg.qr(rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6)))
    m = u @ np.diag([2, 2, 2, -1, -1, 0.5]) @ u.conj().T
    m = 0.5 * (m + m.conj().T)
    w, v = eig_hermitian(m)
    assert np.allclose(w, [-1, -1, 0.5, 2, 2, 2], atol=1e-12)
    big = np.zeros((9, 9), dtype=complex)
    big[:6, :6] = m
    big[6:, 6:] = random_hermitian(3, rng)
    w, v = eig_hermitian(big)
    assert frobenius_distance(big, (v * w) @ v.conj().T) <= 1e-12


def test_expectation_examples():
    assert expectation(np.eye(4) / 4, kron(SZ, np.eye(2))) == 0
    assert expectation(np.outer(S12, S12), kron(SZ, SZ)) == pytest.approx(-1, abs=1e-15)
    assert expectation(np.outer(S12, S12), np.eye(4)) == pytest.approx(1, abs=1e-15)


def test_expectation_rejects_imaginary():
    with pytest.raises(NotHermitianError):
        expectation(np.eye(2) / 2, np.array([[1j, 0], [0, 1j]]))
    with pytest.raises(DimensionError):
        expectation(np.eye(2) / 2, np.eye(3))


def test_is_psd():
    assert is_psd(np.diag([1.0, 0.0, 2.0]), 1e-9)
    assert not is_psd(np.diag([1.0, -0.5]), 1e-9)


def test_projector_from_kets():
    e = np.eye(5)
    p = projector_from_kets([e[0], e[1]])
    assert np.array_equal(p, np.diag([1, 1, 0, 0, 0]))
    assert is_projector(p)
    with pytest.raises(QuantumError):
        projector_from_kets([e[0], e[0] + e[1]])


small = st.floats(-3, 3, allow_nan=False)


def matrices(n):
    return st.lists(small, min_size=2 * n * n, max_size=2 * n * n).map(
        lambda xs: (np.array(xs[: n * n]) + 1j * np.array(xs[n * n :])).reshape(n, n)
    )


@given(matrices(2), matrices(3), matrices(2))
def test_kron_associative(a, b, c):
    assert frobenius_distance(kron(kron(a, b), c), kron(a, kron(b, c))) <= 1e-12


@given(matrices(2), matrices(3))
def test_kron_trace_multiplicative(a, b):
    assert abs(trace(kron(a, b)) - trace(a) * trace(b)) <= 1e-10


@given(matrices(2), matrices(3), matrices(2), matrices(3))
def test_kron_mixed_product(a, b, c, d):
    lhs = kron(a, b) @ kron(c, d)
    rhs = kron(a @ c, b @ d)
    assert frobenius_distance(lhs, rhs) <= 1e-10
