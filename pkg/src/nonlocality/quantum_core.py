"""Dense complex linear algebra kernel.

Matrices are plain ``numpy`` complex128 arrays. Tensor products are ordered
(particle 1) x (particle 2) with row-major storage, so the joint index of
``|i>_1 |j>_2`` is ``i * d + j`` (0-based).

The Hermitian eigensolver is a cyclic Jacobi method using complex plane
rotations. Rotations are scheduled round-robin so that each round touches a
set of disjoint index pairs, which lets a whole round be applied with
vectorized row/column updates.
"""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

STRUCT_TOL = 1e-9
GRAM_TOL = 1e-8
MAX_ENTRIES = 10**8
MAX_SWEEPS = 100


class QuantumError(ValueError):
    """Base class for invalid operators, states and inputs."""


class DimensionError(QuantumError):
    pass


class NotHermitianError(QuantumError):
    pass


class NotDensityMatrixError(QuantumError):
    pass


class ConvergenceError(RuntimeError):
    """Jacobi iteration did not converge within the sweep limit."""


def as_matrix(a) -> np.ndarray:
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim != 2 or 0 in m.shape:
        raise DimensionError(f"expected a non-empty 2-d matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise QuantumError("matrix contains NaN or Inf entries")
    return m


def _require_square(m: np.ndarray) -> int:
    if m.shape[0] != m.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {m.shape}")
    return m.shape[0]


def kron(a, b, *, max_entries: int = MAX_ENTRIES) -> np.ndarray:
    """Kronecker product with particle-1 factor first.

    Block ``(i, j)`` of the result is ``a[i, j] * b``.
    """
    a, b = as_matrix(a), as_matrix(b)
    rows = a.shape[0] * b.shape[0]
    cols = a.shape[1] * b.shape[1]
    if rows * cols > max_entries:
        raise DimensionError(
            f"kron result {rows}x{cols} exceeds the {max_entries} entry cap"
        )
    return (a[:, None, :, None] * b[None, :, None, :]).reshape(rows, cols)


def kron_all(factors: Iterable) -> np.ndarray:
    out = None
    for f in factors:
        out = as_matrix(f) if out is None else kron(out, f)
    if out is None:
        raise DimensionError("kron_all needs at least one factor")
    return out


def matmul(a, b) -> np.ndarray:
    a, b = as_matrix(a), as_matrix(b)
    if a.shape[1] != b.shape[0]:
        raise DimensionError(f"cannot multiply {a.shape} by {b.shape}")
    return a @ b


def dagger(a) -> np.ndarray:
    return as_matrix(a).conj().T


def trace(a) -> complex:
    m = as_matrix(a)
    _require_square(m)
    return complex(np.trace(m))


def frobenius_distance(a, b) -> float:
    a, b = as_matrix(a), as_matrix(b)
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch {a.shape} vs {b.shape}")
    return float(np.sqrt(np.sum(np.abs(a - b) ** 2)))


def hermiticity_deviation(m) -> float:
    """Max entrywise ``|M - M^dagger|``."""
    m = as_matrix(m)
    _require_square(m)
    return float(np.max(np.abs(m - m.conj().T)))


def check_hermitian(m, tol: float = STRUCT_TOL) -> np.ndarray:
    m = as_matrix(m)
    dev = hermiticity_deviation(m)
    if dev > tol:
        raise NotHermitianError(f"matrix is not Hermitian (deviation {dev:.3e})")
    return m


def _round_robin(n: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Schedule all ``n(n-1)/2`` index pairs into rounds of disjoint pairs."""
    players = list(range(n)) + ([-1] if n % 2 else [])
    m = len(players)
    rounds = []
    for _ in range(m - 1):
        ps, qs = [], []
        for k in range(m // 2):
            i, j = players[k], players[m - 1 - k]
            if i >= 0 and j >= 0:
                ps.append(min(i, j))
                qs.append(max(i, j))
        rounds.append((np.array(ps, dtype=np.intp), np.array(qs, dtype=np.intp)))
        players = [players[0], players[-1]] + players[1:-1]
    return rounds


def _jacobi(a: np.ndarray, max_sweeps: int) -> tuple[np.ndarray, np.ndarray]:
    """Cyclic Jacobi on a Hermitian block ``a`` (modified in place)."""
    n = a.shape[0]
    v = np.eye(n, dtype=np.complex128)
    if n == 1:
        return a.real.diagonal().copy(), v

    threshold = np.finfo(float).eps * max(np.linalg.norm(a), np.finfo(float).tiny)
    offdiag = ~np.eye(n, dtype=bool)

    def off_norm() -> float:
        return float(np.linalg.norm(a[offdiag]))

    for _ in range(max_sweeps):
        if off_norm() <= threshold:
            break
        for p, q in _round_robin(n):
            apq = a[p, q]
            h = np.abs(apq)
            active = h > threshold * 1e-3
            if not np.any(active):
                continue
            p, q, apq, h = p[active], q[active], apq[active], h[active]
            theta = 0.5 * np.arctan2(2.0 * h, a[q, q].real - a[p, p].real)
            c = np.cos(theta)
            s = np.sin(theta)
            phase = np.conj(apq) / h  # e^{-i phi}
            # U restricted to (p, q) = [[c, s], [-s e^{-i phi}, c e^{-i phi}]]
            u10, u11 = -s * phase, c * phase

            col_p, col_q = a[:, p].copy(), a[:, q].copy()
            a[:, p] = col_p * c + col_q * u10
            a[:, q] = col_p * s + col_q * u11
            row_p, row_q = a[p, :].copy(), a[q, :].copy()
            a[p, :] = c[:, None] * row_p + np.conj(u10)[:, None] * row_q
            a[q, :] = s[:, None] * row_p + np.conj(u11)[:, None] * row_q
            a[p, q] = 0.0
            a[q, p] = 0.0

            vp, vq = v[:, p].copy(), v[:, q].copy()
            v[:, p] = vp * c + vq * u10
            v[:, q] = vp * s + vq * u11
    else:
        if off_norm() > threshold:
            raise ConvergenceError(
                f"Jacobi did not converge in {max_sweeps} sweeps "
                f"(off-diagonal norm {off_norm():.3e})"
            )
    return a.diagonal().real.copy(), v


def eig_hermitian(
    m, *, tol: float = STRUCT_TOL, max_sweeps: int = MAX_SWEEPS
) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a Hermitian matrix by cyclic Jacobi rotations.

    Returns ``(eigenvalues, eigenvectors)`` with eigenvalues ascending and
    eigenvectors as orthonormal columns, so that
    ``m ~= V @ diag(w) @ V^dagger``.

    Index sets that are coupled only through exact zeros are diagonalized
    as independent blocks. Raises ConvergenceError if a block's off-diagonal
    mass is still above round-off level after ``max_sweeps`` sweeps.
    """
    a = check_hermitian(m, tol)
    n = a.shape[0]
    a = 0.5 * (a + a.conj().T)
    n_blocks, labels = connected_components(csr_matrix(a != 0), directed=False)

    w = np.empty(n)
    v = np.zeros((n, n), dtype=np.complex128)
    for b in range(n_blocks):
        idx = np.flatnonzero(labels == b)
        wb, vb = _jacobi(a[np.ix_(idx, idx)].copy(), max_sweeps)
        w[idx] = wb
        v[np.ix_(idx, idx)] = vb
    order = np.argsort(w, kind="stable")
    return w[order], v[:, order]


def expectation(rho, obs) -> float:
    """Real part of ``tr(rho @ obs)``; a non-negligible imaginary part is an error."""
    rho, obs = as_matrix(rho), as_matrix(obs)
    if rho.shape != obs.shape:
        raise DimensionError(f"state {rho.shape} and observable {obs.shape} differ")
    _require_square(rho)
    # tr(AB) = sum_ij A_ij B_ji
    val = complex(np.sum(rho * obs.T))
    if abs(val.imag) > STRUCT_TOL:
        raise NotHermitianError(
            f"expectation has imaginary part {val.imag:.3e}; inputs are not Hermitian"
        )
    return val.real


def min_eigenvalue(m) -> float:
    return float(eig_hermitian(m)[0][0])


def is_psd(m, tol: float = STRUCT_TOL) -> bool:
    return min_eigenvalue(m) >= -tol


def check_density_matrix(rho, tol: float = STRUCT_TOL) -> np.ndarray:
    """Validate Hermiticity, unit trace and positivity; return the matrix."""
    rho = as_matrix(rho)
    _require_square(rho)
    dev = hermiticity_deviation(rho)
    if dev > tol:
        raise NotDensityMatrixError(f"not Hermitian (deviation {dev:.3e})")
    tr = trace(rho)
    if abs(tr - 1.0) > tol:
        raise NotDensityMatrixError(f"trace is {tr}, expected 1")
    lo = min_eigenvalue(rho)
    if lo < -tol:
        raise NotDensityMatrixError(f"negative eigenvalue {lo:.3e}")
    return rho


def normalize_ket(amplitudes) -> np.ndarray:
    psi = np.asarray(amplitudes, dtype=np.complex128).ravel()
    norm = np.linalg.norm(psi)
    if norm == 0:
        raise QuantumError("cannot normalize the zero vector")
    return psi / norm


def ket_to_density(psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=np.complex128).ravel()
    return np.outer(psi, psi.conj())


def projector_from_kets(kets: Sequence) -> np.ndarray:
    """Orthogonal projector onto the span of orthonormal ``kets``."""
    vecs = np.array([np.asarray(k, dtype=np.complex128).ravel() for k in kets])
    if vecs.ndim != 2 or vecs.shape[0] == 0:
        raise DimensionError("need at least one ket of a common dimension")
    gram = vecs.conj() @ vecs.T
    dev = float(np.max(np.abs(gram - np.eye(len(vecs)))))
    if dev > GRAM_TOL:
        raise QuantumError(f"kets are not orthonormal (Gram deviation {dev:.3e})")
    return vecs.T @ vecs.conj()


def is_projector(m, tol: float = STRUCT_TOL) -> bool:
    m = as_matrix(m)
    if m.shape[0] != m.shape[1]:
        return False
    return hermiticity_deviation(m) <= tol and float(np.max(np.abs(m @ m - m))) <= tol


def random_hermitian(dim: int, rng: np.random.Generator) -> np.ndarray:
    x = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return 0.5 * (x + x.conj().T)


def random_density_matrix(dim: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    k = dim if rank is None else rank
    g = rng.normal(size=(dim, k)) + 1j * rng.normal(size=(dim, k))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real
