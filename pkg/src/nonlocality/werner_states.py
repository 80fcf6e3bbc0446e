"""Basis kets, two-level singlets, the Werner matrix and the flip operator.

Labels are 1-based at the interface (``|1>, ..., |d>``) and map to 0-based
array positions internally.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .quantum_core import QuantumError, check_density_matrix, ket_to_density

DEFAULT_MAX_D = 30
MAX_D_ENV = "NONLOCALITY_MAX_D"


def max_d() -> int:
    """Largest local dimension allowed; ``NONLOCALITY_MAX_D`` overrides."""
    raw = os.environ.get(MAX_D_ENV)
    if raw is None:
        return DEFAULT_MAX_D
    try:
        value = int(raw)
    except ValueError:
        raise QuantumError(f"{MAX_D_ENV}={raw!r} is not an integer") from None
    if value < 2:
        raise QuantumError(f"{MAX_D_ENV} must be at least 2, got {value}")
    return value


def check_d(d: int) -> int:
    if isinstance(d, bool) or int(d) != d:
        raise QuantumError(f"dimension must be an integer, got {d!r}")
    d = int(d)
    if d < 2:
        raise QuantumError(f"local dimension must be >= 2, got {d}")
    cap = max_d()
    if d > cap:
        raise QuantumError(f"d={d} exceeds the memory cap {cap} (set {MAX_D_ENV})")
    return d


def basis_ket(d: int, i: int) -> np.ndarray:
    if not 1 <= i <= d:
        raise QuantumError(f"basis index {i} out of range 1..{d}")
    ket = np.zeros(d, dtype=np.complex128)
    ket[i - 1] = 1.0
    return ket


def product_ket(d: int, i: int, j: int) -> np.ndarray:
    """``|i>_1 |j>_2`` on the d*d joint space."""
    return np.kron(basis_ket(d, i), basis_ket(d, j))


def singlet(d: int, i: int, j: int) -> np.ndarray:
    """``(|i>|j> - |j>|i>) / sqrt(2)`` for ``1 <= i < j <= d``."""
    if not (1 <= i < j <= d):
        raise QuantumError(f"singlet needs 1 <= i < j <= d, got i={i}, j={j}, d={d}")
    return (product_ket(d, i, j) - product_ket(d, j, i)) / np.sqrt(2.0)


def singlet_projector_sum(d: int) -> np.ndarray:
    """Sum over ``i < j`` of ``|S_ij><S_ij|`` (the antisymmetric projector)."""
    total = np.zeros((d * d, d * d), dtype=np.complex128)
    for i, j in combinations(range(1, d + 1), 2):
        total += ket_to_density(singlet(d, i, j))
    return total


@dataclass(frozen=True)
class WernerState:
    d: int
    rho: np.ndarray

    @property
    def dim(self) -> int:
        return self.d * self.d


def werner(d: int, *, validate: bool = True) -> WernerState:
    """Werner matrix ``(1/d^2) [ (1/d) I + 2 sum_{i<j} |S_ij><S_ij| ]``."""
    d = check_d(d)
    rho = (np.eye(d * d, dtype=np.complex128) / d + 2.0 * singlet_projector_sum(d)) / d**2
    if validate:
        check_density_matrix(rho)
    return WernerState(d=d, rho=rho)


def flip_operator(d: int) -> np.ndarray:
    """Swap ``V |i>|j> = |j>|i>`` built directly from its action on the basis."""
    d = check_d(d)
    v = np.zeros((d * d, d * d), dtype=np.complex128)
    i, j = np.meshgrid(np.arange(d), np.arange(d), indexing="ij")
    v[(j * d + i).ravel(), (i * d + j).ravel()] = 1.0
    return v


def flip_from_singlets(d: int) -> np.ndarray:
    """``I - 2 sum_{i<j} |S_ij><S_ij|``."""
    d = check_d(d)
    return np.eye(d * d, dtype=np.complex128) - 2.0 * singlet_projector_sum(d)


def permutation_matrix(perm) -> np.ndarray:
    """Unitary sending ``|k>`` to ``|perm[k]>`` (0-based permutation)."""
    perm = np.asarray(perm)
    u = np.zeros((len(perm), len(perm)), dtype=np.complex128)
    u[perm, np.arange(len(perm))] = 1.0
    return u
