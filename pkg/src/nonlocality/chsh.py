"""CHSH observables with spectrum {+1, -1, 0}, correlations, and the
violation of the filtered Werner state as a function of dimension."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

from .measurement import condition, filter_projectors
from .quantum_core import (
    DimensionError,
    QuantumError,
    as_matrix,
    check_density_matrix,
    eig_hermitian,
    expectation,
    hermiticity_deviation,
    ket_to_density,
    kron,
)
from .werner_states import check_d, singlet, werner

SQRT2 = np.sqrt(2.0)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
SPECTRUM_TOL = 1e-8


def embed_block(block: np.ndarray, d: int) -> np.ndarray:
    """Place a 2x2 block on span{|1>, |2>} of a d-dim space, zero elsewhere."""
    out = np.zeros((d, d), dtype=np.complex128)
    out[:2, :2] = block
    return out


@dataclass(frozen=True)
class ChshSettings:
    A: np.ndarray
    A_prime: np.ndarray
    B: np.ndarray
    B_prime: np.ndarray

    @property
    def d(self) -> int:
        return self.A.shape[0]

    def alice(self, x: int) -> np.ndarray:
        return (self.A, self.A_prime)[x]

    def bob(self, y: int) -> np.ndarray:
        return (self.B, self.B_prime)[y]

    def swapped(self) -> ChshSettings:
        """Exchange the roles of the two parties."""
        return ChshSettings(self.B, self.B_prime, self.A, self.A_prime)

    def validate(self) -> ChshSettings:
        """Check spectra {-1, 0^(d-2), +1} and that the +-1 eigenvectors span {|1>, |2>}."""
        d = self.d
        p_local, _ = filter_projectors(d)
        for name in ("A", "A_prime", "B", "B_prime"):
            m = as_matrix(getattr(self, name))
            if m.shape != (d, d):
                raise DimensionError(f"{name} has shape {m.shape}, expected {(d, d)}")
            if hermiticity_deviation(m) > 1e-9:
                raise QuantumError(f"{name} is not Hermitian")
            w, v = eig_hermitian(m)
            expected = np.array([-1.0] + [0.0] * (d - 2) + [1.0])
            if np.max(np.abs(w - expected)) > SPECTRUM_TOL:
                raise QuantumError(f"{name} has spectrum {w}, expected {expected}")
            support = v[:, [0, -1]]
            if np.max(np.abs(support @ support.conj().T - p_local)) > 1e-9:
                raise QuantumError(f"{name}: +-1 eigenvectors do not span {{|1>, |2>}}")
        return self


def canonical_settings(d: int) -> ChshSettings:
    """Tsirelson-optimal settings on span{|1>, |2>}, zero on the rest.

    Signs are fixed so that the CHSH combination has expectation +2*sqrt(2)
    in the two-level singlet.
    """
    d = check_d(d)
    return ChshSettings(
        A=embed_block(SIGMA_Z, d),
        A_prime=embed_block(SIGMA_X, d),
        B=embed_block(-(SIGMA_Z + SIGMA_X) / SQRT2, d),
        B_prime=embed_block((-SIGMA_Z + SIGMA_X) / SQRT2, d),
    ).validate()


def chsh_operator(s: ChshSettings) -> np.ndarray:
    """``A B + A B' + A' B - A' B'`` on the joint space."""
    return kron(s.A, s.B) + kron(s.A, s.B_prime) + kron(s.A_prime, s.B) - kron(s.A_prime, s.B_prime)


def chsh_value(rho, s: ChshSettings) -> float:
    rho = as_matrix(rho)
    if rho.shape[0] != s.d * s.d:
        raise DimensionError(f"state of dim {rho.shape[0]} vs settings for d={s.d}")
    return expectation(rho, chsh_operator(s))


def singlet_state(d: int) -> np.ndarray:
    """``|S_12><S_12|`` embedded in the d x d joint space."""
    return ket_to_density(singlet(check_d(d), 1, 2))


def conditional_state_closed_form(d: int) -> np.ndarray:
    """Werner state after both filters click, written out directly:
    ``(2d / (2d + 4)) [ I_sub / (2d) + |S_12><S_12| ]`` where ``I_sub`` is
    the identity on span{|1>,|2>} (x) span{|1>,|2>}."""
    d = check_d(d)
    p_local, q_local = filter_projectors(d)
    i_sub = kron(p_local, q_local)
    rho = (2 * d / (2 * d + 4)) * (i_sub / (2 * d) + singlet_state(d))
    return check_density_matrix(rho)


def filter_probability(d: int) -> float:
    """Probability that both filters click on the Werner state: ``(2d + 4) / d^3``."""
    return (2 * d + 4) / d**3


def violation_value(d: int) -> float:
    """CHSH value of the filtered Werner state, ``(2d / (2d + 4)) 2 sqrt(2)``.

    Exceeds 2 exactly when d >= 5.
    """
    if d < 2:
        raise QuantumError(f"d must be >= 2, got {d}")
    return (2 * d / (2 * d + 4)) * 2 * SQRT2


@dataclass(frozen=True)
class SweepRow:
    d: int
    closed_form: float
    numeric: float
    violates: bool


def numeric_violation(d: int) -> float:
    """CHSH value obtained by conditioning the Werner matrix on P (x) Q."""
    p_local, q_local = filter_projectors(d)
    _, conditioned = condition(werner(d).rho, kron(p_local, q_local))
    return chsh_value(conditioned, canonical_settings(d))


def violation_sweep(d_min: int, d_max: int) -> list[SweepRow]:
    check_d(d_min)
    check_d(d_max)
    if d_min > d_max:
        raise QuantumError(f"empty range d_min={d_min} > d_max={d_max}")
    rows = []
    for d in range(d_min, d_max + 1):
        closed = violation_value(d)
        numeric = numeric_violation(d)
        if abs(closed - numeric) > 1e-9:
            raise QuantumError(f"d={d}: closed form {closed} and numeric {numeric} disagree")
        rows.append(SweepRow(d, float(closed), float(numeric), bool(closed > 2.0)))
    return rows


def first_violating(rows: list[SweepRow]) -> int | None:
    return next((r.d for r in rows if r.violates), None)


def fmt(x: float) -> str:
    return f"{x:.9g}"


def sweep_to_csv(rows: list[SweepRow]) -> str:
    lines = ["d,closed_form,numeric,violates"]
    lines += [f"{r.d},{fmt(r.closed_form)},{fmt(r.numeric)},{str(r.violates).lower()}" for r in rows]
    return "\r\n".join(lines) + "\r\n"


def sweep_to_records(rows: list[SweepRow]) -> list[dict]:
    return [
        {**asdict(r), "closed_form": float(fmt(r.closed_form)), "numeric": float(fmt(r.numeric))}
        for r in rows
    ]


def sweep_to_json(rows: list[SweepRow]) -> str:
    return json.dumps(sweep_to_records(rows))
