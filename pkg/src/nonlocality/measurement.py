"""Ideal projective measurements and the two-stage filtering protocol.

The protocol: each side first measures a rank-2 filter projector (P on
particle 1, Q on particle 2), which splits the ensemble into four
subensembles labeled by the outcome pair ``(p, q)``. Afterwards each side
picks one of two settings and measures the corresponding three-valued
observable on the post-filter state.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from itertools import product
from typing import TYPE_CHECKING, Hashable, Iterator, NamedTuple, Sequence

import numpy as np

from . import rng
from .quantum_core import (
    STRUCT_TOL,
    DimensionError,
    QuantumError,
    as_matrix,
    check_density_matrix,
    eig_hermitian,
    is_projector,
    kron,
)
from .werner_states import check_d, werner

if TYPE_CHECKING:
    from .chsh import ChshSettings

PRUNE_TOL = 1e-12
BRANCH_LABELS: tuple[tuple[int, int], ...] = ((0, 0), (0, 1), (1, 0), (1, 1))
RESULTS = (-1, 0, 1)
CSV_COLUMNS = ("p", "q", "a_setting", "b_setting", "a_result", "b_result")


class NullEventError(QuantumError):
    """Conditioning on an outcome of (numerically) zero probability."""


@dataclass(frozen=True)
class ProjectiveMeasurement:
    labels: tuple[Hashable, ...]
    projectors: tuple[np.ndarray, ...]

    def __post_init__(self):
        if len(self.labels) != len(self.projectors) or not self.projectors:
            raise QuantumError("need one label per projector and at least one projector")
        mats = tuple(as_matrix(p) for p in self.projectors)
        dim = mats[0].shape[0]
        for m in mats:
            if m.shape != (dim, dim):
                raise DimensionError("projectors must share one square shape")
            if not is_projector(m):
                raise QuantumError("element is not a Hermitian idempotent")
        for a, b in product(range(len(mats)), repeat=2):
            if a < b and np.max(np.abs(mats[a] @ mats[b])) > STRUCT_TOL:
                raise QuantumError(f"projectors {self.labels[a]!r} and {self.labels[b]!r} overlap")
        if np.max(np.abs(sum(mats) - np.eye(dim))) > STRUCT_TOL:
            raise QuantumError("projectors do not sum to the identity")
        object.__setattr__(self, "projectors", mats)

    @property
    def dim(self) -> int:
        return self.projectors[0].shape[0]


@dataclass(frozen=True)
class OutcomeBranch:
    label: Hashable
    probability: float
    post_state: np.ndarray | None


def filter_projectors(d: int, *, embed: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """Local projectors onto span{|1>, |2>} for each particle.

    With ``embed=True`` they are returned as ``P (x) I`` and ``I (x) Q`` on
    the joint space.
    """
    d = check_d(d)
    local = np.zeros((d, d), dtype=np.complex128)
    local[0, 0] = local[1, 1] = 1.0
    if not embed:
        return local, local.copy()
    eye = np.eye(d, dtype=np.complex128)
    return kron(local, eye), kron(eye, local)


def filter_measurement(d: int) -> ProjectiveMeasurement:
    """The joint first-stage measurement with outcomes ``(p, q)``."""
    p1, q1 = filter_projectors(d)
    eye = np.eye(d)
    local = {1: p1, 0: eye - p1}
    other = {1: q1, 0: eye - q1}
    return ProjectiveMeasurement(
        labels=BRANCH_LABELS,
        projectors=tuple(kron(local[p], other[q]) for p, q in BRANCH_LABELS),
    )


def measure(rho, m: ProjectiveMeasurement, *, prune: float = PRUNE_TOL) -> list[OutcomeBranch]:
    """Born probabilities and projected states for every outcome of ``m``."""
    rho = as_matrix(rho)
    if rho.shape != (m.dim, m.dim):
        raise DimensionError(f"state {rho.shape} does not match measurement dim {m.dim}")
    branches = []
    for label, proj in zip(m.labels, m.projectors):
        prob = float(np.real(np.trace(proj @ rho)))
        post = None
        if prob >= prune:
            post = proj @ rho @ proj / prob
        branches.append(OutcomeBranch(label, max(prob, 0.0), post))
    total = sum(b.probability for b in branches)
    if all(b.post_state is None for b in branches):
        raise QuantumError("every outcome is below the pruning threshold")
    if abs(total - 1.0) > STRUCT_TOL:
        raise QuantumError(f"outcome probabilities sum to {total}, input is not a state")
    return branches


def condition(rho, projector) -> tuple[float, np.ndarray]:
    """Select the outcome ``projector`` and renormalize: ``(prob, P rho P / prob)``."""
    rho, proj = as_matrix(rho), as_matrix(projector)
    if rho.shape != proj.shape:
        raise DimensionError(f"state {rho.shape} and projector {proj.shape} differ")
    if not is_projector(proj):
        raise QuantumError("conditioning operator is not a Hermitian idempotent")
    prob = float(np.real(np.trace(proj @ rho)))
    if prob < PRUNE_TOL:
        raise NullEventError(f"outcome probability {prob:.3e} is below {PRUNE_TOL}")
    return prob, proj @ rho @ proj / prob


def spectral_projectors(obs, values: Sequence[int] = RESULTS, tol: float = 1e-8) -> dict[int, np.ndarray]:
    """Eigenspace projectors of ``obs`` keyed by eigenvalue.

    Every eigenvalue must lie within ``tol`` of one of ``values``.
    """
    w, v = eig_hermitian(obs)
    out = {}
    assigned = np.zeros(len(w), dtype=bool)
    for val in values:
        sel = np.abs(w - val) <= tol
        assigned |= sel
        vecs = v[:, sel]
        out[val] = vecs @ vecs.conj().T
    if not assigned.all():
        raise QuantumError(f"eigenvalues {w[~assigned]} are outside {tuple(values)}")
    return out


@dataclass
class ProtocolStatistics:
    """Exact statistics of the two-stage protocol.

    ``distributions[branch][x, y, i, j]`` is the probability of results
    ``(RESULTS[i], RESULTS[j])`` given settings ``(x, y)`` in subensemble
    ``branch``. Pruned branches map to None.
    """

    d: int
    branch_probabilities: dict[tuple[int, int], float]
    distributions: dict[tuple[int, int], np.ndarray | None]

    def correlator(self, branch: tuple[int, int], x: int, y: int) -> float:
        dist = self.distributions[branch]
        if dist is None:
            raise NullEventError(f"branch {branch} has zero probability")
        vals = np.array(RESULTS, dtype=float)
        return float(vals @ dist[x, y] @ vals)

    def chsh(self, branch: tuple[int, int] = (1, 1)) -> float:
        e = self.correlator
        return e(branch, 0, 0) + e(branch, 0, 1) + e(branch, 1, 0) - e(branch, 1, 1)

    def alice_marginal(self, branch: tuple[int, int], x: int) -> np.ndarray:
        dist = self.distributions[branch]
        # Bob's setting does not change Alice's marginal; use y = 0
        return dist[x, 0].sum(axis=1)

    def bob_marginal(self, branch: tuple[int, int], y: int) -> np.ndarray:
        return self.distributions[branch][0, y].sum(axis=0)

    def total_correlator(self, x: int, y: int) -> float:
        """Correlator averaged over subensembles, weighted by branch probability."""
        return sum(
            prob * self.correlator(b, x, y)
            for b, prob in self.branch_probabilities.items()
            if self.distributions[b] is not None
        )


def _joint_outcome_table(rho: np.ndarray, settings: ChshSettings) -> np.ndarray:
    alice = [spectral_projectors(settings.alice(x)) for x in (0, 1)]
    bob = [spectral_projectors(settings.bob(y)) for y in (0, 1)]
    table = np.zeros((2, 2, 3, 3))
    for x, y in product((0, 1), repeat=2):
        for (i, a), (j, b) in product(enumerate(RESULTS), repeat=2):
            op = kron(alice[x][a], bob[y][b])
            table[x, y, i, j] = max(float(np.real(np.sum(rho * op.T))), 0.0)
    return table


def run_protocol_exact(d: int, settings: ChshSettings | None = None, rho=None) -> ProtocolStatistics:
    """Exact Born-rule statistics for every subensemble and setting pair.

    ``rho`` defaults to the Werner matrix of dimension ``d``.
    """
    from .chsh import canonical_settings

    d = check_d(d)
    settings = canonical_settings(d) if settings is None else settings
    if settings.d != d:
        raise DimensionError(f"settings are for d={settings.d}, protocol for d={d}")
    rho = werner(d).rho if rho is None else check_density_matrix(rho)
    branches = measure(rho, filter_measurement(d))
    probs = {b.label: b.probability for b in branches}
    dists = {
        b.label: None if b.post_state is None else _joint_outcome_table(b.post_state, settings)
        for b in branches
    }
    return ProtocolStatistics(d=d, branch_probabilities=probs, distributions=dists)


class ProtocolRecord(NamedTuple):
    p: int
    q: int
    a_setting: int
    b_setting: int
    a_result: int
    b_result: int


@dataclass
class ProtocolRecords:
    """Column store of sampled trials (one int8 array per CSV column)."""

    p: np.ndarray
    q: np.ndarray
    a_setting: np.ndarray
    b_setting: np.ndarray
    a_result: np.ndarray
    b_result: np.ndarray
    meta: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.p)

    def __iter__(self) -> Iterator[ProtocolRecord]:
        cols = [getattr(self, c).tolist() for c in CSV_COLUMNS]
        return (ProtocolRecord(*row) for row in zip(*cols))

    def __getitem__(self, k: int) -> ProtocolRecord:
        return ProtocolRecord(*(int(getattr(self, c)[k]) for c in CSV_COLUMNS))

    def columns(self) -> np.ndarray:
        return np.column_stack([getattr(self, c) for c in CSV_COLUMNS])

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\r\n")
            writer.writerow(CSV_COLUMNS)
            writer.writerows(self.columns().tolist())

    @classmethod
    def from_csv(cls, path) -> ProtocolRecords:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if tuple(header) != CSV_COLUMNS:
                raise ValueError(f"unexpected header {header}")
            data = np.array([[int(v) for v in row] for row in reader], dtype=np.int8).reshape(-1, 6)
        return cls(*(data[:, k].copy() for k in range(6)))


def _inverse_cdf(probs: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Index ``k`` with ``cdf[k-1] <= u < cdf[k]`` along the last axis of ``probs``."""
    cdf = np.cumsum(probs, axis=-1)
    cdf = cdf / cdf[..., -1:]
    return np.sum(u[..., None] >= cdf[..., :-1], axis=-1)


def sample_protocol(
    seed: int,
    d: int,
    settings: ChshSettings | None = None,
    trials: int = 1,
    *,
    start: int = 0,
    stats: ProtocolStatistics | None = None,
) -> ProtocolRecords:
    """Draw ``trials`` i.i.d. protocol records.

    Trial ``t`` uses four counter-based uniforms keyed by ``(seed, t)``:
    first-stage branch, Alice's setting, Bob's setting, joint result. Branch
    and results are inverse-CDF draws over ``BRANCH_LABELS`` and
    ``RESULTS x RESULTS`` (row-major) respectively. ``start`` offsets the
    trial counter so that chunks can be generated independently.
    """
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    stats = run_protocol_exact(d, settings) if stats is None else stats

    branch_p = np.array([stats.branch_probabilities[b] for b in BRANCH_LABELS])
    branch_p[[stats.distributions[b] is None for b in BRANCH_LABELS]] = 0.0
    outcome_p = np.zeros((4, 2, 2, 9))
    for k, b in enumerate(BRANCH_LABELS):
        dist = stats.distributions[b]
        if dist is None:
            outcome_p[k, :, :, 4] = 1.0  # unreachable; keeps the CDF well formed
        else:
            outcome_p[k] = dist.reshape(2, 2, 9)

    u = rng.uniforms(seed, np.arange(start, start + trials), 4)
    branch = _inverse_cdf(branch_p, u[:, 0])
    x = (u[:, 1] >= 0.5).astype(np.intp)
    y = (u[:, 2] >= 0.5).astype(np.intp)
    joint = _inverse_cdf(outcome_p[branch, x, y], u[:, 3])

    labels = np.array(BRANCH_LABELS, dtype=np.int8)
    results = np.array(RESULTS, dtype=np.int8)
    return ProtocolRecords(
        p=labels[branch, 0],
        q=labels[branch, 1],
        a_setting=x.astype(np.int8),
        b_setting=y.astype(np.int8),
        a_result=results[joint // 3],
        b_result=results[joint % 3],
        meta={"seed": int(seed), "d": stats.d, "trials": int(trials), "start": int(start)},
    )


def branch_frequencies(records: ProtocolRecords) -> dict[tuple[int, int], float]:
    n = len(records)
    return {
        b: float(np.count_nonzero((records.p == b[0]) & (records.q == b[1]))) / n
        for b in BRANCH_LABELS
    }


def empirical_chsh(records: ProtocolRecords, branch: tuple[int, int] = (1, 1)) -> tuple[float, float]:
    """CHSH estimate within one subensemble and its standard error.

    The four correlators come from disjoint trial sets, so their variances
    add.
    """
    in_branch = (records.p == branch[0]) & (records.q == branch[1])
    value, var = 0.0, 0.0
    for x, y in product((0, 1), repeat=2):
        sel = in_branch & (records.a_setting == x) & (records.b_setting == y)
        ab = records.a_result[sel].astype(float) * records.b_result[sel]
        if ab.size < 2:
            raise NullEventError(f"too few trials for settings ({x}, {y}) in branch {branch}")
        sign = -1.0 if (x, y) == (1, 1) else 1.0
        value += sign * ab.mean()
        var += ab.var(ddof=1) / ab.size
    return value, float(np.sqrt(var))
