from itertools import product

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import werner_entry_oracle
from nonlocality.chsh import canonical_settings, conditional_state_closed_form, singlet_state
from nonlocality.measurement import (
    BRANCH_LABELS,
    NullEventError,
    ProjectiveMeasurement,
    ProtocolRecords,
    branch_frequencies,
    condition,
    empirical_chsh,
    filter_measurement,
    filter_projectors,
    measure,
    run_protocol_exact,
    sample_protocol,
)
from nonlocality.quantum_core import (
    QuantumError,
    check_density_matrix,
    expectation,
    frobenius_distance,
    kron,
    random_density_matrix,
)
from nonlocality.werner_states import werner


def filter_probability_oracle(d):
    """Direct trace of W over the four basis states |a>|b>, a, b in {1, 2}."""
    return sum(werner_entry_oracle(d, a, b, a, b) for a in range(2) for b in range(2))


def test_filter_projectors():
    p, q = filter_projectors(5)
    assert np.array_equal(p, np.diag([1, 1, 0, 0, 0]))
    assert np.array_equal(filter_projectors(2)[0], np.eye(2))
    pe, qe = filter_projectors(5, embed=True)
    assert frobenius_distance(pe @ qe, qe @ pe) <= 1e-12
    assert np.linalg.matrix_rank(p) == 2


def test_projective_measurement_validation():
    with pytest.raises(QuantumError):
        ProjectiveMeasurement(labels=(0,), projectors=(np.diag([1.0, 0.0]),))
    with pytest.raises(QuantumError):
        ProjectiveMeasurement(labels=(0, 1), projectors=(np.eye(2), np.diag([1.0, 0.0])))
    with pytest.raises(QuantumError):
        ProjectiveMeasurement(labels=(0,), projectors=(2 * np.eye(2),))


def test_measure_trivial():
    rho = singlet_state(2)
    m = ProjectiveMeasurement(labels=((1, 1),), projectors=(kron(np.eye(2), np.eye(2)),))
    (branch,) = measure(rho, m)
    assert branch.probability == pytest.approx(1, abs=1e-15)
    assert frobenius_distance(branch.post_state, rho) <= 1e-15


def test_measure_classical_mixture():
    m = ProjectiveMeasurement(labels=(1, 2), projectors=(np.diag([1.0, 0]), np.diag([0, 1.0])))
    probs = [b.probability for b in measure(np.diag([0.5, 0.5]), m)]
    assert probs == [0.5, 0.5]


def test_measure_werner5_filter_branch():
    assert filter_probability_oracle(5) == pytest.approx(14 / 125, abs=1e-15)
    branches = {b.label: b for b in measure(werner(5).rho, filter_measurement(5))}
    assert branches[1, 1].probability == pytest.approx(0.112, abs=1e-12)
    assert branches[1, 1].probability == pytest.approx(filter_probability_oracle(5), abs=1e-12)
    assert sum(b.probability for b in branches.values()) == pytest.approx(1, abs=1e-9)


def test_measure_prunes_null_branches():
    branches = {b.label: b for b in measure(werner(2).rho, filter_measurement(2))}
    assert branches[0, 0].post_state is None
    assert branches[1, 1].probability == pytest.approx(1, abs=1e-12)


def test_condition_examples():
    pq = kron(*filter_projectors(5))
    prob, cond = condition(werner(5).rho, pq)
    assert prob == pytest.approx(0.112, abs=1e-12)
    assert frobenius_distance(cond, conditional_state_closed_form(5)) <= 1e-10

    rho = werner(3).rho
    prob, same = condition(rho, np.eye(9))
    assert prob == pytest.approx(1, abs=1e-12)
    assert frobenius_distance(same, rho) <= 1e-15

    s = singlet_state(5)
    prob, cond = condition(s, pq)
    assert prob == pytest.approx(1, abs=1e-12)
    assert frobenius_distance(cond, s) <= 1e-12


def test_condition_null_event():
    rho = np.zeros((4, 4))
    rho[0, 0] = 1
    with pytest.raises(NullEventError):
        condition(rho, np.diag([0, 1.0, 0, 0]))


@given(seed=st.integers(0, 2**32 - 1), d=st.integers(2, 6))
def test_branch_probabilities_sum_to_one(seed, d):
    rho = random_density_matrix(d * d, np.random.default_rng(seed))
    branches = measure(rho, filter_measurement(d))
    assert sum(b.probability for b in branches) == pytest.approx(1, abs=1e-9)
    for b in branches:
        if b.probability >= 1e-6:
            check_density_matrix(b.post_state)


@pytest.mark.parametrize("d", [2, 3, 5, 6])
def test_total_correlators_match_direct_measurement(d):
    stats = run_protocol_exact(d)
    s = canonical_settings(d)
    rho = werner(d).rho
    for x, y in product((0, 1), repeat=2):
        direct = expectation(rho, kron(s.alice(x), s.bob(y)))
        assert stats.total_correlator(x, y) == pytest.approx(direct, abs=1e-9)


def test_commitment_property_d5():
    stats = run_protocol_exact(5)
    for branch in BRANCH_LABELS:
        for x in (0, 1):
            pa = stats.alice_marginal(branch, x)
            pb = stats.bob_marginal(branch, x)
            if branch[0] == 1:
                assert pa[1] <= 1e-12
            else:
                assert pa[1] >= 1 - 1e-12
            if branch[1] == 1:
                assert pb[1] <= 1e-12
            else:
                assert pb[1] >= 1 - 1e-12


def test_subensemble_00_all_zero():
    dist = run_protocol_exact(5).distributions[0, 0]
    assert np.all(dist[:, :, 1, 1] >= 1 - 1e-12)


def test_exact_protocol_chsh_d5():
    assert run_protocol_exact(5).chsh() == pytest.approx(2.0203051, abs=1e-7)


def test_sampling_deterministic_and_chunk_independent():
    a = sample_protocol(99, 5, trials=5000)
    b = sample_protocol(99, 5, trials=5000)
    assert np.array_equal(a.columns(), b.columns())
    parts = [sample_protocol(99, 5, trials=1000, start=s) for s in (3000, 0, 4000, 1000, 2000)]
    joined = np.concatenate([p.columns() for p in sorted(parts, key=lambda p: p.meta["start"])])
    assert np.array_equal(joined, a.columns())
    c = sample_protocol(100, 5, trials=5000)
    assert not np.array_equal(a.columns(), c.columns())


def test_sampled_records_respect_commitment():
    r = sample_protocol(5, 5, trials=20000)
    for rec in list(r)[:2000]:
        assert (rec.a_result != 0) == (rec.p == 1)
        assert (rec.b_result != 0) == (rec.q == 1)
    assert np.all((r.a_result != 0) == (r.p == 1))
    assert np.all((r.b_result != 0) == (r.q == 1))


def test_records_csv_roundtrip(tmp_path):
    r = sample_protocol(1, 5, trials=300)
    path = tmp_path / "r.csv"
    r.to_csv(path)
    text = path.read_bytes().decode()
    assert text.startswith("p,q,a_setting,b_setting,a_result,b_result\r\n")
    back = ProtocolRecords.from_csv(path)
    assert np.array_equal(back.columns(), r.columns())
    assert r[0] == next(iter(r))


def test_sampling_moderate_agreement():
    stats = run_protocol_exact(5)
    n = 200_000
    r = sample_protocol(2024, 5, trials=n, stats=stats)
    freqs = branch_frequencies(r)
    for b, p in stats.branch_probabilities.items():
        assert abs(freqs[b] - p) <= 4 * np.sqrt(p * (1 - p) / n)
    value, se = empirical_chsh(r)
    assert abs(value - stats.chsh()) <= 4 * se


def test_sampling_concurrent_matches_sequential():
    from concurrent.futures import ThreadPoolExecutor

    stats = run_protocol_exact(5)
    whole = sample_protocol(77, 5, trials=8000, stats=stats)
    with ThreadPoolExecutor(max_workers=4) as pool:
        parts = list(pool.map(
            lambda s: sample_protocol(77, 5, trials=2000, start=s, stats=stats),
            (6000, 2000, 0, 4000),
        ))
    rows = np.concatenate([p.columns() for p in parts])
    key = lambda a: sorted(map(tuple, a.tolist()))
    assert key(rows) == key(whole.columns())


def test_sampling_d4_stays_below_two():
    stats = run_protocol_exact(4)
    assert stats.chsh() == pytest.approx(1.8856181, abs=5e-8)
    value, se = empirical_chsh(sample_protocol(4, 4, trials=10**6, stats=stats))
    assert abs(value - 1.8856181) <= 4 * se
    assert value < 2
