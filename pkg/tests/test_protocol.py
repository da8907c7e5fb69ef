import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spinretro import published
from spinretro.construction import construct_basis
from spinretro.protocol import (
    IncompleteBasisError,
    LookupTable,
    ProjectiveMeasurement,
    RetrodictionProtocol,
    alice_marginals,
    alice_measure,
    bob_measure,
    derive_table,
    enumerate_outcomes,
    exact_success_probability,
    leakage,
    outcome_probabilities,
    retrodict,
    run_trials,
    trial_record,
    verify_protocol,
)
from spinretro.statevector import ket, project_spin, random_state

from conftest import rng_for, seeds

r2 = np.sqrt(2)


def consistent(protocol):
    return protocol.with_table(derive_table(protocol))


@pytest.fixture(scope="module")
def vaa_ok():
    return consistent(published.vaa())


@pytest.fixture(scope="module")
def singlet_ok():
    return consistent(published.singlet())


# -- tables ------------------------------------------------------------------

def test_table_rows_and_partitions_agree():
    t = published.ORTHOGONAL_TABLE
    assert t.rows() == ["---", "++-", "-++", "+-+"]
    for l, (plus, minus) in enumerate(t.partitions()):
        assert plus | minus == set(range(4)) and not plus & minus
        assert plus == {j for j in range(4) if t.signs[j, l] == 1}
    again = LookupTable.from_partitions([p for p, _ in t.partitions()], 4)
    assert again == t


@given(st.integers(1, 8), st.integers(1, 5), seeds)
def test_partition_representation_round_trip(k, m, seed):
    signs = rng_for(seed).choice([-1, 1], size=(k, m))
    t = LookupTable(signs)
    assert LookupTable.from_partitions([p for p, _ in t.partitions()], k) == t


def test_table_rejects_bad_entries():
    with pytest.raises(ValueError):
        LookupTable(np.array([[1, 0]]))
    with pytest.raises(ValueError):
        LookupTable.from_rows(["+x"])


def test_retrodict_examples():
    assert retrodict(published.ORTHOGONAL_TABLE, 1, 0) == 1
    assert all(retrodict(published.ORTHOGONAL_TABLE, 0, l) == -1 for l in range(3))
    assert retrodict(published.M4_TABLE, 0, 2) == -1
    with pytest.raises(IndexError):
        retrodict(published.ORTHOGONAL_TABLE, 4, 0)
    with pytest.raises(IndexError):
        retrodict(published.ORTHOGONAL_TABLE, 0, 3)


def test_m4_table_matches_plus_sets():
    t = LookupTable.from_partitions([{j - 1 for j in s} for s in published.M4_PLUS_SETS], 6)
    assert np.array_equal(t.signs[:, :3], published.M4_TABLE.signs[:, :3])
    # fourth column from n4 = -(n1 + n2 + n3)
    assert np.array_equal(published.M4_TABLE.signs[:, 3], -t.signs[:, :3].sum(axis=1))


# -- measurements ------------------------------------------------------------

def test_bob_measure_eigenstate_always_plus():
    p = RetrodictionProtocol("z", ket("00"), [[0, 0, 1]], ProjectiveMeasurement(np.eye(4)), LookupTable.from_rows("++++"))
    for seed in range(20):
        eta, post = bob_measure(p, 0, np.random.default_rng(seed))
        assert eta == 1 and np.allclose(post, ket("00"))


def test_bob_measure_vaa_fair_coin(vaa_ok):
    # oracle: squared norms of the two projections
    for n in vaa_ok.axes:
        for eta in (1, -1):
            post = project_spin(vaa_ok.initial, n, eta)
            assert abs(np.vdot(post, post).real - 0.5) < 1e-12
    etas = [bob_measure(vaa_ok, 2, np.random.default_rng(s))[0] for s in range(2000)]
    assert abs(np.mean(np.array(etas) == 1) - 0.5) < 5 * np.sqrt(0.25 / 2000)


def test_bob_measure_singlet_z_post_state():
    p = published.singlet()
    for seed in range(10):
        eta, post = bob_measure(p, 2, np.random.default_rng(seed))
        assert abs(np.linalg.norm(post) - 1) < 1e-12
        expected = ket("10") if eta == 1 else ket("01")
        assert abs(abs(np.vdot(expected, post)) - 1) < 1e-12
    with pytest.raises(IndexError):
        bob_measure(p, 3, np.random.default_rng(0))


def test_alice_measure_basis_vector_is_certain():
    meas = published.singlet().measurement
    for seed in range(10):
        assert alice_measure(meas.vector(1), meas, np.random.default_rng(seed)) == 1


def test_alice_after_singlet_z_down_only_first_two():
    probs = outcome_probabilities(ket("01"), published.singlet().measurement)
    assert np.allclose(probs, [0.5, 0.5, 0, 0], atol=1e-12)


def test_alice_measure_incomplete_basis():
    meas = ProjectiveMeasurement(np.eye(4)[:, :2])
    with pytest.raises(IncompleteBasisError, match="basis incomplete for state"):
        alice_measure(ket("11"), meas, np.random.default_rng(0))


@given(seeds)
@settings(max_examples=100)
def test_alice_probabilities_sum_to_one(seed):
    rng = rng_for(seed)
    q, _ = np.linalg.qr(rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6)))
    meas = ProjectiveMeasurement(q)
    p = outcome_probabilities(random_state(6, rng), meas)
    assert abs(p.sum() - 1) < 1e-10 and p.min() >= 0


# -- verification ------------------------------------------------------------

def test_consistent_tables_verify(vaa_ok, singlet_ok):
    for p in (vaa_ok, singlet_ok):
        rep = verify_protocol(p)
        assert rep.ok, rep.summary()
        assert max(rep.decomposition_residuals.values()) < 1e-10


def test_flipped_sign_touches_only_that_cell(vaa_ok):
    signs = vaa_ok.table.signs.copy()
    signs[0, 0] *= -1
    rep = verify_protocol(vaa_ok.with_table(LookupTable(signs)))
    assert not rep.ok
    assert rep.touching() == {(0, 0)}


def test_printed_tables_fail_verification():
    # the stored tables are the published ones; see the audit for how they relate
    assert not verify_protocol(published.vaa()).ok
    rep = verify_protocol(published.singlet())
    assert rep.touching() == {(2, 0), (3, 0), (2, 1), (3, 1)}


def test_derive_table_relations():
    assert np.array_equal(derive_table(published.vaa()).signs, -published.ORTHOGONAL_TABLE.signs)
    swapped = published.ORTHOGONAL_TABLE.signs[[0, 1, 3, 2]]
    assert np.array_equal(derive_table(published.singlet()).signs, swapped)


def test_derive_table_none_when_ambiguous():
    p = RetrodictionProtocol("z", ket("00"), [[1, 0, 0]], ProjectiveMeasurement(np.eye(4)), LookupTable.from_rows("++++"))
    assert derive_table(p) is None


# -- exact distribution --------------------------------------------------------

def brute_force_joint(protocol):
    """Independent oracle: Born rule on normalized post-states, uniform axis."""
    m, k = protocol.n_axes, protocol.n_outcomes
    out = np.zeros((m, 2, k))
    for l, e, j in itertools.product(range(m), range(2), range(k)):
        eta = (1, -1)[e]
        post = project_spin(protocol.initial, protocol.axes[l], eta)
        p_eta = np.linalg.norm(post) ** 2
        phi = protocol.measurement.vector(j)
        out[l, e, j] = p_eta * abs(np.vdot(phi, post / np.linalg.norm(post))) ** 2 / m
    return out


def test_enumerate_outcomes_vaa(vaa_ok):
    joint = enumerate_outcomes(vaa_ok)
    assert np.allclose(joint, brute_force_joint(vaa_ok), atol=1e-12)
    assert abs(joint.sum() - 1) < 1e-10
    assert np.allclose(joint.sum(axis=(1, 2)), 1 / 3, atol=1e-12)
    cond = joint / joint.sum(axis=2, keepdims=True)
    signs = vaa_ok.table.signs
    for l, e in itertools.product(range(3), range(2)):
        eta = (1, -1)[e]
        allowed = signs[:, l] == eta
        # two outcomes per (axis, eta) carry probability 1/2 each
        assert np.allclose(cond[l, e, allowed], 0.5, atol=1e-12)
        assert np.allclose(cond[l, e, ~allowed], 0.0, atol=1e-12)


def test_success_probability(vaa_ok):
    assert exact_success_probability(vaa_ok) == pytest.approx(1.0, abs=1e-12)
    assert exact_success_probability(published.vaa()) == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("name", ["vaa", "singlet"])
def test_zero_leakage(name):
    assert leakage(published.builtin_protocol(name)) < 1e-10


def test_zero_leakage_constructed_m4():
    b = np.full(6, 1 / np.sqrt(6))
    p = construct_basis(published.M4_TABLE, b, published.m4_axes()).protocol()
    assert leakage(p) < 1e-10
    assert np.allclose(alice_marginals(p), 1 / 6, atol=1e-10)


def test_sum_over_partition_equals_branch_probability(singlet_ok):
    b = singlet_ok.measurement.overlaps(singlet_ok.initial)
    for l, n in enumerate(singlet_ok.axes):
        for eta in (1, -1):
            post = project_spin(singlet_ok.initial, n, eta)
            members = singlet_ok.table.signs[:, l] == eta
            assert abs(np.sum(np.abs(b[members]) ** 2) - np.vdot(post, post).real) < 1e-10


# -- trials --------------------------------------------------------------------

def test_run_trials_perfect(vaa_ok):
    stats = run_trials(vaa_ok, 10000, seed=3)
    assert stats.successes == 10000
    assert stats.axis_trials.sum() == 10000


def test_run_trials_zero():
    stats = run_trials(published.vaa(), 0)
    assert stats.n_trials == 0 and stats.successes == 0 and np.isnan(stats.success_rate)
    with pytest.raises(ValueError):
        run_trials(published.vaa(), -1)


def test_null_model_half_success():
    rng = np.random.default_rng(5)
    q, _ = np.linalg.qr(rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4)))
    p = RetrodictionProtocol("null", published.vaa_state(), published.ORTHOGONAL_AXES, ProjectiveMeasurement(q),
                             LookupTable.from_rows(["+++"] * 4))
    n = 6000
    stats = run_trials(p, n, seed=1)
    for l in range(3):
        k = stats.axis_trials[l]
        assert abs(stats.axis_successes[l] / k - 0.5) < 5 * np.sqrt(0.25 / k)


def test_monte_carlo_matches_exact(singlet_ok):
    n = 20000
    stats = run_trials(singlet_ok, n, seed=99)
    joint = enumerate_outcomes(singlet_ok)
    sigma = np.sqrt(joint * (1 - joint) / n)
    freq = stats.joint_counts / n
    assert np.all(np.abs(freq - joint) <= 5 * sigma + 1e-12)


def test_records_are_reproducible_per_trial(singlet_ok):
    stats = run_trials(singlet_ok, 200, seed=42, keep_records=True)
    for rec in stats.records[::17]:
        assert trial_record(singlet_ok, 42, rec.index) == rec
    again = run_trials(singlet_ok, 200, seed=42, keep_records=True)
    assert again.records == stats.records
    for rec in stats.records:
        assert rec.correct == (rec.retrodictions[rec.chosen_axis] == rec.bob_outcome)


def test_retrodiction_answers_fixed_by_outcome(singlet_ok):
    stats = run_trials(singlet_ok, 500, seed=8, keep_records=True)
    seen = {}
    for rec in stats.records:
        assert seen.setdefault(rec.alice_outcome, rec.retrodictions) == rec.retrodictions
