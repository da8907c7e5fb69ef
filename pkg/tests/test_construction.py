import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spinretro import published
from spinretro.construction import (
    ConstraintError,
    InfeasibleError,
    NotApplicableError,
    PreconditionError,
    axes_from_gram,
    axis_gram,
    block_unitary,
    check_axis_dependence,
    check_constraints,
    construct_basis,
    feasibility,
    fit_axis_dependence,
    gell_mann,
    m4_coefficients,
    m4_dot_products,
    min_outcomes_lower_bound,
    postmeasurement_rank,
    solve_coefficients,
    table_gram,
)
from spinretro.protocol import LookupTable, verify_protocol
from spinretro.statevector import SIGMA_X, SIGMA_Y, SIGMA_Z, ket, lift_b, project_spin, random_axis, random_state

from conftest import rng_for, seeds

B6 = np.full(6, 1 / np.sqrt(6))
B4 = np.full(4, 0.5)


# -- constraints -----------------------------------------------------------------

@pytest.mark.parametrize("table", [published.ORTHOGONAL_TABLE, published.ORTHOGONAL_TABLE.__class__(-published.ORTHOGONAL_TABLE.signs)])
def test_orthogonal_constraints(table):
    rep = check_constraints(table, B4, published.ORTHOGONAL_AXES)
    assert rep.max_residual < 1e-12
    assert np.allclose(rep.implied_gram, np.eye(3), atol=1e-12)


def test_m4_constraints():
    rep = check_constraints(published.M4_TABLE, B6, published.m4_axes())
    assert rep.max_residual < 1e-12
    off = rep.implied_gram[~np.eye(4, dtype=bool)]
    assert np.allclose(off, -1 / 3, atol=1e-12)


def test_linear_sums_reported_separately():
    # squared sums vanish on this family but the unsquared ones need not
    b = np.sqrt([0.1, 0.4, 0.25, 0.25])
    rep = check_constraints(LookupTable.from_rows(["+", "+", "-", "-"]), b, [[0, 0, 1]])
    assert np.max(np.abs(rep.squared_sums)) < 1e-12
    # sqrt(0.1) + sqrt(0.4) - 1
    assert abs(rep.linear_sums[0] - (np.sqrt(0.1) + np.sqrt(0.4) - 1)) < 1e-12
    kinds = {r["constraint"] for r in rep.records()}
    assert {"signed_square_sum", "signed_linear_sum", "gram", "half_sum", "normalization"} <= kinds


def test_half_sums_follow_from_squared_sums():
    b = m4_coefficients(0.3, 0.1)
    rep = check_constraints(published.M4_TABLE, b, axes_from_gram(table_gram(published.M4_TABLE, b)))
    assert np.max(np.abs(rep.half_sums)) < 1e-12


@given(st.floats(0, 0.5), st.floats(0, 2 * np.pi))
def test_m4_family_dot_products(r, angle):
    b5, b6 = r * np.cos(angle), r * np.sin(angle)
    b = m4_coefficients(b5, b6)
    g = table_gram(published.M4_TABLE, b)
    assert np.allclose(np.diag(g), 1, atol=1e-12)
    d12, d23, d31 = m4_dot_products(b5, b6)
    assert abs(g[0, 1] - d12) < 1e-12 and abs(g[1, 2] - d23) < 1e-12 and abs(g[2, 0] - d31) < 1e-12


def test_m4_family_rejects_large_parameters():
    with pytest.raises(InfeasibleError):
        m4_coefficients(0.6, 0.5)


# -- solving and geometry ------------------------------------------------------------

def test_solve_coefficients_symmetric_m4():
    g = np.full((4, 4), -1 / 3) + np.eye(4) * 4 / 3
    assert np.allclose(solve_coefficients(published.M4_TABLE, g), B6, atol=1e-12)


def test_solve_coefficients_orthogonal():
    assert np.allclose(solve_coefficients(published.ORTHOGONAL_TABLE, np.eye(3)), B4, atol=1e-12)


def test_solve_coefficients_infeasible():
    g = np.full((4, 4), 0.5) + np.eye(4) * 0.5
    with pytest.raises(InfeasibleError, match="no retrodiction protocol"):
        solve_coefficients(published.M4_TABLE, g)


def test_axes_from_gram_tetrahedron():
    axes = published.m4_axes()
    assert np.linalg.norm(axes.sum(axis=0)) < 1e-10
    assert np.allclose(axes[0], [1, 0, 0], atol=1e-12)
    assert abs(axes[1, 2]) < 1e-12 and axes[1, 1] > 0


@given(seeds, st.integers(1, 6))
@settings(max_examples=60)
def test_axes_from_gram_round_trip(seed, m):
    rng = rng_for(seed)
    axes = np.array([random_axis(rng) for _ in range(m)])
    g = axis_gram(axes)
    assert np.max(np.abs(axis_gram(axes_from_gram(g)) - g)) < 1e-10


def test_axes_from_gram_errors():
    with pytest.raises(InfeasibleError):
        axes_from_gram(np.eye(4))
    with pytest.raises(InfeasibleError):
        axes_from_gram(np.array([[1, 2], [2, 1.0]]))
    with pytest.raises(InfeasibleError):
        axes_from_gram(np.diag([1, 2.0]))


def test_axis_dependence_m4():
    c = fit_axis_dependence(published.m4_axes())
    assert np.allclose(c, [[-1, -1, -1]], atol=1e-12)
    assert check_axis_dependence(published.M4_TABLE, [[-1, -1, -1]]).ok
    bad = check_axis_dependence(published.M4_TABLE, [[1, -1, -1]])
    assert not bad.ok and all(k == 0 for _, k in bad.failures)


def test_axis_dependence_not_applicable():
    with pytest.raises(NotApplicableError, match="not applicable"):
        check_axis_dependence(published.ORTHOGONAL_TABLE, np.zeros((0, 3)))


def test_feasibility_verdicts():
    assert not feasibility(5).feasible
    assert "no solutions exist" in feasibility(5).reason
    assert feasibility(4, published.m4_axes()).feasible
    skew = published.m4_axes().copy()
    skew[3] = -skew[:3].sum(axis=0) + [0.2, 0, 0]
    assert not feasibility(4, skew).feasible
    assert feasibility(3).feasible and feasibility(2).feasible and feasibility(1).feasible


# -- construction ----------------------------------------------------------------------

def test_gell_mann_generators():
    for d in (2, 3, 4):
        g = gell_mann(d)
        assert len(g) == d * d - 1
        for a in g:
            assert np.allclose(a, a.conj().T) and abs(np.trace(a)) < 1e-12
        tr = np.array([[np.trace(a @ b).real for b in g] for a in g])
        assert np.allclose(tr, 2 * np.eye(len(g)), atol=1e-12)
    assert np.allclose(block_unitary(None, 0.0, 3), np.eye(3))


@pytest.fixture(scope="module")
def m4():
    return construct_basis(published.M4_TABLE, B6, published.m4_axes())


def test_m4_construction_orthonormal_and_expansions(m4):
    assert m4.orthonormality_error() < 1e-10
    assert np.max(m4.expansion_residuals()) < 1e-10
    assert verify_protocol(m4.protocol()).ok
    # psi has coordinates b in the new basis
    assert np.allclose(m4.basis.conj().T @ m4.initial, B6, atol=1e-10)


def test_m4_spin_images_match_printed_coordinates(m4):
    for key, row in zip(("sigma_x", "sigma_y", "sigma_z"), m4.spin_images):
        assert np.allclose(row, published.M4_PRINTED_IMAGES[key], atol=1e-12)
    # sigma_z psi = (-phi2 + phi3 - phi5 + phi6) / 2
    lhs = lift_b(SIGMA_Z, 3) @ m4.initial
    rhs = m4.basis @ (np.array([0, -1, 1, 0, -1, 1]) / 2)
    assert np.max(np.abs(lhs - rhs)) < 1e-10


def test_orthogonal_construction_verifies():
    r = construct_basis(published.ORTHOGONAL_TABLE, B4, published.ORTHOGONAL_AXES)
    assert r.orthonormality_error() < 1e-10
    assert verify_protocol(r.protocol()).ok
    assert np.max(r.expansion_residuals()) < 1e-10


@given(seeds)
@settings(max_examples=25)
def test_equal_block_unitaries_preserve_verification(seed):
    rng = rng_for(seed)
    theta = rng.normal(size=8)
    lam = float(rng.normal())
    base = construct_basis(published.M4_TABLE, B6, published.m4_axes())
    r = construct_basis(published.M4_TABLE, B6, published.m4_axes(), theta, theta, lam, lam)
    assert verify_protocol(r.protocol()).ok
    assert np.max(r.expansion_residuals()) < 1e-10
    # the two bases differ by a unitary on Alice's factor alone
    w = r.basis @ base.basis.conj().T
    assert np.allclose(w.conj().T @ w, np.eye(6), atol=1e-10)
    for s in (SIGMA_X, SIGMA_Y, SIGMA_Z):
        op = lift_b(s, 3)
        assert np.max(np.abs(w @ op - op @ w)) < 1e-10


def test_unequal_block_unitaries_break_spin_relations():
    theta = np.zeros(8)
    theta[0] = 0.7
    r = construct_basis(published.M4_TABLE, B6, published.m4_axes(), theta, None)
    assert r.orthonormality_error() < 1e-10
    assert np.max(r.expansion_residuals()) > 1e-3
    # still block diagonal in Bob's sigma_z eigenspaces
    base = construct_basis(published.M4_TABLE, B6, published.m4_axes())
    w = r.basis @ base.basis.conj().T
    op = lift_b(SIGMA_Z, 3)
    assert np.max(np.abs(w @ op - op @ w)) < 1e-10


def test_construct_rejects_bad_input():
    with pytest.raises(ConstraintError):
        construct_basis(published.M4_TABLE, np.full(6, 0.3), published.m4_axes())
    with pytest.raises(ConstraintError):
        construct_basis(LookupTable.from_rows(["+", "-"]), [np.sqrt(0.5)] * 2, [[0, 0, 1]])


# -- rank argument ------------------------------------------------------------------------

def printed_post_states(psi):
    """The six post-measurement states written out with amplitudes a_{i,alpha}."""
    a = psi.reshape(-1, 2)
    up, dn = a[:, 0], a[:, 1]

    def st(u, d):
        return np.column_stack([u, d]).reshape(-1)

    r2 = np.sqrt(2)
    return {
        "two": st(up, 0 * dn),
        "three": st(0 * up, dn),
        "four": st(up + dn, up + dn) / r2,
        "five": st(up - dn, -up + dn) / r2,
        "six": st(up - 1j * dn, 1j * up + dn) / r2,
        "seven": st(up + 1j * dn, -1j * up + dn) / r2,
    }


def test_printed_post_states_match_projections():
    psi = published.vaa_state()
    s = printed_post_states(psi)
    r2 = np.sqrt(2)
    ax = published.ORTHOGONAL_AXES
    assert np.allclose(s["two"], project_spin(psi, ax[2], 1), atol=1e-12)
    assert np.allclose(s["three"], project_spin(psi, ax[2], -1), atol=1e-12)
    assert np.allclose(s["four"], r2 * project_spin(psi, ax[0], 1), atol=1e-12)
    assert np.allclose(s["five"], r2 * project_spin(psi, ax[0], -1), atol=1e-12)
    assert np.allclose(s["six"], r2 * project_spin(psi, ax[1], 1), atol=1e-12)
    assert np.allclose(s["seven"], r2 * project_spin(psi, ax[1], -1), atol=1e-12)


@given(seeds)
@settings(max_examples=50)
def test_linear_relations(seed):
    s = printed_post_states(random_state(6, rng_for(seed)))
    r2 = np.sqrt(2)
    assert np.max(np.abs(s["seven"] - (r2 * s["two"] + r2 * s["three"] - s["six"]))) < 1e-12
    assert np.max(np.abs(s["five"] - (r2 * s["two"] + r2 * s["three"] - s["four"]))) < 1e-12


def test_rank_examples():
    assert postmeasurement_rank(published.vaa_state(), published.ORTHOGONAL_AXES) == 4
    assert postmeasurement_rank(ket("01"), published.ORTHOGONAL_AXES) <= 2


@pytest.mark.parametrize("psi", [published.vaa_state(), published.singlet_state()])
def test_lower_bound_witness(psi):
    w = min_outcomes_lower_bound(psi, published.ORTHOGONAL_AXES)
    assert w.span_rank == 4 and len(w.triple_ranks) == 8 and w.holds


def test_lower_bound_precondition():
    with pytest.raises(PreconditionError):
        min_outcomes_lower_bound(ket("00"), published.ORTHOGONAL_AXES)
    with pytest.raises(PreconditionError):
        min_outcomes_lower_bound(published.vaa_state(), published.m4_axes())
