"""Algebraic construction of retrodiction protocols.

The unknowns are Alice's basis ``phi_j`` and the real, non-negative
coefficients ``b_j`` of the initial state ``psi = sum_j b_j phi_j``.  A sign
table ``eps[j, l]`` fixes how Bob's spin operators act on psi:

    (1 (x) sigma.n_l) psi = sum_j eps[j, l] b_j phi_j

and everything else (normalization, the axis Gram matrix, the half-sum rule,
the linear dependence of a fourth axis) follows from that relation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product

import numpy as np
from scipy.linalg import expm
from scipy.optimize import nnls

from .protocol import LookupTable, ProjectiveMeasurement, RetrodictionProtocol
from .statevector import ATOL, PIPELINE_ATOL, SIGMA_X, SIGMA_Y, SIGMA_Z, lift_b, project_spin

GRAM_CLAMP = -1e-12


class InfeasibleError(ValueError):
    pass


class ConstraintError(ValueError):
    pass


class NotApplicableError(ValueError):
    pass


class PreconditionError(ValueError):
    pass


def _signs(table) -> np.ndarray:
    if isinstance(table, LookupTable):
        return table.signs
    return LookupTable(table).signs


def table_gram(table, b) -> np.ndarray:
    """G[l, k] = sum_s eps[s, l] eps[s, k] b_s^2, the Gram matrix the table implies."""
    eps = _signs(table).astype(float)
    b2 = np.asarray(b, dtype=float) ** 2
    return eps.T @ (b2[:, None] * eps)


def axis_gram(axes) -> np.ndarray:
    n = np.atleast_2d(np.asarray(axes, dtype=float))
    return n @ n.T


@dataclass
class ConstraintReport:
    normalization: float
    linear_sums: np.ndarray
    squared_sums: np.ndarray
    gram_residual: np.ndarray
    half_sums: np.ndarray
    implied_gram: np.ndarray

    @property
    def max_residual(self) -> float:
        """Worst residual over the constraints that are enforced.

        The unsquared sums ``sum_j eps b_j`` are reported but not enforced.
        """
        parts = [
            abs(self.normalization),
            np.max(np.abs(self.squared_sums), initial=0.0),
            np.max(np.abs(self.gram_residual), initial=0.0),
            np.max(np.abs(self.half_sums), initial=0.0),
        ]
        return float(max(parts))

    def ok(self, tol: float = PIPELINE_ATOL) -> bool:
        return self.max_residual <= tol

    def records(self) -> list[dict]:
        out = [{"constraint": "normalization", "residual": float(self.normalization)}]
        for l, r in enumerate(self.squared_sums):
            out.append({"constraint": "signed_square_sum", "axis": l, "residual": float(r)})
        for l, r in enumerate(self.linear_sums):
            out.append({"constraint": "signed_linear_sum", "axis": l, "residual": float(r), "enforced": False})
        m = self.gram_residual.shape[0]
        for l in range(m):
            for k in range(l, m):
                out.append({"constraint": "gram", "axes": [l, k], "residual": float(self.gram_residual[l, k])})
        for l in range(self.half_sums.shape[0]):
            for e, eta in enumerate((1, -1)):
                out.append(
                    {"constraint": "half_sum", "axis": l, "eta": eta, "residual": float(self.half_sums[l, e])}
                )
        return out


def check_constraints(table, b, axes) -> ConstraintReport:
    """Residuals of every relation a valid (table, b, axes) triple obeys."""
    eps = _signs(table).astype(float)
    b = np.asarray(b, dtype=float)
    axes = np.atleast_2d(np.asarray(axes, dtype=float))
    if eps.shape[0] != b.size:
        raise ValueError(f"table has {eps.shape[0]} rows, b has {b.size} entries")
    if eps.shape[1] != axes.shape[0]:
        raise ValueError(f"table has {eps.shape[1]} columns, got {axes.shape[0]} axes")
    b2 = b**2
    implied = table_gram(eps, b)
    half = np.empty((eps.shape[1], 2))
    half[:, 0] = (eps == 1).T @ b2 - 0.5
    half[:, 1] = (eps == -1).T @ b2 - 0.5
    return ConstraintReport(
        normalization=float(b2.sum() - 1.0),
        linear_sums=eps.T @ b,
        squared_sums=eps.T @ b2,
        gram_residual=axis_gram(axes) - implied,
        half_sums=half,
        implied_gram=implied,
    )


def _coefficient_system(eps: np.ndarray, gram: np.ndarray | None):
    k, m = eps.shape
    rows = [np.ones(k)]
    rhs = [1.0]
    for l in range(m):
        rows.append(eps[:, l].astype(float))
        rhs.append(0.0)
    if gram is not None:
        for l in range(m):
            for q in range(l + 1, m):
                rows.append((eps[:, l] * eps[:, q]).astype(float))
                rhs.append(float(gram[l, q]))
    return np.array(rows), np.array(rhs)


def solve_coefficients(table, gram, tol: float = PIPELINE_ATOL) -> np.ndarray:
    """Non-negative b_j from the table and the axis Gram matrix.

    Solves the linear system in the squares b_j^2 (normalization, zero
    signed sums, Gram entries).  When the system leaves freedom the
    minimum-norm solution is used if it is non-negative.
    """
    eps = _signs(table)
    gram = np.asarray(gram, dtype=float)
    if gram.shape != (eps.shape[1], eps.shape[1]):
        raise ValueError(f"Gram matrix shape {gram.shape} does not match {eps.shape[1]} axes")
    a, y = _coefficient_system(eps, gram)
    x, *_ = np.linalg.lstsq(a, y, rcond=None)
    if np.linalg.norm(a @ x - y) > tol:
        raise InfeasibleError("no retrodiction protocol for this table/geometry (inconsistent system)")
    if x.min() < -ATOL:
        x, resid = nnls(a, y)
        if resid > tol:
            raise InfeasibleError("no retrodiction protocol for this table/geometry (negative b_j^2)")
    return np.sqrt(np.clip(x, 0.0, None))


def m4_coefficients(b5: float, b6: float) -> np.ndarray:
    """Two-parameter family of b_j for the six-outcome, four-axis table."""
    b1sq = 0.5 - b5**2 - b6**2
    if b1sq < -ATOL:
        raise InfeasibleError(f"b5^2 + b6^2 = {b5**2 + b6**2} exceeds 1/2")
    b1 = np.sqrt(max(b1sq, 0.0))
    return np.array([b1, abs(b6), abs(b5), b1, abs(b5), abs(b6)])


def m4_dot_products(b5: float, b6: float) -> tuple[float, float, float]:
    """(n1.n2, n2.n3, n3.n1) for the same family."""
    return 1 - 4 * b5**2 - 4 * b6**2, 4 * b6**2 - 1, 4 * b5**2 - 1


def canonical_orientation(axes) -> np.ndarray:
    """Rotate (or reflect) so n1 is along +x, n2 in the xy-plane with y > 0, etc."""
    a = np.atleast_2d(np.asarray(axes, dtype=float))
    q, r = np.linalg.qr(a.T, mode="complete")
    d = np.sign(np.diag(r))
    d = np.concatenate([d, np.ones(3 - d.size)])
    d[d == 0] = 1.0
    q = q * d
    return a @ q


def axes_from_gram(gram, canonical: bool = True) -> np.ndarray:
    """Unit 3-vectors with pairwise dot products ``gram``.

    Uses a symmetric eigendecomposition; eigenvalues down to -1e-12 are
    clamped to zero.  The result is unique up to a global rotation, which
    ``canonical`` pins down.
    """
    g = np.asarray(gram, dtype=float)
    if g.ndim != 2 or g.shape[0] != g.shape[1]:
        raise ValueError("Gram matrix must be square")
    if np.max(np.abs(g - g.T)) > PIPELINE_ATOL:
        raise InfeasibleError("Gram matrix is not symmetric")
    if np.max(np.abs(np.diag(g) - 1.0)) > PIPELINE_ATOL:
        raise InfeasibleError("Gram matrix diagonal must be 1 for unit axes")
    w, v = np.linalg.eigh((g + g.T) / 2)
    if w.min() < GRAM_CLAMP:
        raise InfeasibleError(f"infeasible geometry: Gram matrix has eigenvalue {w.min():.3g} < 0")
    w = np.clip(w, 0.0, None)
    order = np.argsort(w)[::-1]
    w, v = w[order], v[:, order]
    if w.size > 3 and w[3] > PIPELINE_ATOL:
        raise InfeasibleError(f"infeasible geometry: Gram matrix has rank > 3 (4th eigenvalue {w[3]:.3g})")
    vecs = np.zeros((g.shape[0], 3))
    k = min(3, w.size)
    vecs[:, :k] = v[:, :k] * np.sqrt(w[:k])
    vecs /= np.linalg.norm(vecs, axis=1, keepdims=True)
    return canonical_orientation(vecs) if canonical else vecs


def fit_axis_dependence(axes) -> np.ndarray:
    """Coefficients c[k] with n_{k+3} = sum_l c[k, l] n_l for the extra axes."""
    a = np.atleast_2d(np.asarray(axes, dtype=float))
    if a.shape[0] <= 3:
        raise NotApplicableError("axis dependence is not applicable for m <= 3")
    base = a[:3]
    if abs(np.linalg.det(base)) < PIPELINE_ATOL:
        raise InfeasibleError("the first three axes do not span 3D")
    return np.linalg.solve(base.T, a[3:].T).T


@dataclass
class DependenceReport:
    residuals: np.ndarray
    failures: list[tuple[int, int]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures


def check_axis_dependence(table, coefficients, tol: float = PIPELINE_ATOL) -> DependenceReport:
    """Check eps[s, k+3] = sum_l c[k, l] eps[s, l] for all rows s.

    ``failures`` lists (row, extra-axis) pairs, both 0-based.
    """
    eps = _signs(table).astype(float)
    m = eps.shape[1]
    if m <= 3:
        raise NotApplicableError("not applicable: axis dependence needs m > 3")
    c = np.atleast_2d(np.asarray(coefficients, dtype=float))
    if c.shape != (m - 3, 3):
        raise ValueError(f"need {(m - 3, 3)} coefficients, got {c.shape}")
    resid = eps[:, 3:] - eps[:, :3] @ c.T
    failures = [(int(s), int(k)) for s, k in zip(*np.nonzero(np.abs(resid) > tol))]
    return DependenceReport(resid, failures)


@dataclass
class Verdict:
    feasible: bool
    reason: str


def feasibility(m: int, axes=None, tol: float = PIPELINE_ATOL) -> Verdict:
    """Whether a retrodiction protocol can exist for m axes in this geometry."""
    if m < 1:
        raise ValueError("need at least one axis")
    if m <= 2:
        return Verdict(True, "m <= 2: prepare an eigenstate of one axis and measure the other")
    if m == 3:
        return Verdict(True, "m = 3: solvable for any three axes")
    if m == 4:
        if axes is None:
            raise ValueError("m = 4 feasibility depends on the axes")
        total = np.atleast_2d(np.asarray(axes, dtype=float)).sum(axis=0)
        norm = float(np.linalg.norm(total))
        if norm < tol:
            return Verdict(True, f"m = 4 with |sum n_l| = {norm:.2e}")
        return Verdict(False, f"m = 4 requires sum of axes = 0, got |sum n_l| = {norm:.3g}")
    return Verdict(False, f"no solutions exist for m > 4 (m = {m})")


def gell_mann(d: int) -> list[np.ndarray]:
    """The d^2 - 1 generalized Gell-Mann matrices, Tr(t_a t_b) = 2 delta_ab."""
    mats = []
    for j in range(d):
        for k in range(j + 1, d):
            s = np.zeros((d, d), dtype=complex)
            s[j, k] = s[k, j] = 1
            mats.append(s)
            a = np.zeros((d, d), dtype=complex)
            a[j, k] = -1j
            a[k, j] = 1j
            mats.append(a)
    for l in range(1, d):
        diag = np.zeros(d)
        diag[:l] = 1
        diag[l] = -l
        mats.append(np.diag(diag * np.sqrt(2.0 / (l * (l + 1)))).astype(complex))
    return mats


def block_unitary(theta, lam: float, d: int) -> np.ndarray:
    """exp(i theta . tau + i lam) on a d-dimensional eigenspace."""
    gens = gell_mann(d)
    theta = np.zeros(len(gens)) if theta is None else np.asarray(theta, dtype=float)
    if theta.shape != (len(gens),):
        raise ValueError(f"theta needs {len(gens)} components for a {d}-dimensional block")
    h = sum((t * g for t, g in zip(theta, gens)), np.zeros((d, d), dtype=complex))
    return expm(1j * h) * np.exp(1j * lam)


def _complement(span: np.ndarray, count: int) -> list[np.ndarray]:
    """Deterministic orthonormal completion by Gram-Schmidt over e_0, e_1, ..."""
    k = span.shape[0]
    found = [span[:, i] for i in range(span.shape[1])]
    extra = []
    for i in range(k):
        if len(extra) == count:
            break
        v = np.zeros(k, dtype=complex)
        v[i] = 1.0
        for _ in range(2):
            for u in found:
                v = v - np.vdot(u, v) * u
        n = np.linalg.norm(v)
        if n > 1e-8:
            v = v / n
            found.append(v)
            extra.append(v)
    if len(extra) != count:
        raise ConstraintError("could not complete the orthonormal set")
    return extra


@dataclass
class ConstructionResult:
    basis: np.ndarray
    coefficients: np.ndarray
    initial: np.ndarray
    axes: np.ndarray
    table: LookupTable
    spin_images: np.ndarray
    rows: np.ndarray
    theta_plus: np.ndarray
    theta_minus: np.ndarray
    lambda_plus: float
    lambda_minus: float
    constraints: ConstraintReport

    def orthonormality_error(self) -> float:
        k = self.basis.shape[1]
        return float(np.max(np.abs(self.basis.conj().T @ self.basis - np.eye(k))))

    def expansion_residuals(self) -> np.ndarray:
        """|(1 (x) sigma.n_l) psi - sum_j eps_j b_j phi_j| for every axis."""
        dim_alice = self.basis.shape[0] // 2
        out = []
        for l, n in enumerate(self.axes):
            op = lift_b(n[0] * SIGMA_X + n[1] * SIGMA_Y + n[2] * SIGMA_Z, dim_alice)
            lhs = op @ self.initial
            rhs = self.basis @ (self.table.signs[:, l] * self.coefficients)
            out.append(np.linalg.norm(lhs - rhs))
        return np.array(out)

    def protocol(self, name: str = "constructed") -> RetrodictionProtocol:
        return RetrodictionProtocol(
            name, self.initial, self.axes, ProjectiveMeasurement(self.basis), self.table
        )


def construct_basis(
    table,
    b,
    axes,
    theta_plus=None,
    theta_minus=None,
    lambda_plus: float = 0.0,
    lambda_minus: float = 0.0,
    complement=None,
    pairing: str = "equivariant",
    tol: float = PIPELINE_ATOL,
) -> ConstructionResult:
    """Build Alice's basis in ``C^(K/2) (x) C^2`` from (table, b, axes).

    In coordinates of the unknown basis, psi is ``b`` and sigma_a psi
    follows from the table.  These four orthonormal vectors plus an
    orthogonal completion are grouped by sigma_z eigenvalue zeta:

        zeta=+1:  (sigma_x + i sigma_y) psi / sqrt2,  (1 + sigma_z) psi / sqrt2,  chi_0, chi_2, ...
        zeta=-1:  (1 - sigma_z) psi / sqrt2,  (sigma_x - i sigma_y) psi / sqrt2,  chi_1, chi_3, ...

    so that sigma_x carries each +1 row onto the -1 row in the same slot.
    Slot ``a`` of eigenspace zeta is identified with ``|a, zeta>`` after the
    block unitary ``exp(i theta_zeta . tau + i lambda_zeta)`` is applied.
    Equal parameters on both blocks keep every spin relation intact;
    unequal ones do not.

    ``pairing="as_printed"`` lists the -1 block in the same order as the +1
    block instead, which breaks the sigma_x pairing; it exists to
    reproduce that recipe for comparison.
    """
    eps = _signs(table)
    b = np.asarray(b, dtype=float)
    axes = np.atleast_2d(np.asarray(axes, dtype=float))
    k = b.size
    if k % 2 or k < 4:
        raise ConstraintError(f"need an even number of outcomes >= 4, got {k}")
    if np.any(b < -ATOL):
        raise ConstraintError("coefficients b_j must be non-negative")
    report = check_constraints(eps, b, axes)
    if not report.ok(tol):
        raise ConstraintError(f"constraint residual {report.max_residual:.3e} exceeds {tol:g}")
    if np.linalg.matrix_rank(axes, tol=1e-8) < 3:
        raise ConstraintError("construction needs axes that span three dimensions")

    # sigma_a psi in coordinates: solve n_l . (A_x, A_y, A_z) = eps[:, l] * b
    images = (eps * b[:, None]).T
    spin, *_ = np.linalg.lstsq(axes, images, rcond=None)
    if np.max(np.abs(axes @ spin - images)) > tol:
        raise ConstraintError("the table is not linearly consistent with the axes")
    ax, ay, az = spin.astype(complex)
    bc = b.astype(complex)
    core = np.column_stack([bc, ax, ay, az])
    if np.max(np.abs(core.conj().T @ core - np.eye(4))) > tol:
        raise ConstraintError("psi and its spin images are not orthonormal")

    if complement is None:
        chis = _complement(core, k - 4)
    else:
        chis = [np.asarray(c, dtype=complex) for c in complement]
        if len(chis) != k - 4:
            raise ValueError(f"need {k - 4} complement vectors, got {len(chis)}")

    sq2 = np.sqrt(2.0)
    up_raise = (ax + 1j * ay) / sq2
    down_raise = (ax - 1j * ay) / sq2
    up_keep = (bc + az) / sq2
    down_keep = (bc - az) / sq2
    plus = [up_raise, up_keep] + chis[0::2]
    if pairing == "equivariant":
        minus = [down_keep, down_raise] + chis[1::2]
    elif pairing == "as_printed":
        minus = [down_raise, down_keep] + chis[1::2]
    else:
        raise ValueError(f"unknown pairing {pairing!r}")

    d = k // 2
    u_plus = block_unitary(theta_plus, lambda_plus, d)
    u_minus = block_unitary(theta_minus, lambda_minus, d)
    # rows = U (kets)  =>  kets = U^dagger rows
    plus_kets = u_plus.conj().T @ np.array(plus)
    minus_kets = u_minus.conj().T @ np.array(minus)
    rows = np.empty((k, k), dtype=complex)
    rows[0::2] = plus_kets
    rows[1::2] = minus_kets
    if np.max(np.abs(rows @ rows.conj().T - np.eye(k))) > tol:
        raise ConstraintError("internal error: the identified rows are not orthonormal")
    # |row r> = sum_j rows[r, j] phi_j  =>  phi_j = sum_r conj(rows[r, j]) |r>
    basis = rows.conj()
    n_gens = d * d - 1
    return ConstructionResult(
        basis=basis,
        coefficients=b,
        initial=basis @ b,
        axes=axes,
        table=LookupTable(eps),
        spin_images=spin,
        rows=rows,
        theta_plus=np.zeros(n_gens) if theta_plus is None else np.asarray(theta_plus, dtype=float),
        theta_minus=np.zeros(n_gens) if theta_minus is None else np.asarray(theta_minus, dtype=float),
        lambda_plus=float(lambda_plus),
        lambda_minus=float(lambda_minus),
        constraints=report,
    )


def block_overlap(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """<a_i|b_j> for two bases given as column matrices."""
    return a.conj().T @ b


def postmeasurement_states(psi, axes) -> list[np.ndarray]:
    """[phi_+(n_1), phi_-(n_1), phi_+(n_2), ...] (unnormalized)."""
    out = []
    for n in np.atleast_2d(axes):
        out.append(project_spin(psi, n, 1))
        out.append(project_spin(psi, n, -1))
    return out


def numerical_rank(vectors, tol: float = PIPELINE_ATOL) -> int:
    s = np.linalg.svd(np.column_stack(vectors), compute_uv=False)
    return int(np.sum(s > tol))


def postmeasurement_rank(psi, axes, tol: float = PIPELINE_ATOL) -> int:
    return numerical_rank(postmeasurement_states(psi, axes), tol)


@dataclass
class LowerBoundWitness:
    span_rank: int
    triple_ranks: dict[tuple[int, int, int], int]

    @property
    def holds(self) -> bool:
        return all(r == 3 for r in self.triple_ranks.values())


def min_outcomes_lower_bound(psi, axes, tol: float = PIPELINE_ATOL) -> LowerBoundWitness:
    """Certify that no 2-dim subspace of the 4-dim span avoids a sign triple.

    Every choice (eta_1, eta_2, eta_3) picks three post-measurement states;
    if all such triples are linearly independent, fewer than four outcomes
    cannot work.
    """
    axes = np.atleast_2d(np.asarray(axes, dtype=float))
    if axes.shape[0] != 3:
        raise PreconditionError("the lower-bound witness is stated for three axes")
    span = postmeasurement_rank(psi, axes, tol)
    if span != 4:
        raise PreconditionError(f"post-measurement states span {span} dimensions, not 4")
    ranks = {}
    for etas in product((1, -1), repeat=3):
        vecs = [project_spin(psi, n, eta) for n, eta in zip(axes, etas)]
        ranks[etas] = numerical_rank(vecs, tol)
    return LowerBoundWitness(span, ranks)
