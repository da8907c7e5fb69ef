"""Numerical audit of the transcribed protocols.

Each check yields an ``AuditRecord``; failing records are the discrepancy
list.  Nothing is corrected: the audit only measures.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from itertools import permutations

import numpy as np

from . import published
from .construction import check_constraints, construct_basis
from .protocol import LookupTable, RetrodictionProtocol, derive_table
from .statevector import PIPELINE_ATOL, bob_spin


@dataclass
class AuditRecord:
    check: str
    subject: str
    residual: float
    passed: bool
    message: str = ""
    detail: dict = field(default_factory=dict)

    def as_record(self) -> dict:
        return asdict(self)


@dataclass
class AuditReport:
    protocol: str
    records: list[AuditRecord]

    @property
    def discrepancies(self) -> list[AuditRecord]:
        return [r for r in self.records if not r.passed]

    @property
    def ok(self) -> bool:
        return not self.discrepancies

    def find(self, check: str) -> list[AuditRecord]:
        return [r for r in self.records if r.check == check]


def table_relation(printed: LookupTable, other: LookupTable | None) -> dict:
    """How ``other`` relates to ``printed``: identical, negated, a row permutation, or none."""
    if other is None:
        return {"relation": "undetermined"}
    a, b = printed.signs, other.signs
    if a.shape != b.shape:
        return {"relation": "none"}
    if np.array_equal(a, b):
        return {"relation": "identical"}
    if np.array_equal(a, -b):
        return {"relation": "negated"}
    k = a.shape[0]
    if k <= 8:
        for perm in permutations(range(k)):
            if np.array_equal(a[list(perm)], b):
                moved = [[i + 1, p + 1] for i, p in enumerate(perm) if i != p]
                return {"relation": "row_permutation", "moved_rows": moved}
    return {"relation": "none"}


def _basis_checks(name: str, basis: np.ndarray, tol: float) -> list[AuditRecord]:
    out = []
    g = basis.conj().T @ basis
    k = g.shape[0]
    for i in range(k):
        dev = abs(g[i, i].real - 1.0)
        out.append(AuditRecord("basis_norm", f"phi_{i + 1}", dev, dev <= tol,
                               f"|phi_{i + 1}|^2 = {g[i, i].real:.6g}"))
    for i in range(k):
        for j in range(i + 1, k):
            dev = abs(g[i, j])
            out.append(AuditRecord("orthogonality", f"phi_{i + 1},phi_{j + 1}", dev, dev <= tol,
                                   f"|<phi_{i + 1}|phi_{j + 1}>| = {dev:.6g}"))
    return out


def _completion_checks(basis: np.ndarray, tol: float, labels) -> list[AuditRecord]:
    """Localize a single bad vector: if the other K-1 are orthonormal, phi_j is fixed up to phase."""
    out = []
    k = basis.shape[1]
    for j in range(k):
        rest = np.delete(basis, j, axis=1)
        if np.max(np.abs(rest.conj().T @ rest - np.eye(k - 1))) > tol:
            continue
        comp = basis[:, j] - rest @ (rest.conj().T @ basis[:, j])
        nc = np.linalg.norm(comp)
        if nc < tol:
            continue
        comp = comp / nc
        ov = np.vdot(comp, basis[:, j])
        if abs(ov) > 0:
            comp = comp * ov / abs(ov)
        diffs = _entry_diffs(basis[:, [j]], comp[:, None], tol, labels)
        for d in diffs:
            d["vector"] = j + 1
        r = float(np.max(np.abs(comp - basis[:, j])))
        out.append(AuditRecord("completion_diff", f"phi_{j + 1}", r, not diffs,
                               f"phi_{j + 1} vs the unique unit vector orthogonal to the others: "
                               f"{len(diffs)} entries differ",
                               {"entries": diffs, "completion": [[c.real, c.imag] for c in comp]}))
    return out


def _table_checks(protocol: RetrodictionProtocol, tol: float) -> list[AuditRecord]:
    out = []
    rows = protocol.table.rows()
    seen: dict[str, int] = {}
    for j, r in enumerate(rows):
        if r in seen:
            out.append(AuditRecord("duplicate_rows", f"lambda_{seen[r] + 1},lambda_{j + 1}", 0.0, False,
                                   f"rows {seen[r] + 1} and {j + 1} are both {r}"))
        else:
            seen[r] = j
    derived = derive_table(protocol, tol)
    rel = table_relation(protocol.table, derived)
    msg = "table consistent with state and basis" if rel["relation"] == "identical" else (
        f"geometry-consistent table relates to the stored one as: {rel['relation']}")
    detail = dict(rel)
    if derived is not None:
        detail["consistent_rows"] = derived.rows()
    out.append(AuditRecord("table_consistency", protocol.name, 0.0 if rel["relation"] == "identical" else 1.0,
                           rel["relation"] == "identical", msg, detail))
    return out


def _expansion_checks(protocol: RetrodictionProtocol, b, tol: float) -> list[AuditRecord]:
    """(1 (x) sigma.n_l) psi against sum_j eps_j b_j phi_j for each axis."""
    out = []
    basis = protocol.measurement.basis
    psi = protocol.initial
    dim_alice = psi.size // 2
    for l, n in enumerate(protocol.axes):
        lhs = bob_spin(n, dim_alice) @ psi
        rhs = basis @ (protocol.table.signs[:, l] * b)
        r = float(np.linalg.norm(lhs - rhs))
        out.append(AuditRecord("spin_expansion", f"axis_{l + 1}", r, r <= tol,
                               f"spin image residual on axis {l + 1}: {r:.3e}"))
    return out


def _coefficient_checks(protocol, b, tol: float) -> list[AuditRecord]:
    b = np.asarray(b)
    s = float(np.sum(np.abs(b) ** 2))
    out = [AuditRecord("coefficient_normalization", "sum b_j^2", abs(s - 1.0), abs(s - 1.0) <= tol,
                       f"sum of b_j^2 = {s:.12g}, required 1", {"sum": s})]
    rep = check_constraints(protocol.table, np.abs(b), protocol.axes)
    for rec in rep.records():
        if rec["constraint"] in ("normalization",):
            continue
        enforced = rec.pop("enforced", True)
        residual = abs(rec.pop("residual"))
        what = rec.pop("constraint")
        passed = residual <= tol or not enforced
        subject = ",".join(f"{k}={v}" for k, v in rec.items())
        out.append(AuditRecord(f"constraint_{what}", subject, residual, passed,
                               "reported only" if not enforced else "", rec))
    return out


def _entry_diffs(printed: np.ndarray, oracle: np.ndarray, tol: float, labels) -> list[dict]:
    diffs = []
    for j in range(printed.shape[1]):
        for i in range(printed.shape[0]):
            d = abs(printed[i, j] - oracle[i, j])
            if d > tol:
                diffs.append({"vector": j + 1, "entry": labels[i], "printed": [printed[i, j].real, printed[i, j].imag],
                              "oracle": [oracle[i, j].real, oracle[i, j].imag], "abs_diff": float(d)})
    return diffs


def _ket_labels(dim: int) -> list[str]:
    n = int(round(np.log2(dim)))
    return ["|" + format(i, f"0{n}b").replace("0", "u").replace("1", "d") + ">" for i in range(dim)]


M4_ENTRY_LABELS = ["|2,up>", "|2,down>", "|1,up>", "|1,down>", "|0,up>", "|0,down>"]


def _m4_oracle_checks(tol: float) -> list[AuditRecord]:
    out = []
    printed = np.column_stack(published.m4_basis())
    b = np.full(6, 1 / np.sqrt(6))
    axes = published.m4_axes()
    images = published.M4_PRINTED_IMAGES
    chi2_norm = float(np.linalg.norm(images["chi_2"]))
    out.append(AuditRecord("completion_norm", "chi_2", abs(chi2_norm - 1.0), abs(chi2_norm - 1.0) <= tol,
                           f"printed chi_2 has norm {chi2_norm:.6g}"))
    chi1_norm = float(np.linalg.norm(images["chi_1"]))
    out.append(AuditRecord("completion_norm", "chi_1", abs(chi1_norm - 1.0), abs(chi1_norm - 1.0) <= tol,
                           f"printed chi_1 has norm {chi1_norm:.6g}"))

    oracle = construct_basis(published.M4_TABLE, b, axes)
    for key, row in zip(("sigma_x", "sigma_y", "sigma_z"), oracle.spin_images):
        r = float(np.max(np.abs(row - images[key])))
        out.append(AuditRecord("spin_image_coordinates", key, r, r <= tol,
                               f"printed coordinates of {key} psi vs oracle"))

    for label, result in (("oracle", oracle),):
        diffs = _entry_diffs(printed, result.basis, tol, M4_ENTRY_LABELS)
        per_vec = np.max(np.abs(printed - result.basis), axis=0)
        out.append(AuditRecord("oracle_diff", label, float(per_vec.max()), not diffs,
                               f"{len(diffs)} entries differ from the constructed basis",
                               {"per_vector_max": per_vec.tolist(), "entries": diffs}))

    chis = [images["chi_1"], images["chi_2"] / chi2_norm]
    literal = construct_basis(published.M4_TABLE, b, axes, complement=chis, pairing="as_printed")
    diffs = _entry_diffs(printed, literal.basis, tol, M4_ENTRY_LABELS)
    per_vec = np.max(np.abs(printed - literal.basis), axis=0)
    matching = [j + 1 for j, d in enumerate(per_vec) if d <= tol]
    out.append(AuditRecord("oracle_diff", "literal_recipe", float(per_vec.max()), not diffs,
                           f"literal recipe with printed completion reproduces phi {matching}",
                           {"per_vector_max": per_vec.tolist(), "entries": diffs, "matching": matching,
                            "literal_spin_expansion": literal.expansion_residuals().tolist()}))
    return out


def errata_check(name: str, tol: float = PIPELINE_ATOL) -> AuditReport:
    """Audit one builtin protocol exactly as transcribed."""
    protocol = published.builtin_protocol(name)
    basis = protocol.measurement.basis
    if name == "m4-symmetric":
        b = np.full(6, 1 / np.sqrt(6))
    elif name == "m3-nonorthogonal":
        b = published.M3_COEFFICIENTS
    else:
        b = protocol.measurement.overlaps(protocol.initial)
    labels = M4_ENTRY_LABELS if name == "m4-symmetric" else _ket_labels(basis.shape[0])
    records = _basis_checks(name, basis, tol)
    records += _completion_checks(basis, tol, labels)
    records += _coefficient_checks(protocol, b, tol)
    records += _table_checks(protocol, tol)
    records += _expansion_checks(protocol, np.asarray(b, dtype=complex), tol)
    if name == "m4-symmetric":
        records += _m4_oracle_checks(tol)
    return AuditReport(name, records)


def audit_all(tol: float = PIPELINE_ATOL) -> dict[str, AuditReport]:
    return {name: errata_check(name, tol) for name in published.FACTORIES}
