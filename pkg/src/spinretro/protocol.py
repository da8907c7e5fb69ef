"""The retrodiction game: Bob measures, Alice measures, Alice answers queries.

Indices are 0-based throughout: outcome ``j`` is Alice's basis vector
``basis[:, j]`` and axis ``l`` is ``axes[l]``.  Bob's outcomes are +1/-1.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import rng as rngmod
from .statevector import (
    ATOL,
    PIPELINE_ATOL,
    as_state,
    bob_spin,
    dim_a,
    is_normalized,
    project_spin,
    unit_axis,
)

PROB_FLOOR = 1e-10
WARN_FLOOR = 1e-12

ETAS = (1, -1)

_ARROWS = {"+": 1, "u": 1, "↑": 1, "-": -1, "d": -1, "↓": -1}


class IncompleteBasisError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class LookupTable:
    """Sign table: ``signs[j, l]`` is Alice's answer for outcome j, axis l."""

    signs: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.signs, dtype=int)
        if s.ndim != 2 or s.size == 0:
            raise ValueError("look-up table must be a non-empty K x m matrix")
        if not np.all(np.isin(s, (1, -1))):
            raise ValueError("look-up table entries must be +1 or -1")
        s = s.copy()
        s.setflags(write=False)
        object.__setattr__(self, "signs", s)

    @classmethod
    def from_rows(cls, rows: Iterable[str]) -> "LookupTable":
        """Rows of arrows or signs, e.g. ``["ddd", "uud"]`` or ``["---", "++-"]``."""
        parsed = []
        for row in rows:
            tokens = [c for c in row if not c.isspace()]
            try:
                parsed.append([_ARROWS[c] for c in tokens])
            except KeyError as exc:
                raise ValueError(f"bad table symbol {exc.args[0]!r}") from None
        return cls(np.array(parsed))

    @classmethod
    def from_partitions(cls, plus_sets: Sequence[Iterable[int]], n_outcomes: int) -> "LookupTable":
        """Build from the index sets S_+(n_l) (0-based); everything else is -1."""
        signs = -np.ones((n_outcomes, len(plus_sets)), dtype=int)
        for l, members in enumerate(plus_sets):
            for j in members:
                signs[j, l] = 1
        return cls(signs)

    @property
    def n_outcomes(self) -> int:
        return self.signs.shape[0]

    @property
    def n_axes(self) -> int:
        return self.signs.shape[1]

    def partitions(self) -> list[tuple[frozenset[int], frozenset[int]]]:
        """(S_+, S_-) for every axis."""
        out = []
        for col in self.signs.T:
            plus = frozenset(int(j) for j in np.flatnonzero(col == 1))
            minus = frozenset(int(j) for j in np.flatnonzero(col == -1))
            out.append((plus, minus))
        return out

    def retrodict(self, j: int, l: int) -> int:
        if not (0 <= j < self.n_outcomes and 0 <= l < self.n_axes):
            raise IndexError(f"(outcome {j}, axis {l}) outside a {self.n_outcomes}x{self.n_axes} table")
        return int(self.signs[j, l])

    def rows(self) -> list[str]:
        return ["".join("+" if s > 0 else "-" for s in row) for row in self.signs]

    def __eq__(self, other):
        if not isinstance(other, LookupTable):
            return NotImplemented
        return self.signs.shape == other.signs.shape and bool(np.all(self.signs == other.signs))

    def __repr__(self):
        return f"LookupTable({self.rows()})"


@dataclass(frozen=True, eq=False)
class ProjectiveMeasurement:
    """Alice's measurement; ``basis[:, j]`` is phi_j in the computational basis.

    Orthonormality is not enforced here so that printed bases can be
    audited; ``verify_protocol`` reports it.
    """

    basis: np.ndarray
    labels: tuple = ()

    def __post_init__(self):
        b = np.array(self.basis, dtype=complex)
        if b.ndim != 2:
            raise ValueError("basis must be a (dim, K) matrix of column vectors")
        b.setflags(write=False)
        object.__setattr__(self, "basis", b)
        labels = tuple(self.labels) or tuple(f"lambda_{j + 1}" for j in range(b.shape[1]))
        if len(labels) != b.shape[1] or len(set(labels)) != len(labels):
            raise ValueError("eigenvalue labels must be distinct, one per basis vector")
        object.__setattr__(self, "labels", labels)

    @classmethod
    def from_vectors(cls, vectors: Sequence[np.ndarray], labels: tuple = ()) -> "ProjectiveMeasurement":
        return cls(np.column_stack([as_state(v) for v in vectors]), labels)

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    @property
    def n_outcomes(self) -> int:
        return self.basis.shape[1]

    def vector(self, j: int) -> np.ndarray:
        return self.basis[:, j]

    def overlaps(self, state: np.ndarray) -> np.ndarray:
        """<phi_j|state> for every j."""
        return self.basis.conj().T @ state

    def gram(self) -> np.ndarray:
        return self.basis.conj().T @ self.basis

    def orthonormality_error(self) -> float:
        return float(np.max(np.abs(self.gram() - np.eye(self.n_outcomes))))


@dataclass(frozen=True, eq=False)
class RetrodictionProtocol:
    name: str
    initial: np.ndarray
    axes: np.ndarray
    measurement: ProjectiveMeasurement
    table: LookupTable
    notes: tuple[str, ...] = ()

    def __post_init__(self):
        psi = as_state(self.initial).copy()
        psi.setflags(write=False)
        object.__setattr__(self, "initial", psi)
        axes = np.array([unit_axis(n, atol=PIPELINE_ATOL) for n in np.atleast_2d(self.axes)])
        axes.setflags(write=False)
        object.__setattr__(self, "axes", axes)
        dim_a(psi)
        if self.measurement.dim != psi.size:
            raise ValueError(f"basis dimension {self.measurement.dim} != state dimension {psi.size}")
        if self.table.n_outcomes != self.measurement.n_outcomes:
            raise ValueError(
                f"table has {self.table.n_outcomes} rows but the basis has {self.measurement.n_outcomes} vectors"
            )
        if self.table.n_axes != len(axes):
            raise ValueError(f"table has {self.table.n_axes} columns but there are {len(axes)} axes")

    @property
    def n_axes(self) -> int:
        return len(self.axes)

    @property
    def n_outcomes(self) -> int:
        return self.measurement.n_outcomes

    def with_table(self, table: LookupTable, name: str | None = None) -> "RetrodictionProtocol":
        return RetrodictionProtocol(
            name or self.name, self.initial, self.axes, self.measurement, table, self.notes
        )


@dataclass(frozen=True)
class TrialRecord:
    index: int
    chosen_axis: int
    bob_outcome: int
    alice_outcome: int
    retrodictions: tuple[int, ...]
    correct: bool


def _draw(rng) -> float:
    if isinstance(rng, np.random.Generator):
        return float(rng.random())
    return float(rng)


def bob_measure(protocol: RetrodictionProtocol, axis_index: int, rng) -> tuple[int, np.ndarray]:
    """Sample Bob's outcome along ``axes[axis_index]``; consumes one uniform.

    Returns ``(eta, normalized post-measurement state)``.
    """
    if not 0 <= axis_index < protocol.n_axes:
        raise IndexError(f"axis index {axis_index} out of range (m={protocol.n_axes})")
    psi = protocol.initial
    if not is_normalized(psi, PIPELINE_ATOL):
        raise ValueError("initial state is not normalized")
    n = protocol.axes[axis_index]
    plus = project_spin(psi, n, 1)
    p_plus = float(np.vdot(plus, plus).real)
    eta = 1 if _draw(rng) < p_plus else -1
    post = plus if eta == 1 else project_spin(psi, n, -1)
    return eta, post / np.linalg.norm(post)


def outcome_probabilities(state: np.ndarray, meas: ProjectiveMeasurement) -> np.ndarray:
    """Born probabilities |<phi_j|state>|^2; raises if the basis misses part of the state."""
    c = meas.overlaps(state)
    residual = state - meas.basis @ c
    if np.linalg.norm(residual) >= PROB_FLOOR:
        raise IncompleteBasisError(
            f"basis incomplete for state (residual norm {np.linalg.norm(residual):.3e})"
        )
    return np.abs(c) ** 2


def alice_measure(state: np.ndarray, meas: ProjectiveMeasurement, rng) -> int:
    """Sample Alice's outcome index j; consumes one uniform."""
    state = as_state(state)
    if not is_normalized(state, PIPELINE_ATOL):
        raise ValueError("state is not normalized")
    probs = outcome_probabilities(state, meas)
    return rngmod.pick(probs, _draw(rng))


def retrodict(table: LookupTable, j: int, l: int) -> int:
    return table.retrodict(j, l)


@dataclass
class Finding:
    kind: str
    magnitude: float
    axis: int | None = None
    eta: int | None = None
    outcome: int | None = None
    message: str = ""

    def as_record(self) -> dict:
        return {
            "kind": self.kind,
            "axis": self.axis,
            "eta": self.eta,
            "outcome": self.outcome,
            "magnitude": self.magnitude,
            "message": self.message,
        }


@dataclass
class VerificationReport:
    protocol: str
    violations: list[Finding] = field(default_factory=list)
    warnings: list[Finding] = field(default_factory=list)
    orthonormality_error: float = 0.0
    initial_norm_error: float = 0.0
    decomposition_residuals: dict[tuple[int, int], float] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.violations

    def touching(self) -> set[tuple[int, int]]:
        """(outcome, axis) pairs with at least one table violation."""
        return {(f.outcome, f.axis) for f in self.violations if f.kind == "table"}

    def summary(self) -> str:
        lines = [f"protocol {self.protocol}: {'OK' if self.ok else 'FAILED'}"]
        lines.append(f"  orthonormality error {self.orthonormality_error:.3e}")
        for f in self.violations:
            lines.append(f"  violation {f.kind}: {f.message} (magnitude {f.magnitude:.3e})")
        for f in self.warnings:
            lines.append(f"  warning {f.kind}: {f.message} (magnitude {f.magnitude:.3e})")
        return "\n".join(lines)


def verify_protocol(protocol: RetrodictionProtocol, tol: float = PROB_FLOOR) -> VerificationReport:
    """Exhaustively check that every possible Alice outcome retrodicts correctly.

    For every axis l and Bob outcome eta, each j with non-negligible
    probability |<phi_j|phi_eta(n_l)>|^2 must have table sign eta.  Also
    checks orthonormality of the basis and the decomposition
    phi_eta(n_l) = sum_{j in S_eta} b_j phi_j with b_j = <phi_j|psi>.
    """
    rep = VerificationReport(protocol.name)
    meas = protocol.measurement
    psi = protocol.initial
    rep.initial_norm_error = abs(float(np.vdot(psi, psi).real) - 1.0)
    if rep.initial_norm_error > ATOL:
        rep.violations.append(
            Finding("normalization", rep.initial_norm_error, message="initial state is not normalized")
        )
    rep.orthonormality_error = meas.orthonormality_error()
    if rep.orthonormality_error > tol:
        g = meas.gram()
        k = meas.n_outcomes
        for i in range(k):
            for j in range(i, k):
                dev = abs(g[i, j] - (1.0 if i == j else 0.0))
                if dev > tol:
                    what = f"<phi_{i + 1}|phi_{j + 1}> = {g[i, j]:.6g}"
                    rep.violations.append(Finding("orthonormality", dev, outcome=i, message=what))
    b = meas.overlaps(psi)
    completeness = float(np.linalg.norm(psi - meas.basis @ b))
    if completeness > tol:
        rep.violations.append(
            Finding("completeness", completeness, message="initial state has weight outside the basis span")
        )
    signs = protocol.table.signs
    for l, n in enumerate(protocol.axes):
        for eta in ETAS:
            post = project_spin(psi, n, eta)
            probs = np.abs(meas.overlaps(post)) ** 2
            for j, p in enumerate(probs):
                if signs[j, l] == eta:
                    continue
                msg = f"outcome {j + 1} reachable from eta={eta:+d} on axis {l + 1} but table says {signs[j, l]:+d}"
                if p > tol:
                    rep.violations.append(Finding("table", float(p), l, eta, j, msg))
                elif p > WARN_FLOOR:
                    rep.warnings.append(Finding("table", float(p), l, eta, j, msg))
            members = signs[:, l] == eta
            expansion = meas.basis[:, members] @ b[members]
            resid = float(np.linalg.norm(post - expansion))
            rep.decomposition_residuals[(l, eta)] = resid
            if resid > tol:
                rep.violations.append(
                    Finding(
                        "decomposition",
                        resid,
                        l,
                        eta,
                        message=f"phi_eta(n_{l + 1}) != sum over S_{eta:+d} of b_j phi_j",
                    )
                )
    return rep


def enumerate_outcomes(protocol: RetrodictionProtocol, axis_weights=None) -> np.ndarray:
    """Exact joint distribution ``P[l, e, j]`` with e=0 for eta=+1, e=1 for eta=-1."""
    m, k = protocol.n_axes, protocol.n_outcomes
    w = _axis_weights(m, axis_weights)
    joint = np.zeros((m, 2, k))
    for l, n in enumerate(protocol.axes):
        for e, eta in enumerate(ETAS):
            post = project_spin(protocol.initial, n, eta)
            # P(eta) * |<phi_j|post/|post|>|^2 collapses to |<phi_j|post>|^2
            joint[l, e] = w[l] * np.abs(protocol.measurement.overlaps(post)) ** 2
    return joint


def exact_success_probability(protocol: RetrodictionProtocol, axis_weights=None) -> float:
    joint = enumerate_outcomes(protocol, axis_weights)
    signs = protocol.table.signs
    hit = np.stack([(signs == 1).T, (signs == -1).T], axis=1)
    return float(joint[hit].sum())


def alice_marginals(protocol: RetrodictionProtocol) -> np.ndarray:
    """P(j | l) before Bob's outcome is revealed, shape (m, K)."""
    joint = enumerate_outcomes(protocol)
    per_axis = joint.sum(axis=1)
    return per_axis / per_axis.sum(axis=1, keepdims=True)


def leakage(protocol: RetrodictionProtocol) -> float:
    """Largest change of P(j | l) across axes; 0 means Alice learns nothing about l."""
    marg = alice_marginals(protocol)
    return float(np.max(marg.max(axis=0) - marg.min(axis=0)))


def derive_table(protocol: RetrodictionProtocol, tol: float = PROB_FLOOR) -> LookupTable | None:
    """The unique table consistent with the geometry, or None if none exists.

    Outcome j gets sign eta on axis l when phi_j is reachable from eta only.
    """
    m, k = protocol.n_axes, protocol.n_outcomes
    signs = np.zeros((k, m), dtype=int)
    for l, n in enumerate(protocol.axes):
        reach = {}
        for eta in ETAS:
            post = project_spin(protocol.initial, n, eta)
            reach[eta] = np.abs(protocol.measurement.overlaps(post)) ** 2 > tol
        for j in range(k):
            if reach[1][j] and reach[-1][j]:
                return None
            signs[j, l] = -1 if reach[-1][j] else 1
    return LookupTable(signs)


def _axis_weights(m: int, axis_weights) -> np.ndarray:
    if axis_weights is None:
        return np.full(m, 1.0 / m)
    w = np.asarray(axis_weights, dtype=float)
    if w.shape != (m,) or np.any(w < 0) or w.sum() <= 0:
        raise ValueError("axis weights must be m non-negative numbers with positive sum")
    return w / w.sum()


@dataclass
class TrialStats:
    n_trials: int
    successes: int
    axis_trials: np.ndarray
    axis_successes: np.ndarray
    bob_counts: np.ndarray
    alice_counts: np.ndarray
    joint_counts: np.ndarray
    records: list[TrialRecord] | None = None

    @property
    def success_rate(self) -> float:
        return self.successes / self.n_trials if self.n_trials else float("nan")

    def axis_success_rates(self) -> np.ndarray:
        with np.errstate(invalid="ignore", divide="ignore"):
            return self.axis_successes / self.axis_trials


def run_trials(
    protocol: RetrodictionProtocol,
    n_trials: int,
    seed: int = rngmod.DEFAULT_SEED,
    keep_records: bool = False,
    axis_weights=None,
) -> TrialStats:
    """Monte Carlo rounds of the game; trial t uses only ``(seed, t)``.

    Each round picks an axis, samples Bob's outcome, samples Alice's outcome
    and records her answers for every axis (not just the true one).
    """
    if n_trials < 0:
        raise ValueError("number of trials must be non-negative")
    m, k = protocol.n_axes, protocol.n_outcomes
    w = _axis_weights(m, axis_weights)
    if not is_normalized(protocol.initial, PIPELINE_ATOL):
        raise ValueError("initial state is not normalized")

    # per (axis, eta): P(eta) and Alice's conditional distribution
    p_plus = np.zeros(m)
    alice_probs = np.zeros((m, 2, k))
    for l, n in enumerate(protocol.axes):
        for e, eta in enumerate(ETAS):
            post = project_spin(protocol.initial, n, eta)
            p = float(np.vdot(post, post).real)
            if e == 0:
                p_plus[l] = p
            if p > 0:
                alice_probs[l, e] = outcome_probabilities(post / np.sqrt(p), protocol.measurement)

    signs = protocol.table.signs
    stats = TrialStats(
        n_trials=n_trials,
        successes=0,
        axis_trials=np.zeros(m, dtype=int),
        axis_successes=np.zeros(m, dtype=int),
        bob_counts=np.zeros((m, 2), dtype=int),
        alice_counts=np.zeros(k, dtype=int),
        joint_counts=np.zeros((m, 2, k), dtype=int),
        records=[] if keep_records else None,
    )
    for t in range(n_trials):
        u_axis, u_bob, u_alice = rngmod.trial_uniforms(seed, t)
        l = rngmod.pick(w, u_axis)
        e = 0 if u_bob < p_plus[l] else 1
        eta = ETAS[e]
        j = rngmod.pick(alice_probs[l, e], u_alice)
        answers = tuple(int(s) for s in signs[j])
        correct = answers[l] == eta
        stats.axis_trials[l] += 1
        stats.bob_counts[l, e] += 1
        stats.alice_counts[j] += 1
        stats.joint_counts[l, e, j] += 1
        if correct:
            stats.successes += 1
            stats.axis_successes[l] += 1
        if keep_records:
            stats.records.append(TrialRecord(t, l, eta, j, answers, correct))
    return stats


def trial_record(protocol: RetrodictionProtocol, seed: int, index: int) -> TrialRecord:
    """Recompute a single trial from (seed, index) through the sampling primitives."""
    stream = rngmod.trial_stream(seed, index)
    l = rngmod.pick(np.full(protocol.n_axes, 1.0), float(stream.random()))
    eta, post = bob_measure(protocol, l, stream)
    j = alice_measure(post, protocol.measurement, stream)
    answers = tuple(int(s) for s in protocol.table.signs[j])
    return TrialRecord(index, l, eta, j, answers, answers[l] == eta)


def bob_operator(protocol: RetrodictionProtocol, axis_index: int) -> np.ndarray:
    return bob_spin(protocol.axes[axis_index], dim_a(protocol.initial))
