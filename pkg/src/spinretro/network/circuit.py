"""Circuits: ordered gate lists on a qubit register, their execution and text form.

Qubit 0 is the top wire and the most significant bit of a basis index.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from ..statevector import DimensionError, as_state
from .gates import PARAMETRIZED, Gate, gate_matrix

MAX_QUBITS = 4
# the boundary between preparation and measurement segments
BOB_MARKER = "BOB"


@dataclass(frozen=True)
class Circuit:
    n_qubits: int
    gates: tuple[Gate, ...] = ()
    split: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        if not 1 <= self.n_qubits <= MAX_QUBITS:
            raise ValueError(f"qubit count must be 1..{MAX_QUBITS}, got {self.n_qubits}")
        for g in self.gates:
            if max(g.qubits) >= self.n_qubits:
                raise ValueError(f"{g.kind} on {g.qubits}: index out of range for {self.n_qubits} qubits")
        if self.split is not None and not 0 <= self.split <= len(self.gates):
            raise ValueError(f"split {self.split} outside 0..{len(self.gates)}")

    @property
    def dim(self) -> int:
        return 2**self.n_qubits

    def __len__(self):
        return len(self.gates)

    def preparation(self) -> "Circuit":
        cut = len(self.gates) if self.split is None else self.split
        return Circuit(self.n_qubits, self.gates[:cut])

    def measurement(self) -> "Circuit":
        cut = len(self.gates) if self.split is None else self.split
        return Circuit(self.n_qubits, self.gates[cut:])

    def then(self, other: "Circuit") -> "Circuit":
        if other.n_qubits != self.n_qubits:
            raise ValueError("qubit counts differ")
        return Circuit(self.n_qubits, self.gates + other.gates)

    def unitary(self) -> np.ndarray:
        return np.column_stack([apply(self, e) for e in np.eye(self.dim, dtype=complex)])


def apply_gate(g: Gate, state: np.ndarray, n_qubits: int) -> np.ndarray:
    """Apply one gate by contracting its matrix into the target tensor legs."""
    k = len(g.qubits)
    u = gate_matrix(g).reshape((2,) * (2 * k))
    psi = state.reshape((2,) * n_qubits)
    psi = np.tensordot(u, psi, axes=(list(range(k, 2 * k)), list(g.qubits)))
    # tensordot puts the output legs first; move them back into place
    psi = np.moveaxis(psi, list(range(k)), list(g.qubits))
    return psi.reshape(-1)


def apply(circuit: Circuit, state) -> np.ndarray:
    state = as_state(state)
    if state.size != circuit.dim:
        raise DimensionError(f"state has dimension {state.size}, circuit needs {circuit.dim}")
    for g in circuit.gates:
        state = apply_gate(g, state, circuit.n_qubits)
    return state


def trace(circuit: Circuit, state) -> list[np.ndarray]:
    """The state after each gate (first entry is the input)."""
    state = as_state(state)
    out = [state]
    for g in circuit.gates:
        out.append(apply_gate(g, out[-1], circuit.n_qubits))
    return out


# -- text form ------------------------------------------------------------

_MAX_DEN = 64


def pi_multiple(num: int, den: int) -> float:
    """num * pi / den, evaluated the same way by the parser and the emitter."""
    return num * math.pi / den


def format_angle(angle: float) -> str:
    if angle == 0.0:
        return "0"
    frac = Fraction(angle / math.pi).limit_denominator(_MAX_DEN)
    num, den = frac.numerator, frac.denominator
    if num != 0 and pi_multiple(num, den) == angle:
        sign = "-" if num < 0 else ""
        mag = abs(num)
        head = f"{sign}{'' if mag == 1 else mag}pi"
        return head if den == 1 else f"{head}/{den}"
    return repr(float(angle))


def emit_circuit(circuit: Circuit) -> str:
    lines = [f"qubits {circuit.n_qubits}"]
    for i, g in enumerate(circuit.gates):
        if circuit.split == i:
            lines.append(BOB_MARKER)
        parts = [g.kind, *map(str, g.qubits)]
        if g.kind in PARAMETRIZED:
            parts.append(format_angle(g.angle))
        lines.append(" ".join(parts))
    if circuit.split is not None and circuit.split == len(circuit.gates):
        lines.append(BOB_MARKER)
    return "\n".join(lines) + "\n"
