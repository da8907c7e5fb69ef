"""Gate set and gate matrices.

Two-qubit matrices are written in the ``|control, target>`` basis with the
control as the more significant bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

SINGLE = ("H", "NOT", "P")
DOUBLE = ("CNOT", "CP", "CU", "CH")
PARAMETRIZED = ("P", "CP")
KINDS = SINGLE + DOUBLE


class GateError(ValueError):
    pass


@dataclass(frozen=True)
class Gate:
    kind: str
    qubits: tuple[int, ...]
    angle: float | None = None

    def __post_init__(self):
        kind = self.kind.upper()
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        if kind not in KINDS:
            raise GateError(f"unknown gate {self.kind!r}")
        arity = 1 if kind in SINGLE else 2
        if len(self.qubits) != arity:
            raise GateError(f"{kind} takes {arity} qubit(s), got {len(self.qubits)}")
        if len(set(self.qubits)) != arity:
            raise GateError(f"{kind} needs distinct qubits, got {self.qubits}")
        if any(q < 0 for q in self.qubits):
            raise GateError(f"negative qubit index in {self.qubits}")
        if kind in PARAMETRIZED:
            if self.angle is None or not math.isfinite(self.angle):
                raise GateError(f"{kind} needs a finite angle")
            object.__setattr__(self, "angle", float(self.angle))
        elif self.angle is not None:
            raise GateError(f"{kind} takes no angle")


_QUARTER_TURNS = (1.0, 1j, -1.0, -1j)


def unit_phase(phi: float) -> complex:
    """exp(i phi), exact at multiples of pi/2 so that P(pi) is diag(1, -1)."""
    k = round(phi / (math.pi / 2))
    if k * math.pi / 2 == phi:
        return complex(_QUARTER_TURNS[k % 4])
    return complex(np.exp(1j * phi))


def phase(phi: float) -> np.ndarray:
    return np.diag([1.0, unit_phase(phi)]).astype(complex)


HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
# a Not can be built directly; not_decomposition() checks it equals H P(pi) H
NOT = np.array([[0, 1], [1, 0]], dtype=complex)


def not_decomposition() -> np.ndarray:
    return HADAMARD @ phase(math.pi) @ HADAMARD


def controlled(u: np.ndarray) -> np.ndarray:
    out = np.eye(4, dtype=complex)
    out[2:, 2:] = u
    return out


CNOT = controlled(np.array([[0, 1], [1, 0]], dtype=complex))
CH = controlled(HADAMARD)

_cu_phase = np.exp(-3j * np.pi / 4) / np.sqrt(2)
CU = controlled(_cu_phase * np.array([[1, 1j], [1j, 1]]))


def cphase(phi: float) -> np.ndarray:
    return np.diag([1.0, 1.0, 1.0, unit_phase(phi)]).astype(complex)


def cu_decomposition() -> np.ndarray:
    """CP(pi/2) . CH . CP(pi/2) . P(-3pi/4) on the control, as one 4x4 product."""
    p_control = np.kron(phase(-3 * np.pi / 4), np.eye(2))
    return cphase(np.pi / 2) @ CH @ cphase(np.pi / 2) @ p_control


def gate_matrix(g: Gate) -> np.ndarray:
    if g.kind == "H":
        return HADAMARD.copy()
    if g.kind == "NOT":
        return NOT.copy()
    if g.kind == "P":
        return phase(g.angle)
    if g.kind == "CNOT":
        return CNOT.copy()
    if g.kind == "CP":
        return cphase(g.angle)
    if g.kind == "CU":
        return CU.copy()
    if g.kind == "CH":
        return CH.copy()
    raise GateError(f"unknown gate {g.kind!r}")
