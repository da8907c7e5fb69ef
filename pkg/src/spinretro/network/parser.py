"""Line-oriented circuit text format.

    qubits 2          # required first statement
    H 0
    CNOT 0 1
    P 1 -3pi/4        # angles: decimals or rational multiples of pi
    BOB               # optional: end of preparation, start of measurement
    CP 0 1 pi/2

One statement per line, tokens separated by whitespace, ``#`` to end of
line is a comment, gate names are case-insensitive.
"""

from __future__ import annotations

import math
import re

from .circuit import BOB_MARKER, MAX_QUBITS, Circuit, pi_multiple
from .gates import DOUBLE, KINDS, PARAMETRIZED, Gate

_PI_ANGLE = re.compile(r"^([+-]?)(\d*)\*?pi(?:/(\d+))?$")


class CircuitParseError(ValueError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line
        self.message = message


def parse_angle(token: str) -> float:
    m = _PI_ANGLE.match(token.lower())
    if m:
        sign, num, den = m.groups()
        n = int(num) if num else 1
        d = int(den) if den else 1
        if d == 0:
            raise ValueError(f"zero denominator in {token!r}")
        return pi_multiple(-n if sign == "-" else n, d)
    value = float(token)
    if not math.isfinite(value):
        raise ValueError(f"angle {token!r} is not finite")
    return value


def _index(token: str, n_qubits: int, lineno: int) -> int:
    if not re.fullmatch(r"\d+", token):
        raise CircuitParseError(lineno, f"bad qubit index {token!r}")
    q = int(token)
    if q >= n_qubits:
        raise CircuitParseError(lineno, f"index out of range: qubit {q} with {n_qubits} qubits")
    return q


def parse_circuit(text: str) -> Circuit:
    n_qubits = None
    gates: list[Gate] = []
    split = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        tokens = raw.split("#", 1)[0].split()
        if not tokens:
            continue
        head = tokens[0].upper()
        if n_qubits is None:
            if head != "QUBITS":
                raise CircuitParseError(lineno, "missing 'qubits N' header")
            if len(tokens) != 2 or not re.fullmatch(r"\d+", tokens[1]):
                raise CircuitParseError(lineno, "header must be 'qubits N'")
            n_qubits = int(tokens[1])
            if not 1 <= n_qubits <= MAX_QUBITS:
                raise CircuitParseError(lineno, f"qubit count must be 1..{MAX_QUBITS}")
            continue
        if head == "QUBITS":
            raise CircuitParseError(lineno, "duplicate 'qubits' header")
        if head == BOB_MARKER:
            if len(tokens) != 1:
                raise CircuitParseError(lineno, f"{BOB_MARKER} takes no arguments")
            if split is not None:
                raise CircuitParseError(lineno, f"duplicate {BOB_MARKER} marker")
            split = len(gates)
            continue
        if head not in KINDS:
            raise CircuitParseError(lineno, f"unknown gate {tokens[0]!r}")
        arity = 2 if head in DOUBLE else 1
        expected = 1 + arity + (1 if head in PARAMETRIZED else 0)
        if len(tokens) != expected:
            raise CircuitParseError(lineno, f"{head} expects {expected - 1} arguments, got {len(tokens) - 1}")
        qubits = tuple(_index(t, n_qubits, lineno) for t in tokens[1 : 1 + arity])
        if len(set(qubits)) != arity:
            raise CircuitParseError(lineno, f"{head} needs distinct qubits")
        angle = None
        if head in PARAMETRIZED:
            try:
                angle = parse_angle(tokens[-1])
            except ValueError:
                raise CircuitParseError(lineno, f"malformed angle {tokens[-1]!r}") from None
        gates.append(Gate(head, qubits, angle))
    if n_qubits is None:
        raise CircuitParseError(1, "missing 'qubits N' header")
    return Circuit(n_qubits, tuple(gates), split)
