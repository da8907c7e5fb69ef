"""Protocol definition files.

    # comment
    name vaa                       optional
    dim_a 2
    state (0.7071,0) (0,0) (0,0) (0.7071,0)
    axis 1 0 0                     one line per axis, in order
    basis (0.7071,0) (0.5,0.5) ... one line per outcome, z-basis amplitudes
    table ---                      one line per outcome, one sign per axis

Amplitudes are ``(re,im)`` pairs in lexicographic z-basis order with Bob's
qubit last.  Statements may appear in any order except that ``axis``,
``basis`` and ``table`` lines are numbered by their order of appearance.
The state is taken as written and is not renormalized.
"""

from __future__ import annotations

import re

import numpy as np

from .protocol import LookupTable, ProjectiveMeasurement, RetrodictionProtocol

_PAIR = re.compile(r"^\(\s*([^,()\s]+)\s*,\s*([^,()\s]+)\s*\)$")


class ProtocolParseError(ValueError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line
        self.message = message


def _amplitudes(rest: str, lineno: int) -> np.ndarray:
    tokens = re.findall(r"\([^()]*\)|\S+", rest)
    if not tokens:
        raise ProtocolParseError(lineno, "expected (re,im) amplitudes")
    out = []
    for tok in tokens:
        m = _PAIR.match(tok)
        if not m:
            raise ProtocolParseError(lineno, f"malformed amplitude {tok!r}, expected (re,im)")
        try:
            out.append(complex(float(m.group(1)), float(m.group(2))))
        except ValueError:
            raise ProtocolParseError(lineno, f"malformed number in {tok!r}") from None
    return np.array(out, dtype=complex)


def parse_protocol(text: str, name: str = "file") -> RetrodictionProtocol:
    dim_alice = None
    state = None
    axes, basis, rows = [], [], []
    where: dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, _, rest = line.partition(" ")
        key = key.lower()
        rest = rest.strip()
        where.setdefault(key, lineno)
        if key == "name":
            if not rest:
                raise ProtocolParseError(lineno, "name needs a value")
            name = rest
        elif key == "dim_a":
            if dim_alice is not None:
                raise ProtocolParseError(lineno, "duplicate dim_a")
            if not re.fullmatch(r"\d+", rest) or int(rest) < 1:
                raise ProtocolParseError(lineno, f"dim_a must be a positive integer, got {rest!r}")
            dim_alice = int(rest)
        elif key == "state":
            if state is not None:
                raise ProtocolParseError(lineno, "duplicate state")
            state = _amplitudes(rest, lineno)
        elif key == "axis":
            parts = rest.split()
            if len(parts) != 3:
                raise ProtocolParseError(lineno, "axis needs three components")
            try:
                n = np.array([float(p) for p in parts])
            except ValueError:
                raise ProtocolParseError(lineno, f"malformed axis {rest!r}") from None
            if abs(n @ n - 1.0) > 1e-10:
                raise ProtocolParseError(lineno, f"axis {rest!r} is not a unit vector")
            axes.append(n)
        elif key == "basis":
            basis.append((lineno, _amplitudes(rest, lineno)))
        elif key == "table":
            if not re.fullmatch(r"[+\-]+", rest):
                raise ProtocolParseError(lineno, f"table row must be + and - signs, got {rest!r}")
            rows.append((lineno, rest))
        else:
            raise ProtocolParseError(lineno, f"unknown statement {key!r}")

    last = max(where.values(), default=1)
    for key in ("dim_a", "state", "axis", "basis", "table"):
        if key not in where:
            raise ProtocolParseError(last, f"missing {key!r} statement")
    dim = 2 * dim_alice
    if state.size != dim:
        raise ProtocolParseError(where["state"], f"state has {state.size} amplitudes, expected {dim}")
    for lineno, v in basis:
        if v.size != dim:
            raise ProtocolParseError(lineno, f"basis vector has {v.size} amplitudes, expected {dim}")
    for lineno, r in rows:
        if len(r) != len(axes):
            raise ProtocolParseError(lineno, f"table row has {len(r)} signs for {len(axes)} axes")
    if len(rows) != len(basis):
        raise ProtocolParseError(where["table"], f"{len(rows)} table rows for {len(basis)} basis vectors")
    return RetrodictionProtocol(
        name,
        state,
        np.array(axes),
        ProjectiveMeasurement.from_vectors([v for _, v in basis]),
        LookupTable.from_rows([r for _, r in rows]),
    )


def _pairs(v: np.ndarray) -> str:
    return " ".join(f"({z.real!r},{z.imag!r})" for z in (complex(a) for a in v))


def emit_protocol(protocol: RetrodictionProtocol) -> str:
    lines = [f"name {protocol.name}", f"dim_a {protocol.initial.size // 2}", f"state {_pairs(protocol.initial)}"]
    lines += [f"axis {float(n[0])!r} {float(n[1])!r} {float(n[2])!r}" for n in protocol.axes]
    basis = protocol.measurement.basis
    lines += [f"basis {_pairs(basis[:, j])}" for j in range(basis.shape[1])]
    lines += [f"table {row}" for row in protocol.table.rows()]
    return "\n".join(lines) + "\n"


def load_protocol(path) -> RetrodictionProtocol:
    with open(path, encoding="utf-8") as fh:
        return parse_protocol(fh.read(), name=str(path))
