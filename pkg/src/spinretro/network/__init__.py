from .bindings import (
    NetworkProtocolBinding,
    builtin_networks,
    end_to_end,
    singlet_network,
    vaa_network,
    verify_measurement_mapping,
    verify_preparation,
)
from .circuit import Circuit, apply, emit_circuit, format_angle, trace
from .gates import CH, CNOT, CU, HADAMARD, NOT, Gate, GateError, cu_decomposition, gate_matrix, not_decomposition
from .parser import CircuitParseError, parse_angle, parse_circuit

__all__ = [
    "CH",
    "CNOT",
    "CU",
    "HADAMARD",
    "NOT",
    "Circuit",
    "CircuitParseError",
    "Gate",
    "GateError",
    "NetworkProtocolBinding",
    "apply",
    "builtin_networks",
    "cu_decomposition",
    "emit_circuit",
    "end_to_end",
    "format_angle",
    "gate_matrix",
    "not_decomposition",
    "parse_angle",
    "parse_circuit",
    "singlet_network",
    "trace",
    "vaa_network",
    "verify_measurement_mapping",
    "verify_preparation",
]
