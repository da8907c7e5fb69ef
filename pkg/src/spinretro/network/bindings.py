"""Preparation/measurement circuits bound to a protocol, and their verifiers."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .. import published
from ..protocol import ETAS, PROB_FLOOR, LookupTable, RetrodictionProtocol, verify_protocol
from ..statevector import project_spin
from .circuit import Circuit, apply, trace
from .gates import Gate

VERIFY_TOL = 1e-10


@dataclass(frozen=True)
class NetworkProtocolBinding:
    name: str
    circuit: Circuit
    protocol: RetrodictionProtocol

    def __post_init__(self):
        if self.circuit.split is None:
            raise ValueError("binding needs a circuit with a preparation/measurement boundary")
        if self.circuit.dim != self.protocol.initial.size:
            raise ValueError("circuit register does not match the protocol dimension")

    @property
    def preparation(self) -> Circuit:
        return self.circuit.preparation()

    @property
    def measurement(self) -> Circuit:
        return self.circuit.measurement()

    @property
    def expected_state(self) -> np.ndarray:
        return self.protocol.initial

    @property
    def basis(self) -> list[np.ndarray]:
        return [self.protocol.measurement.vector(j) for j in range(self.protocol.n_outcomes)]


def _g(kind, *qubits, angle=None):
    return Gate(kind, qubits, angle)


PI = np.pi

VAA_PREPARATION = (_g("H", 0), _g("CNOT", 0, 1))
VAA_MEASUREMENT = (_g("P", 0, angle=PI), _g("CNOT", 1, 0), _g("CU", 0, 1), _g("H", 0))
SINGLET_PREPARATION = (_g("NOT", 1), _g("CNOT", 1, 0), _g("H", 1), _g("CNOT", 1, 0))
# turns the singlet basis into the vaa basis, then reuses the vaa readout
SINGLET_TO_VAA = (_g("CP", 0, 1, angle=PI), _g("NOT", 1), _g("P", 0, angle=PI / 2), _g("P", 1, angle=-PI / 2))


def _binding(name, prep, meas, protocol) -> NetworkProtocolBinding:
    return NetworkProtocolBinding(name, Circuit(2, prep + meas, split=len(prep)), protocol)


def vaa_network() -> NetworkProtocolBinding:
    return _binding("vaa-network", VAA_PREPARATION, VAA_MEASUREMENT, published.vaa())


def singlet_network() -> NetworkProtocolBinding:
    return _binding("singlet-network", SINGLET_PREPARATION, SINGLET_TO_VAA + VAA_MEASUREMENT, published.singlet())


def builtin_networks() -> dict[str, NetworkProtocolBinding]:
    return {"vaa-network": vaa_network(), "singlet-network": singlet_network()}


@dataclass
class Check:
    name: str
    residual: float
    passed: bool
    detail: dict = field(default_factory=dict)

    def as_record(self) -> dict:
        return {"name": self.name, "residual": self.residual, "passed": self.passed, **self.detail}


@dataclass
class PreparationReport:
    overlap: float
    state: np.ndarray
    passed: bool

    def checks(self) -> list[Check]:
        return [Check("preparation_overlap", 1.0 - self.overlap, self.passed, {"overlap": self.overlap})]


def verify_preparation(binding: NetworkProtocolBinding, tol: float = VERIFY_TOL) -> PreparationReport:
    """Run the preparation segment on |0...0> and compare with the expected state up to phase."""
    zero = np.zeros(binding.circuit.dim, dtype=complex)
    zero[0] = 1.0
    out = apply(binding.preparation, zero)
    expected = binding.expected_state
    overlap = abs(np.vdot(expected, out)) / (np.linalg.norm(expected) * np.linalg.norm(out))
    return PreparationReport(float(overlap), out, overlap >= 1.0 - tol)


@dataclass
class MappingReport:
    targets: list[int | None]
    phases: list[complex | None]
    residuals: list[float]
    bijective: bool

    @property
    def passed(self) -> bool:
        return self.bijective

    def permutation(self) -> dict[int, int]:
        return {j: t for j, t in enumerate(self.targets) if t is not None}

    def checks(self, n_qubits: int = 2) -> list[Check]:
        out = []
        for j, (t, r) in enumerate(zip(self.targets, self.residuals)):
            label = None if t is None else format(t, f"0{n_qubits}b")
            ph = self.phases[j]
            detail = {"outcome": j + 1, "target": label}
            if ph is not None:
                detail["phase"] = [ph.real, ph.imag]
            out.append(Check("basis_image", r, t is not None, detail))
        out.append(Check("bijective", 0.0 if self.bijective else 1.0, self.bijective))
        return out


def verify_measurement_mapping(circuit: Circuit | NetworkProtocolBinding, basis, tol: float = VERIFY_TOL) -> MappingReport:
    """Check each basis vector is sent to a single computational state and no two collide."""
    meas = circuit.measurement if isinstance(circuit, NetworkProtocolBinding) else circuit
    targets, phases, residuals = [], [], []
    for phi in basis:
        img = apply(meas, phi)
        k = int(np.argmax(np.abs(img)))
        resid = float(max(abs(abs(img[k]) - 1.0), np.sqrt(max(0.0, float(np.sum(np.abs(img) ** 2) - abs(img[k]) ** 2)))))
        residuals.append(resid)
        if resid <= tol:
            targets.append(k)
            phases.append(complex(img[k] / abs(img[k])))
        else:
            targets.append(None)
            phases.append(None)
    hit = [t for t in targets if t is not None]
    bijective = len(hit) == len(targets) == meas.dim and len(set(hit)) == len(hit)
    return MappingReport(targets, phases, residuals, bijective)


@dataclass
class EndToEndReport:
    violations: set[tuple[int, int, int]]
    reference: set[tuple[int, int, int]]
    readout_ok: bool

    @property
    def consistent(self) -> bool:
        return self.readout_ok and self.violations == self.reference

    @property
    def ok(self) -> bool:
        return self.consistent and not self.violations


def end_to_end(binding: NetworkProtocolBinding, table: LookupTable | None = None,
               tol: float = PROB_FLOOR) -> EndToEndReport:
    """Prepare, let Bob project, run the measurement segment, read out, apply the table.

    Violations are ``(outcome, axis, eta)`` triples where a computational
    readout with non-negligible probability decodes to an outcome whose
    table entry disagrees with Bob's result.  ``reference`` holds the same
    set as found by ``verify_protocol`` on the bound protocol.
    """
    protocol = binding.protocol if table is None else binding.protocol.with_table(table)
    mapping = verify_measurement_mapping(binding, binding.basis)
    decode = {t: j for j, t in mapping.permutation().items()}
    zero = np.zeros(binding.circuit.dim, dtype=complex)
    zero[0] = 1.0
    psi = apply(binding.preparation, zero)
    # the preparation may differ from the stored state by a global phase
    psi = psi * np.exp(-1j * np.angle(np.vdot(protocol.initial, psi)))
    found = set()
    for l, n in enumerate(protocol.axes):
        for eta in ETAS:
            post = apply(binding.measurement, project_spin(psi, n, eta))
            for k, p in enumerate(np.abs(post) ** 2):
                if p <= tol:
                    continue
                j = decode.get(k)
                if j is None or protocol.table.signs[j, l] != eta:
                    found.add((-1 if j is None else j, l, eta))
    ref = {(f.outcome, f.axis, f.eta) for f in verify_protocol(protocol, tol).violations if f.kind == "table"}
    return EndToEndReport(found, ref, mapping.bijective)


def segment_trace(binding: NetworkProtocolBinding, state) -> list[np.ndarray]:
    return trace(binding.measurement, state)
