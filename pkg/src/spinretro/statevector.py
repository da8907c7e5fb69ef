"""Dense state-vector algebra for small Alice/Bob Hilbert spaces.

States are 1-D complex numpy arrays, operators are 2-D complex arrays.
A state of ``H_A (x) H_B`` is stored with Bob's qubit as the fastest-varying
index: amplitude ``k`` belongs to ``|a, beta>`` with ``a = k // 2`` and
``beta = k % 2`` (0 is spin up along z, 1 is spin down).  Every other module
relies on this layout.
"""

from __future__ import annotations

import numpy as np

ATOL = 1e-12
PIPELINE_ATOL = 1e-10

SQRT2 = np.sqrt(2.0)

I2 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (SIGMA_X, SIGMA_Y, SIGMA_Z)

X_AXIS = np.array([1.0, 0.0, 0.0])
Y_AXIS = np.array([0.0, 1.0, 0.0])
Z_AXIS = np.array([0.0, 0.0, 1.0])

# columns are the up/down eigenvectors of each Pauli, expressed in the z basis
_BASIS_COLUMNS = {
    "z": np.eye(2, dtype=complex),
    "x": np.array([[1, 1], [1, -1]], dtype=complex) / SQRT2,
    "y": np.array([[1, 1], [1j, -1j]], dtype=complex) / SQRT2,
}


class DimensionError(ValueError):
    pass


def ket(bits: str) -> np.ndarray:
    """Computational basis state from a bit string, e.g. ``ket("01")``.

    ``0``/``u`` mean spin up along z and ``1``/``d`` spin down.
    """
    table = str.maketrans({"u": "0", "d": "1", "↑": "0", "↓": "1"})
    bits = bits.translate(table)
    if not bits or set(bits) - {"0", "1"}:
        raise ValueError(f"bad bit string {bits!r}")
    out = np.zeros(2 ** len(bits), dtype=complex)
    out[int(bits, 2)] = 1.0
    return out


def as_state(amplitudes) -> np.ndarray:
    state = np.asarray(amplitudes, dtype=complex).reshape(-1)
    if state.size == 0:
        raise DimensionError("empty state")
    return state


def norm(state: np.ndarray) -> float:
    return float(np.linalg.norm(state))


def normalize(state: np.ndarray) -> np.ndarray:
    n = norm(state)
    if n == 0.0:
        raise ValueError("cannot normalize the zero vector")
    return state / n


def is_normalized(state: np.ndarray, atol: float = ATOL) -> bool:
    return abs(np.vdot(state, state).real - 1.0) <= atol


def dim_a(state_or_dim) -> int:
    """Dimension of Alice's factor for a state (or total dimension)."""
    dim = state_or_dim if isinstance(state_or_dim, (int, np.integer)) else len(state_or_dim)
    if dim < 2 or dim % 2:
        raise DimensionError(f"dimension {dim} is not dim_A x 2")
    return dim // 2


def tensor(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product; works for states and operators alike."""
    return np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))


def inner(a: np.ndarray, b: np.ndarray) -> complex:
    """<a|b>, conjugating the first argument."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise DimensionError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return complex(np.vdot(a, b))


def unit_axis(vector, atol: float = ATOL) -> np.ndarray:
    n = np.asarray(vector, dtype=float).reshape(-1)
    if n.shape != (3,):
        raise DimensionError(f"axis must have 3 components, got {n.shape}")
    if abs(float(n @ n) - 1.0) > atol:
        raise ValueError(f"axis {n.tolist()} is not a unit vector")
    return n


def pauli_along(axis) -> np.ndarray:
    """sigma . n for a unit axis n."""
    n = unit_axis(axis)
    return n[0] * SIGMA_X + n[1] * SIGMA_Y + n[2] * SIGMA_Z


def sigma_vector_dot(vector) -> np.ndarray:
    """sigma . v for an arbitrary real 3-vector (no normalization required)."""
    v = np.asarray(vector, dtype=float).reshape(3)
    return v[0] * SIGMA_X + v[1] * SIGMA_Y + v[2] * SIGMA_Z


def lift_b(op: np.ndarray, dim_alice: int) -> np.ndarray:
    """1_A (x) op: a single-qubit operator acting on Bob's factor only."""
    if dim_alice < 1:
        raise DimensionError("dim_A must be at least 1")
    return np.kron(np.eye(dim_alice, dtype=complex), np.asarray(op, dtype=complex))


def bob_spin(axis, dim_alice: int) -> np.ndarray:
    return lift_b(pauli_along(axis), dim_alice)


def project_spin(state: np.ndarray, axis, eta: int) -> np.ndarray:
    """Unnormalized post-measurement state 1/2 (1 + eta 1 (x) sigma.n)|psi>.

    Its squared norm is the probability that Bob obtains ``eta``.
    """
    if eta not in (1, -1):
        raise ValueError(f"eta must be +1 or -1, got {eta}")
    state = as_state(state)
    op = bob_spin(axis, dim_a(state))
    return 0.5 * (state + eta * (op @ state))


def basis_convert(state: np.ndarray, qubit: int, source: str = "z", target: str = "z") -> np.ndarray:
    """Re-express the amplitudes of one qubit from ``source`` to ``target`` basis.

    Qubits are numbered from the most significant (leftmost) position.
    ``basis_convert([1, 0], 0, "x", "z")`` gives the z-basis amplitudes of
    spin up along x.
    """
    state = as_state(state)
    n_qubits = int(round(np.log2(state.size)))
    if 2**n_qubits != state.size:
        raise DimensionError(f"dimension {state.size} is not a power of two")
    if not 0 <= qubit < n_qubits:
        raise IndexError(f"qubit {qubit} out of range for {n_qubits} qubits")
    try:
        to_z = _BASIS_COLUMNS[source]
        from_z = _BASIS_COLUMNS[target].conj().T
    except KeyError as exc:
        raise ValueError(f"unknown basis {exc.args[0]!r}; use x, y or z") from None
    local = from_z @ to_z
    op = np.kron(np.kron(np.eye(2**qubit), local), np.eye(2 ** (n_qubits - qubit - 1)))
    return op @ state


def global_phase_overlap(a: np.ndarray, b: np.ndarray) -> float:
    """|<a|b>| / (|a| |b|): 1 iff the states agree up to a global phase."""
    na, nb = norm(a), norm(b)
    if na == 0.0 or nb == 0.0:
        return 0.0
    return abs(inner(a, b)) / (na * nb)


def states_equal(a: np.ndarray, b: np.ndarray, atol: float = ATOL, up_to_phase: bool = False) -> bool:
    a = as_state(a)
    b = as_state(b)
    if a.shape != b.shape:
        return False
    if up_to_phase:
        ov = inner(a, b)
        if abs(ov) > 0:
            b = b * (abs(ov) / ov)
    return bool(np.max(np.abs(a - b)) <= atol)


def is_hermitian(m: np.ndarray, atol: float = ATOL) -> bool:
    m = np.asarray(m)
    return m.shape[0] == m.shape[1] and bool(np.max(np.abs(m - m.conj().T)) <= atol)


def is_unitary(m: np.ndarray, atol: float = ATOL) -> bool:
    m = np.asarray(m)
    eye = np.eye(m.shape[0])
    return m.shape[0] == m.shape[1] and bool(np.max(np.abs(m.conj().T @ m - eye)) <= atol)


def is_projector(m: np.ndarray, atol: float = ATOL) -> bool:
    m = np.asarray(m)
    return is_hermitian(m, atol) and bool(np.max(np.abs(m @ m - m)) <= atol)


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b - b @ a


def random_state(dim: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


def random_axis(rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=3)
    return v / np.linalg.norm(v)
