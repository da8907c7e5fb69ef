"""Transcribed protocols: states, bases and tables exactly as published.

Nothing here is corrected.  Amplitudes are in the z basis with Bob's qubit
last; for the six-dimensional case the qutrit labels 2, 1, 0 map to Alice
indices 0, 1, 2, so ``|rho, zeta>`` sits at ``2 * (2 - rho) + (zeta == -1)``.
Outcome and axis indices are 0-based in code (lambda_1 is row 0).
"""

from __future__ import annotations

import numpy as np

from .construction import axes_from_gram, table_gram
from .protocol import LookupTable, ProjectiveMeasurement, RetrodictionProtocol
from .statevector import X_AXIS, Y_AXIS, Z_AXIS, ket

_r2 = np.sqrt(2.0)
_r3 = np.sqrt(3.0)
_w = np.exp(1j * np.pi / 4)
_wc = np.exp(-1j * np.pi / 4)

ORTHOGONAL_AXES = np.array([X_AXIS, Y_AXIS, Z_AXIS])

# rows lambda_1..lambda_4, columns x, y, z
ORTHOGONAL_TABLE = LookupTable.from_rows(["ddd", "uud", "duu", "udu"])

# S_+(n_1), S_+(n_2), S_+(n_3) as printed (1-based); n_4 follows from n_4 = -(n_1 + n_2 + n_3)
M4_PLUS_SETS = ({1, 2, 3}, {1, 5, 6}, {3, 4, 6})
M4_DEPENDENCE = np.array([[-1.0, -1.0, -1.0]])
M4_TABLE = LookupTable.from_rows(["uudd", "uddu", "udud", "dduu", "dudu", "duud"])

M3_TABLE = LookupTable.from_rows(["dud", "duu", "ddd", "ddu", "uud", "udu", "uuu", "uuu"])
M3_COEFFICIENTS = np.sqrt(np.array([1, 0, 1, 1, 1, 1, 1, 1]) / 8.0)


def vaa_state() -> np.ndarray:
    return (ket("00") + ket("11")) / _r2


def singlet_state() -> np.ndarray:
    return (ket("01") - ket("10")) / _r2


def vaa_basis() -> list[np.ndarray]:
    uu, ud, du, dd = ket("00"), ket("01"), ket("10"), ket("11")
    return [
        uu / _r2 + 0.5 * (ud * _w + du * _wc),
        uu / _r2 - 0.5 * (ud * _w + du * _wc),
        dd / _r2 + 0.5 * (ud * _wc + du * _w),
        dd / _r2 - 0.5 * (ud * _wc + du * _w),
    ]


def singlet_basis() -> list[np.ndarray]:
    uu, ud, du, dd = ket("00"), ket("01"), ket("10"), ket("11")
    return [
        ud / _r2 + 0.5 * (dd * _w - uu * _wc),
        ud / _r2 - 0.5 * (dd * _w - uu * _wc),
        du / _r2 + 0.5 * (dd * _wc - uu * _w),
        du / _r2 - 0.5 * (dd * _wc - uu * _w),
    ]


def _qutrit_qubit(entries: dict[tuple[int, int], complex]) -> np.ndarray:
    v = np.zeros(6, dtype=complex)
    for (rho, zeta), amp in entries.items():
        v[2 * (2 - rho) + (0 if zeta > 0 else 1)] = amp
    return v


def m4_basis() -> list[np.ndarray]:
    a12, a6, a24, a8 = 1 / np.sqrt(12), 1 / np.sqrt(6), 1 / np.sqrt(24), 1 / np.sqrt(8)
    return [
        _qutrit_qubit({(2, 1): a12 - 1j * a6, (1, 1): a12, (0, 1): -0.5,
                       (2, -1): a12 + 1j * a6, (1, -1): a12, (0, -1): -a12}),
        _qutrit_qubit({(2, 1): -a12 + 1j * a6, (1, 1): a12, (0, 1): -0.5,
                       (2, -1): -a12 - 1j * a6, (1, -1): a12, (0, -1): -a12}),
        _qutrit_qubit({(2, 1): a12 + 1j * a24, (1, 1): a12 + a8,
                       (2, -1): a12 - 1j * a24, (1, -1): a12 - a8, (0, -1): 1 / _r3}),
        _qutrit_qubit({(2, 1): -a12 - 1j * a24, (1, 1): a12 - a8,
                       (2, -1): -a12 + 1j * a24, (1, -1): a12 + a8, (0, -1): 1 / _r3}),
        _qutrit_qubit({(2, 1): -a12 - 1j * a24, (1, 1): a12 + a8, (0, 1): 0.5,
                       (2, -1): -a12 + 1j * a24, (1, -1): a12 - a8, (0, -1): -a12}),
        _qutrit_qubit({(2, 1): a12 + 1j * a24, (1, 1): a12 + a8, (0, 1): 0.5,
                       (2, -1): a12 - 1j * a24, (1, -1): a8 + a12, (0, -1): -a12}),
    ]


# coordinates in the phi basis of psi, sigma_x psi, sigma_y psi, sigma_z psi and
# the two completion vectors, as printed for the symmetric four-axis case
M4_PRINTED_IMAGES = {
    "psi": np.ones(6) / np.sqrt(6),
    "sigma_x": np.array([1, 1, 1, -1, -1, -1]) / np.sqrt(6),
    "sigma_y": np.array([2, -1, -1, -2, 1, 1]) / np.sqrt(12),
    "sigma_z": np.array([0, -1, 1, 0, -1, 1]) / 2,
    "chi_1": np.array([-1, 1, 0, -1, 0, 1]) / 2,
    "chi_2": np.array([-1, -1, 2, -1, 2, -1]) / 12,
}


def m3_basis() -> list[np.ndarray]:
    def v(entries):
        out = np.zeros(8, dtype=complex)
        for bits, amp in entries.items():
            out[int(bits.replace("u", "0").replace("d", "1"), 2)] = amp
        return out

    r6, r7, r10, r14, r35 = (np.sqrt(x) for x in (6, 7, 10, 14, 35))
    return [
        v({"dud": 1.0}),
        v({"uuu": -0.25 * (1 + 1j * _r3), "uud": -0.25 * (1 - 1j * _r3),
           "udu": 0.25, "udd": 0.25, "ddu": r35 / 10, "ddd": -r10 / 20}),
        v({"uuu": 0.25 * (1 + 1j * _r3), "uud": 0.25 * (1 - 1j * _r3),
           "udu": 0.25, "udd": 0.25, "ddu": r35 / 10, "ddd": -r10 / 20}),
        v({"uuu": -_r2 / 4 + 1j * r6 / 12, "uud": -_r2 / 4 - 1j * r6 / 12,
           "udu": _r2 / 4 - _r3 / 6, "udd": _r2 / 4 + _r3 / 6,
           "duu": r7 / 7, "ddu": -1 / 35, "ddd": np.sqrt(5) / 10}),
        v({"uuu": 0.25 - 1j * _r3 / 12, "uud": 0.25 + 1j * _r3 / 12,
           "udu": 0.25 + r6 / 12, "udd": 0.25 - r6 / 12, "ddd": r10 / 4}),
        v({"uuu": 0.25 - 1j * _r3 / 12, "uud": 0.25 + 1j * _r3 / 12,
           "udu": 0.25 + r6 / 12, "udd": 0.25 - r6 / 12,
           "duu": -r14 / 7, "ddu": -2 / 35 * r35, "ddd": -3 / 20 * r10}),
        v({"uuu": 0.25 - 1j * _r3 / 12, "uud": 0.25 + 1j * _r3 / 12,
           "udu": 0.25 + r6 / 6, "udd": 0.25 - r6 / 6,
           "duu": -r14 / 7, "ddu": -3 / 70 * r35, "ddd": -r10 / 20}),
        v({"uuu": -0.25 + 1j * _r3 / 12, "uud": -0.25 - 1j * _r3 / 12,
           "udu": 0.25 + r6 / 6, "udd": 0.25 - r6 / 6,
           "duu": -r14 / 7, "ddu": -3 / 70 * r35, "ddd": -r10 / 20}),
    ]


def m4_axes() -> np.ndarray:
    """Tetrahedral axes with n_1 along x and n_2 in the xy-plane."""
    return axes_from_gram(table_gram(M4_TABLE, np.full(6, 1 / np.sqrt(6))))


def m3_axes() -> np.ndarray:
    """Axes implied by the printed table and coefficients.

    The printed b_j^2 sum to 7/8, so the implied Gram matrix has diagonal
    7/8; it is rescaled to unit diagonal before factorizing.
    """
    g = table_gram(M3_TABLE, M3_COEFFICIENTS)
    d = np.sqrt(np.diag(g))
    return axes_from_gram(g / np.outer(d, d))


def _expansion(basis: list[np.ndarray], b: np.ndarray) -> np.ndarray:
    psi = np.column_stack(basis) @ b
    return psi / np.linalg.norm(psi)


def vaa() -> RetrodictionProtocol:
    return RetrodictionProtocol(
        "vaa",
        vaa_state(),
        ORTHOGONAL_AXES,
        ProjectiveMeasurement.from_vectors(vaa_basis()),
        ORTHOGONAL_TABLE,
        ("state (|uu>+|dd>)/sqrt2 with the three-axis table",),
    )


def singlet() -> RetrodictionProtocol:
    return RetrodictionProtocol(
        "singlet",
        singlet_state(),
        ORTHOGONAL_AXES,
        ProjectiveMeasurement.from_vectors(singlet_basis()),
        ORTHOGONAL_TABLE,
        ("singlet state with the three-axis table",),
    )


def m4_symmetric() -> RetrodictionProtocol:
    b = np.full(6, 1 / np.sqrt(6))
    return RetrodictionProtocol(
        "m4-symmetric",
        _expansion(m4_basis(), b),
        m4_axes(),
        ProjectiveMeasurement.from_vectors(m4_basis()),
        M4_TABLE,
        ("initial state is sum_j b_j phi_j over the printed basis, renormalized",),
    )


def m3_nonorthogonal() -> RetrodictionProtocol:
    return RetrodictionProtocol(
        "m3-nonorthogonal",
        _expansion(m3_basis(), M3_COEFFICIENTS),
        m3_axes(),
        ProjectiveMeasurement.from_vectors(m3_basis()),
        M3_TABLE,
        ("initial state is sum_j b_j phi_j over the printed basis, renormalized",
         "axes come from the printed table and coefficients, Gram rescaled to unit diagonal"),
    )


FACTORIES = {
    "vaa": vaa,
    "singlet": singlet,
    "m4-symmetric": m4_symmetric,
    "m3-nonorthogonal": m3_nonorthogonal,
}


def factory_bases() -> dict[str, RetrodictionProtocol]:
    return {name: make() for name, make in FACTORIES.items()}


def builtin_protocol(name: str) -> RetrodictionProtocol:
    try:
        return FACTORIES[name]()
    except KeyError:
        raise KeyError(f"unknown builtin protocol {name!r}; choose from {sorted(FACTORIES)}") from None
