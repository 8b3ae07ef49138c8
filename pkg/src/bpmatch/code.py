"""Graphlike CSS codes: the unrotated surface code, syndromes and logical checks.

Lattice layout
--------------
The unrotated distance-``d`` surface code lives on a ``(2d-1) x (2d-1)`` grid
of sites ``(r, c)``:

* data qubits sit where ``r + c`` is even,
* X checks sit at ``r`` odd, ``c`` even,
* Z checks sit at ``r`` even, ``c`` odd.

Qubits, X checks and Z checks are each indexed in row-major order of their
sites. This indexing is part of the public contract: metric tables, stored
paths and parity-check matrices are all reproducible from it.

Z errors on the top and bottom rows trip a single X check; X errors on the
left and right columns trip a single Z check. The logical Z operator is the
Z string down column 0 and the logical X operator the X string along row 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

PAULI_TYPES = ("X", "Z")


@dataclass(frozen=True)
class CodeSpec:
    """A graphlike CSS code.

    ``h_x`` detects Z errors and ``h_z`` detects X errors. Logical operators
    are stored as 2D arrays with one row per logical qubit.
    """

    distance: int
    n_qubits: int
    h_x: np.ndarray
    h_z: np.ndarray
    logical_x: np.ndarray
    logical_z: np.ndarray
    check_coords_x: np.ndarray
    check_coords_z: np.ndarray
    qubit_coords: np.ndarray
    boundary_checks_x: np.ndarray = field(repr=False)
    boundary_checks_z: np.ndarray = field(repr=False)

    def __post_init__(self):
        for arr in (self.h_x, self.h_z, self.logical_x, self.logical_z):
            arr.setflags(write=False)

    def check_matrix(self, pauli_type: str) -> np.ndarray:
        """Parity checks that detect errors of ``pauli_type``."""
        _check_type(pauli_type)
        return self.h_x if pauli_type == "Z" else self.h_z

    def opposite_logical(self, pauli_type: str) -> np.ndarray:
        """Logicals that anticommute with a logical error of ``pauli_type``."""
        _check_type(pauli_type)
        return self.logical_x if pauli_type == "Z" else self.logical_z

    def check_coords(self, pauli_type: str) -> np.ndarray:
        _check_type(pauli_type)
        return self.check_coords_x if pauli_type == "Z" else self.check_coords_z

    def boundary_checks(self, pauli_type: str) -> np.ndarray:
        _check_type(pauli_type)
        return self.boundary_checks_x if pauli_type == "Z" else self.boundary_checks_z

    def dump(self) -> str:
        """Dense 0/1 text grid of both check matrices, for debugging."""
        lines = [f"# distance={self.distance} n_qubits={self.n_qubits}", "# h_x"]
        lines += ["".join(map(str, row)) for row in self.h_x]
        lines.append("# h_z")
        lines += ["".join(map(str, row)) for row in self.h_z]
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class Syndrome:
    bits: np.ndarray
    unsatisfied: tuple[int, ...]

    @classmethod
    def from_bits(cls, bits) -> "Syndrome":
        bits = np.asarray(bits, dtype=np.uint8) & 1
        return cls(bits, tuple(int(i) for i in np.flatnonzero(bits)))

    @property
    def s(self) -> int:
        return len(self.unsatisfied)


def _check_type(pauli_type: str) -> None:
    if pauli_type not in PAULI_TYPES:
        raise ValueError(f"pauli_type must be 'X' or 'Z', got {pauli_type!r}")


def build_surface_code(d: int) -> CodeSpec:
    """Build the unrotated surface code of odd distance ``d >= 3``."""
    if not isinstance(d, (int, np.integer)) or d < 3 or d % 2 == 0:
        raise ValueError(f"distance must be an odd integer >= 3, got {d!r}")
    d = int(d)
    size = 2 * d - 1
    qubit_sites = [(r, c) for r in range(size) for c in range(size) if (r + c) % 2 == 0]
    x_sites = [(r, c) for r in range(size) for c in range(size) if r % 2 == 1 and c % 2 == 0]
    z_sites = [(r, c) for r in range(size) for c in range(size) if r % 2 == 0 and c % 2 == 1]
    qubit_index = {site: k for k, site in enumerate(qubit_sites)}
    n = len(qubit_sites)

    def checks(sites):
        h = np.zeros((len(sites), n), dtype=np.uint8)
        for row, (r, c) in enumerate(sites):
            for nb in ((r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1)):
                if nb in qubit_index:
                    h[row, qubit_index[nb]] = 1
        return h

    h_x = checks(x_sites)
    h_z = checks(z_sites)

    logical_z = np.zeros((1, n), dtype=np.uint8)
    logical_x = np.zeros((1, n), dtype=np.uint8)
    for r in range(0, size, 2):
        logical_z[0, qubit_index[(r, 0)]] = 1
    for c in range(0, size, 2):
        logical_x[0, qubit_index[(0, c)]] = 1

    def boundary_flags(h):
        weight_one = h.sum(axis=0) == 1
        return (h[:, weight_one].sum(axis=1) > 0)

    return CodeSpec(
        distance=d,
        n_qubits=n,
        h_x=h_x,
        h_z=h_z,
        logical_x=logical_x,
        logical_z=logical_z,
        check_coords_x=np.array(x_sites, dtype=np.int64),
        check_coords_z=np.array(z_sites, dtype=np.int64),
        qubit_coords=np.array(qubit_sites, dtype=np.int64),
        boundary_checks_x=boundary_flags(h_x),
        boundary_checks_z=boundary_flags(h_z),
    )


def _as_pattern(code: CodeSpec, e) -> np.ndarray:
    e = np.asarray(e, dtype=np.uint8)
    if e.shape != (code.n_qubits,):
        raise ValueError(f"error pattern must have length {code.n_qubits}, got shape {e.shape}")
    return e


def syndrome(code: CodeSpec, e, pauli_type: str) -> Syndrome:
    """Syndrome of an error pattern of the given Pauli type."""
    e = _as_pattern(code, e)
    h = code.check_matrix(pauli_type)
    return Syndrome.from_bits((h @ e) % 2)


def logical_failure(code: CodeSpec, e, e_hat, pauli_type: str) -> bool:
    """True when the residual ``e ^ e_hat`` is a nontrivial logical operator.

    Assumes the correction reproduces the syndrome, so the residual is either a
    stabilizer or a logical; it is a logical iff it anticommutes with some
    opposite-type logical operator.
    """
    residual = _as_pattern(code, e) ^ _as_pattern(code, e_hat)
    overlaps = code.opposite_logical(pauli_type) @ residual
    return bool(np.any(overlaps % 2))
