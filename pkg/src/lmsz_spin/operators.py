"""Spin operators, product bases and the two-spin model Hamiltonians.

Conventions
-----------
- hbar = 1; energies and inverse times share one unit.
- Single-spin bases are ordered by descending z eigenvalue: qubits ``+, -``,
  qutrits ``1, 0, -1``. Two-spin bases are Kronecker products with the first
  spin as the slow index.
- The two-qutrit couplings multiply products of the unit-off-diagonal spin-1
  matrices ``sqrt(2) * S``, so that the four-dimensional invariant block maps
  exactly onto two fictitious qubits with transverse fields ``gamma_x -/+
  gamma_y`` (see :mod:`lmsz_spin.qutrits`). In terms of standard spin-1
  matrices this is a factor :data:`QUTRIT_COUPLING_SCALE` on every coupling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

HERMITIAN_ATOL = 1e-12

QUBIT_LABELS = ("+", "-")
QUTRIT_LABELS = ("1", "0", "-1")
QUBIT_M = (1.0, -1.0)
QUTRIT_M = (1.0, 0.0, -1.0)

#: Factor applied to the standard spin-1 coupling products, ``(sqrt 2)**2``.
QUTRIT_COUPLING_SCALE = 2.0


@dataclass(frozen=True)
class CouplingParams:
    """Coupling constants of the two-spin model, in energy units."""

    gamma_x: float = 0.0
    gamma_y: float = 0.0
    gamma_z: float = 0.0
    gamma_xy: float = 0.0
    gamma_yx: float = 0.0

    def __post_init__(self):
        for name in ("gamma_x", "gamma_y", "gamma_z", "gamma_xy", "gamma_yx"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value!r}")
            object.__setattr__(self, name, value)

    # qubit combinations
    @property
    def gamma_plus(self) -> float:
        return self.gamma_x - self.gamma_y

    @property
    def gamma_minus(self) -> float:
        return self.gamma_x + self.gamma_y

    @property
    def Gamma_plus(self) -> float:
        return self.gamma_xy + self.gamma_yx

    @property
    def Gamma_minus(self) -> float:
        return -self.gamma_xy + self.gamma_yx

    # qutrit combinations (note the opposite sign pattern)
    @property
    def gamma_tilde_plus(self) -> float:
        return self.gamma_x + self.gamma_y

    @property
    def gamma_tilde_minus(self) -> float:
        return self.gamma_x - self.gamma_y

    @property
    def Gamma_tilde_plus(self) -> float:
        return self.gamma_xy + self.gamma_yx

    @property
    def Gamma_tilde_minus(self) -> float:
        return self.gamma_xy - self.gamma_yx

    def as_tuple(self) -> tuple[float, float, float, float, float]:
        return (self.gamma_x, self.gamma_y, self.gamma_z, self.gamma_xy, self.gamma_yx)

    @classmethod
    def from_sequence(cls, values) -> "CouplingParams":
        values = [float(v) for v in values]
        if len(values) != 5:
            raise ValueError("expected five couplings: x, y, z, xy, yx")
        return cls(*values)


@dataclass(frozen=True)
class OperatorMatrix:
    """Dense complex square matrix over a labelled product basis."""

    matrix: np.ndarray
    labels: tuple[str, ...]

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("operator matrix must be square")
        labels = tuple(self.labels)
        if len(labels) != m.shape[0]:
            raise ValueError("label count must equal dimension")
        if len(set(labels)) != len(labels):
            raise ValueError("basis labels must be unique")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "labels", labels)

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]

    def entry(self, row: str, col: str) -> complex:
        return complex(self.matrix[self.labels.index(row), self.labels.index(col)])

    def hermiticity_error(self) -> float:
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T), initial=0.0))

    def is_hermitian(self, atol: float = HERMITIAN_ATOL) -> bool:
        return self.hermiticity_error() <= atol

    def __matmul__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        _check_same_basis(self, other)
        return OperatorMatrix(self.matrix @ other.matrix, self.labels)

    def __add__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        _check_same_basis(self, other)
        return OperatorMatrix(self.matrix + other.matrix, self.labels)

    def __sub__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        _check_same_basis(self, other)
        return OperatorMatrix(self.matrix - other.matrix, self.labels)

    def scaled(self, factor: complex) -> "OperatorMatrix":
        return OperatorMatrix(factor * self.matrix, self.labels)

    def apply(self, state: "QuantumState") -> "QuantumState":
        if state.labels != self.labels:
            raise ValueError("state and operator bases differ")
        return QuantumState(self.matrix @ state.amplitudes, self.labels, normalize=False)


def _check_same_basis(a: OperatorMatrix, b: OperatorMatrix) -> None:
    if a.dimension != b.dimension:
        raise ValueError(f"dimension mismatch: {a.dimension} vs {b.dimension}")


@dataclass(frozen=True)
class QuantumState:
    """Normalized amplitude vector over a labelled basis.

    With ``normalize=False`` the vector is stored as given; otherwise it is
    checked against unit norm within ``1e-10``.
    """

    amplitudes: np.ndarray
    labels: tuple[str, ...]
    normalize: bool = field(default=True, compare=False, repr=False)

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex).reshape(-1)
        labels = tuple(self.labels)
        if len(labels) != amps.size:
            raise ValueError("label count must equal dimension")
        if self.normalize:
            norm2 = float(np.vdot(amps, amps).real)
            if abs(norm2 - 1.0) > 1e-10:
                raise ValueError(f"state is not normalized (|psi|^2 = {norm2:.3e})")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "labels", labels)

    @classmethod
    def basis(cls, label: str, labels) -> "QuantumState":
        labels = tuple(labels)
        if label not in labels:
            raise ValueError(f"unknown basis state {label!r}; expected one of {labels}")
        amps = np.zeros(len(labels), dtype=complex)
        amps[labels.index(label)] = 1.0
        return cls(amps, labels)

    @property
    def dimension(self) -> int:
        return self.amplitudes.size

    def populations(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def amplitude(self, label: str) -> complex:
        return complex(self.amplitudes[self.labels.index(label)])


def pauli_operators() -> tuple[OperatorMatrix, OperatorMatrix, OperatorMatrix]:
    """Pauli matrices ``(sx, sy, sz)`` in the ``(+, -)`` basis."""
    sx = np.array([[0, 1], [1, 0]], dtype=complex)
    sy = np.array([[0, -1j], [1j, 0]], dtype=complex)
    sz = np.array([[1, 0], [0, -1]], dtype=complex)
    return tuple(OperatorMatrix(m, QUBIT_LABELS) for m in (sx, sy, sz))


def spin1_operators() -> tuple[OperatorMatrix, OperatorMatrix, OperatorMatrix]:
    """Standard spin-1 matrices ``(Sx, Sy, Sz)`` in the ``(1, 0, -1)`` basis.

    Built from the ladder operator ``S+ |m> = sqrt(2 - m(m+1)) |m+1>``, so that
    ``[Sx, Sy] = i Sz``.
    """
    ms = QUTRIT_M
    splus = np.zeros((3, 3), dtype=complex)
    for col, m in enumerate(ms):
        if m < 1:
            splus[col - 1, col] = math.sqrt(2.0 - m * (m + 1.0))
    sminus = splus.conj().T
    sx = (splus + sminus) / 2.0
    sy = (splus - sminus) / 2.0j
    sz = np.diag(np.array(ms, dtype=complex))
    return tuple(OperatorMatrix(m, QUTRIT_LABELS) for m in (sx, sy, sz))


def identity(labels) -> OperatorMatrix:
    labels = tuple(labels)
    return OperatorMatrix(np.eye(len(labels), dtype=complex), labels)


def tensor_product(a: OperatorMatrix, b: OperatorMatrix) -> OperatorMatrix:
    """Kronecker product; labels concatenate with ``a`` as the slow index."""
    labels = tuple(la + lb for la in a.labels for lb in b.labels)
    return OperatorMatrix(np.kron(a.matrix, b.matrix), labels)


def commutator_norm(a, b) -> float:
    """Max-entry norm of ``AB - BA``. Accepts OperatorMatrix or arrays."""
    ma = a.matrix if isinstance(a, OperatorMatrix) else np.asarray(a)
    mb = b.matrix if isinstance(b, OperatorMatrix) else np.asarray(b)
    if ma.shape != mb.shape:
        raise ValueError(f"dimension mismatch: {ma.shape} vs {mb.shape}")
    return float(np.max(np.abs(ma @ mb - mb @ ma), initial=0.0))


QUBIT_PAIR_LABELS = tuple(a + b for a in QUBIT_LABELS for b in QUBIT_LABELS)
QUTRIT_PAIR_LABELS = tuple(a + b for a in QUTRIT_LABELS for b in QUTRIT_LABELS)
QUBIT_PAIR_M = tuple((ma, mb) for ma in QUBIT_M for mb in QUBIT_M)
QUTRIT_PAIR_M = tuple((ma, mb) for ma in QUTRIT_M for mb in QUTRIT_M)


def _pair_terms(ops, params: CouplingParams, scale: float) -> np.ndarray:
    ox, oy, oz = (o.matrix for o in ops)
    kron = np.kron
    h = params.gamma_x * kron(ox, ox) + params.gamma_y * kron(oy, oy)
    h = h + params.gamma_xy * kron(ox, oy) + params.gamma_yx * kron(oy, ox)
    h = scale * h
    if params.gamma_z:
        h = h + scale * params.gamma_z * kron(oz, oz)
    return h


def qubit_coupling_matrix(params: CouplingParams) -> np.ndarray:
    return _pair_terms(pauli_operators(), params, 1.0)


def qubit_field_matrices() -> tuple[np.ndarray, np.ndarray]:
    """``(sz x 1, 1 x sz)``: the operators multiplying ``omega_1`` and ``omega_2``."""
    _, _, sz = pauli_operators()
    eye = np.eye(2, dtype=complex)
    return np.kron(sz.matrix, eye), np.kron(eye, sz.matrix)


def build_qubit_hamiltonian(params: CouplingParams, omega1: float, omega2: float = 0.0) -> OperatorMatrix:
    """Two-qubit Hamiltonian with local z fields and exchange, d-d and DM couplings."""
    omega1, omega2 = float(omega1), float(omega2)
    if not (math.isfinite(omega1) and math.isfinite(omega2)):
        raise ValueError("fields must be finite")
    f1, f2 = qubit_field_matrices()
    h = omega1 * f1 + omega2 * f2 + qubit_coupling_matrix(params)
    return OperatorMatrix(h, QUBIT_PAIR_LABELS)


def _require_no_gamma_z(params: CouplingParams) -> None:
    if params.gamma_z != 0.0:
        raise ValueError("the two-qutrit model has no gamma_z term; got gamma_z = %r" % params.gamma_z)


def qutrit_coupling_matrix(params: CouplingParams) -> np.ndarray:
    _require_no_gamma_z(params)
    return _pair_terms(spin1_operators(), params, QUTRIT_COUPLING_SCALE)


def qutrit_field_matrix() -> np.ndarray:
    _, _, sz = spin1_operators()
    return np.kron(sz.matrix, np.eye(3, dtype=complex))


def build_qutrit_hamiltonian(params: CouplingParams, omega1: float) -> OperatorMatrix:
    """Two-qutrit Hamiltonian, field on the first qutrit only.

    Raises ``ValueError`` for nonzero ``gamma_z``: that term is not part of
    the model.
    """
    omega1 = float(omega1)
    if not math.isfinite(omega1):
        raise ValueError("field must be finite")
    h = omega1 * qutrit_field_matrix() + qutrit_coupling_matrix(params)
    return OperatorMatrix(h, QUTRIT_PAIR_LABELS)


def qubit_parity_operator() -> OperatorMatrix:
    """``sz_1 sz_2``, the constant of motion of the two-qubit model."""
    _, _, sz = pauli_operators()
    return tensor_product(sz, sz)


def k_operator() -> OperatorMatrix:
    """``cos[pi (Sz_1 + Sz_2)]``: +1 on even total z-component, -1 on odd."""
    diag = [math.cos(math.pi * (ma + mb)) for ma, mb in QUTRIT_PAIR_M]
    return OperatorMatrix(np.diag(np.round(diag)).astype(complex), QUTRIT_PAIR_LABELS)


def total_sz_operator(system: str) -> OperatorMatrix:
    """``Sz_1 + Sz_2`` (Pauli normalization for qubits)."""
    if system == "qubits":
        labels, ms = QUBIT_PAIR_LABELS, QUBIT_PAIR_M
    elif system == "qutrits":
        labels, ms = QUTRIT_PAIR_LABELS, QUTRIT_PAIR_M
    else:
        raise ValueError(f"unknown system {system!r}")
    return OperatorMatrix(np.diag([a + b for a, b in ms]).astype(complex), labels)


def z_rotation_pair(system: str, angle: float) -> OperatorMatrix:
    """``exp(-i angle Sz) x exp(-i angle Sz)``, spin-1/2 ``Sz = sz/2`` for qubits."""
    if system == "qubits":
        sz = np.array(QUBIT_M) / 2.0
        labels = QUBIT_LABELS
    else:
        sz = np.array(QUTRIT_M)
        labels = QUTRIT_LABELS
    single = OperatorMatrix(np.diag(np.exp(-1j * angle * sz)), labels)
    return tensor_product(single, single)


def system_of_dimension(dim: int) -> str:
    if dim == 4:
        return "qubits"
    if dim == 9:
        return "qutrits"
    raise ValueError(f"no two-spin system of dimension {dim}")


def pair_labels(system: str) -> tuple[str, ...]:
    if system == "qubits":
        return QUBIT_PAIR_LABELS
    if system == "qutrits":
        return QUTRIT_PAIR_LABELS
    raise ValueError(f"unknown system {system!r}")


def pair_magnetizations(system: str) -> np.ndarray:
    if system not in ("qubits", "qutrits"):
        raise ValueError(f"unknown system {system!r}")
    ms = QUBIT_PAIR_M if system == "qubits" else QUTRIT_PAIR_M
    return np.array([a + b for a, b in ms])
