"""Two-qutrit block structure, closed-form probabilities and negativity.

``K = cos[pi (Sz_1 + Sz_2)]`` splits the 9-dim space into a 4-dim block
(odd total z-component) and a 5-dim block (even). The 4-dim block is two
decoupled fictitious qubits under the map

    |10> <-> |++>,  |01> <-> |+->,  |0-1> <-> |-+>,  |-10> <-> |-->

with

    H1 = (omega_1 / 2) sz + (gamma_x - gamma_y) sx + (gamma_xy + gamma_yx) sy
    H2 = (omega_1 / 2) sz + (gamma_x + gamma_y) sx - (gamma_xy - gamma_yx) sy

For isotropic exchange with pure DM the 5-dim block splits 1 + 3 + 1 and the
middle block is a three-level system on ``(|1-1>, |00>, |-11>)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .operators import (
    QUTRIT_PAIR_LABELS,
    CouplingParams,
    _require_no_gamma_z,
    pauli_operators,
    spin1_operators,
)
from .qubits import ScenarioKind, _check_alpha, _lz_sq, scenario_params

FOUR_BASIS = ("10", "01", "0-1", "-10")
FIVE_BASIS = ("11", "1-1", "00", "-11", "-1-1")
THREE_LEVEL_BASIS = ("1-1", "00", "-11")
TRIVIAL_BASIS = ("11", "-1-1")
#: qutrit pair label -> (fictitious qubit 1 up?, fictitious qubit 2 up?)
MAPPING = {"10": (True, True), "01": (True, False), "0-1": (False, True), "-10": (False, False)}
MAPPING_LABELS = {"10": "++", "01": "+-", "0-1": "-+", "-10": "--"}

REDUCTION_ATOL = 1e-12
NEGATIVE_EIG_ATOL = 1e-12


def indices(labels) -> np.ndarray:
    return np.array([QUTRIT_PAIR_LABELS.index(lab) for lab in labels])


@dataclass(frozen=True)
class FictitiousQubit:
    """``sweep * omega_1 * sz + x * sx + y * sy``."""

    sweep: float
    x: float
    y: float

    @property
    def magnitude(self) -> float:
        return math.hypot(self.x, self.y)

    def matrix(self, omega1: float) -> np.ndarray:
        sx, sy, sz = (o.matrix for o in pauli_operators())
        return self.sweep * omega1 * sz + self.x * sx + self.y * sy


@dataclass(frozen=True)
class QutritBlockDecomposition:
    params: CouplingParams
    h1: FictitiousQubit
    h2: FictitiousQubit
    four_basis: tuple[str, ...] = FOUR_BASIS
    five_basis: tuple[str, ...] = FIVE_BASIS

    def mapped_four_dim(self, omega1: float) -> np.ndarray:
        """``H1 x 1 + 1 x H2`` in the ``(++, +-, -+, --)`` order of the fictitious pair."""
        eye = np.eye(2)
        return np.kron(self.h1.matrix(omega1), eye) + np.kron(eye, self.h2.matrix(omega1))


def decompose_qutrit_blocks(params: CouplingParams) -> QutritBlockDecomposition:
    _require_no_gamma_z(params)
    h1 = FictitiousQubit(0.5, params.gamma_tilde_minus, params.Gamma_tilde_plus)
    h2 = FictitiousQubit(0.5, params.gamma_tilde_plus, -params.Gamma_tilde_minus)
    return QutritBlockDecomposition(params, h1, h2)


def reorder_to_blocks(matrix: np.ndarray) -> np.ndarray:
    """Permute a 9x9 matrix into the ``4 + 5`` block order."""
    order = np.concatenate([indices(FOUR_BASIS), indices(FIVE_BASIS)])
    return np.asarray(matrix)[np.ix_(order, order)]


def fictitious_probabilities(params: CouplingParams, alpha: float) -> tuple[float, float]:
    """Flip probabilities ``(P1, P2)`` of the two fictitious qubits."""
    _check_alpha(alpha)
    d = decompose_qutrit_blocks(params)
    return _lz_sq(d.h1.magnitude**2, alpha), _lz_sq(d.h2.magnitude**2, alpha)


def _check_prob(*ps: float) -> None:
    for p in ps:
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"probability must lie in [0, 1], got {p!r}")


def four_dim_transition_probs(p1: float, p2: float) -> tuple[float, float, float, float]:
    """From ``|-10>``: probabilities to ``|10>``, ``|01>``, ``|0-1>`` and to stay."""
    _check_prob(p1, p2)
    return p1 * p2, p1 * (1.0 - p2), (1.0 - p1) * p2, (1.0 - p1) * (1.0 - p2)


def four_dim_final_probs(p1: float, p2: float, initial: str) -> dict[str, float]:
    """Asymptotic 4-dim populations from any 4-dim basis state."""
    _check_prob(p1, p2)
    if initial not in MAPPING:
        raise ValueError(f"{initial!r} is not in the four-dimensional block {FOUR_BASIS}")
    u1, u2 = MAPPING[initial]
    out = {}
    for label, (v1, v2) in MAPPING.items():
        f1 = p1 if v1 != u1 else 1.0 - p1
        f2 = p2 if v2 != u2 else 1.0 - p2
        out[label] = f1 * f2
    return out


@dataclass(frozen=True)
class ThreeLevelReduction:
    """Effective three-level system of the 5-dim block.

    ``H3 = omega_1 Sz + gamma_tilde Sx' - Gamma_tilde Sy'`` on
    ``(|1-1>, |00>, |-11>)``, with ``S' = sqrt(2) S`` the unit-off-diagonal
    spin-1 matrices.
    """

    gamma_tilde: float
    Gamma_tilde: float
    basis: tuple[str, ...] = THREE_LEVEL_BASIS
    trivial: tuple[str, ...] = TRIVIAL_BASIS

    @property
    def magnitude(self) -> float:
        return math.hypot(self.gamma_tilde, self.Gamma_tilde)

    def matrix(self, omega1: float) -> np.ndarray:
        sx, sy, sz = (o.matrix for o in spin1_operators())
        s = math.sqrt(2.0)
        return omega1 * sz + self.gamma_tilde * s * sx - self.Gamma_tilde * s * sy


def reduction_violations(params: CouplingParams, atol: float = REDUCTION_ATOL) -> list[str]:
    bad = []
    if abs(params.gamma_x - params.gamma_y) > atol:
        bad.append(f"gamma_x = gamma_y (isotropic exchange) violated: {params.gamma_x!r} != {params.gamma_y!r}")
    if abs(params.gamma_xy + params.gamma_yx) > atol:
        bad.append(f"gamma_xy = -gamma_yx (pure DM) violated: {params.gamma_xy!r} vs {params.gamma_yx!r}")
    if abs(params.gamma_z) > atol:
        bad.append(f"gamma_z = 0 violated: {params.gamma_z!r}")
    return bad


def three_level_reduction(params: CouplingParams) -> ThreeLevelReduction:
    bad = reduction_violations(params)
    if bad:
        raise ValueError("three-level reduction not applicable: " + "; ".join(bad))
    return ThreeLevelReduction(params.gamma_x + params.gamma_y, params.gamma_xy - params.gamma_yx)


def three_level_probs(p3: float) -> tuple[float, float, float]:
    """From ``|-11>``: probabilities to ``|1-1>``, ``|00>`` and to stay."""
    _check_prob(p3)
    return p3 * p3, 2.0 * p3 * (1.0 - p3), (1.0 - p3) ** 2


def p3_two_pi(red: ThreeLevelReduction, alpha: float) -> float:
    """Candidate ``1 - exp(-2 pi (g~^2 + G~^2) / alpha)``."""
    return _lz_sq(red.gamma_tilde**2 + red.Gamma_tilde**2, alpha)


def p3_four_pi(red: ThreeLevelReduction, alpha: float) -> float:
    """Candidate ``1 - exp(-4 pi g~^2 / alpha)`` (exchange-only form)."""
    return _lz_sq(2.0 * red.gamma_tilde**2, alpha)


def p3_majorana(red: ThreeLevelReduction, alpha: float) -> float:
    """Spin-1/2 image of ``H3``: transverse ``|g~ + iG~| / sqrt(2)``, exponent ``pi m^2 / alpha``."""
    return _lz_sq(0.5 * red.magnitude**2, alpha)


P3_CANDIDATES = {"two_pi": p3_two_pi, "four_pi": p3_four_pi, "majorana_pi": p3_majorana}


def partial_transpose(rho: np.ndarray, dims=(3, 3), subsystem: int = 1) -> np.ndarray:
    da, db = dims
    r = np.asarray(rho).reshape(da, db, da, db)
    r = r.transpose(0, 3, 2, 1) if subsystem == 1 else r.transpose(2, 1, 0, 3)
    return r.reshape(da * db, da * db)


def negativity_general(rho, dims=(3, 3), subsystem: int = 1, atol: float = 1e-10) -> float:
    """Sum of the magnitudes of the negative eigenvalues of the partial transpose."""
    rho = np.asarray(rho, dtype=complex)
    n = dims[0] * dims[1]
    if rho.shape != (n, n):
        raise ValueError(f"density matrix must be {n}x{n}, got {rho.shape}")
    if np.max(np.abs(rho - rho.conj().T)) > atol:
        raise ValueError("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1.0) > atol:
        raise ValueError(f"density matrix trace is {np.trace(rho).real:.12g}, expected 1")
    if np.linalg.eigvalsh(rho).min() < -atol:
        raise ValueError("density matrix is not positive semidefinite")
    eigs = np.linalg.eigvalsh(partial_transpose(rho, dims, subsystem))
    return float(-eigs[eigs < -NEGATIVE_EIG_ATOL].sum())


def pure_negativity(amplitudes, dims=(3, 3)) -> np.ndarray:
    """Negativity of pure states from Schmidt coefficients; broadcasts over leading axes."""
    c = np.asarray(amplitudes, dtype=complex)
    sv = np.linalg.svd(c.reshape(c.shape[:-1] + tuple(dims)), compute_uv=False)
    return 0.5 * (sv.sum(axis=-1) ** 2 - 1.0)


def negativity_pure_4d(c1: complex, c2: complex, c3: complex, c4: complex) -> float:
    """``sqrt(x (1 - x))`` with ``x = |c1|^2 + |c4|^2`` (amplitudes of 10, 01, 0-1, -10)."""
    w = [abs(c) ** 2 for c in (c1, c2, c3, c4)]
    if abs(sum(w) - 1.0) > 1e-10:
        raise ValueError(f"amplitudes are not normalized (sum |c|^2 = {sum(w):.12g})")
    # both Schmidt weights summed directly; 1 - x cancels badly near x = 1
    x, y = w[0] + w[3], w[1] + w[2]
    return math.sqrt(x * y) / (x + y)


def embed_four_dim(c) -> np.ndarray:
    """9-dim amplitude vector from 4-dim amplitudes ordered as FOUR_BASIS."""
    out = np.zeros(9, dtype=complex)
    out[indices(FOUR_BASIS)] = np.asarray(c, dtype=complex)
    return out


def asymptotic_x(p1: float, p2: float) -> float:
    """``P1 P2 + (1 - P1)(1 - P2)``, the weight on ``{|10>, |-10>}``."""
    _check_prob(p1, p2)
    return p1 * p2 + (1.0 - p1) * (1.0 - p2)


def negativity_from_x(x: float) -> float:
    return math.sqrt(max(x * (1.0 - x), 0.0))


def qutrit_scenario_pair(
    kind: ScenarioKind,
    gamma_t: float,
    Gamma_t: float,
    alpha: float,
    *,
    gamma_y: float | None = None,
    Gamma_dm: float | None = None,
) -> tuple[float, float]:
    """Closed-form ``(P1, P2)`` written per scenario.

    Isotropic kinds use ``gamma_x = gamma_y = gamma_t / 2``; anisotropic kinds
    ``gamma_x = gamma_t`` and ``gamma_y``. ``ISO_EXCHANGE_DM_AS_WRITTEN``
    returns the pair printed for the DM case with its printed coupling
    ``gamma_xy = gamma_yx``; that realization is a d-d coupling, so this pair
    does not describe it.
    """
    _check_alpha(alpha)
    kind = ScenarioKind(kind)
    L = lambda m2: _lz_sq(m2, alpha)  # noqa: E731
    if kind in (ScenarioKind.ISO_EXCHANGE_DM, ScenarioKind.ISO_EXCHANGE_DM_AS_WRITTEN):
        return 0.0, L(gamma_t**2 + Gamma_t**2)
    if kind is ScenarioKind.ISO_EXCHANGE_DD:
        return L(Gamma_t**2), L(gamma_t**2)
    if kind is ScenarioKind.ISO_EXCHANGE_DD_DM:
        dm = Gamma_t if Gamma_dm is None else Gamma_dm
        return L(Gamma_t**2), L(gamma_t**2 + dm**2)
    if kind is ScenarioKind.EXCHANGE_ONLY and gamma_y is None:
        return 0.0, L(gamma_t**2)
    if gamma_y is None:
        raise ValueError(f"{kind.name} needs gamma_y")
    gp, gm = gamma_t + gamma_y, gamma_t - gamma_y
    if kind is ScenarioKind.ANISO_EXCHANGE_DD:
        return L(gm**2 + Gamma_t**2), L(gp**2)
    if kind is ScenarioKind.ANISO_EXCHANGE_DM:
        return L(gm**2), L(gp**2 + Gamma_t**2)
    if kind is ScenarioKind.EXCHANGE_ONLY:
        return L(gm**2), L(gp**2)
    raise ValueError(f"unknown scenario {kind!r}")


def qutrit_scenario_params(kind: ScenarioKind, gamma_t: float, Gamma_t: float = 0.0, **kw) -> CouplingParams:
    return scenario_params(kind, gamma_t, Gamma_t, **kw)


def exchange_family(ratio: float = 0.5, gamma_tilde_plus: float = 1.0) -> CouplingParams:
    """Exchange-only couplings with ``gamma_tilde_minus**2 = ratio * gamma_tilde_plus**2``.

    ``ratio = 1/2`` puts the two negativity maxima of a slope scan at
    ``gamma_tilde_plus**2 / alpha = ln2 / 2pi`` and ``ln2 / pi``.
    """
    if not 0.0 <= ratio:
        raise ValueError("ratio must be nonnegative")
    gm = math.sqrt(ratio) * gamma_tilde_plus
    return CouplingParams((gamma_tilde_plus + gm) / 2.0, (gamma_tilde_plus - gm) / 2.0)
