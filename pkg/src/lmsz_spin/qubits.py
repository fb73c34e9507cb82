"""Two-qubit block decomposition and closed-form LMSZ results.

The parity ``sz_1 sz_2`` splits the 4-dim space into PLUS = span{++, --} and
MINUS = span{+-, -+}. Each block is a fictitious spin-1/2

    H_pm = Omega_pm sz + gamma_pm sx + Gamma_pm sy +/- gamma_z

with ``Omega_pm = omega_1 +/- omega_2``, ``gamma_pm = gamma_x -/+ gamma_y`` and
``Gamma_pm = +/- gamma_xy + gamma_yx``. Block basis order is (upper, lower) =
(++, --) and (+-, -+).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .operators import CouplingParams, pauli_operators

PLUS = "PLUS"
MINUS = "MINUS"
BLOCK_LABELS = {PLUS: ("++", "--"), MINUS: ("+-", "-+")}

DEFAULT_CLASSIFY_TOL = 1e-3


class ScenarioKind(enum.Enum):
    ISO_EXCHANGE_DD_DM = "iso-exchange-dd-dm"
    ISO_EXCHANGE_DD = "iso-exchange-dd"
    ISO_EXCHANGE_DM = "iso-exchange-dm"
    ANISO_EXCHANGE_DD = "aniso-exchange-dd"
    ANISO_EXCHANGE_DM = "aniso-exchange-dm"
    EXCHANGE_ONLY = "exchange-only"
    # Qutrit-only: the DM case with gamma_xy = +gamma_yx as printed in the
    # qutrit discussion, kept so the printed pair can be checked numerically.
    ISO_EXCHANGE_DM_AS_WRITTEN = "iso-exchange-dm-as-written"

    @classmethod
    def parse(cls, name: str) -> "ScenarioKind":
        key = name.strip()
        for kind in cls:
            if key in (kind.name, kind.value) or key.upper().replace("-", "_") == kind.name:
                return kind
        raise ValueError(f"unknown scenario {name!r}; choose from {[k.value for k in cls]}")

    @property
    def isotropic(self) -> bool:
        return self.name.startswith("ISO_")


QUBIT_SCENARIOS = tuple(k for k in ScenarioKind if k is not ScenarioKind.ISO_EXCHANGE_DM_AS_WRITTEN)


@dataclass(frozen=True)
class EffectiveBlock:
    """Fictitious spin-1/2 of one parity block."""

    tag: str
    omega: float
    gamma: float
    Gamma: float
    offset: float
    labels: tuple[str, str] = field(init=False)

    def __post_init__(self):
        if self.tag not in BLOCK_LABELS:
            raise ValueError(f"block tag must be PLUS or MINUS, got {self.tag!r}")
        object.__setattr__(self, "labels", BLOCK_LABELS[self.tag])

    @property
    def magnitude(self) -> float:
        return math.hypot(self.gamma, self.Gamma)

    @property
    def rotation_angle(self) -> float:
        """z-rotation angle that turns the transverse field into ``magnitude * sx``.

        Equals ``arctan(-Gamma / gamma)`` for ``gamma > 0``; ``atan2`` keeps the
        rotated field positive for any sign of ``gamma``.
        """
        return math.atan2(-self.Gamma, self.gamma)

    def matrix(self, omega: float | None = None) -> np.ndarray:
        sx, sy, sz = (o.matrix for o in pauli_operators())
        w = self.omega if omega is None else omega
        return w * sz + self.gamma * sx + self.Gamma * sy + self.offset * np.eye(2)

    def rotated_matrix(self, omega: float | None = None) -> np.ndarray:
        """Block conjugated by ``exp(-i theta sz / 2)``."""
        theta = self.rotation_angle
        r = np.diag([np.exp(-0.5j * theta), np.exp(0.5j * theta)])
        return r @ self.matrix(omega) @ r.conj().T


def decompose_qubit_blocks(params: CouplingParams, omega1: float = 0.0, omega2: float = 0.0):
    """Return the ``(PLUS, MINUS)`` effective blocks at the given fields."""
    plus = EffectiveBlock(PLUS, omega1 + omega2, params.gamma_plus, params.Gamma_plus, params.gamma_z)
    minus = EffectiveBlock(MINUS, omega1 - omega2, params.gamma_minus, params.Gamma_minus, -params.gamma_z)
    return plus, minus


def block_indices(tag: str) -> tuple[int, int]:
    from .operators import QUBIT_PAIR_LABELS

    return tuple(QUBIT_PAIR_LABELS.index(lab) for lab in BLOCK_LABELS[tag])


def _check_alpha(alpha: float) -> None:
    if not (alpha > 0 and math.isfinite(alpha)):
        raise ValueError(f"slope alpha must be positive, got {alpha!r}")


def lmsz_probability(m: float, alpha: float) -> float:
    """``1 - exp(-2 pi m**2 / alpha)``."""
    _check_alpha(alpha)
    if not math.isfinite(m):
        raise ValueError("transverse magnitude must be finite")
    return -math.expm1(-2.0 * math.pi * m * m / alpha)


def _lz_sq(m2: float, alpha: float) -> float:
    return -math.expm1(-2.0 * math.pi * m2 / alpha)


def asymptotic_pair(params: CouplingParams, alpha: float) -> tuple[float, float]:
    """Asymptotic ``(P_plus, P_minus)`` for a full sweep."""
    plus, minus = decompose_qubit_blocks(params)
    return lmsz_probability(plus.magnitude, alpha), lmsz_probability(minus.magnitude, alpha)


def scenario_params(
    kind: ScenarioKind,
    gamma: float,
    Gamma: float = 0.0,
    *,
    gamma_y: float | None = None,
    Gamma_dm: float | None = None,
    gamma_z: float = 0.0,
) -> CouplingParams:
    """Couplings realizing a scenario.

    Isotropic kinds take ``gamma_x = gamma_y = gamma / 2``. Anisotropic kinds
    take ``gamma_x = gamma`` and require ``gamma_y``; ``EXCHANGE_ONLY`` is
    isotropic unless ``gamma_y`` is given. d-d means ``gamma_xy = gamma_yx =
    Gamma / 2``, DM means ``gamma_xy = -gamma_yx = Gamma / 2``. With both
    present, ``Gamma`` is the d-d strength and ``Gamma_dm`` (default
    ``Gamma``) the DM strength.
    """
    kind = ScenarioKind(kind)
    if kind.isotropic:
        if gamma_y is not None:
            raise ValueError(f"{kind.name} is isotropic; gamma_y is not a free parameter")
        gx = gy = gamma / 2.0
    elif kind is ScenarioKind.EXCHANGE_ONLY:
        gx, gy = (gamma / 2.0, gamma / 2.0) if gamma_y is None else (gamma, gamma_y)
    else:
        if gamma_y is None:
            raise ValueError(f"{kind.name} needs gamma_y")
        gx, gy = gamma, gamma_y

    if kind is ScenarioKind.EXCHANGE_ONLY:
        gxy = gyx = 0.0
    elif kind in (ScenarioKind.ISO_EXCHANGE_DD, ScenarioKind.ANISO_EXCHANGE_DD, ScenarioKind.ISO_EXCHANGE_DM_AS_WRITTEN):
        gxy = gyx = Gamma / 2.0
    elif kind in (ScenarioKind.ISO_EXCHANGE_DM, ScenarioKind.ANISO_EXCHANGE_DM):
        gxy, gyx = Gamma / 2.0, -Gamma / 2.0
    else:  # ISO_EXCHANGE_DD_DM
        dm = Gamma if Gamma_dm is None else Gamma_dm
        gxy, gyx = (Gamma + dm) / 2.0, (Gamma - dm) / 2.0
    return CouplingParams(gx, gy, gamma_z, gxy, gyx)


def scenario_pair(
    kind: ScenarioKind,
    gamma: float,
    Gamma: float,
    alpha: float,
    *,
    gamma_y: float | None = None,
    Gamma_dm: float | None = None,
) -> tuple[float, float]:
    """Closed-form ``(P_plus, P_minus)`` written per scenario.

    Arguments follow :func:`scenario_params`; for anisotropic kinds the
    exchange combinations are ``gamma_pm = gamma -/+ gamma_y``.
    """
    _check_alpha(alpha)
    kind = ScenarioKind(kind)
    if kind is ScenarioKind.ISO_EXCHANGE_DM_AS_WRITTEN:
        raise ValueError("ISO_EXCHANGE_DM_AS_WRITTEN is a qutrit-only scenario")
    L = lambda m2: _lz_sq(m2, alpha)  # noqa: E731
    if kind is ScenarioKind.ISO_EXCHANGE_DD_DM:
        dm = Gamma if Gamma_dm is None else Gamma_dm
        return L(Gamma**2), L(gamma**2 + dm**2)
    if kind is ScenarioKind.ISO_EXCHANGE_DD:
        return L(Gamma**2), L(gamma**2)
    if kind is ScenarioKind.ISO_EXCHANGE_DM:
        return 0.0, L(gamma**2 + Gamma**2)
    if kind is ScenarioKind.EXCHANGE_ONLY and gamma_y is None:
        return 0.0, L(gamma**2)
    if gamma_y is None:
        raise ValueError(f"{kind.name} needs gamma_y")
    gp, gm = gamma - gamma_y, gamma + gamma_y
    if kind is ScenarioKind.ANISO_EXCHANGE_DD:
        return L(gp**2 + Gamma**2), L(gm**2)
    if kind is ScenarioKind.ANISO_EXCHANGE_DM:
        return L(gp**2), L(gm**2 + Gamma**2)
    if kind is ScenarioKind.EXCHANGE_ONLY:
        return L(gp**2), L(gm**2)
    raise ValueError(f"unknown scenario {kind!r}")


def half_crossing_probability(lam: float) -> float:
    """``(1 - exp(-Lambda / 2)) / 2`` for a sweep starting at the crossing."""
    if not lam >= 0:
        raise ValueError(f"Lambda must be nonnegative, got {lam!r}")
    return -0.5 * math.expm1(-lam / 2.0)


def asymptotic_concurrence(p: float) -> float:
    """``2 sqrt(P (1 - P))``."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"probability must lie in [0, 1], got {p!r}")
    return 2.0 * math.sqrt(p * (1.0 - p))


def max_entanglement_slope(gamma_block: float, Gamma_block: float) -> float:
    """Slope at which the block transition probability is exactly 1/2."""
    m2 = gamma_block**2 + Gamma_block**2
    if m2 == 0:
        raise ValueError("zero transverse coupling: the half-transition condition has no solution")
    return 2.0 * math.pi * m2 / math.log(2.0)


def pure_concurrence(amplitudes) -> float:
    """Wootters concurrence of a pure two-qubit state, ``2 |c_pp c_mm - c_pm c_mp|``."""
    c = np.asarray(amplitudes, dtype=complex)
    if c.shape[-1] != 4:
        raise ValueError("expected two-qubit amplitudes")
    return 2.0 * np.abs(c[..., 0] * c[..., 3] - c[..., 1] * c[..., 2])


def basis_block(label: str) -> str:
    for tag, labels in BLOCK_LABELS.items():
        if label in labels:
            return tag
    raise ValueError(f"unknown two-qubit basis state {label!r}")


def final_probabilities(params: CouplingParams, alpha: float, initial: str, *, half: bool = False) -> dict[str, float]:
    """Asymptotic populations of all four basis states from a basis state."""
    plus, minus = decompose_qubit_blocks(params)
    tag = basis_block(initial)
    block = plus if tag == PLUS else minus
    lam = 2.0 * math.pi * block.magnitude**2 / alpha
    p = half_crossing_probability(lam) if half else lmsz_probability(block.magnitude, alpha)
    a, b = BLOCK_LABELS[tag]
    other = b if initial == a else a
    out = {lab: 0.0 for labs in BLOCK_LABELS.values() for lab in labs}
    out[initial] = 1.0 - p
    out[other] = p
    return out


@dataclass(frozen=True)
class ScenarioMatch:
    kind: ScenarioKind
    inferred: dict
    note: str = ""


def _invert(p: float, alpha: float) -> float:
    """Squared transverse magnitude producing probability ``p``."""
    if p >= 1.0:
        return math.inf
    return -alpha * math.log1p(-p) / (2.0 * math.pi)


def classify_interactions(observed, alpha: float, tolerance: float = DEFAULT_CLASSIFY_TOL) -> list[ScenarioMatch]:
    """Scenarios able to reproduce an observed ``(P_plus, P_minus)`` pair.

    Each scenario's exponents are inverted in closed form. Only pure DM with
    isotropic exchange constrains the pair (it forces ``P_plus = 0``); the
    others have enough free couplings to match any pair, and the inferred
    values show which combinations are fixed. Results follow enum order.
    """
    _check_alpha(alpha)
    p_plus, p_minus = (float(v) for v in observed)
    for p in (p_plus, p_minus):
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"observed probabilities must lie in [0, 1], got {p!r}")
    a = _invert(p_plus, alpha)
    b = _invert(p_minus, alpha)
    ra, rb = math.sqrt(a), math.sqrt(b)
    matches = [
        ScenarioMatch(ScenarioKind.ISO_EXCHANGE_DD_DM, {"Gamma_dd": ra, "gamma_sq_plus_Gamma_dm_sq": b}),
        ScenarioMatch(ScenarioKind.ISO_EXCHANGE_DD, {"gamma": rb, "Gamma": ra}),
    ]
    if p_plus <= tolerance:
        matches.append(ScenarioMatch(ScenarioKind.ISO_EXCHANGE_DM, {"gamma_sq_plus_Gamma_sq": b}, "requires P_plus = 0"))
    matches += [
        ScenarioMatch(ScenarioKind.ANISO_EXCHANGE_DD, {"gamma_minus": rb, "gamma_plus_sq_plus_Gamma_sq": a}),
        ScenarioMatch(ScenarioKind.ANISO_EXCHANGE_DM, {"gamma_plus": ra, "gamma_minus_sq_plus_Gamma_sq": b}),
        ScenarioMatch(ScenarioKind.EXCHANGE_ONLY, {"gamma_plus": ra, "gamma_minus": rb}),
    ]
    return matches
