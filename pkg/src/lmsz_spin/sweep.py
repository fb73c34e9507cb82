"""Linear-ramp sweep protocol.

The slope ``alpha`` is the rate at which the diabatic energy splitting of each
fictitious spin-1/2 grows. For the two-qubit model the fictitious blocks are
``Omega sz`` (splitting ``2 Omega``), so the physical field ramps as
``omega_1 = alpha t / 2``. For the two-qutrit model the fictitious qubits are
``(omega_1 / 2) sz`` and the field ramps as ``omega_1 = alpha t``. With this
single rule every closed-form probability has the exponent
``2 pi m**2 / alpha``.

``convention="literal"`` ramps ``omega_1 = alpha t`` for both systems instead;
the qubit exponents then become ``pi m**2 / alpha``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

FULL = "full"
HALF = "half"
MODES = (FULL, HALF)
SPLITTING = "splitting"
LITERAL = "literal"
CONVENTIONS = (SPLITTING, LITERAL)

DEFAULT_WINDOW_FACTOR = 50.0


@dataclass(frozen=True)
class SweepProtocol:
    """Linear ramp on the first spin.

    ``half_width`` fixes the window explicitly; when ``None`` it follows from
    ``window_factor``: ``alpha * T = window_factor * max(m_max, sqrt(alpha))``
    with ``m_max`` the largest transverse coupling of the model. The
    ``sqrt(alpha)`` floor keeps weak-coupling sweeps several Landau-Zener
    times long on either side of the crossing.
    """

    alpha: float
    mode: str = FULL
    window_factor: float = DEFAULT_WINDOW_FACTOR
    half_width: float | None = None
    second_field_off: bool = True
    convention: str = SPLITTING

    def __post_init__(self):
        if not (math.isfinite(self.alpha) and self.alpha > 0):
            raise ValueError(f"slope alpha must be positive and finite, got {self.alpha!r}")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.convention not in CONVENTIONS:
            raise ValueError(f"convention must be one of {CONVENTIONS}, got {self.convention!r}")
        if not (self.window_factor > 0):
            raise ValueError("window_factor must be positive")
        if self.half_width is not None and not (self.half_width > 0):
            raise ValueError("half_width must be positive")
        if not self.second_field_off:
            raise ValueError("only the single-ramp protocol (omega_2 = 0) is supported")

    def field_rate(self, system: str) -> float:
        """``d omega_1 / dt`` for the given system."""
        if system == "qubits":
            return self.alpha / 2.0 if self.convention == SPLITTING else self.alpha
        if system == "qutrits":
            return self.alpha
        raise ValueError(f"unknown system {system!r}")

    def window(self, m_max: float) -> tuple[float, float]:
        """``(t_start, t_end)`` of the sweep."""
        if self.half_width is not None:
            T = self.half_width
        else:
            scale = max(m_max, math.sqrt(self.alpha))
            T = self.window_factor * scale / self.alpha
        return (0.0, T) if self.mode == HALF else (-T, T)


def lmsz_parameter(m: float, alpha: float) -> float:
    """Dimensionless ``Lambda = 2 pi m**2 / alpha``."""
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    return 2.0 * math.pi * m * m / alpha


def slope_for_lambda(m: float, lam: float) -> float:
    """Inverse of :func:`lmsz_parameter` in ``alpha``."""
    if not lam > 0:
        raise ValueError("Lambda must be positive")
    if m == 0:
        raise ValueError("zero transverse coupling has no finite slope for a given Lambda")
    return 2.0 * math.pi * m * m / lam
