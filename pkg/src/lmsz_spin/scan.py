"""Parameter scans of asymptotic quantities.

A scan varies one axis of a base configuration and evaluates, per point, the
closed-form probabilities, the matching entanglement value and optionally a
numerical estimate from propagation. Points are independent, so they run on a
thread pool; the compiled kernels release the GIL.

The ``lambda`` axis is the dimensionless LMSZ parameter of the strongest
block. For qubits it is ``2 pi m**2 / alpha``; for qutrits it is
``m**2 / alpha``, the quantity in which the negativity maxima sit at
``ln2 / 2pi`` and ``ln2 / pi``.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import minimize_scalar

from .operators import CouplingParams, QuantumState, pair_labels
from .propagator import (
    PropagationConfig,
    asymptotic_estimate,
    run_sweep,
)
from .qubits import (
    BLOCK_LABELS,
    MINUS,
    PLUS,
    asymptotic_concurrence,
    basis_block,
    decompose_qubit_blocks,
    half_crossing_probability,
    lmsz_probability,
    pure_concurrence,
)
from .qutrits import (
    FOUR_BASIS,
    asymptotic_x,
    decompose_qutrit_blocks,
    four_dim_final_probs,
    negativity_from_x,
)
from .sweep import HALF, SweepProtocol

COUPLING_AXES = ("gamma_x", "gamma_y", "gamma_z", "gamma_xy", "gamma_yx")
AXES = ("alpha", "lambda") + COUPLING_AXES
_AXIS_ALIASES = {"x": "gamma_x", "y": "gamma_y", "z": "gamma_z", "xy": "gamma_xy", "yx": "gamma_yx", "Lambda": "lambda"}


def canonical_axis(name: str) -> str:
    axis = _AXIS_ALIASES.get(name, name)
    if axis not in AXES:
        raise ValueError(f"unknown scan axis {name!r}; choose from {AXES}")
    return axis


def parse_range(text: str) -> np.ndarray:
    """``"lo:hi:n"`` to ``n`` evenly spaced values.

    ``n`` must be at least 2 unless ``lo == hi``, which is a single point.
    """
    parts = text.split(":")
    if len(parts) != 3:
        raise ValueError(f"scan range must read lo:hi:n, got {text!r}")
    try:
        lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError as exc:
        raise ValueError(f"bad scan range {text!r}: {exc}") from None
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise ValueError("scan range bounds must be finite")
    if n < 1 or (n == 1 and lo != hi) or (n >= 2 and lo == hi):
        raise ValueError("a scan range needs n >= 2 distinct points, or lo == hi with n == 1")
    if hi < lo:
        raise ValueError("scan range must satisfy lo <= hi")
    return np.linspace(lo, hi, n)


def strongest_magnitude(system: str, params: CouplingParams) -> float:
    if system == "qubits":
        return max(b.magnitude for b in decompose_qubit_blocks(params))
    d = decompose_qutrit_blocks(params)
    return max(d.h1.magnitude, d.h2.magnitude)


def lambda_of(system: str, params: CouplingParams, alpha: float) -> float:
    m2 = strongest_magnitude(system, params) ** 2
    return (2.0 * math.pi * m2 if system == "qubits" else m2) / alpha


def alpha_for_lambda(system: str, params: CouplingParams, lam: float) -> float:
    if not lam > 0:
        raise ValueError("the LMSZ parameter must be positive")
    m2 = strongest_magnitude(system, params) ** 2
    if m2 == 0:
        raise ValueError("zero couplings: a lambda axis has no corresponding slope")
    return (2.0 * math.pi * m2 if system == "qubits" else m2) / lam


@dataclass(frozen=True)
class ScanSpec:
    system: str
    params: CouplingParams
    sweep: SweepProtocol
    initial: str
    axis: str
    values: tuple
    numeric: bool = False
    cfg: PropagationConfig = PropagationConfig(tol=1e-8, n_samples=4001)


def point_setup(spec: ScanSpec, value: float) -> tuple[CouplingParams, SweepProtocol]:
    """Couplings and sweep for one axis value."""
    params, sweep = spec.params, spec.sweep
    if spec.axis == "alpha":
        sweep = replace(sweep, alpha=float(value))
    elif spec.axis == "lambda":
        sweep = replace(sweep, alpha=alpha_for_lambda(spec.system, params, float(value)))
    else:
        params = replace(params, **{spec.axis: float(value)})
    return params, sweep


def _partner(label: str) -> str:
    a, b = BLOCK_LABELS[basis_block(label)]
    return b if label == a else a


def qubit_closed_form(params: CouplingParams, sweep: SweepProtocol, initial: str) -> dict:
    plus, minus = decompose_qubit_blocks(params)
    row = {}
    for tag, block in ((PLUS, plus), (MINUS, minus)):
        lam = 2.0 * math.pi * block.magnitude**2 / sweep.alpha
        p = half_crossing_probability(lam) if sweep.mode == HALF else lmsz_probability(block.magnitude, sweep.alpha)
        row[f"P_{tag.lower()}"] = p
    row["concurrence"] = asymptotic_concurrence(row[f"P_{basis_block(initial).lower()}"])
    return row


def qubit_numeric(params, sweep, initial, cfg) -> dict:
    """Numerical ``P_plus``, ``P_minus`` and concurrence of the initial block."""
    # one run covers both blocks: start in an equal superposition of the
    # initial state and a basis state of the other block
    other_tag = MINUS if basis_block(initial) == PLUS else PLUS
    other = BLOCK_LABELS[other_tag][1]
    labels = pair_labels("qubits")
    amps = np.zeros(4, dtype=complex)
    amps[labels.index(initial)] = amps[labels.index(other)] = 1.0 / math.sqrt(2.0)
    series = run_sweep("qubits", params, sweep, QuantumState(amps, labels), cfg)
    est = asymptotic_estimate(series)
    row = {
        f"P_{basis_block(initial).lower()}_num": 2.0 * est.probabilities[_partner(initial)],
        f"P_{other_tag.lower()}_num": 2.0 * est.probabilities[_partner(other)],
    }
    idx = [labels.index(lab) for lab in BLOCK_LABELS[basis_block(initial)]]
    tail = series.states[int(math.floor(len(series.times) * (1.0 - est.tail_fraction))):]
    own = np.zeros_like(tail)
    own[:, idx] = math.sqrt(2.0) * tail[:, idx]
    row["concurrence_num"] = float(pure_concurrence(own).mean())
    row["converged"] = est.converged
    return {k: row[k] for k in ("P_plus_num", "P_minus_num", "concurrence_num", "converged")}


def qutrit_closed_form(params: CouplingParams, sweep: SweepProtocol, initial: str) -> dict:
    if sweep.mode == HALF:
        raise ValueError("no closed form for qutrit half-crossing sweeps")
    d = decompose_qutrit_blocks(params)
    p1 = lmsz_probability(d.h1.magnitude, sweep.alpha)
    p2 = lmsz_probability(d.h2.magnitude, sweep.alpha)
    final = four_dim_final_probs(p1, p2, initial)
    row = {"P1": p1, "P2": p2}
    row.update({f"p_{_col(lab)}": final[lab] for lab in FOUR_BASIS})
    row["negativity"] = negativity_from_x(asymptotic_x(p1, p2))
    return row


def qutrit_numeric(params, sweep, initial, cfg) -> dict:
    """Numerical four-dim populations and negativity, tail averaged."""
    series = run_sweep("qutrits", params, sweep, initial, cfg)
    est = asymptotic_estimate(series)
    row = {f"p_{_col(lab)}_num": est.probabilities[lab] for lab in FOUR_BASIS}
    start = int(math.floor(len(series.times) * (1.0 - est.tail_fraction)))
    row["negativity_num"] = float(series.entanglement[start:].mean())
    row["converged"] = est.converged
    return row


def _col(label: str) -> str:
    return label.replace("-", "m")


def evaluate_point(spec: ScanSpec, index: int) -> dict:
    value = spec.values[index]
    params, sweep = point_setup(spec, value)
    row = {"index": index, spec.axis: float(value), "alpha": sweep.alpha}
    if spec.axis != "lambda":
        row["lambda"] = lambda_of(spec.system, params, sweep.alpha)
    if spec.system == "qubits":
        row.update(qubit_closed_form(params, sweep, spec.initial))
        if spec.numeric:
            row.update(qubit_numeric(params, sweep, spec.initial, spec.cfg))
    else:
        if spec.initial not in FOUR_BASIS:
            raise ValueError(f"qutrit scans start in the four-dimensional block {FOUR_BASIS}")
        row.update(qutrit_closed_form(params, sweep, spec.initial))
        if spec.numeric:
            row.update(qutrit_numeric(params, sweep, spec.initial, spec.cfg))
    return row


def default_jobs() -> int:
    try:
        return max(1, len(os.sched_getaffinity(0)))
    except AttributeError:  # not on Linux
        return os.cpu_count() or 1


def run_scan(spec: ScanSpec, jobs: int | None = None) -> list[dict]:
    """All rows in scan-index order."""
    n = len(spec.values)
    jobs = default_jobs() if jobs is None else jobs
    if jobs < 1:
        raise ValueError("jobs must be positive")
    if jobs == 1 or n == 1:
        return [evaluate_point(spec, i) for i in range(n)]
    with ThreadPoolExecutor(max_workers=min(jobs, n)) as pool:
        return list(pool.map(lambda i: evaluate_point(spec, i), range(n)))


def entanglement_key(system: str, numeric: bool = False) -> str:
    base = "concurrence" if system == "qubits" else "negativity"
    return base + ("_num" if numeric else "")


@dataclass(frozen=True)
class Maximum:
    location: float
    value: float


def locate_maxima(func, lo: float, hi: float, n_grid: int = 2001, xtol: float = 1e-9) -> list[Maximum]:
    """Interior local maxima of a smooth scalar function on ``[lo, hi]``.

    A dense grid brackets each maximum and a bounded scalar minimizer polishes
    it.
    """
    if not hi > lo:
        raise ValueError("need hi > lo")
    x = np.linspace(lo, hi, n_grid)
    y = np.array([func(v) for v in x])
    out = []
    for i in range(1, n_grid - 1):
        if y[i] > y[i - 1] and y[i] >= y[i + 1]:
            res = minimize_scalar(lambda v: -func(v), bounds=(x[i - 1], x[i + 1]), method="bounded",
                                  options={"xatol": xtol})
            out.append(Maximum(float(res.x), float(-res.fun)))
    return out


def locate_sampled_maxima(x, y) -> list[Maximum]:
    """Interior maxima of sampled data refined by a three-point parabola."""
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    out = []
    for i in range(1, len(x) - 1):
        if y[i] > y[i - 1] and y[i] >= y[i + 1]:
            coef = np.polyfit(x[i - 1:i + 2], y[i - 1:i + 2], 2)
            xv = -coef[1] / (2.0 * coef[0]) if coef[0] < 0 else x[i]
            xv = min(max(xv, x[i - 1]), x[i + 1])
            out.append(Maximum(float(xv), float(np.polyval(coef, xv))))
    return out


def closed_form_curve(spec: ScanSpec):
    """Entanglement closed form as a function of the axis value."""

    def f(value: float) -> float:
        params, sweep = point_setup(spec, value)
        if spec.system == "qubits":
            return qubit_closed_form(params, sweep, spec.initial)["concurrence"]
        return qutrit_closed_form(params, sweep, spec.initial)["negativity"]

    return f


def scan_maxima(spec: ScanSpec, rows: list[dict]) -> dict:
    """Closed-form maxima over the scanned range, plus sampled numeric maxima when present."""
    lo, hi = float(min(spec.values)), float(max(spec.values))
    out = {"closed_form": [], "numeric": []}
    if hi > lo:
        out["closed_form"] = locate_maxima(closed_form_curve(spec), lo, hi)
    key = entanglement_key(spec.system, numeric=True)
    if spec.numeric and len(rows) >= 3:
        out["numeric"] = locate_sampled_maxima([r[spec.axis] for r in rows], [r[key] for r in rows])
    return out

