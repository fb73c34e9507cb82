"""Numerical time evolution over a finite sweep window.

The model Hamiltonians are affine in time, ``H(t) = H0 + t H1``, and go
through the compiled kernel in :mod:`lmsz_spin._kernels`. Any other callable
``t -> matrix`` takes the same algorithm in a Python loop.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernels
from .operators import (
    QUBIT_LABELS,
    QUBIT_M,
    QUTRIT_LABELS,
    QUTRIT_M,
    CouplingParams,
    OperatorMatrix,
    QuantumState,
    pair_labels,
    pair_magnetizations,
    qubit_coupling_matrix,
    qubit_field_matrices,
    qutrit_coupling_matrix,
    qutrit_field_matrix,
    system_of_dimension,
)
from .qubits import BLOCK_LABELS, decompose_qubit_blocks, pure_concurrence
from .qutrits import FIVE_BASIS, FOUR_BASIS, decompose_qutrit_blocks, indices, pure_negativity
from .sweep import SweepProtocol

log = logging.getLogger(__name__)

HERMITIAN_TOL = 1e-10
DEFAULT_TAIL_FRACTION = 0.1
DEFAULT_OSCILLATION_THRESHOLD = 0.03
DEFAULT_DRIFT_THRESHOLD = 0.005


class PropagationError(RuntimeError):
    """Numerical failure; ``partial`` holds the series recorded so far."""

    def __init__(self, message: str, partial: "TimeSeriesResult | None" = None):
        super().__init__(message)
        self.partial = partial


@dataclass(frozen=True)
class AffineHamiltonian:
    """``H(t) = static + t * ramp`` over a labelled basis."""

    static: np.ndarray
    ramp: np.ndarray
    labels: tuple[str, ...]

    def __post_init__(self):
        for name in ("static", "ramp"):
            m = np.ascontiguousarray(getattr(self, name), dtype=np.complex128)
            m.setflags(write=False)
            object.__setattr__(self, name, m)
        object.__setattr__(self, "labels", tuple(self.labels))
        if self.static.shape != self.ramp.shape or self.static.shape[0] != len(self.labels):
            raise ValueError("static, ramp and labels must share one dimension")

    def __call__(self, t: float) -> OperatorMatrix:
        return OperatorMatrix(self.static + t * self.ramp, self.labels)

    def hermiticity_error(self) -> float:
        return max(
            float(np.max(np.abs(self.static - self.static.conj().T))),
            float(np.max(np.abs(self.ramp - self.ramp.conj().T))),
        )

    def restrict(self, idx) -> "AffineHamiltonian":
        idx = np.asarray(idx)
        sub = np.ix_(idx, idx)
        return AffineHamiltonian(self.static[sub], self.ramp[sub], [self.labels[i] for i in idx])

    def max_coupling(self) -> float:
        """Largest off-diagonal static entry: the strongest transverse coupling."""
        off = self.static - np.diag(np.diag(self.static))
        return float(np.max(np.abs(off), initial=0.0))


def model_hamiltonian(system: str, params: CouplingParams, sweep: SweepProtocol) -> AffineHamiltonian:
    rate = sweep.field_rate(system)
    if system == "qubits":
        f1, _ = qubit_field_matrices()
        return AffineHamiltonian(qubit_coupling_matrix(params), rate * f1, pair_labels(system))
    if system == "qutrits":
        return AffineHamiltonian(qutrit_coupling_matrix(params), rate * qutrit_field_matrix(), pair_labels(system))
    raise ValueError(f"unknown system {system!r}")


@dataclass(frozen=True)
class PropagationConfig:
    """Integrator settings. ``t_start``/``t_end`` default to the sweep window."""

    tol: float = 1e-10
    initial_step: float | None = None
    max_step: float | None = None
    max_steps: int = 20_000_000
    n_samples: int = 2001
    t_start: float | None = None
    t_end: float | None = None
    fixed_step: float | None = None

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tolerance must be positive")
        if self.n_samples < 2:
            raise ValueError("need at least two samples")
        if self.max_steps < 1:
            raise ValueError("max_steps must be positive")
        if self.fixed_step is not None and not self.fixed_step > 0:
            raise ValueError("fixed_step must be positive")

    def with_window(self, t_start: float, t_end: float) -> "PropagationConfig":
        return replace(self, t_start=t_start, t_end=t_end)


_SINGLE_M = {QUBIT_LABELS: np.array(QUBIT_M), QUTRIT_LABELS: np.array(QUTRIT_M)}


def _basis_magnetization(labels: tuple[str, ...]) -> np.ndarray | None:
    for system in ("qubits", "qutrits"):
        if labels == pair_labels(system):
            return pair_magnetizations(system)
    return _SINGLE_M.get(labels)


@dataclass
class TimeSeriesResult:
    """Uniformly sampled trajectory and derived observables."""

    times: np.ndarray
    states: np.ndarray
    labels: tuple[str, ...]
    n_steps: int = 0
    n_rejected: int = 0
    completed: bool = True
    populations: np.ndarray = field(init=False)
    norm: np.ndarray = field(init=False)
    magnetization: np.ndarray = field(init=False)
    entanglement: np.ndarray = field(init=False)

    def __post_init__(self):
        self.labels = tuple(self.labels)
        self.populations = np.abs(self.states) ** 2
        self.norm = np.sqrt(self.populations.sum(axis=1))
        m = _basis_magnetization(self.labels)
        n = len(self.times)
        self.magnetization = self.populations @ m if m is not None else np.full(n, np.nan)
        dim = len(self.labels)
        if dim == 4 and self.labels == pair_labels("qubits"):
            self.entanglement = pure_concurrence(self.states) if n else np.empty(0)
        elif dim == 9 and self.labels == pair_labels("qutrits"):
            self.entanglement = pure_negativity(self.states) if n else np.empty(0)
        else:
            self.entanglement = np.full(n, np.nan)

    @property
    def entanglement_name(self) -> str:
        return {4: "concurrence", 9: "negativity"}.get(len(self.labels), "none")

    @property
    def final_state(self) -> QuantumState:
        return QuantumState(self.states[-1], self.labels, normalize=False)

    def population(self, label: str) -> np.ndarray:
        return self.populations[:, self.labels.index(label)]

    def norm_drift(self) -> float:
        return float(np.max(np.abs(self.norm - 1.0), initial=0.0))


def _as_vector(psi0, dim: int | None = None) -> tuple[np.ndarray, tuple[str, ...] | None]:
    if isinstance(psi0, QuantumState):
        return np.ascontiguousarray(psi0.amplitudes, dtype=np.complex128), psi0.labels
    v = np.ascontiguousarray(np.asarray(psi0, dtype=np.complex128).reshape(-1))
    if abs(np.vdot(v, v).real - 1.0) > 1e-10:
        raise ValueError("initial state is not normalized")
    return v, None


def _initial_step(cfg: PropagationConfig, span: float, scale: float) -> tuple[float, float]:
    dt_max = cfg.max_step if cfg.max_step is not None else span / 50.0
    if cfg.fixed_step is not None:
        return cfg.fixed_step, cfg.fixed_step
    if cfg.initial_step is not None:
        return cfg.initial_step, dt_max
    return min(dt_max, cfg.tol ** (1.0 / 3.0) / max(scale, 1e-300), span / 1000.0), dt_max


def _evolve_callable(hfunc, psi0, t0, t1, samples, tol, dt0, dt_max, max_steps, fixed):
    """Python twin of :func:`_kernels.evolve_affine` for arbitrary ``H(t)``."""

    def hmid(t, dt):
        m = hfunc(t + 0.5 * dt)
        m = np.asarray(m.matrix if isinstance(m, OperatorMatrix) else m, dtype=np.complex128)
        if np.max(np.abs(m - m.conj().T)) > HERMITIAN_TOL:
            raise PropagationError(f"H(t) is not Hermitian at t = {t + 0.5 * dt!r}")
        return m

    def step(t, dt, psi):
        return _kernels.expm_hermitian_apply(hmid(t, dt), dt, psi)

    n, dim = samples.size, psi0.size
    out = np.zeros((n, dim), dtype=np.complex128)
    psi, t = psi0.copy(), t0
    eps = 1e-13 * max(abs(t1 - t0), abs(t0), abs(t1), 1.0)
    k = 0
    while k < n and samples[k] <= t + eps:
        out[k] = psi
        k += 1
    dt, steps, rejected = min(dt0, dt_max), 0, 0
    while t1 - t > eps:
        if steps >= max_steps:
            return out, k, steps, rejected, _kernels.STEPS_EXHAUSTED, t
        last = dt >= t1 - t - eps
        if last:
            dt = t1 - t
        if fixed:
            new, err = step(t, dt, psi), 0.0
        else:
            full = step(t, dt, psi)
            new = step(t + 0.5 * dt, 0.5 * dt, step(t, 0.5 * dt, psi))
            err = float(np.linalg.norm(full - new)) / 3.0
            if err > tol:
                dt *= max(_kernels.SHRINK_MIN, _kernels.SAFETY * (tol / err) ** (1.0 / 3.0))
                rejected += 1
                continue
        t_next = t1 if last else t + dt
        while k < n and samples[k] <= t_next + eps:
            out[k] = new if samples[k] >= t_next - eps else step(t, samples[k] - t, psi)
            k += 1
        psi, t = new, t_next
        steps += 1
        if not fixed:
            grow = _kernels.GROW_MAX if err == 0 else min(_kernels.GROW_MAX, _kernels.SAFETY * (tol / err) ** (1.0 / 3.0))
            dt = min(dt * max(grow, _kernels.SHRINK_MIN), dt_max)
    return out, k, steps, rejected, _kernels.OK, t


def propagate(hamiltonian, psi0, cfg: PropagationConfig) -> TimeSeriesResult:
    """Integrate ``i d/dt psi = H(t) psi`` over ``[cfg.t_start, cfg.t_end]``."""
    if cfg.t_start is None or cfg.t_end is None:
        raise ValueError("propagation window is not set")
    t0, t1 = float(cfg.t_start), float(cfg.t_end)
    if not t1 > t0:
        raise ValueError("t_end must exceed t_start")
    psi, labels = _as_vector(psi0)
    samples = np.linspace(t0, t1, cfg.n_samples)
    fixed = cfg.fixed_step is not None
    span = t1 - t0

    if isinstance(hamiltonian, AffineHamiltonian):
        if hamiltonian.hermiticity_error() > HERMITIAN_TOL:
            raise PropagationError("Hamiltonian is not Hermitian")
        if psi.size != len(hamiltonian.labels):
            raise ValueError("state and Hamiltonian dimensions differ")
        labels = labels or hamiltonian.labels
        scale = float(np.abs(hamiltonian.ramp).max() * span / 2.0 + np.abs(hamiltonian.static).max())
        dt0, dt_max = _initial_step(cfg, span, max(scale, 1.0))
        out, k, steps, rejected, status, t_reached = _kernels.evolve_affine(
            hamiltonian.static, hamiltonian.ramp, psi, t0, t1, samples,
            cfg.tol, dt0, dt_max, cfg.max_steps, fixed,
        )
    else:
        h_start = hamiltonian(t0)
        h_start = h_start.matrix if isinstance(h_start, OperatorMatrix) else np.asarray(h_start)
        if labels is None:
            labels = getattr(hamiltonian(t0), "labels", None) or tuple(str(i) for i in range(psi.size))
        dt0, dt_max = _initial_step(cfg, span, max(float(np.abs(h_start).max()), 1.0))
        out, k, steps, rejected, status, t_reached = _evolve_callable(
            hamiltonian, psi, t0, t1, samples, cfg.tol, dt0, dt_max, cfg.max_steps, fixed
        )

    result = TimeSeriesResult(samples[:k], out[:k], labels, steps, rejected, status == _kernels.OK)
    log.debug("propagated %d steps (%d rejected) over [%g, %g]", steps, rejected, t0, t1)
    if status != _kernels.OK:
        raise PropagationError(
            f"step budget of {cfg.max_steps} exhausted at t = {t_reached:.6g} (window ends at {t1:.6g})",
            partial=result,
        )
    return result


def window_for(system: str, params: CouplingParams, sweep: SweepProtocol) -> tuple[float, float]:
    return sweep.window(model_hamiltonian(system, params, sweep).max_coupling())


def initial_state(system: str, label_or_state) -> QuantumState:
    labels = pair_labels(system)
    if isinstance(label_or_state, QuantumState):
        if label_or_state.labels != labels:
            raise ValueError("initial state basis does not match the system")
        return label_or_state
    if isinstance(label_or_state, str):
        return QuantumState.basis(label_or_state, labels)
    return QuantumState(label_or_state, labels)


def run_sweep(
    system: str,
    params: CouplingParams,
    sweep: SweepProtocol,
    psi0,
    cfg: PropagationConfig | None = None,
) -> TimeSeriesResult:
    """Full-space propagation of the model through one sweep window."""
    cfg = cfg or PropagationConfig()
    ham = model_hamiltonian(system, params, sweep)
    if cfg.t_start is None or cfg.t_end is None:
        cfg = cfg.with_window(*sweep.window(ham.max_coupling()))
    return propagate(ham, initial_state(system, psi0), cfg)


def _qubit_blocks(params: CouplingParams, sweep: SweepProtocol):
    rate = sweep.field_rate("qubits")
    sz = np.diag([1.0, -1.0]).astype(complex)
    labels = pair_labels("qubits")
    for block in decompose_qubit_blocks(params):
        idx = [labels.index(lab) for lab in BLOCK_LABELS[block.tag]]
        # omega_2 = 0, so Omega_plus = Omega_minus = omega_1
        yield idx, AffineHamiltonian(block.matrix(omega=0.0), rate * sz, BLOCK_LABELS[block.tag])


def _qutrit_blocks(params: CouplingParams, sweep: SweepProtocol):
    rate = sweep.field_rate("qutrits")
    d = decompose_qutrit_blocks(params)
    four0 = d.mapped_four_dim(0.0)
    four1 = d.mapped_four_dim(1.0) - four0
    yield indices(FOUR_BASIS), AffineHamiltonian(four0, rate * four1, FOUR_BASIS)
    full = model_hamiltonian("qutrits", params, sweep)
    idx5 = indices(FIVE_BASIS)
    yield idx5, full.restrict(idx5)


def propagate_blockwise(
    params: CouplingParams,
    sweep: SweepProtocol,
    psi0,
    cfg: PropagationConfig | None = None,
    system: str | None = None,
) -> TimeSeriesResult:
    """Propagate each invariant block on its own and reassemble the state.

    Qubit blocks use the effective two-level Hamiltonians; the qutrit 4-dim
    block uses the fictitious pair ``H1 x 1 + 1 x H2``.
    """
    cfg = cfg or PropagationConfig()
    if system is None:
        dim = psi0.dimension if isinstance(psi0, QuantumState) else np.asarray(psi0).size
        system = system_of_dimension(dim)
    state = initial_state(system, psi0)
    if cfg.t_start is None or cfg.t_end is None:
        cfg = cfg.with_window(*window_for(system, params, sweep))
    blocks = _qubit_blocks(params, sweep) if system == "qubits" else _qutrit_blocks(params, sweep)
    times = np.linspace(cfg.t_start, cfg.t_end, cfg.n_samples)
    states = np.zeros((times.size, state.dimension), dtype=complex)
    steps = rejected = 0
    for idx, ham in blocks:
        amps = state.amplitudes[idx]
        weight = float(np.vdot(amps, amps).real)
        if weight == 0.0:
            continue
        sub = propagate(ham, amps / math.sqrt(weight), cfg)
        states[:, idx] = math.sqrt(weight) * sub.states
        steps += sub.n_steps
        rejected += sub.n_rejected
    return TimeSeriesResult(times, states, state.labels, steps, rejected, True)


@dataclass(frozen=True)
class AsymptoticEstimate:
    """Tail-averaged populations with two convergence diagnostics.

    ``uncertainty`` is half the peak-to-peak spread over the tail. ``drift``
    is the change of the tail mean relative to the equally long segment just
    before it; a window that ends too close to the crossing still relaxes and
    shows up there even when the tail barely oscillates.
    """

    probabilities: dict
    uncertainty: dict
    drift: dict
    final: dict
    tail_fraction: float
    threshold: float
    drift_threshold: float

    @property
    def max_uncertainty(self) -> float:
        return max(self.uncertainty.values())

    @property
    def max_drift(self) -> float:
        return max(self.drift.values())

    @property
    def converged(self) -> bool:
        return self.max_uncertainty <= self.threshold and self.max_drift <= self.drift_threshold


def asymptotic_estimate(
    series: TimeSeriesResult,
    tail_fraction: float = DEFAULT_TAIL_FRACTION,
    threshold: float = DEFAULT_OSCILLATION_THRESHOLD,
    drift_threshold: float = DEFAULT_DRIFT_THRESHOLD,
) -> AsymptoticEstimate:
    """Average each population over the trailing ``tail_fraction`` of samples."""
    if len(series.times) == 0:
        raise ValueError("empty time series")
    if not 0.0 < tail_fraction <= 0.5:
        raise ValueError("tail_fraction must lie in (0, 1/2]")
    n = len(series.times)
    start = min(n - 1, int(math.floor(n * (1.0 - tail_fraction))))
    prev = max(0, start - (n - start))
    pops = series.populations
    tail = pops[start:]
    mean = tail.mean(axis=0)
    spread = 0.5 * (tail.max(axis=0) - tail.min(axis=0))
    before = pops[prev:start] if start > prev else tail
    drift = np.abs(mean - before.mean(axis=0))
    labels = series.labels

    def as_dict(values):
        return {lab: float(v) for lab, v in zip(labels, values)}

    return AsymptoticEstimate(
        as_dict(mean), as_dict(spread), as_dict(drift), as_dict(pops[-1]),
        tail_fraction, threshold, drift_threshold,
    )


def magnetization_series(series: TimeSeriesResult) -> np.ndarray:
    """Expectation of the total z-spin at each sample."""
    return series.magnetization
