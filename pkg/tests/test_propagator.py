import math
import os
import subprocess
import sys

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from lmsz_spin import _kernels
from lmsz_spin.operators import CouplingParams, QuantumState, pair_labels
from lmsz_spin.propagator import (
    AffineHamiltonian,
    PropagationConfig,
    PropagationError,
    TimeSeriesResult,
    asymptotic_estimate,
    magnetization_series,
    model_hamiltonian,
    propagate,
    propagate_blockwise,
    run_sweep,
    window_for,
)
from lmsz_spin.qubits import asymptotic_concurrence, lmsz_probability
from lmsz_spin.qutrits import FOUR_BASIS, asymptotic_x, fictitious_probabilities, negativity_from_x
from lmsz_spin.sweep import SweepProtocol, slope_for_lambda

LN2 = math.log(2.0)
CFG = PropagationConfig(tol=1e-8, n_samples=2001)
# PLUS block transverse field (0.3, 0.4): magnitude 0.5, MINUS block 1.1
PARAMS = CouplingParams(0.8, 0.5, 0.0, 0.2, 0.2)
PLUS_M = 0.5


def ln2_sweep(**kw):
    return SweepProtocol(slope_for_lambda(PLUS_M, LN2), **kw)


def rk_oracle(ham: AffineHamiltonian, psi0, t0, t1):
    """Independent fine-tolerance Runge-Kutta solution of i psi' = H(t) psi."""

    def rhs(t, y):
        psi = y[: y.size // 2] + 1j * y[y.size // 2:]
        d = -1j * ((ham.static + t * ham.ramp) @ psi)
        return np.concatenate([d.real, d.imag])

    y0 = np.concatenate([np.real(psi0), np.imag(psi0)])
    sol = solve_ivp(rhs, (t0, t1), y0, method="DOP853", rtol=1e-11, atol=1e-12)
    y = sol.y[:, -1]
    return y[: y.size // 2] + 1j * y[y.size // 2:]


def test_zero_hamiltonian_is_identity():
    zero = np.zeros((4, 4))
    ham = AffineHamiltonian(zero, zero, pair_labels("qubits"))
    psi0 = QuantumState([0.5, 0.5j, -0.5, 0.5], ham.labels)
    out = propagate(ham, psi0, PropagationConfig(n_samples=11).with_window(-3, 3))
    np.testing.assert_allclose(out.states, np.tile(psi0.amplitudes, (11, 1)), atol=1e-14)


def test_plus_block_half_transition_matches_rk_oracle():
    sweep = ln2_sweep()
    ham = model_hamiltonian("qubits", PARAMS, sweep)
    t0, t1 = window_for("qubits", PARAMS, sweep)
    # a shorter window keeps the reference Runge-Kutta run cheap
    ham2 = ham.restrict([pair_labels("qubits").index(lab) for lab in ("++", "--")])
    psi0 = np.array([0, 1], dtype=complex)
    ours = propagate(ham2, psi0, PropagationConfig(tol=1e-10, n_samples=2).with_window(t0 / 5, t1 / 5))
    ref = rk_oracle(ham2, psi0, t0 / 5, t1 / 5)
    assert abs(np.vdot(ref, ours.states[-1])) ** 2 == pytest.approx(1.0, abs=1e-8)
    # the full window lands on the closed form
    est = asymptotic_estimate(run_sweep("qubits", PARAMS, sweep, "--", CFG))
    assert est.converged
    assert est.probabilities["++"] == pytest.approx(0.5, abs=0.02)


def test_half_crossing_large_lambda():
    sweep = SweepProtocol(slope_for_lambda(PLUS_M, 12.0), mode="half")
    est = asymptotic_estimate(run_sweep("qubits", PARAMS, sweep, "--", PropagationConfig(tol=1e-7, n_samples=8001)))
    assert est.probabilities["++"] == pytest.approx(0.5, abs=0.02)


def test_literal_convention_halves_exponent():
    # omega_1 = alpha t doubles the diabatic gap slope of the qubit blocks
    alpha = ln2_sweep().alpha
    est = asymptotic_estimate(run_sweep("qubits", PARAMS, SweepProtocol(alpha, convention="literal"), "--", CFG))
    literal = 1.0 - math.exp(-math.pi * PLUS_M**2 / alpha)
    assert est.probabilities["++"] == pytest.approx(literal, abs=0.02)
    assert abs(est.probabilities["++"] - 0.5) > 0.1


def test_blockwise_confinement_qubits():
    out = propagate_blockwise(PARAMS, ln2_sweep(), "--", CFG, system="qubits")
    total = out.population("++") + out.population("--")
    np.testing.assert_allclose(total, 1.0, atol=1e-10)
    full = run_sweep("qubits", PARAMS, ln2_sweep(), "--", CFG)
    np.testing.assert_allclose(full.population("+-") + full.population("-+"), 0.0, atol=1e-20)


def test_blockwise_confinement_qutrits():
    p = CouplingParams(0.6, 0.2, 0.0, 0.15, -0.1)
    sweep = SweepProtocol(2.0, window_factor=10)
    full = run_sweep("qutrits", p, sweep, "-10", CFG)
    four = sum(full.population(lab) for lab in FOUR_BASIS)
    np.testing.assert_allclose(four, 1.0, atol=1e-10)


@pytest.mark.parametrize("system, params", [
    ("qubits", CouplingParams(0.7, -0.2, 0.3, 0.25, -0.4)),
    ("qutrits", CouplingParams(0.5, 0.1, 0.0, -0.3, 0.2)),
])
def test_blockwise_matches_full_on_superposition(system, params):
    rng = np.random.default_rng(7)
    dim = len(pair_labels(system))
    c = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    psi0 = QuantumState(c / np.linalg.norm(c), pair_labels(system))
    sweep = SweepProtocol(1.3, window_factor=8)
    cfg = PropagationConfig(tol=1e-10, n_samples=51)
    a = run_sweep(system, params, sweep, psi0, cfg)
    b = propagate_blockwise(params, sweep, psi0, cfg)
    fidelity = np.abs(np.einsum("ij,ij->i", a.states.conj(), b.states)) ** 2
    assert fidelity.min() >= 1 - 1e-8


def test_unitarity():
    p = CouplingParams(0.9, -0.3, 0.2, 0.4, 0.1)
    out = run_sweep("qubits", p, SweepProtocol(1.0), "++", CFG)
    assert out.norm_drift() < 1e-8
    rng = np.random.default_rng(1)
    for dim in (2, 4, 9):
        a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
        u = _kernels.expm_hermitian(a + a.conj().T, 0.37)
        assert abs(abs(np.linalg.det(u)) - 1.0) < 1e-10
        np.testing.assert_allclose(u @ u.conj().T, np.eye(dim), atol=1e-12)


def test_callable_path_matches_affine_kernel():
    sweep = ln2_sweep(window_factor=6)
    ham = model_hamiltonian("qubits", PARAMS, sweep)
    cfg = PropagationConfig(tol=1e-9, n_samples=21).with_window(*window_for("qubits", PARAMS, sweep))
    psi0 = QuantumState.basis("--", ham.labels)
    a = propagate(ham, psi0, cfg)
    b = propagate(lambda t: ham(t), psi0, cfg)
    np.testing.assert_allclose(a.states, b.states, atol=1e-12)
    assert a.n_steps == b.n_steps


def test_fixed_step_global_error_is_second_order():
    sweep = ln2_sweep(window_factor=10)
    ham = model_hamiltonian("qubits", PARAMS, sweep)
    t0, t1 = window_for("qubits", PARAMS, sweep)
    psi0 = QuantumState.basis("--", ham.labels)

    def final(n):
        cfg = PropagationConfig(n_samples=2, fixed_step=(t1 - t0) / n).with_window(t0, t1)
        return propagate(ham, psi0, cfg).states[-1]

    ref = final(32000)
    coarse, fine = (np.linalg.norm(final(n) - ref) for n in (1000, 2000))
    assert 3.0 <= coarse / fine <= 5.0


def test_step_exhaustion_carries_partial():
    cfg = PropagationConfig(tol=1e-10, n_samples=101, max_steps=50)
    with pytest.raises(PropagationError) as err:
        run_sweep("qubits", PARAMS, ln2_sweep(), "--", cfg)
    partial = err.value.partial
    assert isinstance(partial, TimeSeriesResult)
    assert not partial.completed
    assert 0 < len(partial.times) < 101


def test_non_hermitian_rejected():
    bad = np.array([[0, 1], [0, 0]], dtype=complex)
    cfg = PropagationConfig(n_samples=3).with_window(0, 1)
    with pytest.raises(PropagationError):
        propagate(AffineHamiltonian(bad, np.zeros((2, 2)), ("a", "b")), [1, 0], cfg)
    with pytest.raises(PropagationError):
        propagate(lambda t: t * bad, [1, 0], cfg)


def test_input_validation():
    cfg = PropagationConfig(n_samples=3).with_window(0, 1)
    ham = AffineHamiltonian(np.eye(2), np.zeros((2, 2)), ("a", "b"))
    with pytest.raises(ValueError):
        propagate(ham, [1, 1], cfg)
    with pytest.raises(ValueError):
        propagate(ham, [1, 0], PropagationConfig())
    with pytest.raises(ValueError):
        PropagationConfig(tol=0)


def test_estimate_of_constant_series():
    n = 101
    states = np.tile(np.sqrt([0.3, 0.7]).astype(complex), (n, 1))
    series = TimeSeriesResult(np.linspace(0, 1, n), states, ("a", "b"))
    est = asymptotic_estimate(series)
    assert est.probabilities["a"] == pytest.approx(0.3)
    assert est.max_uncertainty == pytest.approx(0.0, abs=1e-15)
    assert est.converged
    with pytest.raises(ValueError):
        asymptotic_estimate(TimeSeriesResult(np.empty(0), np.empty((0, 2)), ("a", "b")))
    with pytest.raises(ValueError):
        asymptotic_estimate(series, tail_fraction=0.8)


def test_small_window_flagged_unconverged():
    short = asymptotic_estimate(run_sweep("qubits", PARAMS, ln2_sweep(window_factor=2), "--", CFG))
    assert not short.converged
    wide = asymptotic_estimate(run_sweep("qubits", PARAMS, ln2_sweep(window_factor=50), "--", CFG))
    assert wide.converged


def test_magnetization_examples():
    still = run_sweep("qubits", CouplingParams(), SweepProtocol(1.0, half_width=5.0), "--", PropagationConfig(n_samples=21))
    np.testing.assert_allclose(magnetization_series(still), -2.0)
    # adiabatic: a very slow sweep drives -- to ++
    slow = SweepProtocol(slope_for_lambda(PLUS_M, 40.0))
    out = run_sweep("qubits", PARAMS, slow, "--", CFG)
    assert magnetization_series(out)[-1] == pytest.approx(2.0, abs=1e-3)
    half = run_sweep("qubits", PARAMS, ln2_sweep(), "--", CFG)
    m = magnetization_series(half)
    assert m[-200:].mean() == pytest.approx(0.0, abs=0.08)
    np.testing.assert_allclose(m, half.populations @ np.array([2.0, 0.0, 0.0, -2.0]), atol=1e-14)


def test_final_concurrence_matches_closed_form():
    est_series = run_sweep("qubits", PARAMS, SweepProtocol(slope_for_lambda(PLUS_M, 1.2)), "--", CFG)
    p = asymptotic_estimate(est_series).probabilities["++"]
    tail = est_series.entanglement[-200:].mean()
    assert tail == pytest.approx(asymptotic_concurrence(p), abs=0.03)


def test_final_negativity_matches_closed_form():
    p = CouplingParams(0.7, 0.2, 0.0, 0.1, 0.05)
    alpha = 3.0
    out = run_sweep("qutrits", p, SweepProtocol(alpha), "-10", CFG)
    p1, p2 = fictitious_probabilities(p, alpha)
    target = negativity_from_x(asymptotic_x(p1, p2))
    assert out.entanglement[-200:].mean() == pytest.approx(target, abs=0.03)
    assert out.entanglement_name == "negativity"


def test_lmsz_window_estimate_close_to_closed_form():
    p = CouplingParams(0.4, 0.1, 0.0, -0.2, 0.3)
    alpha = 1.1
    est = asymptotic_estimate(run_sweep("qubits", p, SweepProtocol(alpha), "+-", CFG))
    # MINUS block: gamma_minus = 0.5, Gamma_minus = 0.5
    assert est.probabilities["-+"] == pytest.approx(lmsz_probability(math.hypot(0.5, 0.5), alpha), abs=0.02)


def test_propagation_is_deterministic():
    a = run_sweep("qubits", PARAMS, ln2_sweep(window_factor=5), "--", CFG)
    b = run_sweep("qubits", PARAMS, ln2_sweep(window_factor=5), "--", CFG)
    assert np.array_equal(a.states, b.states)


def test_pure_numpy_fallback_agrees():
    code = (
        "import numpy as np, math\n"
        "from lmsz_spin import _jit\n"
        "from lmsz_spin.operators import CouplingParams\n"
        "from lmsz_spin.propagator import PropagationConfig, run_sweep\n"
        "from lmsz_spin.sweep import SweepProtocol\n"
        "out = run_sweep('qubits', CouplingParams(0.8, 0.5, 0.0, 0.2, 0.2), SweepProtocol(2.0, window_factor=5),"
        " '--', PropagationConfig(tol=1e-8, n_samples=5))\n"
        "print(int(_jit.USE_NUMBA), ' '.join(repr(float(v)) for v in out.populations[-1]))\n"
    )
    env = dict(os.environ, LMSZ_SPIN_NO_NUMBA="1")
    res = subprocess.run([sys.executable, "-c", code], capture_output=True, text=True, env=env, check=True)
    flag, *vals = res.stdout.split()
    assert flag == "0"
    ours = run_sweep("qubits", PARAMS, SweepProtocol(2.0, window_factor=5), "--",
                     PropagationConfig(tol=1e-8, n_samples=5))
    np.testing.assert_allclose([float(v) for v in vals], ours.populations[-1], atol=1e-12)
