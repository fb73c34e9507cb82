import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lmsz_spin.operators import (
    CouplingParams,
    build_qutrit_hamiltonian,
    commutator_norm,
    total_sz_operator,
)
from lmsz_spin.qubits import ScenarioKind
from lmsz_spin.qutrits import (
    FIVE_BASIS,
    FOUR_BASIS,
    MAPPING_LABELS,
    THREE_LEVEL_BASIS,
    asymptotic_x,
    decompose_qutrit_blocks,
    embed_four_dim,
    exchange_family,
    fictitious_probabilities,
    four_dim_final_probs,
    four_dim_transition_probs,
    indices,
    negativity_from_x,
    negativity_general,
    negativity_pure_4d,
    partial_transpose,
    pure_negativity,
    qutrit_scenario_pair,
    qutrit_scenario_params,
    reorder_to_blocks,
    three_level_probs,
    three_level_reduction,
)
from lmsz_spin.scan import locate_maxima

LN2 = math.log(2.0)
finite = st.floats(-2.0, 2.0, allow_nan=False)
qutrit_couplings = st.builds(CouplingParams, finite, finite, st.just(0.0), finite, finite)
prob = st.floats(0.0, 1.0)


def lz(m2, alpha):
    return 1.0 - math.exp(-2.0 * math.pi * m2 / alpha)


def random_amplitudes(rng, n):
    c = rng.normal(size=n) + 1j * rng.normal(size=n)
    return c / np.linalg.norm(c)


def test_fictitious_fields_example():
    d = decompose_qutrit_blocks(CouplingParams(1.0, 0.4, 0.0, 0.2, -0.2))
    assert (d.h1.x, d.h1.y) == pytest.approx((0.6, 0.0))
    assert (d.h2.x, d.h2.y) == pytest.approx((1.4, -0.4))


def test_zero_couplings_no_fictitious_field():
    d = decompose_qutrit_blocks(CouplingParams())
    assert d.h1.magnitude == 0 and d.h2.magnitude == 0


@settings(max_examples=60, deadline=None)
@given(qutrit_couplings, finite)
def test_k_blocks_decouple(p, w):
    h = reorder_to_blocks(build_qutrit_hamiltonian(p, w).matrix)
    assert np.max(np.abs(h[:4, 4:])) < 1e-12
    assert np.max(np.abs(h[4:, :4])) < 1e-12


@settings(max_examples=60, deadline=None)
@given(qutrit_couplings, finite)
def test_mapping_reproduces_four_dim_block(p, w):
    # the 4-dim block in FOUR_BASIS order equals H1 x 1 + 1 x H2 in (++, +-, -+, --)
    d = decompose_qutrit_blocks(p)
    assert [MAPPING_LABELS[lab] for lab in FOUR_BASIS] == ["++", "+-", "-+", "--"]
    idx = indices(FOUR_BASIS)
    block = build_qutrit_hamiltonian(p, w).matrix[np.ix_(idx, idx)]
    np.testing.assert_allclose(block, d.mapped_four_dim(w), atol=1e-12)


def test_fictitious_probabilities_cases():
    # exchange only
    p1, p2 = fictitious_probabilities(CouplingParams(0.9, 0.3), 1.3)
    assert p1 == pytest.approx(lz(0.6**2, 1.3), abs=1e-14)
    assert p2 == pytest.approx(lz(1.2**2, 1.3), abs=1e-14)
    # isotropic exchange alone leaves qubit 1 frozen
    assert fictitious_probabilities(CouplingParams(0.4, 0.4), 1.0)[0] == 0
    g, G, a = 0.8, 0.5, 2.0
    dd = qutrit_scenario_params(ScenarioKind.ISO_EXCHANGE_DD, g, G)
    assert fictitious_probabilities(dd, a) == pytest.approx((lz(G * G, a), lz(g * g, a)), abs=1e-14)


@pytest.mark.parametrize("kind", [k for k in ScenarioKind if k is not ScenarioKind.ISO_EXCHANGE_DM_AS_WRITTEN],
                         ids=lambda k: k.value)
def test_qutrit_scenario_pair_matches_realization(kind):
    kw = {}
    if not kind.isotropic and kind is not ScenarioKind.EXCHANGE_ONLY:
        kw["gamma_y"] = 0.25
    for g, G, a in ((0.3, 0.0, 1.0), (0.7, 0.45, 2.2), (1.1, 0.9, 0.6)):
        closed = qutrit_scenario_pair(kind, g, G, a, **kw)
        realized = fictitious_probabilities(qutrit_scenario_params(kind, g, G, **kw), a)
        assert closed == pytest.approx(realized, abs=1e-14)


def test_dm_pair_and_gamma_zero_limit():
    g, G, a = 0.6, 0.4, 1.5
    assert qutrit_scenario_pair(ScenarioKind.ISO_EXCHANGE_DM, g, G, a) == pytest.approx((0.0, lz(g * g + G * G, a)))
    assert qutrit_scenario_pair(ScenarioKind.ISO_EXCHANGE_DD, g, 0.0, a) == \
        pytest.approx(qutrit_scenario_pair(ScenarioKind.EXCHANGE_ONLY, g, 0.0, a))


def test_as_written_dm_variant_is_not_its_realization():
    # the printed equality gamma_xy = gamma_yx is a d-d term, so P1 != 0 there
    g, G, a = 0.6, 0.4, 1.5
    printed = qutrit_scenario_pair(ScenarioKind.ISO_EXCHANGE_DM_AS_WRITTEN, g, G, a)
    realized = fictitious_probabilities(qutrit_scenario_params(ScenarioKind.ISO_EXCHANGE_DM_AS_WRITTEN, g, G), a)
    assert printed[0] == 0 and realized[0] == pytest.approx(lz(G * G, a))


def test_four_dim_transition_examples():
    assert four_dim_transition_probs(0.0, 0.3) == pytest.approx((0, 0, 0.3, 0.7))
    assert four_dim_transition_probs(0.0, 0.0) == (0, 0, 0, 1)
    assert four_dim_transition_probs(0.5, 0.5) == pytest.approx((0.25,) * 4)
    with pytest.raises(ValueError):
        four_dim_transition_probs(1.2, 0.0)


@given(prob, prob)
def test_four_dim_closure(p1, p2):
    assert sum(four_dim_transition_probs(p1, p2)) == pytest.approx(1.0, abs=1e-15)
    for start in FOUR_BASIS:
        assert sum(four_dim_final_probs(p1, p2, start).values()) == pytest.approx(1.0, abs=1e-15)


def test_four_dim_final_probs_from_bottom_matches_transitions():
    out = four_dim_final_probs(0.3, 0.8, "-10")
    assert (out["10"], out["01"], out["0-1"], out["-10"]) == pytest.approx(four_dim_transition_probs(0.3, 0.8))
    with pytest.raises(ValueError):
        four_dim_final_probs(0.3, 0.8, "00")


def test_three_level_reduction_example():
    red = three_level_reduction(CouplingParams(0.5, 0.5, 0.0, 0.25, -0.25))
    assert (red.gamma_tilde, red.Gamma_tilde) == pytest.approx((1.0, 0.5))
    with pytest.raises(ValueError):
        three_level_reduction(CouplingParams(0.5, 0.4))
    with pytest.raises(ValueError):
        three_level_reduction(CouplingParams(0.5, 0.5, 0.0, 0.25, 0.25))


@settings(max_examples=40, deadline=None)
@given(st.floats(-1.5, 1.5), st.floats(-1.5, 1.5), finite)
def test_three_level_block_splits_off(g, G, w):
    p = CouplingParams(g / 2, g / 2, 0.0, G / 2, -G / 2)
    h = build_qutrit_hamiltonian(p, w).matrix
    five = indices(FIVE_BASIS)
    three = indices(THREE_LEVEL_BASIS)
    rest = np.setdiff1d(five, three)
    assert np.max(np.abs(h[np.ix_(three, rest)])) < 1e-12
    np.testing.assert_allclose(h[np.ix_(three, three)], three_level_reduction(p).matrix(w), atol=1e-12)
    # total Sz is conserved, so the 4-dim block also splits into {10, 01} and {0-1, -10}
    assert commutator_norm(build_qutrit_hamiltonian(p, w), total_sz_operator("qutrits")) < 1e-12
    idx = indices(FOUR_BASIS)
    block = h[np.ix_(idx, idx)]
    assert np.max(np.abs(block[:2, 2:])) < 1e-12


def test_three_level_probs():
    assert three_level_probs(1.0) == (1.0, 0.0, 0.0)
    assert three_level_probs(0.5) == pytest.approx((0.25, 0.5, 0.25))


@given(prob)
def test_three_level_closure(p):
    assert sum(three_level_probs(p)) == pytest.approx(1.0, abs=1e-15)


def test_negativity_product_and_bell():
    prod = np.kron([0.6, 0.8j, 0], [0, 1, 0])
    assert negativity_general(np.outer(prod, prod.conj())) == pytest.approx(0.0, abs=1e-12)
    s = 1 / math.sqrt(2)
    bell = np.array([s, 0, 0, s])
    rho = np.outer(bell, bell)
    # direct eigenvalues of the 4x4 partial transpose: (1/2, 1/2, 1/2, -1/2)
    pt = np.array([[0.5, 0, 0, 0], [0, 0, 0.5, 0], [0, 0.5, 0, 0], [0, 0, 0, 0.5]])
    np.testing.assert_allclose(partial_transpose(rho, (2, 2)), pt)
    assert negativity_general(rho, dims=(2, 2)) == pytest.approx(0.5, abs=1e-12)


def test_negativity_general_validation():
    with pytest.raises(ValueError):
        negativity_general(np.eye(9))
    with pytest.raises(ValueError):
        negativity_general(np.eye(4) / 4)
    bad = np.diag([1.5, -0.5, 0, 0, 0, 0, 0, 0, 0])
    with pytest.raises(ValueError):
        negativity_general(bad)


def test_negativity_pure_4d_examples():
    s = 1 / math.sqrt(2)
    assert negativity_pure_4d(s, 0, 0, s) == 0
    assert negativity_pure_4d(s, s, 0, 0) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        negativity_pure_4d(1, 1, 0, 0)


def test_negativity_from_x_examples():
    assert negativity_from_x(0.5) == 0.5
    assert negativity_from_x(0.0) == 0
    assert negativity_from_x(0.2) == pytest.approx(0.4)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_negativity_formulas_agree_on_four_dim_states(seed):
    c = random_amplitudes(np.random.default_rng(seed), 4)
    full = embed_four_dim(c)
    rho = np.outer(full, full.conj())
    n4 = negativity_pure_4d(*c)
    assert n4 <= 0.5 + 1e-15
    assert negativity_general(rho) == pytest.approx(n4, abs=1e-10)
    assert negativity_general(rho, subsystem=0) == pytest.approx(n4, abs=1e-10)
    assert float(pure_negativity(full)) == pytest.approx(n4, abs=1e-10)


def test_asymptotic_x_examples():
    assert asymptotic_x(1, 1) == 1 and negativity_from_x(asymptotic_x(1, 1)) == 0
    assert asymptotic_x(0.5, 0.5) == 0.5


def test_exchange_family_maxima_in_lambda():
    p = exchange_family(0.5)
    assert p.gamma_tilde_plus == pytest.approx(1.0)
    assert p.gamma_tilde_minus**2 == pytest.approx(0.5)

    def negativity(lam):
        # lam = gamma_tilde_plus**2 / alpha
        p1, p2 = fictitious_probabilities(p, 1.0 / lam)
        return negativity_from_x(asymptotic_x(p1, p2))

    peaks = locate_maxima(negativity, 0.02, 0.6)
    assert [m.location for m in peaks] == pytest.approx([LN2 / (2 * math.pi), LN2 / math.pi], abs=1e-6)
    assert [m.value for m in peaks] == pytest.approx([0.5, 0.5], abs=1e-9)
    assert peaks[0].location == pytest.approx(0.11, abs=0.005)
    assert peaks[1].location == pytest.approx(0.22, abs=0.005)
