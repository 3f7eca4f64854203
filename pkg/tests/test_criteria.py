import json

import numpy as np
import pytest
from hypothesis import given, settings

from jcbound.criteria import (
    Verdict,
    ccnr_norm,
    ccnr_norm_dense,
    ccnr_singular_values_arrays,
    ccnr_singular_values_dense,
    cm_corollary,
    cm_dense,
    gerjuoy_bound,
    negativity,
    negativity_dense,
    realign,
    reduced_states,
    report,
)
from jcbound.harness import tau_state
from jcbound.state import (
    InvalidStateError,
    SymmetricState,
    bell_state,
    gauge_fix,
    partial_transpose,
    to_dense,
)

from conftest import random_state, symmetric_states


def _bell():
    return SymmetricState([0.0, 0.5], [0.5, 0.0], [0.5])


def test_negativity_examples():
    assert negativity(_bell()) == 1.0
    s = SymmetricState([0.05, 0.45], [0.45, 0.05], [0.14])
    assert negativity(s) == pytest.approx(0.18, abs=1e-12)
    assert negativity_dense(to_dense(s)) == pytest.approx(0.18, abs=1e-12)


def test_negativity_vanishes_below_threshold(rng):
    for _ in range(50):
        N = rng.integers(2, 7)
        a, b = rng.random(N), rng.random(N)
        lim = np.sqrt(np.minimum(a[1:] * b[:-1], a[:-1] * b[1:]))
        s = SymmetricState(a, b, lim * rng.random(N - 1))
        assert negativity(s) == 0.0


def test_gerjuoy_examples():
    assert gerjuoy_bound(_bell()) == pytest.approx(1.0)
    s = SymmetricState([0.05, 0.45], [0.45, 0.05], [0.14])
    assert gerjuoy_bound(s) == pytest.approx(0.18, abs=1e-12)
    assert gerjuoy_bound(SymmetricState([0.3, 0.2], [0.2, 0.3], [0.1])) == 0.0


def test_invalid_state_is_rejected():
    with pytest.raises(InvalidStateError):
        negativity(SymmetricState([0.2, 0.3], [0.1, 0.4], [0.2]))


def test_ccnr_bell():
    res = ccnr_norm(_bell())
    np.testing.assert_allclose(res.singular_values, [0.5] * 4, atol=1e-15)
    assert res.norm == pytest.approx(2.0, abs=1e-12)
    np.testing.assert_allclose(ccnr_singular_values_dense(to_dense(_bell()))[:4], [0.5] * 4, atol=1e-12)
    assert ccnr_norm_dense(to_dense(_bell())) == pytest.approx(2.0, abs=1e-12)


def test_ccnr_maximally_mixed_product():
    # |a|^2 = |b|^2 = a.b = 1/8 gives x+ = 1/2, x- = 0
    s = SymmetricState([0.25, 0.25], [0.25, 0.25], [0.0])
    res = ccnr_norm(s)
    np.testing.assert_allclose(res.singular_values, [0.5, 0, 0, 0], atol=1e-15)
    assert ccnr_norm_dense(to_dense(s)) == pytest.approx(0.5, abs=1e-14)


def test_ccnr_product_states_do_not_detect(rng):
    for _ in range(100):
        N = rng.integers(2, 7)
        pa = rng.dirichlet(np.ones(2))
        pb = rng.dirichlet(np.ones(N))
        s = SymmetricState(pa[0] * pb, pa[1] * pb, np.zeros(N - 1))
        assert ccnr_norm(s).norm <= 1 + 1e-12
        assert not ccnr_norm(s).detects


def test_realign_examples():
    ra = np.diag([0.3, 0.7])
    rb = np.diag([0.2, 0.5, 0.3])
    r = realign(np.kron(ra, rb))
    assert np.linalg.matrix_rank(r) == 1
    np.testing.assert_allclose(r, np.outer(ra.ravel(), rb.ravel()))
    assert np.sum(np.linalg.svd(realign(to_dense(_bell())), compute_uv=False)) == pytest.approx(2.0)


def test_reduced_states_are_partial_traces(rng):
    s = random_state(rng, 4)
    d = to_dense(s)
    ra, rb = reduced_states(d)
    ref_a = np.array([[np.trace(d[i * 4 : (i + 1) * 4, j * 4 : (j + 1) * 4]) for j in range(2)] for i in range(2)])
    np.testing.assert_allclose(ra, ref_a, atol=1e-15)
    np.testing.assert_allclose(rb, d[:4, :4] + d[4:, 4:], atol=1e-15)


def test_cm_product_state_and_bell():
    pa = np.array([0.4, 0.6])
    pb = np.array([0.1, 0.2, 0.7])
    cm = cm_corollary(SymmetricState(pa[0] * pb, pa[1] * pb, np.zeros(2)))
    assert cm.lhs == pytest.approx(0.0, abs=1e-15)
    assert not cm.violated

    cm = cm_corollary(_bell())
    lhs, rhs = cm_dense(to_dense(_bell()))
    assert cm.lhs == pytest.approx(float(lhs), abs=1e-12)
    assert cm.rhs == pytest.approx(float(rhs), abs=1e-12)
    assert cm.violated


def test_cm_normalizes_internally(rng):
    s = random_state(rng, 5, normalized=False)
    cm = cm_corollary(s)
    ref = cm_corollary(s.normalized())
    assert cm.trace == pytest.approx(3.0)
    assert (cm.lhs, cm.rhs) == pytest.approx((ref.lhs, ref.rhs), abs=1e-15)


def test_cm_never_violated_on_coarse_family_grid():
    for y2 in np.arange(0.5, 10, 1.0):
        for y3 in np.arange(y2 + 0.25, 10.01, 1.0):
            assert not cm_corollary(tau_state([y2, y2, y3])).violated


@settings(max_examples=150, deadline=None)
@given(symmetric_states(max_n=8))
def test_closed_forms_match_dense_oracles(s):
    d = to_dense(s)
    assert negativity(s) == pytest.approx(float(negativity_dense(d)), abs=1e-10)
    sv = ccnr_singular_values_arrays(s.a, s.b, s.c)
    dense_sv = ccnr_singular_values_dense(d)
    np.testing.assert_allclose(sv, dense_sv[:4], atol=1e-10)
    np.testing.assert_allclose(dense_sv[4:], 0.0, atol=1e-10)
    cm = cm_corollary(s)
    lhs, rhs = cm_dense(d)
    assert cm.lhs == pytest.approx(float(lhs), abs=1e-10)
    assert cm.rhs == pytest.approx(float(rhs), abs=1e-10)


@settings(max_examples=150, deadline=None)
@given(symmetric_states(max_n=8))
def test_gerjuoy_and_negativity_detect_the_same_states(s):
    # exact in sign; a shared absolute threshold is not scale-free (one side is
    # linear in |c|, the other quadratic), so compare signs away from rounding
    gap = np.abs(np.abs(s.c) ** 2 - s.a[:-1] * s.b[1:])
    if gap.size and gap.min() < 1e-13:
        return
    assert (gerjuoy_bound(s) > 0) == (negativity(s) > 0)


def test_fixed_threshold_can_split_detection():
    s = SymmetricState([0.0, 2e-16], [1.0, 1.0], [1.4e-8])
    assert gerjuoy_bound(s) > 1e-10
    assert 0 < negativity(s) < 1e-10


@settings(max_examples=80, deadline=None)
@given(symmetric_states())
def test_local_unitary_invariance(s):
    fixed, _ = gauge_fix(s)
    r0, r1 = report(s), report(fixed)
    for k in ("negativity", "gerjuoy", "ccnr_norm", "cm_lhs", "cm_rhs"):
        assert getattr(r0, k) == pytest.approx(getattr(r1, k), abs=1e-12)


def test_four_nonzero_singular_values_unless_degenerate(rng):
    s = random_state(rng, 5)
    assert np.sum(ccnr_singular_values_dense(to_dense(s)) > 1e-12) == 4
    # a parallel to b kills x-; c = 0 kills the pair
    a = np.array([0.1, 0.2, 0.3])
    s = SymmetricState(a, 2 * a, [0.05, 0.0])
    assert np.sum(ccnr_singular_values_dense(to_dense(s)) > 1e-12) == 3
    s = SymmetricState([0.1, 0.2, 0.3], [0.3, 0.05, 0.05], [0.0, 0.0])
    assert np.sum(ccnr_singular_values_dense(to_dense(s)) > 1e-12) == 2


def test_ppt_states_never_exceed_ccnr(rng):
    for _ in range(2000):
        s = random_state(rng, int(rng.integers(2, 6)))
        if negativity(s) == 0:
            assert ccnr_norm(s).norm <= 1 + 1e-10


def test_report_verdicts():
    rep = report(bell_state(3, 2))
    assert rep.verdict is Verdict.NPT_ENTANGLED and rep.negativity == 1.0
    rep = report(SymmetricState([0.2, 0.2, 0.1], [0.1, 0.3, 0.1], [0.05, 0.1]))
    assert rep.negativity == 0 and rep.verdict is Verdict.SEPARABLE_PROVEN
    rep = report(tau_state([0.5, 0.5, 0.9]))
    assert rep.verdict is Verdict.PPT_UNDETECTED
    assert rep.ccnr_norm <= 1 and not rep.cm_violated


def test_report_serializes():
    obj = json.loads(json.dumps(report(_bell()).to_dict()))
    assert obj["verdict"] == "NPT_ENTANGLED"
    assert len(obj["ccnr_singular_values"]) == 4


def test_pt_spectrum_oracle_for_bell():
    ev = np.linalg.eigvalsh(partial_transpose(to_dense(_bell())))
    assert 2 * -ev.min() == pytest.approx(negativity(_bell()))
