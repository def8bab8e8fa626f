from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coopsgd.bounds import (
    BoundError,
    BoundInputs,
    InfeasibleError,
    bound_asymptotic,
    bound_finite,
    bound_report,
    check_seed_mean,
    check_trace,
    effective_lr,
    inputs_for,
    lr_feasible,
)
from coopsgd.objectives import LogisticObjective, LogisticSyntheticSpec, QuadraticObjective, QuadraticSpec
from coopsgd.simulator import SimConfig, run
from coopsgd.topology import build_complete, build_ring


def inputs(**kw):
    base = dict(L=1.0, sigma2=1.0, m=1, zeta=0.0, tau=1, v=0, N=4, alpha=0.1, F_u1=0.0, F_inf=0.0, K=100)
    base.update(kw)
    return BoundInputs(**base)


# -- effective learning rate ---------------------------------------------------


def test_effective_lr():
    assert effective_lr(0.1, 3, 0) == 0.1
    assert effective_lr(0.1, 2, 2) == pytest.approx(0.05, abs=1e-15)
    assert effective_lr(0.0, 5, 3) == 0.0
    with pytest.raises(BoundError):
        effective_lr(0.1, 0, 1)


# -- learning-rate condition ---------------------------------------------------


def test_lr_spot_values():
    ok, lhs = lr_feasible(inputs(alpha=0.1))
    assert ok and abs(lhs - 0.15) <= 1e-12
    ok, lhs = lr_feasible(inputs(alpha=1.0))
    assert not ok and lhs == pytest.approx(6.0, abs=1e-12)
    ok, lhs = lr_feasible(inputs(alpha=0.0))
    assert ok and lhs == 0.0


def test_lr_hand_evaluation_general():
    # L=2, zeta=1/2, tau=3, N=4, v=2, alpha=0.05: alpha_e = 1/30, c = 3/2
    ae = Fraction(1, 30)
    expected = ae * 2 + 5 * ae**2 * 4 * (Fraction(3, 2) * 3 / Fraction(1, 2)) ** 2
    _, lhs = lr_feasible(inputs(L=2.0, zeta=0.5, tau=3, v=2, alpha=0.05))
    assert lhs == pytest.approx(float(expected), rel=1e-12)


def test_zeta_one_rejected():
    with pytest.raises(BoundError):
        inputs(zeta=1.0)


def test_inputs_validation():
    with pytest.raises(BoundError):
        inputs(F_u1=-1.0)
    with pytest.raises(BoundError):
        inputs(alpha=-0.1)
    with pytest.raises(BoundError):
        inputs(m=0)


@settings(max_examples=200, deadline=None)
@given(
    st.floats(0.01, 2), st.floats(0.0, 0.9), st.integers(1, 8), st.integers(0, 8),
    st.integers(1, 8), st.floats(1e-4, 1.0),
)
def test_lr_lhs_strictly_increasing(L, zeta, tau, v, N, alpha):
    base = inputs(L=L, zeta=zeta, tau=tau, v=v, N=N, alpha=alpha)
    lhs = lr_feasible(base)[1]
    assert lr_feasible(inputs(L=L, zeta=zeta, tau=tau + 1, v=v, N=N, alpha=alpha))[1] > lhs
    assert lr_feasible(inputs(L=L, zeta=zeta + 0.05, tau=tau, v=v, N=N, alpha=alpha))[1] > lhs
    # v enters through c = 1 + v / N at fixed alpha_e, i.e. alpha = alpha_e (N + v) / N
    ae = base.alpha_e
    more_v = inputs(L=L, zeta=zeta, tau=tau, v=v + 1, N=N, alpha=ae * (N + v + 1) / N)
    assert more_v.alpha_e == pytest.approx(ae, rel=1e-14)
    assert lr_feasible(more_v)[1] > lhs
    assert lr_feasible(inputs(L=L, zeta=zeta, tau=tau, v=v, N=N, alpha=alpha * 1.1))[1] > lhs


def test_lr_lhs_decreases_in_v_at_fixed_raw_alpha():
    # alpha_e * c == alpha, so only the alpha_e L term moves, and it shrinks
    lhs = [lr_feasible(inputs(v=v, N=4, alpha=0.05, tau=2, zeta=0.3))[1] for v in range(6)]
    assert all(b < a for a, b in zip(lhs, lhs[1:]))
    quad = [x - inputs(v=v, N=4, alpha=0.05).alpha_e for v, x in enumerate(lhs)]
    np.testing.assert_allclose(quad, quad[0], rtol=1e-12)


# -- bound values ----------------------------------------------------------------


def test_asymptotic_spot_values():
    assert bound_asymptotic(inputs(sigma2=0.0, zeta=0.7, tau=5, v=3)) == 0.0
    assert abs(bound_asymptotic(inputs()) - 0.1) <= 1e-12
    expected = Fraction(1, 10) + Fraction(1, 100) * (Fraction(5, 4) / Fraction(3, 4) * 2 - 1)
    assert abs(bound_asymptotic(inputs(zeta=0.5, tau=2)) - float(expected)) <= 1e-12
    assert float(expected) == pytest.approx(0.12333, abs=1e-5)


def test_asymptotic_tau1_zeta0_is_first_term():
    for ae_inputs in (inputs(alpha=0.3, m=4, sigma2=2.0, L=0.5), inputs(alpha=0.01, m=1, sigma2=7.0)):
        ae = ae_inputs.alpha_e
        assert bound_asymptotic(ae_inputs) == pytest.approx(ae * ae_inputs.L * ae_inputs.sigma2 / ae_inputs.m, rel=1e-15)


def test_finite_equals_asymptotic_at_zero_gap():
    x = inputs(zeta=0.3, tau=3, v=2, F_u1=1.5, F_inf=1.5)
    assert bound_finite(x) == bound_asymptotic(x)


def test_finite_large_K_limit():
    x = inputs(F_u1=1.0, F_inf=0.0, K=10**9, alpha=0.1)
    assert abs(bound_finite(x) - bound_asymptotic(x)) <= 1e-6
    assert bound_finite(x) - bound_asymptotic(x) == pytest.approx(2e-8, rel=1e-12)


def test_literal_v_factor():
    x = inputs(F_u1=2.0, v=0)
    assert bound_finite(x, literal_v_factor=True) == bound_asymptotic(x)
    y = inputs(F_u1=2.0, v=3, N=3, K=50)
    gap = bound_finite(y) - bound_asymptotic(y)
    assert bound_finite(y, literal_v_factor=True) - bound_asymptotic(y) == pytest.approx(3 * gap, rel=1e-12)


def test_finite_rejects_zero_K_and_alpha():
    with pytest.raises(BoundError):
        bound_finite(inputs(K=0))
    with pytest.raises(BoundError):
        bound_finite(inputs(alpha=0.0))


@settings(max_examples=150, deadline=None)
@given(
    st.floats(0.05, 2), st.floats(0.0, 10), st.integers(1, 16), st.floats(0.0, 0.95),
    st.integers(1, 8), st.integers(0, 6), st.integers(1, 10), st.floats(1e-3, 1.0), st.floats(1e-3, 10.0),
)
def test_bound_properties(L, sigma2, m, zeta, tau, v, N, alpha, gap):
    x = inputs(L=L, sigma2=sigma2, m=m, zeta=zeta, tau=tau, v=v, N=N, alpha=alpha, F_u1=gap, K=100)
    asym = bound_asymptotic(x)
    assert asym >= 0
    assert bound_finite(x) >= asym
    # nondecreasing in tau and zeta
    assert bound_asymptotic(inputs(**{**x.to_dict(), "tau": tau + 1})) >= asym
    assert bound_asymptotic(inputs(**{**x.to_dict(), "zeta": min(zeta + 0.02, 0.99)})) >= asym
    # decreasing in K when there is an optimality gap
    assert bound_finite(inputs(**{**x.to_dict(), "K": 200})) < bound_finite(x)
    # linear in sigma2
    x3 = inputs(**{**x.to_dict(), "sigma2": 3 * sigma2})
    assert bound_asymptotic(x3) == pytest.approx(3 * asym, rel=1e-12, abs=1e-300)
    gap_term = bound_finite(x) - asym
    assert bound_finite(x3) == pytest.approx(gap_term + 3 * asym, rel=1e-12)


def test_report_fields():
    r = bound_report(inputs(F_u1=1.0, v=2, alpha=0.1, K=10))
    assert r.alpha_e == pytest.approx(0.1 * 4 / 6)
    assert r.feasible
    assert r.finite_bound > r.asymptotic_bound
    assert r.finite_bound_literal == pytest.approx(
        r.asymptotic_bound + 2 * (r.finite_bound - r.asymptotic_bound), rel=1e-12
    )
    d = r.to_dict()
    assert d["inputs"]["K"] == 10


# -- trace checks ----------------------------------------------------------------


@pytest.fixture
def noiseless_at_optimum():
    obj = QuadraticObjective(QuadraticSpec((1.0, 2.0), (1.0, 2.0), 0.0))
    c = SimConfig(N=2, tau=1, alpha=0.1, K=20, dim=2, u1=(1.0, 1.0))
    return c, obj, build_complete(2)


def test_check_trace_noiseless(noiseless_at_optimum):
    c, obj, W = noiseless_at_optimum
    report = bound_report(inputs_for(c, obj, W))
    verdict = check_trace(run(c, obj, W), report)
    assert verdict.summary == 0.0 and verdict.satisfied
    assert verdict.ratio == 0.0


def test_check_trace_refuses_infeasible(noiseless_at_optimum):
    c, obj, W = noiseless_at_optimum
    bad = SimConfig(N=2, tau=1, alpha=5.0, K=20, dim=2, u1=(1.0, 1.0))
    report = bound_report(inputs_for(bad, obj, W))
    assert not report.feasible
    with pytest.raises(InfeasibleError):
        check_trace(run(c, obj, W), report)


def test_check_trace_mismatch(noiseless_at_optimum):
    c, obj, W = noiseless_at_optimum
    tr = run(c, obj, W)
    other = SimConfig(N=2, tau=1, alpha=0.1, K=40, dim=2, u1=(1.0, 1.0))
    with pytest.raises(BoundError, match="K = 40"):
        check_trace(tr, bound_report(inputs_for(other, obj, W)))
    wider = SimConfig(N=2, v=1, tau=1, alpha=0.1, K=20, dim=2, u1=(1.0, 1.0))
    with pytest.raises(BoundError, match=r"\(N, v\)"):
        check_trace(tr, bound_report(inputs_for(wider, obj, build_complete(3))))


def test_inputs_for_refuses_unknown_omega():
    obj = LogisticObjective(LogisticSyntheticSpec(sample_count=50, dim=3, seed=1), sigma2_draws=200)
    c = SimConfig(N=2, tau=1, alpha=0.1, K=4, dim=3)
    with pytest.raises(BoundError, match="omega"):
        inputs_for(c, obj, build_complete(2))
    x = inputs_for(c, obj, build_complete(2), assume_omega_zero=True)
    assert x.sigma2 == obj.sigma2


def test_seed_mean(quad10):
    W = build_ring(4)
    traces = [run(SimConfig(N=4, tau=2, alpha=0.05, K=200, dim=10, u1=1.0, seed=s), quad10, W) for s in range(4)]
    report = bound_report(inputs_for(SimConfig(N=4, tau=2, alpha=0.05, K=200, dim=10, u1=1.0), quad10, W))
    v = check_seed_mean(traces, report)
    assert v.summary == pytest.approx(np.mean([t.summary for t in traces]), rel=1e-15)
    assert v.satisfied
    with pytest.raises(BoundError):
        check_seed_mean([], report)


def test_from_alpha_e():
    x = BoundInputs.from_alpha_e(0.1, L=1.0, sigma2=1.0, m=1, zeta=0.0, tau=1, v=2, N=8)
    assert x.alpha == pytest.approx(0.125, rel=1e-15)
    assert x.alpha_e == pytest.approx(0.1, rel=1e-15)
