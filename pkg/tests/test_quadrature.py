import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hrverify.operators import GroupContext
from hrverify.quadrature import (
    Integrand, QuadratureError, QuadResult, critical_ratio_value, grading_power, integrate, integrate_log_scale,
    integrate_many,
)
from hrverify.radial_jets import Constant, Dilated, LogPower, make_bump, parse_profile


def _power_integrand(e, lo, hi):
    return Integrand(lambda r: r**e, (lo, hi))


def test_monomial_example():
    Q = 7.0
    ctx = GroupContext(Q)
    # F r^{Q-1} = r^3 on [1, 2]
    assert integrate(ctx, _power_integrand(4 - Q, 1.0, 2.0)).value == pytest.approx(15 / 4, rel=1e-14)
    assert integrate(ctx, _power_integrand(3 - Q, 1.0, 2.0)).value == pytest.approx(7 / 3, rel=1e-14)


def _reference_rule(fun, lo, hi, panels=64, order=40):
    # composite Gauss-Legendre with far more nodes than the adaptive rule
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(lo, hi, panels + 1)
    tot = []
    for a, b in zip(edges[:-1], edges[1:]):
        t = 0.5 * (b - a) * x + 0.5 * (a + b)
        tot.append(0.5 * (b - a) * np.dot(w, fun(t)))
    return math.fsum(tot)


def test_bump_against_reference_rule():
    Q = 5.0
    f = make_bump(1.0, 2.0)
    F = lambda r: f.derivs(r, 0)[0] ** 2  # noqa: E731
    got = integrate(GroupContext(Q), Integrand(F, f.support, f.breakpoints())).value
    ref = _reference_rule(lambda r: F(r) * r ** (Q - 1), 1.0, 2.0)
    assert got == pytest.approx(ref, rel=1e-12)


def test_zero_integrand():
    res = integrate(GroupContext(5.0), Integrand(lambda r: np.zeros_like(r), (1.0, 2.0)))
    assert res.value == 0.0 and res.abs_error_estimate == 0.0
    with pytest.raises(ValueError):
        QuadResult(1.0, -1.0, 3)


def test_log_scale_examples():
    eps = 1e-6
    Q = 5.0
    res = integrate_log_scale(GroupContext(Q), Integrand(lambda r: r**-Q, (eps, 1 / eps)))
    assert res.value == pytest.approx(2 * math.log(1 / eps), rel=1e-13)
    assert res.value == pytest.approx(27.631021115928547, rel=1e-13)
    res = integrate_log_scale(GroupContext(1.0), Integrand(lambda r: np.log(r) / r, (1.0, math.e)))
    assert res.value == pytest.approx(0.5, rel=1e-13)


def test_log_scale_agrees_with_plain():
    Q = 6.0
    f = parse_profile("pow:2*bump:0.8,2.5")
    F = lambda r: np.abs(f.derivs(r, 1)[1]) ** 2  # noqa: E731
    g = Integrand(F, f.support, f.breakpoints())
    a = integrate(GroupContext(Q), g).value
    b = integrate_log_scale(GroupContext(Q), g).value
    assert a == pytest.approx(b, rel=1e-10)


def test_errors():
    ctx = GroupContext(3.0)
    with pytest.raises(QuadratureError):
        integrate(ctx, Integrand(lambda r: r, (1.0, math.inf)))
    with pytest.raises(QuadratureError):
        integrate_log_scale(ctx, Integrand(lambda r: r, (0.0, 1.0)))
    with pytest.raises(QuadratureError):
        # 1/|r - 1.5| is not integrable and is not declared
        integrate_many(ctx, Integrand(lambda r: 1 / np.abs(r - 1.5 + 1e-300), (1.0, 2.0)), max_panels=2000)
    with pytest.raises(ValueError):
        integrate(ctx, Integrand(lambda r: np.vstack([r, r]), (1.0, 2.0)))


def test_vector_integrand():
    ctx = GroupContext(4.0)
    out = integrate_many(ctx, Integrand(lambda r: np.vstack([r**-3, r**-2]), (1.0, 2.0)))
    assert out[0].value == pytest.approx(1.0, rel=1e-14)
    assert out[1].value == pytest.approx(1.5, rel=1e-14)


def test_scale_floor_is_per_group():
    # a huge unrelated component must not loosen the tolerance of a small one
    f = make_bump(1.0, 2.0)
    ev = lambda r: np.vstack([1e30 * f.derivs(r, 0)[0] ** 2, np.sin(40 * r) * f.derivs(r, 0)[0]])  # noqa: E731
    ctx = GroupContext(1.0)
    g = Integrand(ev, (1.0, 2.0))
    loose = integrate_many(ctx, g, scale_floor=1e-20)
    split = integrate_many(ctx, g, scale_floor=1e-20, groups=np.array([[True, False], [False, True]]))
    ref = integrate_many(ctx, Integrand(lambda r: ev(r)[1:], (1.0, 2.0)), scale_floor=1e-20)[0]
    assert loose[1].abs_error_estimate > 1e-10 * abs(ref.value)
    assert split[1].abs_error_estimate <= 1e-10 * abs(split[1].value)
    assert split[1].value == pytest.approx(ref.value, rel=1e-9)


def test_sphere_mass_is_multiplier():
    g = _power_integrand(-2.0, 1.0, 3.0)
    a = integrate(GroupContext(5.0), g).value
    b = integrate(GroupContext(5.0, sphere_mass=2.5), g).value
    assert b == pytest.approx(2.5 * a, rel=1e-15)


def test_declared_singularity():
    # |r - 1.5|^{p-2} with p = 1.5 integrates to 2 * 2 * 0.5^{1/2}
    p = 1.5
    g = Integrand(lambda r: np.abs(r - 1.5) ** (p - 2) * r ** (1 - 3.0), (1.0, 2.0), singular=((1.5, p),))
    val = integrate(GroupContext(3.0), g, rel_tol=1e-12).value
    assert val == pytest.approx(4 * math.sqrt(0.5), rel=1e-9)
    assert grading_power(1.5) == 2 and grading_power(2.0) == 1 and grading_power(1.1) == 10


@settings(max_examples=60, deadline=None)
@given(d=st.integers(0, 20), a=st.floats(0.1, 5.0), w=st.floats(0.01, 5.0))
def test_monomial_exactness(d, a, w):
    Q = 4.0
    b = a + w
    val = integrate(GroupContext(Q), _power_integrand(d - (Q - 1), a, b)).value
    ref = (b ** (d + 1) - a ** (d + 1)) / (d + 1)
    assert val == pytest.approx(ref, rel=1e-13)


def test_critical_ratio_examples():
    ctx = GroupContext(5.0)
    r = np.linspace(0.5, 3.0, 11)
    assert np.all(critical_ratio_value(Constant(2.0), 1.5, r, 2.0, ctx) == 0)
    f = parse_profile("pow:2*bump:0.8,2.5")
    R = 1.6
    fp = f.derivs(np.array([R]), 1)[1, 0]
    for p in (1.5, 2.0, 3.0):
        assert critical_ratio_value(f, R, R, p, ctx) == pytest.approx(abs(R * fp) ** p / R**5, rel=1e-12)
    R = 4.0
    L = LogPower(R, 1.0)
    v = critical_ratio_value(L, R, R / math.e, 2.0, ctx)
    assert v == pytest.approx(math.e**5 / R**5, rel=1e-14)
    np.testing.assert_allclose(critical_ratio_value(L, R, r, 2.0, ctx), r**-5.0, rtol=1e-13)


@pytest.mark.parametrize("R", [1.3, 1.7])
def test_critical_breakpoint_splitting(R):
    Q, p = 6.0, 2.5
    ctx = GroupContext(Q)
    f = parse_profile("pow:2*bump:1,2")
    F = lambda r: critical_ratio_value(f, R, r, p, ctx)  # noqa: E731
    whole = integrate(ctx, Integrand(F, (1.0, 2.0), (R,)), rel_tol=1e-12).value
    parts = [integrate(ctx, Integrand(F, (a, b)), rel_tol=1e-12).value
             for a, b in ((1.0, R - 1e-3), (R - 1e-3, R + 1e-3), (R + 1e-3, 2.0))]
    assert whole == pytest.approx(math.fsum(parts), rel=1e-9)


PROFILES = ("bump:1,2", "pow:2*bump:0.8,2.5", "polar(bump:1,2, theta=pow:1)", "bump:1,2+scale:0.6*bump:1.4,3")


@settings(max_examples=30, deadline=None)
@given(lam=st.floats(0.2, 5.0), Q=st.floats(3.0, 12.0), p=st.sampled_from((1.5, 2.0, 3.0)),
       idx=st.integers(0, len(PROFILES) - 1))
def test_dilation_scaling_law(lam, Q, p, idx):
    f = parse_profile(PROFILES[idx])
    fl = Dilated(lam, f)
    ctx = GroupContext(Q)

    def mk(prof):
        return Integrand(lambda r: np.abs(prof.derivs(r, 0)[0]) ** p, prof.support, prof.breakpoints())

    a = integrate(ctx, mk(fl), rel_tol=1e-13).value
    b = integrate(ctx, mk(f), rel_tol=1e-13).value
    assert a == pytest.approx(lam**-Q * b, rel=1e-10)
