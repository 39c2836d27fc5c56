import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hrverify.radial_jets import (
    Bump, Constant, CutoffSpec, Dilated, Jet, LogPower, Power, Product, ProfileSyntaxError, Scaled, Sum,
    Supported, combine, complex_polar, eval_jet, jet_mul, make_bump, make_cutoff, make_log_power, make_power,
    parse_profile, with_max_order,
)
from hrverify.sharpness import plateau_power_family
from hrverify.constants import ParamPoint


def test_power_jets():
    np.testing.assert_allclose(eval_jet(make_power(3), 2.0, 3).derivs, [8, 12, 12, 6], rtol=1e-15)
    np.testing.assert_allclose(eval_jet(make_power(0), 1.7, 3).derivs, [1, 0, 0, 0], atol=0)
    np.testing.assert_allclose(eval_jet(make_power(-1.5), 4.0, 1).derivs, [0.125, -0.046875], rtol=1e-15)
    np.testing.assert_allclose(eval_jet(make_power(2), 3.0, 1).derivs, [9, 6], rtol=1e-15)


def test_log_power():
    j = eval_jet(make_log_power(math.e, 1.0), 1.0, 1)
    assert j.derivs[0] == pytest.approx(1.0, rel=1e-15)
    assert j.derivs[1] == pytest.approx(-1.0, rel=1e-15)
    assert isinstance(make_log_power(3.0, 0.0), Constant)
    j = eval_jet(make_log_power(2.0, 0.5), 1.0, 2)
    L = math.log(2.0)
    # d/dr L^g = -g L^{g-1}/r ; d2 = g L^{g-1}/r^2 + g(g-1) L^{g-2}/r^2
    np.testing.assert_allclose(j.derivs, [math.sqrt(L), -0.5 / math.sqrt(L), 0.5 / math.sqrt(L) - 0.25 * L**-1.5],
                               rtol=1e-14)


def test_cutoff_plateau_and_outside():
    c = make_cutoff(CutoffSpec(1.0, 2.0))
    np.testing.assert_array_equal(eval_jet(c, 0.5, 4).derivs, [1, 0, 0, 0, 0])
    np.testing.assert_array_equal(eval_jet(c, 3.0, 4).derivs, [0, 0, 0, 0, 0])
    v = eval_jet(c, 1.5, 2).derivs
    assert 0 < v[0] < 1
    with pytest.raises(ValueError):
        CutoffSpec(2.0, 1.0)


def test_combinators():
    a = combine("add", make_power(2), make_power(3))
    np.testing.assert_allclose(eval_jet(a, 1.0, 3).derivs, [2, 5, 8, 6], rtol=1e-15)
    d = combine("dilate", 2.0, make_power(2))
    np.testing.assert_allclose(eval_jet(d, 1.0, 1).derivs, [4, 8], rtol=1e-15)
    m = combine("mul", make_cutoff(CutoffSpec(1, 2)), make_power(-1))
    np.testing.assert_allclose(eval_jet(m, 0.5, 3).derivs, eval_jet(make_power(-1), 0.5, 3).derivs, rtol=1e-15)
    s = combine("scale", 3.0, make_power(1))
    np.testing.assert_allclose(eval_jet(s, 2.0, 2).derivs, [6, 3, 0], atol=1e-15)
    with pytest.raises(ValueError):
        combine("divide", make_power(1), make_power(2))


def test_outside_support_is_zero_jet():
    for prof in (make_bump(1, 2), parse_profile("pow:2*bump:0.8,2.5"), parse_profile("polar(bump:1,2, theta=pow:1)")):
        lo, hi = prof.support
        for r in (0.5 * lo, lo, hi, 2 * hi):
            assert not np.any(eval_jet(prof, r).derivs)
        assert prof.strict_support


def test_plateau_family_is_pure_power():
    P = ParamPoint(Q=9, alpha=0.0)
    eps = 0.1
    f = plateau_power_family(P, eps)
    a = -(P.Q - 4 - 2 * P.alpha) / 2
    assert f.support == (eps, 2 / eps)
    for r in (0.2, 1.0, 3.0, 10.0):
        np.testing.assert_allclose(eval_jet(f, r, 4).derivs, eval_jet(make_power(a), r, 4).derivs, rtol=1e-14)


def test_jet_validation():
    with pytest.raises(ValueError):
        Jet(-1.0, np.array([1.0]))
    with pytest.raises(ValueError):
        Jet(1.0, np.array([]))
    with pytest.raises(ValueError):
        eval_jet(make_power(1), 0.0)
    with pytest.raises(ValueError):
        eval_jet(with_max_order(make_power(1), 2), 1.0, 3)


def test_parser_roundtrip_and_errors():
    for text in ("bump:1,2", "pow:2*bump:0.8,2.5", "bump:1,2+scale:0.6*bump:1.4,3",
                 "polar(bump:1,2, theta=pow:1)", "logpow:R=3,g=0.5*cutoff:1,2"):
        prof = parse_profile(text)
        again = parse_profile(prof.describe())
        r = np.linspace(0.3, 3.5, 17)
        np.testing.assert_allclose(again.derivs(r, 3), prof.derivs(r, 3), rtol=1e-13, atol=1e-300)
    for bad in ("bump:1", "wobble:1", "bump:1,2)", "pow:"):
        with pytest.raises(ProfileSyntaxError):
            parse_profile(bad)


PROFILE_KINDS = {
    "power": (Power(2.5), (0.5, 3.0)),
    "constant": (Constant(1.7), (0.5, 3.0)),
    "logpower": (LogPower(4.0, 1.5), (0.5, 3.0)),
    "cutoff": (make_cutoff(CutoffSpec(1.0, 2.0)), (0.5, 2.5)),
    "bump": (make_bump(1.0, 2.0), (1.0, 2.0)),
    "sum": (parse_profile("bump:1,2+scale:0.6*bump:1.4,3"), (1.0, 3.0)),
    "product": (parse_profile("pow:-1*bump:0.7,2.2"), (0.7, 2.2)),
    "dilated": (Dilated(1.7, make_bump(1.0, 2.0)), (1 / 1.7, 2 / 1.7)),
    "polar": (parse_profile("polar(bump:1,2, theta=scale:0.5*pow:2)"), (1.0, 2.0)),
    "supported": (Supported(Power(-2.0), 0.5, 3.0), (0.5, 3.0)),
}


@pytest.mark.parametrize("kind", sorted(PROFILE_KINDS))
def test_jet_matches_finite_differences(kind):
    prof, (lo, hi) = PROFILE_KINDS[kind]
    rng = np.random.default_rng(7)
    r = rng.uniform(lo, hi, 1000)
    h = 1e-4 * (hi - lo)
    r = np.clip(r, lo + 2.5 * h, hi - 2.5 * h)
    order = 5
    exact = prof.derivs(r, order)
    shifted = [prof.derivs(r + s * h, order - 1) for s in (-2, -1, 1, 2)]
    fd = (shifted[0] - 8 * shifted[1] + 8 * shifted[2] - shifted[3]) / (12 * h)
    for d in range(1, order + 1):
        scale = np.max(np.abs(exact[d])) or 1.0
        err = np.max(np.abs(fd[d - 1] - exact[d])) / scale
        assert err <= 1e-6, (kind, d, err)


@settings(max_examples=60, deadline=None)
@given(a=st.floats(-3, 3), b=st.floats(-3, 3), r=st.floats(1.05, 1.95))
def test_leibniz_is_bitwise(a, b, r):
    f = Product((Power(a), make_bump(1.0, 2.0)))
    g = Power(b)
    fg = Product((f, g))
    direct = eval_jet(fg, r, 5).derivs
    manual = jet_mul(eval_jet(f, r, 5).derivs, eval_jet(g, r, 5).derivs)
    np.testing.assert_array_equal(direct, manual)


@settings(max_examples=60, deadline=None)
@given(lam=st.floats(0.2, 5.0), r=st.floats(0.3, 3.0), c=st.floats(-4, 4))
def test_scaled_and_dilated_chain_rule(lam, r, c):
    base = LogPower(50.0, 2.0)
    d = eval_jet(Dilated(lam, base), r, 4).derivs
    ref = eval_jet(base, lam * r, 4).derivs * lam ** np.arange(5)
    np.testing.assert_allclose(d, ref, rtol=1e-12)
    np.testing.assert_allclose(eval_jet(Scaled(c, base), r, 3).derivs, c * eval_jet(base, r, 3).derivs, rtol=1e-14)


def test_sum_is_termwise():
    f = Sum((Power(1.5), make_bump(1.0, 2.0)))
    r = np.linspace(1.1, 1.9, 9)
    np.testing.assert_allclose(f.derivs(r, 4), Power(1.5).derivs(r, 4) + make_bump(1.0, 2.0).derivs(r, 4),
                               rtol=1e-15)


def test_polar_modulus_and_phase():
    f = complex_polar(make_bump(1.0, 2.0), Power(1.0))
    r = np.linspace(1.1, 1.9, 5)
    v = f.derivs(r, 0)[0]
    np.testing.assert_allclose(np.abs(v), make_bump(1.0, 2.0).derivs(r, 0)[0], rtol=1e-14)
    np.testing.assert_allclose(np.angle(v), r, rtol=1e-14)
    assert not f.is_real
