import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from hrverify.remainders import (
    SingularSample, im_term, im_term_direct, modulus_deriv_direct, modulus_deriv_term, polar_parts, rp,
    rp_real_integral_form, signed_pow,
)

P_VALUES = (1.1, 1.5, 2.0, 3.0, 4.7)


def test_rp_examples():
    assert rp(2, 1.0, 0.0) == 0.5
    assert rp(3, 1.0, -1.0) == pytest.approx(2.0, rel=1e-15)
    for p in P_VALUES:
        for z in (0.3, -2.0, 1 + 2j, 0.0):
            assert abs(rp(p, z, z)) <= 4e-15 * abs(z) ** p
    with pytest.raises(ValueError):
        rp(1.0, 1.0, 2.0)


def _pairs(rng, n):
    mag = 10.0 ** rng.uniform(-3, 3, (2, n))
    ph = rng.uniform(0, 2 * np.pi, (2, n))
    z = mag * np.exp(1j * ph)
    # a slice of nearly equal pairs exercises the equality case
    k = n // 10
    z[1, :k] = z[0, :k] * (1 + 10.0 ** rng.uniform(-9, -3, k) * np.exp(1j * rng.uniform(0, 6.3, k)))
    return z[0], z[1]


@pytest.mark.parametrize("p", P_VALUES)
def test_rp_nonnegative_raw(p):
    rng = np.random.default_rng(int(p * 10))
    xi, eta = _pairs(rng, 10_000)
    raw = rp(p, xi, eta, clamp=False)
    scale = np.abs(xi) ** p + np.abs(eta) ** p
    # rounding of three O(scale) terms bounds the noise floor
    assert np.sum(raw < -1e-13 * scale) == 0
    # R_p vanishes quadratically: R_p / scale >= min(p-1, 1) |xi-eta|^2 / (|xi|+|eta|)^2 near the diagonal
    tiny = raw <= 1e-12 * scale
    gap = np.abs(xi - eta) / (np.abs(xi) + np.abs(eta))
    assert np.all(gap[tiny] <= 1.01e-6 / np.sqrt(min(p - 1, 1)))
    assert np.all(tiny[gap <= 1e-7])
    assert np.sum(tiny) > 0 and np.sum(~tiny) > 0


def test_rp_p2_closed_form():
    rng = np.random.default_rng(2)
    xi = rng.normal(size=1000) + 1j * rng.normal(size=1000)
    eta = rng.normal(size=1000) + 1j * rng.normal(size=1000)
    ref = np.abs(xi - eta) ** 2 / 2
    scale = np.abs(xi) ** 2 + np.abs(eta) ** 2
    assert np.max(np.abs(rp(2, xi, eta) - ref) / scale) <= 1e-14


def test_rp_real_integral_form():
    rng = np.random.default_rng(3)

    def integrator(fun, a, b):
        return quad(fun, a, b, epsabs=0, epsrel=1e-12, limit=200)[0]

    checked = 0
    for p in P_VALUES:
        for _ in range(200):
            xi, eta = rng.uniform(-3, 3, 2)
            if p < 2 and xi * eta <= 0:
                continue
            ref = rp_real_integral_form(p, xi, eta, integrator)
            val = rp(p, xi, eta)
            assert abs(val - ref) <= 1e-8 * max(abs(ref), 1e-12 * (abs(xi) ** p + abs(eta) ** p)), (p, xi, eta)
            checked += 1
    assert checked >= 700


def test_signed_pow():
    np.testing.assert_allclose(signed_pow(np.array([-8.0, 0.0, 4.0]), 1 / 3 + 1), [-16.0, 0.0, 4 ** (4 / 3)],
                               rtol=1e-14)
    assert signed_pow(0j, 0.5) == 0


def test_im_term_examples():
    assert im_term(3, 1.0, 2.0) == 4.0
    assert np.all(im_term(2.5, np.array([0.5, 2.0]), 0.0) == 0)
    with pytest.raises(ValueError):
        im_term(2, -1.0, 1.0)


@settings(max_examples=200, deadline=None)
@given(p=st.sampled_from(P_VALUES), rho=st.floats(1e-3, 1e3), th=st.floats(-7, 7),
       drho=st.floats(-1e3, 1e3), dth=st.floats(-50, 50))
def test_im_term_matches_direct(p, rho, th, drho, dth):
    f = rho * np.exp(1j * th)
    fp = (drho + 1j * rho * dth) * np.exp(1j * th)
    a = im_term(p, rho, dth)
    b = im_term_direct(p, f, fp)
    assert abs(a - b) <= 1e-12 * rho**p * (dth**2 + (drho / rho) ** 2)


def test_modulus_deriv_examples():
    r = np.linspace(0.5, 3, 11)
    for c in (0.5, 2.0, 3.5):
        rho = r ** (-c)
        drho = -c * r ** (-c - 1)
        v = modulus_deriv_term(2.5, c, rho, drho, r)
        assert np.max(np.abs(v)) <= 1e-28 * np.max(rho ** 2.5 / r**2)
    f = 1 + r**2
    fp = 2 * r
    for p in P_VALUES:
        np.testing.assert_allclose(modulus_deriv_term(p, 1.3, f, fp, r), f ** (p - 2) * (fp + 1.3 * f / r) ** 2,
                                   rtol=1e-14)
    with pytest.raises(SingularSample):
        modulus_deriv_term(1.5, 1.0, np.array([0.0]), np.array([1.0]), np.array([1.0]))
    assert modulus_deriv_term(1.5, 1.0, np.array([0.0]), np.array([1.0]), np.array([1.0]), strict=False)[0] == 0


@settings(max_examples=200, deadline=None)
@given(p=st.sampled_from(P_VALUES), c=st.floats(-5, 5), rho=st.floats(1e-3, 1e3), th=st.floats(-7, 7),
       drho=st.floats(-1e3, 1e3), dth=st.floats(-50, 50), r=st.floats(0.1, 10))
def test_modulus_deriv_matches_direct(p, c, rho, th, drho, dth, r):
    f = rho * np.exp(1j * th)
    fp = (drho + 1j * rho * dth) * np.exp(1j * th)
    a = modulus_deriv_term(p, c, rho, drho, r)
    b = modulus_deriv_direct(p, c, f, fp, r)
    scale = rho ** (p - 2) * (abs(drho) + abs(c) * rho / r + rho * abs(dth)) ** 2
    assert abs(a - b) <= 1e-12 * max(scale, 1e-300)


def test_polar_parts_roundtrip():
    rng = np.random.default_rng(5)
    rho = rng.uniform(0.1, 5, 50)
    th = rng.uniform(-3, 3, 50)
    drho = rng.normal(size=50)
    dth = rng.normal(size=50)
    f = rho * np.exp(1j * th)
    fp = (drho + 1j * rho * dth) * np.exp(1j * th)
    r0, dr0, dt0 = polar_parts(f, fp)
    np.testing.assert_allclose(r0, rho, rtol=1e-14)
    np.testing.assert_allclose(dr0, drho, rtol=1e-12, atol=1e-14)
    np.testing.assert_allclose(dt0, dth, rtol=1e-12, atol=1e-14)
