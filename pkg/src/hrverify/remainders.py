"""Pointwise remainder functionals.

Everything is vectorized: arguments may be complex arrays of equal shape.
"""

from __future__ import annotations

import numpy as np


class SingularSample(ArithmeticError):
    """|f|^{p-2} weighted term sampled where f = 0 but f' != 0 with p < 2."""


def signed_pow(z, e):
    """|z|^(e-1) z, taken as 0 at z = 0."""
    z = np.asarray(z)
    a = np.abs(z)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(a > 0, z * a ** (e - 1.0), 0.0)
    return out


def rp(p, xi, eta, clamp=True):
    """R_p(xi, eta) = |eta|^p/p + (p-1)|xi|^p/p - Re(|xi|^{p-2} xi conj(eta)).

    With ``clamp=False`` the raw floating-point value is returned, which can
    dip below zero by rounding when xi is close to eta.
    """
    if not p > 1:
        raise ValueError("p must exceed 1")
    xi = np.asarray(xi)
    eta = np.asarray(eta)
    cross = np.real(signed_pow(xi, p - 1.0) * np.conj(eta))
    out = np.abs(eta) ** p / p + (p - 1) * np.abs(xi) ** p / p - cross
    # nonnegative by convexity; negative values are cancellation noise
    if clamp:
        out = np.maximum(out, 0.0)
    return float(out) if np.ndim(out) == 0 else out


def rp_real_integral_form(p, xi, eta, quad):
    """(p-1)|xi-eta|^2 int_0^1 |t xi + (1-t) eta|^{p-2} t dt via a supplied integrator."""
    val = quad(lambda t: np.abs(t * xi + (1 - t) * eta) ** (p - 2) * t, 0.0, 1.0)
    return (p - 1) * abs(xi - eta) ** 2 * val


def im_term(p, rho, dtheta):
    """|f|^{p-4} Im(f conj(f'))^2 for f = rho e^{i theta}: rho^p theta'^2."""
    rho = np.asarray(rho, dtype=float)
    if np.any(rho < 0):
        raise ValueError("modulus must be nonnegative")
    return np.where(rho > 0, np.abs(rho) ** p * np.asarray(dtheta) ** 2, 0.0)


# below this modulus the weighted terms are taken as 0 (their true size is
# about |f|^p times a bounded factor, far below double resolution)
TINY_MODULUS = 1e-280


def im_term_direct(p, f, fp):
    """Direct |f|^{p-4} (Im(f conj(f')))^2, zero where f vanishes."""
    f = np.asarray(f, dtype=complex)
    a = np.abs(f)
    live = a > TINY_MODULUS
    safe = np.where(live, a, 1.0)
    # Im(f conj f') = |f| Im(u conj f') with u = f/|f|
    s = np.imag((f / safe) * np.conj(fp))
    return np.where(live, safe ** (p - 2.0) * s**2, 0.0)


def modulus_deriv_term(p, c, rho, drho, r, strict=True):
    """rho^{p-2} (rho' + c rho / r)^2 with the zero-modulus conventions."""
    rho = np.asarray(rho, dtype=float)
    drho = np.asarray(drho, dtype=float)
    if np.any(rho < 0):
        raise ValueError("modulus must be nonnegative")
    zero = rho == 0
    if p < 2 and strict and np.any(zero & (drho != 0)):
        raise SingularSample("modulus-derivative term is unbounded at a zero with nonzero slope")
    with np.errstate(divide="ignore", invalid="ignore"):
        val = np.abs(rho) ** (p - 2.0) * (drho + c * rho / r) ** 2
    return np.where(zero, 0.0, val)


def modulus_deriv_direct(p, c, f, fp, r):
    """|f|^{p-2} (d|f|/dr + c|f|/r)^2 for a complex (or real) value and derivative."""
    f = np.asarray(f)
    a = np.abs(f)
    live = a > TINY_MODULUS
    safe = np.where(live, a, 1.0)
    da = np.real((f / safe) * np.conj(fp))
    val = safe ** (p - 2.0) * (da + c * safe / r) ** 2
    return np.where(live, val, 0.0)


def polar_parts(f, fp):
    """(rho, rho', theta') from a complex value and derivative."""
    f = np.asarray(f, dtype=complex)
    rho = np.abs(f)
    with np.errstate(divide="ignore", invalid="ignore"):
        drho = np.where(rho > 0, np.real(f * np.conj(fp)) / rho, 0.0)
        dtheta = np.where(rho > 0, np.imag(np.conj(f) * fp) / rho**2, 0.0)
    return rho, drho, dtheta
