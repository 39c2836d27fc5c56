"""Weighted radial quadrature: sigma * int F(r) r^{Q-1} dr.

Globally adaptive Gauss-Kronrod (7/15) over vector-valued integrands.  All
components share one panel set; a panel is split while it carries more than
its share of the error budget of any component.  The domain is cut at
declared breakpoints, and segments ending in a declared algebraic singularity
use a graded substitution r = r0 + L u^m so the mapped integrand is bounded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .operators import GroupContext

# Kronrod 15 / Gauss 7 on [-1, 1]
_XGK = np.array([
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327,
])
NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
WK = np.concatenate([_WGK[:-1], _WGK[::-1]])
WG = np.zeros(15)
for _i, _w in zip((1, 3, 5, 7), _WG):
    WG[_i] = _w
    WG[14 - _i] = _w
WG[7] = _WG[3]

_EPS = np.finfo(float).eps
_UFLOW = np.finfo(float).tiny


class QuadratureError(ArithmeticError):
    """Adaptive subdivision did not reach the requested accuracy."""


@dataclass
class Integrand:
    """Pointwise term values F(r) (all weights except r^{Q-1}).

    ``evaluator`` maps an array of radii to an array of shape (m, n) or (n,).
    ``breakpoints`` split the domain; ``singular`` holds (point, p) pairs for
    interior points where F behaves like |r - r0|^{p-2}.
    """

    evaluator: callable
    support: tuple
    breakpoints: tuple = ()
    singular: tuple = ()
    log_scale: bool = False


@dataclass(frozen=True)
class QuadResult:
    value: float
    abs_error_estimate: float
    evaluations: int

    def __post_init__(self):
        if not self.abs_error_estimate >= 0:
            raise ValueError("error estimate must be nonnegative")


@dataclass
class _Segments:
    lo: np.ndarray
    hi: np.ndarray
    kind: np.ndarray  # 0 linear, 1 log, 2 graded at lo, 3 graded at hi
    power: np.ndarray
    order: list = field(default_factory=list)
    caps: list = field(default_factory=list)


# graded segments stop this far (relative) from a singular point, where the
# term values are still well above rounding noise; the sliver is added from a
# local power-law rule
SING_GAP = 1e-6


def grading_power(p):
    return max(2, math.ceil(1.0 / (p - 1.0))) if p < 2 else 1


def _build_segments(g: Integrand):
    lo, hi = (float(x) for x in g.support)
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise QuadratureError("infinite support: split off tails analytically first")
    if g.log_scale and lo <= 0:
        raise QuadratureError("log-scale integration needs a positive lower limit")
    sing = {}
    expo = {}
    for pt, p in g.singular:
        if lo <= pt <= hi:
            sing[float(pt)] = max(sing.get(float(pt), 1), grading_power(p))
            expo[float(pt)] = min(expo.get(float(pt), 0.0), p - 2.0)
    pts = sorted({lo, hi, *[float(b) for b in g.breakpoints if lo < b < hi], *sing})
    # merge points closer than a few ulps
    merged = [pts[0]]
    for x in pts[1:]:
        if x - merged[-1] > 8 * _EPS * max(abs(x), 1.0):
            merged.append(x)
        elif x in sing:
            merged[-1] = x
    merged[-1] = hi
    segs = []
    caps = []

    def gap(x, other):
        # keep graded nodes a resolvable distance from the singular point
        d = min(SING_GAP * max(1.0, abs(x)), 1e-2 * abs(other - x))
        caps.append((x, d, expo.get(x, 0.0)))
        return d

    for a, b in zip(merged[:-1], merged[1:]):
        ma, mb = sing.get(a, 1), sing.get(b, 1)
        if g.log_scale:
            segs.append((a, b, 1, 1))
        elif ma > 1 and mb > 1:
            m = 0.5 * (a + b)
            segs.append((a + gap(a, m), m, 2, ma))
            segs.append((m, b - gap(b, m), 3, mb))
        elif ma > 1:
            segs.append((a + gap(a, b), b, 2, ma))
        elif mb > 1:
            segs.append((a, b - gap(b, a), 3, mb))
        else:
            segs.append((a, b, 0, 1))
    arr = np.array(segs, dtype=float).reshape(-1, 4)
    out = _Segments(arr[:, 0], arr[:, 1], arr[:, 2].astype(int), arr[:, 3].astype(int))
    out.caps = caps
    return out


_CAP_NODES = np.array([1.0, 2.0, 3.0, 4.0])


def _cap_weights(e):
    """Weights on t = 1..4 integrating t^e, t^(1+e), 1, t exactly over [0, 1]."""
    if e > -1e-6:
        powers = [0.0, 1.0, 2.0, 3.0]
    else:
        powers = [e, 1.0 + e, 0.0, 1.0]
    A = np.array([_CAP_NODES**k for k in powers])
    rhs = np.array([1.0 / (k + 1.0) for k in powers])
    return np.linalg.solve(A, rhs)


def _cap_values(F, Q, caps, hi_side):
    """int over the gap of width d next to each singular point, with an error bound.

    The term is sampled at four points just outside the gap and integrated
    with a rule exact for c0 x^e + c1 x^(1+e) + c2 + c3 x, which covers both the
    singular and the smooth components.  The error bound propagates the
    rounding of the sample radii through the rule.
    """
    if not caps:
        return None, None
    pts = []
    wts = []
    noise = []
    for (x, d, e), up in zip(caps, hi_side):
        sgn = 1.0 if up else -1.0
        pts.append(x + sgn * d * _CAP_NODES)
        wts.append(d * _cap_weights(e))
        # a relative shift s of r - x changes c x^e by about |e| s
        noise.append(_EPS * max(1.0, abs(x)) * max(abs(e), 0.1) / (d * _CAP_NODES))
    r = np.concatenate(pts)
    vals = np.asarray(F(r))
    if vals.ndim == 1:
        vals = vals[None, :]
    if not np.all(np.isfinite(vals)):
        raise QuadratureError("integrand is not finite next to a singular point")
    fv = (vals * r ** (Q - 1.0)).reshape(vals.shape[0], len(caps), len(_CAP_NODES))
    W = np.array(wts)
    val = np.einsum("mcn,cn->mc", fv, W)
    err = np.einsum("mcn,cn->mc", np.abs(fv), np.abs(W) * np.array(noise)) + 16 * _EPS * np.abs(val)
    return val, err


def _map(segs: _Segments, idx, u):
    """Radii and Jacobians for parameters u in [0,1] on segments idx."""
    lo = segs.lo[idx][:, None]
    hi = segs.hi[idx][:, None]
    kind = segs.kind[idx][:, None]
    m = segs.power[idx][:, None].astype(float)
    L = hi - lo
    r = np.empty_like(u)
    jac = np.empty_like(u)
    k0 = np.broadcast_to(kind == 0, u.shape)
    k1 = np.broadcast_to(kind == 1, u.shape)
    k2 = np.broadcast_to(kind == 2, u.shape)
    k3 = np.broadcast_to(kind == 3, u.shape)
    Lb = np.broadcast_to(L, u.shape)
    lob = np.broadcast_to(lo, u.shape)
    hib = np.broadcast_to(hi, u.shape)
    mb = np.broadcast_to(m, u.shape)
    if k0.any():
        r[k0] = lob[k0] + Lb[k0] * u[k0]
        jac[k0] = Lb[k0]
    if k1.any():
        la = np.log(lob[k1])
        lw = np.log(hib[k1]) - la
        r[k1] = np.exp(la + lw * u[k1])
        jac[k1] = r[k1] * lw
    if k2.any():
        uu = u[k2]
        r[k2] = lob[k2] + Lb[k2] * uu ** mb[k2]
        jac[k2] = mb[k2] * Lb[k2] * uu ** (mb[k2] - 1)
    if k3.any():
        vv = 1.0 - u[k3]
        r[k3] = hib[k3] - Lb[k3] * vv ** mb[k3]
        jac[k3] = mb[k3] * Lb[k3] * vv ** (mb[k3] - 1)
    return r, jac


def _gk(F, Q, segs, idx, u0, u1):
    """Kronrod values, error estimates (per component) for a batch of panels."""
    half = 0.5 * (u1 - u0)
    mid = 0.5 * (u1 + u0)
    u = mid[:, None] + half[:, None] * NODES[None, :]
    r, jac = _map(segs, idx, u)
    vals = np.asarray(F(r.ravel()))
    if vals.ndim == 1:
        vals = vals[None, :]
    vals = vals.reshape(vals.shape[0], *r.shape)
    fv = vals * (r ** (Q - 1.0) * jac)[None]
    if not np.all(np.isfinite(fv)):
        raise QuadratureError("integrand is not finite at a quadrature node")
    hw = half[None, :]
    sk = fv @ WK
    k = sk * hw
    gv = (fv @ WG) * hw
    # QUADPACK error heuristic
    resasc = (np.abs(fv - 0.5 * sk[..., None]) @ WK) * hw
    resabs = (np.abs(fv) @ WK) * hw
    diff = np.abs(k - gv)
    with np.errstate(divide="ignore", invalid="ignore"):
        scale = np.where(resasc > 0, np.minimum(1.0, (200 * diff / resasc) ** 1.5), 1.0)
    err = np.where(resasc > 0, resasc * scale, diff)
    floor = np.where(resabs > _UFLOW / (50 * _EPS), 50 * _EPS * resabs, 0.0)
    err = np.maximum(err, floor)
    return k, err


def _cap_kinds(segs):
    """Segment kind next to each cap, in the order the caps were created."""
    kinds = []
    for k in segs.kind:
        if k == 2:
            kinds.append(2)
        elif k == 3:
            kinds.append(3)
    return kinds


def _sum_sorted(values, keys):
    order = np.lexsort(keys)
    return [math.fsum(row) for row in values[:, order]]


def integrate_many(ctx: GroupContext, g: Integrand, rel_tol=1e-10, abs_tol=0.0, max_panels=40000,
                   scale_floor=1e-14, groups=None):
    """Integrate every component of a vector integrand on one adaptive mesh.

    ``groups`` is an optional boolean (group x component) membership matrix.  The
    scale floor of a component is then taken from the largest total of its
    groups (the smallest such over groups it belongs to) rather than from all
    components, so unrelated problems sharing one mesh do not loosen each other.
    """
    segs = _build_segments(g)
    nseg = len(segs.lo)
    idx = np.arange(nseg)
    u0 = np.zeros(nseg)
    u1 = np.ones(nseg)
    res, err = _gk(g.evaluator, ctx.Q, segs, idx, u0, u1)
    evals = 15 * nseg
    side = [k == 2 for k in _cap_kinds(segs)]
    cap, cap_err = _cap_values(g.evaluator, ctx.Q, segs.caps, side)
    fixed_err = 0.0
    if cap is not None:
        fixed_err = cap_err.sum(axis=1)
        res = np.concatenate([res, cap], axis=1)
        err = np.concatenate([err, cap_err], axis=1)
        # caps are fixed pseudo-panels that are never split
        idx = np.concatenate([idx, np.full(cap.shape[1], -1)])
        u0 = np.concatenate([u0, np.arange(cap.shape[1], dtype=float)])
        u1 = np.concatenate([u1, np.arange(cap.shape[1], dtype=float)])
    while True:
        total = res.sum(axis=1)
        tot_err = err.sum(axis=1)
        if groups is None:
            big = np.max(np.abs(total)) if total.size else 0.0
        else:
            gmax = np.max(np.where(groups, np.abs(total)[None, :], 0.0), axis=1)
            big = np.min(np.where(groups, gmax[:, None], np.inf), axis=0)
        tol = np.maximum(np.maximum(rel_tol * np.abs(total), abs_tol), scale_floor * big)
        # cap errors cannot be reduced by subdivision; they are reported, not refined
        if np.all(tot_err - fixed_err <= tol):
            break
        n = len(idx)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(tol[:, None] > 0, err / tol[:, None], np.where(err > 0, np.inf, 0.0))
        fixed = idx < 0
        marked = (np.max(ratio, axis=0) > 1.0 / (2 * n)) & ~fixed
        if not marked.any():
            marked = (np.max(ratio, axis=0) >= np.max(ratio[:, ~fixed]) * 0.5) & ~fixed
        if n + marked.sum() > max_panels:
            worst = int(np.argmax(tot_err / np.where(tol > 0, tol, np.inf)))
            raise QuadratureError(
                f"no convergence after {n} panels (component {worst}: error {tot_err[worst]:.3e}"
                f" vs tol {tol[worst]:.3e}); an undeclared singularity is likely")
        mi, ma, mb = idx[marked], u0[marked], u1[marked]
        if np.any((mb - ma) < 64 * _EPS):
            raise QuadratureError("panel width underflow during subdivision")
        mc = 0.5 * (ma + mb)
        ni = np.concatenate([mi, mi])
        na = np.concatenate([ma, mc])
        nb = np.concatenate([mc, mb])
        nres, nerr = _gk(g.evaluator, ctx.Q, segs, ni, na, nb)
        evals += 15 * len(ni)
        keep = ~marked
        idx = np.concatenate([idx[keep], ni])
        u0 = np.concatenate([u0[keep], na])
        u1 = np.concatenate([u1[keep], nb])
        res = np.concatenate([res[:, keep], nres], axis=1)
        err = np.concatenate([err[:, keep], nerr], axis=1)
    values = _sum_sorted(res, (u0, idx))
    errors = _sum_sorted(err, (u0, idx))
    m = ctx.sphere_mass
    return [QuadResult(m * v, m * e, evals) for v, e in zip(values, errors)]


def integrate(ctx: GroupContext, g: Integrand, rel_tol=1e-10, abs_tol=0.0) -> QuadResult:
    out = integrate_many(ctx, g, rel_tol, abs_tol)
    if len(out) != 1:
        raise ValueError("integrate expects a scalar integrand; use integrate_many")
    return out[0]


def integrate_log_scale(ctx: GroupContext, g: Integrand, rel_tol=1e-10, abs_tol=0.0, many=False):
    """Same contract as integrate, after the substitution t = ln r."""
    h = Integrand(g.evaluator, g.support, g.breakpoints, (), log_scale=True)
    out = integrate_many(ctx, h, rel_tol, abs_tol)
    if many:
        return out
    if len(out) != 1:
        raise ValueError("scalar integrand expected")
    return out[0]


TAYLOR_BAND = 1e-3


def log_difference(derivs_r, derivs_R, r, R):
    """(f(r) - f(R)) / ln(R/r), with the removable point r = R filled in.

    ``derivs_r`` is the derivative array at r (only its value is used away from
    R); ``derivs_R`` the jet at R used by the Taylor branch near R.
    """
    r = np.asarray(r, dtype=float)
    h = r - R
    near = np.abs(h) < TAYLOR_BAND * R
    far = ~near
    out = np.zeros(r.shape, dtype=np.result_type(derivs_r.dtype, np.asarray(derivs_R).dtype, float))
    if np.any(far):
        out[far] = (derivs_r[0][far] - derivs_R[0]) / np.log(R / r[far])
    if np.any(near):
        hn = h[near]
        # f(r) - f(R) = h sum_i f^(i)(R) h^(i-1)/i!,  ln(R/r) = h lam(h)
        acc = np.zeros(hn.shape, dtype=out.dtype)
        pw = np.ones_like(hn)
        for i in range(1, len(derivs_R)):
            acc = acc + derivs_R[i] * pw / math.factorial(i)
            pw = pw * hn
        safe = np.where(hn != 0, hn, 1.0)
        lam = np.where(hn != 0, -np.log1p(hn / R) / safe, -1.0 / R)
        out[near] = acc / lam
    return out


def critical_ratio_value(f, R, r, p, ctx: GroupContext):
    """|f(r) - f(R)|^p / (r^Q |ln(R/r)|^p), with the limit |R f'(R)|^p / R^Q at r = R."""
    r_arr = np.atleast_1d(np.asarray(r, dtype=float))
    order = min(f.max_order, 7)
    dR = f.derivs(np.array([float(R)]), order)[:, 0]
    dr = f.derivs(r_arr, 0)
    L = log_difference(dr, dR, r_arr, float(R))
    out = np.abs(L) ** p / r_arr ** ctx.Q
    return float(out[0]) if np.ndim(r) == 0 else out
