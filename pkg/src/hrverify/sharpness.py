"""Extremizing sequences and Rayleigh-quotient traces.

Subcritical entries use the plateau-power family

    f_eps(r) = (1 - phi(r/eps)) r^a phi(eps r),

with phi the cutoff equal to 1 on (0, 1] and 0 beyond 2.  The exponent a makes
the lower kernel scale-critical (it is c/r on the plateau), so both integrals
grow linearly in -ln eps.  The critical Rellich entry uses the log-power family

    f_delta(r) = (ln(R/r))^(1 - 1/p - delta) phi(r),   R > 2,

whose integrals grow like 1/delta.  The same family serves the higher-order
critical entries.  On (0, 1] both kernels are explicit power series in 1/L and
are summed termwise; the transition band [1, 2] is integrated.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from . import constants as K
from .constants import ParamPoint
from .identities import L_OP, Fields, Op, _lower_upper, integrate_terms, term_integrand
from .operators import GroupContext
from .quadrature import Integrand, integrate_log_scale
from .radial_jets import Constant, Cutoff, Dilated, LogPower, Power, Product, Profile, Scaled, Sum, Supported

DEFAULT_EPS = (1e-2, 1e-4, 1e-6, 1e-8)
GAP_THRESHOLD = 0.15
SLOPE_TOL = 0.02
MONOTONE_SLACK = 0.01
QUOTIENT_TOL = 1e-9

PLATEAU_ENTRIES = ("INEQ-H2", "INEQ-R2", "INEQ-HR-even", "INEQ-HR-odd", "INEQ-LpH", "INEQ-LpR",
                   "INEQ-Lp-even", "INEQ-Lp-odd")
LOG_ENTRIES = ("INEQ-crit-H", "INEQ-crit-R", "INEQ-crit-even", "INEQ-crit-odd")


def _ineq_id(entry_id):
    return entry_id.replace("ID-", "INEQ-")


def plateau_exponent(entry_id, params: ParamPoint) -> float:
    """Power a for which |D r^a|^q r^{-w} r^{Q-1} is proportional to 1/r in the lower term."""
    low, _ = _lower_upper(_ineq_id(entry_id), params)
    (comb, q), = low.factors
    order = max(o.order for _, o, _ in comb)
    return (low.w - params.Q) / q + order


def plateau_power_family(params: ParamPoint, eps: float, entry_id: str = "INEQ-R2") -> Profile:
    """f_eps, supported in [eps, 2/eps] and equal to r^a on [2 eps, 1/eps]."""
    if not 0 < eps < 0.25:
        raise ValueError("plateau family needs 0 < eps < 1/4")
    a = plateau_exponent(entry_id, params)
    phi = Cutoff(1.0, 2.0)
    inner = Sum((Constant(1.0), Scaled(-1.0, Dilated(1.0 / eps, phi))))
    return Supported(Product((inner, Power(a), Dilated(eps, phi))), eps, 2.0 / eps)


def log_power_exponent(params: ParamPoint, delta: float) -> float:
    return 1.0 - 1.0 / params.p - delta


def log_power_family(params: ParamPoint, delta: float, R: float) -> Profile:
    """f_delta = (ln(R/r))^(1-1/p-delta) phi(r); support (0, 2)."""
    if not delta > 0:
        raise ValueError("log-power family needs delta > 0")
    if not R > 2:
        raise ValueError("log-power family needs R > 2")
    g = log_power_exponent(params, delta)
    if not g > 0:
        raise ValueError("log-power exponent 1 - 1/p - delta must be positive")
    return Product((LogPower(float(R), g), Cutoff(1.0, 2.0)))


@dataclass(frozen=True)
class LinearFit:
    slope: float
    offset: float
    residual: float


def linear_fit(x, y) -> LinearFit:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    A = np.stack([x, np.ones_like(x)], axis=1)
    (s, b), *_ = np.linalg.lstsq(A, y, rcond=None)
    res = float(np.sqrt(np.mean((A @ np.array([s, b]) - y) ** 2)))
    return LinearFit(float(s), float(b), res)


@dataclass
class TracePoint:
    param: float
    lhs: float
    rhs: float
    quotient: float
    gap: float
    lhs_err: float = 0.0
    rhs_err: float = 0.0


@dataclass
class SharpnessTrace:
    """Quotients rhs/lhs along an extremizing family, with divergence-law fits.

    ``lhs`` is the integral multiplied by the sharp constant and ``rhs`` the
    other side; the model for both is slope * x + offset, where x = -ln eps
    (plateau family) or x = 1/delta (log family).
    """

    entry_id: str
    params: dict
    family: str
    constant: float
    points: list
    lhs_fit: LinearFit
    rhs_fit: LinearFit
    slope_ratio: float
    checks: dict = field(default_factory=dict)
    verdict: str = "pass"

    def xs(self):
        if self.family == "plateau_power":
            return [-math.log(pt.param) for pt in self.points]
        return [1.0 / pt.param for pt in self.points]

    def rows(self):
        return [(pt.param, pt.lhs, pt.rhs, pt.quotient, pt.gap) for pt in self.points]

    def to_dict(self):
        return {
            "id": self.entry_id, "params": self.params, "family": self.family, "constant": self.constant,
            "points": [{"param": p.param, "lhs": p.lhs, "rhs": p.rhs, "quotient": p.quotient, "gap": p.gap,
                        "lhs_err": p.lhs_err, "rhs_err": p.rhs_err} for p in self.points],
            "lhs_fit": vars(self.lhs_fit), "rhs_fit": vars(self.rhs_fit), "slope_ratio": self.slope_ratio,
            "checks": self.checks, "verdict": self.verdict,
        }


CSV_COLUMNS = ("epsilon", "lhs", "rhs", "quotient", "gap")


def write_csv(trace: SharpnessTrace, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_COLUMNS)
        for row in trace.rows():
            w.writerow(["%.17g" % v for v in row])


def _plateau_integrals(entry_id, params: ParamPoint, eps, rel_tol=1e-11):
    low, up = _lower_upper(_ineq_id(entry_id), params)
    f = plateau_power_family(params, eps, entry_id)
    F = Fields(f, params.Q)
    lo, hi = eps, 2.0 / eps
    bps = {lo, 2 * eps, 1.0 / eps, hi}
    # kinks of |.|^q at zeros of the operator values live in the two bands
    if params.p != 2.0:
        combs = [c for t in (low, up) for c, _ in t.factors]
        for a, b in ((eps, 2 * eps), (1.0 / eps, hi)):
            for zs in F.zeros_many(combs, a, b, n=400):
                bps.update(zs)
    ops = sorted(low.ops() | up.ops())
    p = params.p

    def evaluator(r):
        vals = F.ops(r, ops)
        return np.stack([term_integrand(t, F, vals, r, p) for t in (low, up)])

    g = Integrand(evaluator, (lo, hi), tuple(sorted(bps)))
    res = integrate_log_scale(GroupContext(params.Q), g, rel_tol=rel_tol, many=True)
    return (res[0].value, res[0].abs_error_estimate), (res[1].value, res[1].abs_error_estimate)


def log_jet_coefficients(Q, gamma, op: Op):
    """(m, c) with op(L^gamma) = r^{-m} sum_j c_j L^{gamma-j}, L = ln(R/r)."""
    if op == L_OP:
        return 0, [0.0, 1.0]  # (f - f_R)/L with f_R = 0
    c = [1.0]
    m = 0

    def apply_R(c, m):
        out = [0.0] * (len(c) + 1)
        for j, v in enumerate(c):
            out[j] += -m * v
            out[j + 1] += -(gamma - j) * v
        return out, m + 1

    for _ in range(op.j):
        c1, m1 = apply_R(c, m)
        c2, m2 = apply_R(c1, m1)
        c = [a + (Q - 1) * b for a, b in zip(c2, c1 + [0.0])]
        m = m2
    for _ in range(op.m):
        c, m = apply_R(c, m)
    return m, c


def _power_series_pow(a, q, n_terms):
    """Taylor coefficients of (1 + sum_k a[k] u^k)^q, a[0] ignored."""
    b = [1.0]
    J = len(a) - 1
    for n in range(1, n_terms):
        acc = 0.0
        for k in range(1, min(n, J) + 1):
            acc += ((q + 1) * k - n) * a[k] * b[n - k]
        b.append(acc / n)
    return b


def core_integral(term, Q, gamma, R, max_terms=4000):
    """Integral over (0, 1] of a single-factor kernel of f = L^gamma, by series in u = 1/L.

    The kernel is |sum_j c_j L^{gamma-j}|^q / r there; with u = 1/L it becomes
    u^{-2} |sum_j c_j u^{j-gamma}|^q, integrated termwise over (0, 1/ln R].
    """
    (comb, q), = term.factors
    total = None
    m0 = None
    for coef, op, rpow in comb:
        m, c = log_jet_coefficients(Q, gamma, op)
        if m0 is None:
            m0 = m - rpow
        elif m - rpow != m0:
            raise ValueError("operator values of mixed homogeneity")
        c = [coef * v for v in c]
        total = c if total is None else [x + y for x, y in zip(total + [0.0] * len(c), c + [0.0] * len(total))]
    if abs(-m0 * q - term.w + Q - 1 + 1) > 1e-9:
        raise ValueError("kernel is not critical: no 1/r behaviour on the core")
    j0 = next(j for j, v in enumerate(total) if abs(v) > 0)
    lead = total[j0]
    a = [v / lead for v in total[j0:]]
    e = q * (j0 - gamma) - 2.0
    if not e > -1:
        raise ValueError("core integral diverges")
    U = 1.0 / math.log(R)
    b = _power_series_pow(a, q, max_terms)
    out = []
    for n, bn in enumerate(b):
        t = bn * U ** (e + n + 1) / (e + n + 1)
        out.append(t)
        if n > len(a) and abs(t) < 1e-18 * abs(out[0]):
            break
    else:
        raise ValueError("core series does not converge; 1/ln R exceeds its radius")
    return abs(lead) ** q * math.fsum(out)


def critical_core(entry_id, params: ParamPoint, delta, R):
    """Exact lower and upper integrals of f_delta over (0, 1], where phi = 1."""
    low, up = _lower_upper(_ineq_id(entry_id), params)
    g = log_power_exponent(params, delta)
    return core_integral(low, params.Q, g, R), core_integral(up, params.Q, g, R)


def _log_integrals(entry_id, params: ParamPoint, delta, R, rel_tol=1e-11):
    low, up = _lower_upper(_ineq_id(entry_id), params)
    f = log_power_family(params, delta, R)
    band = Supported(f, 1.0, 2.0)
    raw = integrate_terms([low, up], band, params.Q, params.p, R, rel_tol=rel_tol)
    core_l, core_u = critical_core(entry_id, params, delta, R)
    lv, le = raw[low.key()]
    uv, ue = raw[up.key()]
    return (core_l + lv, le), (core_u + uv, ue)


def _default_family(eid):
    if eid in LOG_ENTRIES:
        return "log_power"
    if eid in PLATEAU_ENTRIES:
        return "plateau_power"
    raise ValueError(f"no extremizing family is implemented for {eid}")


def run_trace(entry_id, params: ParamPoint, family=None, grid=DEFAULT_EPS, R=3.0, gap_threshold=GAP_THRESHOLD,
              rel_tol=1e-11) -> SharpnessTrace:
    eid = _ineq_id(entry_id)
    family = family or _default_family(eid)
    if family != _default_family(eid):
        raise ValueError(f"{eid} uses the {_default_family(eid)} family")
    info = K.sharp_info(eid, params)
    if not (info.preconditions and info.derived.contains(params.alpha)):
        raise ValueError(f"{eid}: parameters outside the validity window")
    C = float(info.value)
    grid = sorted((float(x) for x in grid), reverse=True)
    if len(grid) < 2:
        raise ValueError("a trace needs at least two grid points")
    pts = []
    for x in grid:
        if family == "plateau_power":
            (lv, le), (uv, ue) = _plateau_integrals(eid, params, x, rel_tol)
        else:
            (lv, le), (uv, ue) = _log_integrals(eid, params, x, R, rel_tol)
        q = uv / lv
        pts.append(TracePoint(x, lv, uv, q, q / C - 1.0, le, ue))
    pdict = params.as_dict()
    if family == "log_power":
        pdict["R"] = R
    trace = SharpnessTrace(eid, pdict, family, C, pts, LinearFit(0, 0, 0), LinearFit(0, 0, 0), math.nan)
    xs = trace.xs()
    trace.lhs_fit = linear_fit(xs, [pt.lhs for pt in pts])
    trace.rhs_fit = linear_fit(xs, [pt.rhs for pt in pts])
    a, b = pts[-2], pts[-1]
    trace.slope_ratio = (b.rhs - a.rhs) / (b.lhs - a.lhs)
    gaps = [pt.gap for pt in pts]
    trace.checks = {
        "above_constant": all(pt.quotient >= C * (1 - QUOTIENT_TOL) for pt in pts),
        "final_gap": gaps[-1] <= gap_threshold,
        "monotone": all(g1 <= g0 + MONOTONE_SLACK * abs(g0) for g0, g1 in zip(gaps, gaps[1:])),
        "improves": gaps[-1] < gaps[0],
        "slope_ratio": abs(trace.slope_ratio / C - 1.0) <= SLOPE_TOL,
    }
    trace.verdict = "pass" if all(trace.checks.values()) else "fail"
    return trace
