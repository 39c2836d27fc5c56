"""Catalogue of radial integral identities, inequalities and uncertainty principles.

An identity is two lists of terms whose weighted sums must agree.  Each term
is a coefficient times one radial integral of a pointwise expression in
R^m R2^j f.  Every higher-order entry exists in two forms:

* ``printed``: the closed form transcribed term by term;
* ``composed``: built mechanically by substituting base identities into one
  another, one operator level at a time.

The composed form is normative.  When only the printed form fails, the report
status is ``erratum``.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import constants as K
from .constants import ParamPoint, c_alpha, c_p_alpha, d_p_alpha, a_jQ, spow
from .operators import GroupContext, shift_R2
from .quadrature import Integrand, QuadratureError, integrate_many, log_difference
from .radial_jets import Profile, parse_profile, strip_constant_phase
from .remainders import im_term_direct, modulus_deriv_direct, rp


# ------------------------------------------------------------------ terms

@dataclass(frozen=True, order=True)
class Op:
    """R^m R2^j f; j = -1 is the critical quotient (f - f_R)/ln(R/r)."""

    j: int
    m: int = 0

    @property
    def order(self) -> int:
        return 2 * self.j + self.m if self.j >= 0 else 0

    def __str__(self):
        if self.j < 0:
            return "L"
        s = "f" if self.j == 0 else ("R2f" if self.j == 1 else f"R2^{self.j}f")
        if self.m:
            s = ("R" if self.m == 1 else f"R^{self.m}") + s
        return s


L_OP = Op(-1, 0)


def lc(*items):
    """Linear combination: items are (coef, Op, rpow) or a bare Op."""
    out = []
    for it in items:
        if isinstance(it, Op):
            out.append((1.0, it, 0.0))
        else:
            c, o, s = it
            out.append((float(c), o, float(s)))
    return tuple(out)


def _fmt(x):
    return f"{x:.12g}"


def lc_str(comb):
    parts = []
    for c, o, s in comb:
        t = str(o)
        if s:
            t += f"*r^{_fmt(s)}"
        parts.append(t if c == 1 else f"{_fmt(c)}*{t}")
    return " + ".join(parts)


@dataclass(frozen=True)
class Term:
    """coef * int (integrand) r^{-w} dmu.

    kinds: ``pow`` (product of |lincomb|^q), ``rp`` (R_p(xi, eta)),
    ``mod`` (|g|^{p-2}(d|g|/dr + c|g|/r)^2), ``im`` (|g|^{p-4} Im(g conj Rg)^2).
    """

    kind: str
    coef: float
    w: float
    factors: tuple = ()
    xi: tuple = ()
    eta: tuple = ()
    op: Op | None = None
    c: float = 0.0
    remainder: bool = False
    label: str = ""

    def key(self):
        w = round(self.w, 10)
        if self.kind == "pow":
            return ("pow", tuple((_rk(f), round(q, 12)) for f, q in self.factors), w)
        if self.kind == "rp":
            return ("rp", _rk(self.xi), _rk(self.eta), w)
        return (self.kind, self.op, round(self.c, 12), w)

    def scaled(self, s):
        return Term(self.kind, self.coef * s, self.w, self.factors, self.xi, self.eta, self.op, self.c,
                    self.remainder, self.label)

    def ops(self):
        if self.kind == "pow":
            return {o for f, _ in self.factors for _, o, _ in f}
        if self.kind == "rp":
            return {o for _, o, _ in self.xi + self.eta}
        return {self.op, Op(self.op.j, self.op.m + 1)}

    def uses_L(self):
        return L_OP in self.ops()

    def describe(self):
        if self.kind == "pow":
            body = " ".join(f"|{lc_str(f)}|^{_fmt(q)}" for f, q in self.factors)
        elif self.kind == "rp":
            body = f"R_p({lc_str(self.xi)}, {lc_str(self.eta)})"
        elif self.kind == "mod":
            body = f"Mod({self.op}, c={_fmt(self.c)})"
        else:
            body = f"Im({self.op})"
        return f"{body} / r^{_fmt(self.w)}"


def _rk(comb):
    return tuple((round(c, 12), o, round(s, 12)) for c, o, s in comb)


def P(coef, comb, w, q=2.0, rem=False, label=""):
    return Term("pow", float(coef), float(w), factors=((comb, float(q)),), remainder=rem, label=label)


def SQ(coef, comb, w, label=""):
    return P(coef, comb, w, 2.0, True, label)


def RP(coef, xi, eta, w, label=""):
    return Term("rp", float(coef), float(w), xi=xi, eta=eta, remainder=True, label=label)


def MOD(coef, op, c, w, label=""):
    return Term("mod", float(coef), float(w), op=op, c=float(c), remainder=True, label=label)


def IM(coef, op, w, label=""):
    return Term("im", float(coef), float(w), op=op, remainder=True, label=label)


@dataclass(frozen=True)
class Identity:
    lhs: tuple
    rhs: tuple
    form: str = "printed"

    def terms(self):
        return self.lhs + self.rhs


def _main_key(t: Term):
    if t.kind != "pow" or len(t.factors) != 1:
        return None
    comb, q = t.factors[0]
    if len(comb) != 1 or comb[0][0] != 1.0 or comb[0][2] != 0.0:
        return None
    return comb[0][1], q


def substitute(ident: Identity, base: Identity) -> Identity:
    """Replace every rhs term matching base's single lhs integral by base's rhs."""
    (bl,) = base.lhs
    bkey = _main_key(bl)
    out = []
    hit = False
    for t in ident.rhs:
        tk = _main_key(t)
        if tk is not None and tk == bkey and abs(t.w - bl.w) <= 1e-9 * max(1.0, abs(bl.w)):
            hit = True
            out.extend(b.scaled(t.coef / bl.coef) for b in base.rhs)
        else:
            out.append(t)
    if not hit:
        raise ValueError("substitution target not found in identity")
    return Identity(ident.lhs, tuple(out), "composed")


def _map_ops(comb, fn):
    return tuple((c, fn(o), s) for c, o, s in comb)


def canonical(comb, Q):
    """Fold R^2 g + (Q-1)/r R g into R2 g."""
    items = list(comb)
    changed = True
    while changed:
        changed = False
        for i, (c1, o1, s1) in enumerate(items):
            if o1.j < 0 or o1.m != 2:
                continue
            for k, (c2, o2, s2) in enumerate(items):
                if o2 == Op(o1.j, 1) and abs(s2 - (s1 - 1)) < 1e-12 and abs(c2 - c1 * (Q - 1)) <= 1e-12 * max(1, abs(c2)):
                    rest = [it for n, it in enumerate(items) if n not in (i, k)]
                    items = rest + [(c1, Op(o1.j + 1, 0), s1)]
                    changed = True
                    break
            if changed:
                break
    return tuple(items)


def transform(ident: Identity, fn, Q=None) -> Identity:
    """Apply an operator substitution g -> h(f) to every term."""

    def tmap(t: Term):
        def cm(comb):
            out = _map_ops(comb, fn)
            return canonical(out, Q) if Q is not None else out

        return Term(t.kind, t.coef, t.w, tuple((cm(f), q) for f, q in t.factors), cm(t.xi), cm(t.eta),
                    fn(t.op) if t.op is not None else None, t.c, t.remainder, t.label)

    return Identity(tuple(tmap(t) for t in ident.lhs), tuple(tmap(t) for t in ident.rhs), ident.form)


def shift(ident: Identity, s: int) -> Identity:
    """The identity applied to g = R2^s f."""
    if s == 0:
        return ident
    return transform(ident, lambda o: o if o.j < 0 else Op(o.j + s, o.m))


def scale_identity(ident: Identity, c) -> Identity:
    return Identity(tuple(t.scaled(c) for t in ident.lhs), tuple(t.scaled(c) for t in ident.rhs), ident.form)


F0, F1, F2 = Op(0, 0), Op(0, 1), Op(0, 2)


def R2k(k, m=0):
    return Op(k, m)


# -------------------------------------------------------- base identities

def hardy2(Q, a):
    b = (Q - 2 - 2 * a) / 2
    return Identity((P(1, lc(F1), 2 * a),),
                    (P(b * b, lc(F0), 2 * a + 2), SQ(1, lc(F1, (b, F0, -1)), 2 * a)))


def rellich2(Q, a):
    c = c_alpha(Q, a)
    return Identity((P(1, lc(Op(1)), 2 * a),), (
        P(c * c, lc(F0), 2 * a + 4),
        SQ(1, lc(Op(1), (c, F0, -2)), 2 * a),
        SQ(2 * c, lc(F1, ((Q - 4 - 2 * a) / 2, F0, -1)), 2 + 2 * a),
    ))


def onetwo(Q, a):
    return Identity((P(1, lc(Op(1)), 2 * a),), (
        P((Q + 2 * a) ** 2 / 4, lc(F1), 2 + 2 * a),
        SQ(1, lc(F2, ((Q - 2 - 2 * a) / 2, F1, -1)), 2 * a),
    ))


def lp_hardy(Q, p, a):
    d = d_p_alpha(Q, p, a)
    return Identity((P(1, lc(F1), p * a, p),), (
        P(abs(d) ** p, lc(F0), p * (1 + a), p),
        RP(p, lc((-d, F0, -1)), lc(F1), p * a),
    ))


def lp_rellich(Q, p, a):
    c = c_p_alpha(Q, p, a)
    w = p * (2 + a) - 2
    s = p * spow(c, p - 1)
    return Identity((P(1, lc(Op(1)), p * a, p),), (
        P(abs(c) ** p, lc(F0), p * (2 + a), p),
        RP(p, lc((c, F0, -2)), lc((-1, Op(1), 0)), p * a),
        MOD(s * (p - 1), F0, (Q - p * (2 + a)) / p, w),
        IM(s, F0, w),
    ))


def lp_abcd(Q, p, a):
    pp = p / (p - 1)
    e = (Q + pp * a) / pp
    return Identity((P(1, lc(F1, (Q - 1, F0, -1)), p * a, p),), (
        P(abs(e) ** p, lc(F0), p * (1 + a), p),
        RP(p, lc((e, F0, -1)), lc(F1, (Q - 1, F0, -1)), p * a),
    ))


def lp12(Q, p, a):
    """lp_abcd applied to R f."""
    return transform(lp_abcd(Q, p, a), lambda o: Op(o.j, o.m + 1), Q)


def crit_hardy(Q, p):
    e = (p - 1) / p
    return Identity((P(1, lc(F1), Q - p, p),), (
        P(e**p, lc(L_OP), Q, p),
        RP(p, lc((-e, L_OP, -1)), lc(F1), Q - p),
    ))


# ---------------------------------------------------------- compositions

def compose_hr_even(Q, k, a):
    ident = shift(rellich2(Q, a), k - 1)
    if k == 1:
        return Identity(ident.lhs, ident.rhs, "composed")
    return substitute(ident, compose_hr_even(Q, k - 1, a + 2))


def compose_hr_odd(Q, k, a):
    return substitute(shift(hardy2(Q, a), k), compose_hr_even(Q, k, a + 1))


def compose_l2new_even(Q, k, l, a):
    kk = k - l - 1
    top = shift(onetwo(Q, 2 * kk + a), l)
    if kk == 0:
        return Identity(top.lhs, top.rhs, "composed")
    return substitute(shift(compose_hr_even(Q, kk, a), l + 1), top)


def compose_l2new_odd(Q, k, l, a):
    return substitute(shift(hardy2(Q, a), k), compose_l2new_even(Q, k, l, a + 1))


def compose_lp_even(Q, p, k, a):
    ident = shift(lp_rellich(Q, p, a), k - 1)
    if k == 1:
        return Identity(ident.lhs, ident.rhs, "composed")
    return substitute(ident, compose_lp_even(Q, p, k - 1, a + 2))


def compose_lp_odd(Q, p, k, a):
    ident = shift(lp_hardy(Q, p, a), k)
    if k == 0:
        return Identity(ident.lhs, ident.rhs, "composed")
    return substitute(ident, compose_lp_even(Q, p, k, a + 1))


def compose_lphrnew_even(Q, p, k, l, a):
    kk = k - l - 1
    top = transform(lp12(Q, p, 2 * kk + a), lambda o: Op(o.j + l, o.m), Q)
    if kk == 0:
        return Identity(top.lhs, top.rhs, "composed")
    return substitute(shift(compose_lp_even(Q, p, kk, a), l + 1), top)


def compose_lphrnew_odd(Q, p, k, l, a):
    return substitute(shift(lp_hardy(Q, p, a), k), compose_lphrnew_even(Q, p, k, l, a + 1))


def compose_crit_rellich(Q, p):
    return substitute(lp12(Q, p, (Q - 2 * p) / p), crit_hardy(Q, p))


def compose_crit_even(Q, p, k):
    ac = (Q - 2 * k * p) / p
    ident = shift(compose_lp_even(Q, p, k - 1, ac), 1)
    return substitute(ident, compose_crit_rellich(Q, p))


def compose_crit_odd(Q, p, k):
    ident = shift(lp_hardy(Q, p, (Q - (2 * k + 1) * p) / p), k)
    inner = compose_crit_rellich(Q, p) if k == 1 else compose_crit_even(Q, p, k)
    return substitute(ident, inner)


# ------------------------------------------------------- printed forms

def _prod(vals):
    return K.prod(vals)


def printed_hr_even(Q, k, a):
    c = lambda s: c_alpha(Q, s)  # noqa: E731
    lhs = (P(_prod(c(2 * i + a) for i in range(k)) ** 2, lc(F0), 4 * k + 2 * a),)
    rhs = [P(1, lc(R2k(k)), 2 * a), SQ(-1, lc(R2k(k), (c(a), R2k(k - 1), -2)), 2 * a)]
    for j in range(1, k):
        pj = _prod(c(2 * i + a) for i in range(j)) ** 2
        rhs.append(SQ(-pj, lc(R2k(k - j), (c(2 * j + a), R2k(k - j - 1), -2)), 4 * j + 2 * a))
    rhs.append(SQ(-2 * c(a), lc(R2k(k - 1, 1), ((Q - 4 - 2 * a) / 2, R2k(k - 1), -1)), 2 + 2 * a))
    for j in range(1, k):
        pj = _prod(c(2 * i + a) for i in range(j)) ** 2
        rhs.append(SQ(-2 * pj * c(2 * j + a),
                      lc(R2k(k - j - 1, 1), ((Q - 4 - 2 * a - 4 * j) / 2, R2k(k - j - 1), -1)), 2 + 2 * a + 4 * j))
    return Identity(lhs, tuple(rhs))


def printed_hr_odd(Q, k, a):
    c = lambda s: c_alpha(Q, s)  # noqa: E731
    A = (Q - 2 - 2 * a) ** 2 / 4
    lhs = (P(((Q - 2 - 2 * a) / 2 * _prod(c(2 * i + 1 + a) for i in range(k))) ** 2, lc(F0), 4 * k + 2 + 2 * a),)
    rhs = [P(1, lc(R2k(k, 1)), 2 * a),
           SQ(-1, lc(R2k(k, 1), ((Q - 2 - 2 * a) / 2, R2k(k), -1)), 2 * a),
           SQ(-A, lc(R2k(k), (c(1 + a), R2k(k - 1), -2)), 2 + 2 * a)]
    for j in range(1, k):
        pj = _prod(c(2 * i + a) for i in range(j)) ** 2  # as printed
        rhs.append(SQ(-A * pj, lc(R2k(k - j), (c(2 * j + 1 + a), R2k(k - j - 1), -2)), 2 + 2 * a + 4 * j))
    rhs.append(SQ(-2 * A * c(1 + a), lc(R2k(k - 1, 1), ((Q - 6 - 2 * a) / 2, R2k(k - 1), -1)), 4 + 2 * a))
    for j in range(1, k):
        pj = _prod(c(2 * i + 1 + a) for i in range(j)) ** 2
        rhs.append(SQ(-2 * A * pj * c(2 * j + 1 + a),
                      lc(R2k(k - j - 1, 1), ((Q - 6 - 2 * a - 4 * j) / 2, R2k(k - j - 1), -1)), 4 + 2 * a + 4 * j))
    return Identity(lhs, tuple(rhs))


def printed_h2(Q, a):
    return hardy2(Q, a)


def printed_r2(Q, a):
    return rellich2(Q, a)


def printed_12(Q, a):
    return onetwo(Q, a)


def printed_l2new_even(Q, k, l, a):
    c = lambda s: c_alpha(Q, s)  # noqa: E731
    m = k - l
    rhs = [P(K.l2new_even_constant(Q, a, k, l), lc(R2k(l, 1)), 4 * m - 2 + 2 * a),
           SQ(_prod(c(2 * i + a) for i in range(m - 1)) ** 2,
              lc(R2k(l, 2), ((Q + 2 - 4 * m - 2 * a) / 2, R2k(l, 1), -1)), 4 * (m - 1) + 2 * a),
           SQ(1, lc(R2k(k), (c(a), R2k(k - 1), -2)), 2 * a)]
    for j in range(1, m - 1):
        pj = _prod(c(2 * i + a) for i in range(j)) ** 2
        rhs.append(SQ(pj, lc(R2k(k - j), (c(2 * j + a), R2k(k - j - 1), -2)), 4 * j + 2 * a))
    rhs.append(SQ(2 * c(a), lc(R2k(k - 1, 1), ((Q - 4 - 2 * a) / 2, R2k(k - 1), -1)), 2 + 2 * a))
    for j in range(1, m - 1):
        pj = _prod(c(2 * i + a) for i in range(j)) ** 2
        rhs.append(SQ(2 * pj * c(2 * j + a),
                      lc(R2k(k - j - 1, 1), ((Q - 4 - 2 * a - 4 * j) / 2, R2k(k - j - 1), -1)), 2 + 2 * a + 4 * j))
    return Identity((P(1, lc(R2k(k)), 2 * a),), tuple(rhs))


def printed_l2new_odd(Q, k, l, a):
    c = lambda s: c_alpha(Q, s)  # noqa: E731
    m = k - l
    A = (Q - 2 - 2 * a) ** 2 / 4
    rhs = [P(K.l2new_odd_constant(Q, a, k, l), lc(R2k(l, 1)), 4 * m + 2 * a),
           SQ(A * _prod(c(2 * i + 1 + a) for i in range(m - 1)) ** 2,
              lc(R2k(l, 2), ((Q + 2 - 4 * m - 2 * a) / 2, R2k(l, 1), -1)), 4 * (m - 1) + 2 + 2 * a),
           SQ(A, lc(R2k(k), (c(1 + a), R2k(k - 1), -2)), 2 + 2 * a)]
    for j in range(1, m - 1):
        pj = _prod(c(2 * i + 1 + a) for i in range(j)) ** 2
        rhs.append(SQ(A * pj, lc(R2k(k - j), (c(2 * j + 1 + a), R2k(k - j - 1), -2)), 4 * j + 2 + 2 * a))
    rhs.append(SQ(2 * c(1 + a) * A, lc(R2k(k - 1, 1), ((Q - 6 - 2 * a) / 2, R2k(k - 1), -1)), 4 + 2 * a))
    for j in range(1, m - 1):
        pj = _prod(c(2 * i + 1 + a) for i in range(j)) ** 2
        rhs.append(SQ(2 * A * pj * c(2 * j + 1 + a),
                      lc(R2k(k - j - 1, 1), ((Q - 6 - 2 * a - 4 * j) / 2, R2k(k - j - 1), -1)), 4 + 2 * a + 4 * j))
    rhs.append(SQ(1, lc(R2k(k, 1), ((Q - 2 - 2 * a) / 2, R2k(k), -1)), 2 * a))
    return Identity((P(1, lc(R2k(k, 1)), 2 * a),), tuple(rhs))


def printed_lph(Q, p, a):
    return lp_hardy(Q, p, a)


def printed_lpr(Q, p, a):
    return lp_rellich(Q, p, a)


def printed_abcd(Q, p, a):
    return lp_abcd(Q, p, a)


def printed_lp12(Q, p, a):
    pp = p / (p - 1)
    e = (Q + pp * a) / pp
    return Identity((P(1, lc(Op(1)), p * a, p),), (
        P(abs(e) ** p, lc(F1), p * (1 + a), p),
        RP(p, lc((e, F1, -1)), lc(Op(1)), p * a),
    ))


def _lp_level_terms(Q, p, coef, g_op, c, w_mod, cmod):
    """p coef |c|^{p-2} c [(p-1) Mod + Im] at one level."""
    s = p * coef * spow(c, p - 1)
    return [MOD(s * (p - 1), g_op, cmod, w_mod), IM(s, g_op, w_mod)]


def printed_lp_even(Q, p, l, a):
    cp = lambda s: c_p_alpha(Q, p, s)  # noqa: E731
    rhs = [P(abs(_prod(cp(2 * i + a) for i in range(l))) ** p, lc(F0), p * (2 * l + a), p),
           RP(p, lc((cp(a), R2k(l - 1), -2)), lc((-1, R2k(l), 0)), p * a)]
    for j in range(1, l):
        pj = abs(_prod(cp(2 * i + a) for i in range(j))) ** p
        rhs.append(RP(p * pj, lc((cp(2 * j + a), R2k(l - j - 1), -2)), lc((-1, R2k(l - j), 0)), p * (2 * j + a)))
    rhs += _lp_level_terms(Q, p, 1.0, R2k(l - 1), cp(a), p * (2 + a) - 2, (Q - p * (2 + a)) / p)
    for j in range(1, l):
        pj = abs(_prod(cp(2 * i + a) for i in range(j))) ** p
        w = p * (2 * (j + 1) + a) - 2
        rhs += _lp_level_terms(Q, p, pj, R2k(l - j - 1), cp(2 * j + a), w, (Q - p * (2 * (j + 1) + a)) / p)
    return Identity((P(1, lc(R2k(l)), p * a, p),), tuple(rhs))


def printed_lp_odd(Q, p, l, a):
    cp = lambda s: c_p_alpha(Q, p, s)  # noqa: E731
    d = d_p_alpha(Q, p, a)
    D = abs(d) ** p
    rhs = [P(D * abs(_prod(cp(2 * i + 1 + a) for i in range(l))) ** p, lc(F0), p * (2 * l + 1 + a), p),
           RP(p, lc((-d, R2k(l), -1)), lc(R2k(l, 1)), p * a)]
    if l >= 1:
        rhs.append(RP(p * D, lc((cp(1 + a), R2k(l - 1), -2)), lc((-1, R2k(l), 0)), p * (1 + a)))
    for j in range(1, l):
        pj = abs(_prod(cp(2 * i + 1 + a) for i in range(j))) ** p
        rhs.append(RP(p * D * pj, lc((cp(2 * j + 1 + a), R2k(l - j - 1), -2)), lc((-1, R2k(l - j), 0)),
                      p * (2 * j + 1 + a)))
    if l >= 1:
        rhs += _lp_level_terms(Q, p, D, R2k(l - 1), cp(1 + a), p * (3 + a) - 2, (Q - p * (3 + a)) / p)
    for j in range(1, l):
        pj = abs(_prod(cp(2 * i + 1 + a) for i in range(j))) ** p
        w = p * (2 * j + 3 + a) - 2
        rhs += _lp_level_terms(Q, p, D * pj, R2k(l - j - 1), cp(2 * j + 1 + a), w, (Q - p * (2 * j + 3 + a)) / p)
    return Identity((P(1, lc(R2k(l, 1)), p * a, p),), tuple(rhs))


def printed_lphrnew_even(Q, p, k, l, a):
    cp = lambda s: c_p_alpha(Q, p, s)  # noqa: E731
    pp = p / (p - 1)
    m = k - l
    rhs = [P(K.lphrnew_even_constant(Q, p, a, k, l), lc(R2k(l, 1)), p * (2 * m - 1 + a), p),
           RP(p * abs(_prod(cp(2 * i + a) for i in range(m - 1))) ** p,
              lc(((Q + pp * (2 * (m - 1) + a)) / pp, R2k(l, 1), -1)), lc(R2k(l + 1)), p * (2 * (m - 1) + a)),
           RP(p, lc((-cp(a), R2k(k - 1), -2)), lc(R2k(k)), p * a)]
    for j in range(1, m - 1):
        pj = abs(_prod(cp(2 * i + a) for i in range(j))) ** p
        rhs.append(RP(p * pj, lc((-cp(2 * j + a), R2k(k - j - 1), -2)), lc(R2k(k - j)), p * (2 * j + a)))
    rhs += _lp_level_terms(Q, p, 1.0, R2k(k - 1), cp(a), p * (2 + a) - 2, (Q - p * (2 + a)) / p)
    for j in range(1, m - 1):
        pj = abs(_prod(cp(2 * i + a) for i in range(j))) ** p
        w = p * (2 * (j + 1) + a) - 2
        rhs += _lp_level_terms(Q, p, pj, R2k(k - j - 1), cp(2 * j + a), w, (Q - p * (2 * (j + 1) + a)) / p)
    return Identity((P(1, lc(R2k(k)), p * a, p),), tuple(rhs))


def printed_lphrnew_odd(Q, p, k, l, a):
    cp = lambda s: c_p_alpha(Q, p, s)  # noqa: E731
    pp = p / (p - 1)
    m = k - l
    d = d_p_alpha(Q, p, a)
    D = abs(d) ** p
    rhs = [P(K.lphrnew_odd_constant(Q, p, a, k, l), lc(R2k(l, 1)), p * (2 * m + a), p),
           RP(p * D * abs(_prod(cp(2 * i + 1 + a) for i in range(m - 1))) ** p,
              lc(((Q + pp * (2 * m - 1 + a)) / pp, R2k(l, 1), -1)), lc(R2k(l + 1)), p * (2 * m - 1 + a)),
           RP(p * D, lc((-cp(1 + a), R2k(k - 1), -2)), lc(R2k(k)), p * (1 + a))]
    for j in range(1, m - 1):
        pj = abs(_prod(cp(2 * i + 1 + a) for i in range(j))) ** p
        rhs.append(RP(p * D * pj, lc((-cp(2 * j + 1 + a), R2k(k - j - 1), -2)), lc(R2k(k - j)),
                      p * (2 * j + 1 + a)))
    rhs += _lp_level_terms(Q, p, D, R2k(k - 1), cp(1 + a), p * (3 + a) - 2, (Q - p * (3 + a)) / p)
    for j in range(1, m - 1):
        pj = abs(_prod(cp(2 * i + 1 + a) for i in range(j))) ** p
        w = p * (2 * (j + 1) + 1 + a) - 2
        # printed modulus constant omits the +1 of the weight
        rhs += _lp_level_terms(Q, p, D * pj, R2k(k - j - 1), cp(2 * j + 1 + a), w, (Q - p * (2 * (j + 1) + a)) / p)
    # the final remainder is printed without its leading "+"; read as added
    rhs.append(RP(p, lc((-(Q - p - p * a) / p, R2k(k), -1)), lc(R2k(k, 1)), p * a))
    return Identity((P(1, lc(R2k(k, 1)), p * a, p),), tuple(rhs))


def printed_crit_h(Q, p):
    return crit_hardy(Q, p)


def printed_crit_r(Q, p):
    pp = p / (p - 1)
    e = (p - 1) / p
    return Identity((P(1, lc(Op(1)), Q - 2 * p, p),), (
        P(((Q - 2) / pp) ** p, lc(L_OP), Q, p),
        RP(p, lc((Q - 2, F1, -1)), lc(Op(1)), Q - 2 * p),
        RP(p * (Q - 2) ** p, lc((-e, L_OP, -1)), lc(F1), Q - p),
    ))


def _crit_even_rhs(Q, p, k, scale):
    """Right side of the printed critical even identity times ``scale``."""
    pp = p / (p - 1)
    e = (p - 1) / p
    a = lambda j: a_jQ(j, Q)  # noqa: E731
    A = abs(_prod(a(i) for i in range(1, k))) ** p
    al = (Q - 2 * k * p) / p
    out = [P(scale * ((Q - 2) / pp) ** p * A, lc(L_OP), Q, p),
           RP(scale * p * A, lc((Q - 2, F1, -1)), lc(Op(1)), Q - 2 * p),
           RP(scale * p * (Q - 2) ** p * A, lc((-e, L_OP, -1)), lc(F1), Q - p),
           RP(scale * p, lc((-a(k - 1), R2k(k - 1), -2)), lc(R2k(k)), Q - 2 * k * p)]
    for j in range(1, k - 1):
        pj = abs(_prod(a(i) for i in range(k - j, k))) ** p
        out.append(RP(scale * p * pj, lc((-a(k - j - 1), R2k(k - j - 1), -2)), lc(R2k(k - j)),
                      Q - 2 * (k - j) * p))
    w0 = Q - 2 * (k - 1) * p - 2
    s0 = scale * p * spow(a(k - 1), p - 1)
    out += [MOD(s0 * (p - 1), R2k(k - 1), 2 * (k - 1), w0), IM(s0, R2k(k - 1), w0)]
    # printed upper limit l-1 read as k-2; alpha read as (Q-2kp)/p
    for j in range(1, k - 1):
        pj = abs(_prod(a(k - i - 1) for i in range(k - j, k))) ** p
        sj = scale * p * pj * spow(a(k - j - 1), p - 1)
        w = Q - 2 * (k - j - 1) * p - 2
        out += [IM(sj, R2k(k - j - 1), w), MOD(sj * (p - 1), R2k(k - j - 1), (Q - p * (2 * (j + 1) + al)) / p, w)]
    return out


def printed_crit_even(Q, p, k):
    return Identity((P(1, lc(R2k(k)), Q - 2 * k * p, p),), tuple(_crit_even_rhs(Q, p, k, 1.0)))


def printed_crit_odd(Q, p, k):
    rhs = _crit_even_rhs(Q, p, k, (2 * k) ** p)
    rhs.append(RP(p, lc((-2 * k, R2k(k), -1)), lc(R2k(k, 1)), Q - (2 * k + 1) * p))
    return Identity((P(1, lc(R2k(k, 1)), Q - (2 * k + 1) * p, p),), tuple(rhs))


# ------------------------------------------------------------ catalogue

@dataclass(frozen=True)
class CatalogueEntry:
    id: str
    kind: str
    params_schema: tuple
    printed: callable  # ParamPoint -> Identity
    composed: callable | None = None
    inequality: str | None = None
    ks: tuple = ()
    lp: bool = False
    critical: bool = False
    notes: tuple = ()

    def build(self, P_: ParamPoint, form="printed") -> Identity:
        fn = self.printed if form == "printed" or self.composed is None else self.composed
        ident = fn(P_)
        if form == "composed" and self.composed is None:
            return Identity(ident.lhs, ident.rhs, "composed")
        return ident


def _kl_pairs(kmax=3):
    return tuple((k, l) for k in range(1, kmax + 1) for l in range(k))


CATALOGUE = {}


def _register(e: CatalogueEntry):
    CATALOGUE[e.id] = e


_register(CatalogueEntry("ID-H2", "equality", ("Q", "alpha"), lambda P_: printed_h2(P_.Q, P_.alpha),
                         inequality="INEQ-H2"))
_register(CatalogueEntry("ID-R2", "equality", ("Q", "alpha"), lambda P_: printed_r2(P_.Q, P_.alpha),
                         inequality="INEQ-R2"))
_register(CatalogueEntry("ID-HR-even", "equality", ("Q", "alpha", "k"),
                         lambda P_: printed_hr_even(P_.Q, P_.k, P_.alpha),
                         lambda P_: compose_hr_even(P_.Q, P_.k, P_.alpha), "INEQ-HR-even", ks=(1, 2, 3)))
_register(CatalogueEntry("ID-HR-odd", "equality", ("Q", "alpha", "k"),
                         lambda P_: printed_hr_odd(P_.Q, P_.k, P_.alpha),
                         lambda P_: compose_hr_odd(P_.Q, P_.k, P_.alpha), "INEQ-HR-odd", ks=(1, 2, 3)))
_register(CatalogueEntry("ID-12", "equality", ("Q", "alpha"), lambda P_: printed_12(P_.Q, P_.alpha),
                         inequality="INEQ-12"))
_register(CatalogueEntry("ID-L2new-even", "equality", ("Q", "alpha", "k", "l"),
                         lambda P_: printed_l2new_even(P_.Q, P_.k, P_.l, P_.alpha),
                         lambda P_: compose_l2new_even(P_.Q, P_.k, P_.l, P_.alpha), "INEQ-L2new-even",
                         ks=_kl_pairs()))
_register(CatalogueEntry("ID-L2new-odd", "equality", ("Q", "alpha", "k", "l"),
                         lambda P_: printed_l2new_odd(P_.Q, P_.k, P_.l, P_.alpha),
                         lambda P_: compose_l2new_odd(P_.Q, P_.k, P_.l, P_.alpha), "INEQ-L2new-odd",
                         ks=_kl_pairs()))
_register(CatalogueEntry("ID-LpH", "equality", ("Q", "p", "alpha"), lambda P_: printed_lph(P_.Q, P_.p, P_.alpha),
                         inequality="INEQ-LpH", lp=True))
_register(CatalogueEntry("ID-LpR", "equality", ("Q", "p", "alpha"), lambda P_: printed_lpr(P_.Q, P_.p, P_.alpha),
                         inequality="INEQ-LpR", lp=True))
_register(CatalogueEntry("ID-Lp-even", "equality", ("Q", "p", "alpha", "k"),
                         lambda P_: printed_lp_even(P_.Q, P_.p, P_.k, P_.alpha),
                         lambda P_: compose_lp_even(P_.Q, P_.p, P_.k, P_.alpha), "INEQ-Lp-even",
                         ks=(1, 2, 3), lp=True))
_register(CatalogueEntry("ID-Lp-odd", "equality", ("Q", "p", "alpha", "k"),
                         lambda P_: printed_lp_odd(P_.Q, P_.p, P_.k, P_.alpha),
                         lambda P_: compose_lp_odd(P_.Q, P_.p, P_.k, P_.alpha), "INEQ-Lp-odd",
                         ks=(1, 2, 3), lp=True))
_register(CatalogueEntry("ID-Lp-abcd", "equality", ("Q", "p", "alpha"),
                         lambda P_: printed_abcd(P_.Q, P_.p, P_.alpha), lp=True))
_register(CatalogueEntry("ID-Lp12", "equality", ("Q", "p", "alpha"), lambda P_: printed_lp12(P_.Q, P_.p, P_.alpha),
                         lambda P_: lp12(P_.Q, P_.p, P_.alpha), "INEQ-Lp12", lp=True))
_register(CatalogueEntry("ID-LpHRnew-even", "equality", ("Q", "p", "alpha", "k", "l"),
                         lambda P_: printed_lphrnew_even(P_.Q, P_.p, P_.k, P_.l, P_.alpha),
                         lambda P_: compose_lphrnew_even(P_.Q, P_.p, P_.k, P_.l, P_.alpha), "INEQ-LpHRnew-even",
                         ks=_kl_pairs(), lp=True))
_register(CatalogueEntry("ID-LpHRnew-odd", "equality", ("Q", "p", "alpha", "k", "l"),
                         lambda P_: printed_lphrnew_odd(P_.Q, P_.p, P_.k, P_.l, P_.alpha),
                         lambda P_: compose_lphrnew_odd(P_.Q, P_.p, P_.k, P_.l, P_.alpha), "INEQ-LpHRnew-odd",
                         ks=_kl_pairs(), lp=True))
_register(CatalogueEntry("ID-crit-H", "equality", ("Q", "p", "R"), lambda P_: printed_crit_h(P_.Q, P_.p),
                         inequality="INEQ-crit-H", lp=True, critical=True))
_register(CatalogueEntry("ID-crit-R", "equality", ("Q", "p", "R"), lambda P_: printed_crit_r(P_.Q, P_.p),
                         lambda P_: compose_crit_rellich(P_.Q, P_.p), "INEQ-crit-R", lp=True, critical=True))
_register(CatalogueEntry("ID-crit-even", "equality", ("Q", "p", "k", "R"),
                         lambda P_: printed_crit_even(P_.Q, P_.p, P_.k),
                         lambda P_: compose_crit_even(P_.Q, P_.p, P_.k), "INEQ-crit-even",
                         ks=(2, 3), lp=True, critical=True))
_register(CatalogueEntry("ID-crit-odd", "equality", ("Q", "p", "k", "R"),
                         lambda P_: printed_crit_odd(P_.Q, P_.p, P_.k),
                         lambda P_: compose_crit_odd(P_.Q, P_.p, P_.k), "INEQ-crit-odd",
                         ks=(1, 2, 3), lp=True, critical=True))

EQUALITY_IDS = tuple(CATALOGUE)


def compose_identity(entry_id: str, params: ParamPoint) -> Identity:
    e = CATALOGUE[entry_id]
    if e.composed is None:
        raise ValueError(f"{entry_id} is a base identity; it has no composed form")
    return e.composed(params)


def catalogue_hash() -> str:
    """sha256 over the printed and composed term lists at a fixed reference point."""
    h = hashlib.sha256()
    ref = ParamPoint(Q=9.0, p=2.5, alpha=0.3, k=3, l=1, R=1.5)
    for eid in sorted(CATALOGUE):
        e = CATALOGUE[eid]
        for form in ("printed", "composed"):
            ident = e.build(ref, form)
            for side, terms in (("L", ident.lhs), ("R", ident.rhs)):
                for t in terms:
                    h.update(f"{eid}|{form}|{side}|{t.coef:.15g}|{t.describe()}\n".encode())
    return h.hexdigest()


# ---------------------------------------------------------------- fields

NOISE_ZERO = 1e-10


class Fields:
    """Operator values of one profile at arbitrary radii, with zero finding."""

    def __init__(self, profile: Profile, Q: float, R: float | None = None, order: int = 7):
        profile = strip_constant_phase(profile)
        self.f = profile
        self.Q = float(Q)
        self.R = R
        self.order = order
        self.is_real = profile.is_real
        if R is not None:
            self.dR = profile.derivs(np.array([float(R)]), order)[:, 0]
        self._zero_cache = {}

    def ops(self, r, ops):
        r = np.asarray(r, dtype=float)
        need = max([o.order for o in ops if o.j >= 0] + [1])
        need = min(max(need, 1), self.order)
        d = self.f.derivs(r, need)
        levels = [d]
        jmax = max([o.j for o in ops] + [0])
        for _ in range(jmax):
            if len(levels[-1]) < 3:
                break
            levels.append(shift_R2(self.Q, levels[-1], r))
        out = {}
        for o in ops:
            if o.j < 0:
                out[o] = log_difference(d, self.dR, r, self.R)
            else:
                lev = levels[o.j]
                out[o] = lev[o.m] if o.m < len(lev) else None
        return out

    def lincomb(self, comb, vals, r):
        acc = 0.0
        for c, o, s in comb:
            v = vals[o]
            acc = acc + (c * v if s == 0 else c * v * r**s)
        return acc * np.ones_like(r) if np.isscalar(acc) else acc

    def zeros(self, comb, lo, hi, n=1200):
        """Sign changes of a real linear combination on (lo, hi), bisected."""
        return self.zeros_many([comb], lo, hi, n)[0]

    def zeros_many(self, combs, lo, hi, n=1200):
        """Zeros of several real linear combinations; one vectorized bisection for all."""
        keys = [(_rk(c), lo, hi, n) for c in combs]
        todo = [i for i, k in enumerate(keys) if k not in self._zero_cache]
        if todo:
            ops = sorted({o for i in todo for _, o, _ in combs[i]})
            t = np.linspace(0.0, 1.0, n + 1)[1:-1]
            # cluster probes toward the ends where high derivatives oscillate
            t = 0.5 - 0.5 * np.cos(np.pi * t)
            x = lo + (hi - lo) * t
            vals = self.ops(x, ops)
            brackets = []
            found = {i: set() for i in todo}
            for i in todo:
                v = np.real(self.lincomb(combs[i], vals, x))
                s = np.sign(v)
                # sign flips among values at rounding level are noise, not zeros
                vmax = float(np.max(np.abs(v))) if v.size else 0.0
                loud = np.abs(v[:-1]) + np.abs(v[1:]) > NOISE_ZERO * vmax
                for j in np.nonzero((s[:-1] * s[1:] < 0) & loud)[0]:
                    brackets.append((i, x[j], x[j + 1], v[j]))
                hit = (v[1:-1] == 0) & (v[:-2] * v[2:] < 0) & (np.abs(v[:-2]) + np.abs(v[2:]) > NOISE_ZERO * vmax)
                found[i].update(x[1:-1][hit].tolist())
            if brackets:
                owner = np.array([b[0] for b in brackets])
                a = np.array([b[1] for b in brackets])
                b = np.array([b[2] for b in brackets])
                va = np.array([b[3] for b in brackets])
                for _ in range(48):
                    m = 0.5 * (a + b)
                    mv = self.ops(m, ops)
                    vm = np.empty_like(m)
                    for i in set(owner.tolist()):
                        sel = owner == i
                        sub = {o: (val[sel] if np.ndim(val) else val) for o, val in mv.items()}
                        vm[sel] = np.real(self.lincomb(combs[i], sub, m[sel]))
                    left = np.sign(vm) == np.sign(va)
                    a = np.where(left, m, a)
                    va = np.where(left, vm, va)
                    b = np.where(left, b, m)
                for i, z in zip(owner.tolist(), (0.5 * (a + b)).tolist()):
                    found[i].add(z)
            for i in todo:
                self._zero_cache[keys[i]] = tuple(sorted(found[i]))
        return [self._zero_cache[k] for k in keys]


def _pow_abs(v, q):
    if q == 2.0:
        return np.real(v) ** 2 + np.imag(v) ** 2 if np.iscomplexobj(v) else v * v
    return np.abs(v) ** q


def term_integrand(t: Term, F: Fields, vals, r, p):
    """Pointwise value of the integral kernel of a term (without r^{Q-1})."""
    wfac = r ** (-t.w)
    if t.kind == "pow":
        acc = wfac
        for comb, q in t.factors:
            acc = acc * _pow_abs(F.lincomb(comb, vals, r), q)
        return acc
    if t.kind == "rp":
        xi = F.lincomb(t.xi, vals, r)
        eta = F.lincomb(t.eta, vals, r)
        return rp(p, xi, eta) * wfac
    g = vals[t.op]
    gp = vals[Op(t.op.j, t.op.m + 1)]
    if t.kind == "mod":
        return modulus_deriv_direct(p, t.c, g, gp, r) * wfac
    if F.is_real:
        return np.zeros_like(r)
    return im_term_direct(p, g, gp) * wfac


def _needs_zero_handling(t: Term, p):
    """Linear combinations whose zeros make the kernel non-smooth, and whether singular."""
    out = []
    if t.kind == "pow":
        for comb, q in t.factors:
            if q != 2.0:
                out.append((comb, q < 2))
    elif t.kind == "rp":
        if p != 2.0:
            out.append((t.xi, p < 2))
            out.append((t.eta, False))
    elif t.kind == "mod":
        if p != 2.0:
            out.append((lc(t.op), p < 2))
    elif t.kind == "im":
        pass
    return out


@dataclass
class TermValue:
    name: str
    value: float
    err: float
    coef: float
    raw: float
    side: str
    remainder: bool


@dataclass
class IdentityReport:
    id: str
    params: dict
    profile: str
    terms: list
    residual: float
    scale: float
    verdict: str
    tol: float
    status: str = "pass"
    printed_residual: float | None = None
    composed_residual: float | None = None
    extras: dict = field(default_factory=dict)
    error_bound: float = 0.0

    def to_dict(self):
        return {
            "id": self.id, "params": self.params, "profile": self.profile,
            "terms": [{"name": t.name, "value": t.value, "err": t.err, "side": t.side} for t in self.terms],
            "residual": self.residual, "scale": self.scale, "verdict": self.verdict, "tol": self.tol,
            "status": self.status, "printed_residual": self.printed_residual,
            "composed_residual": self.composed_residual, "error_bound": self.error_bound, **({"extras": self.extras} if self.extras else {}),
        }


ABS_FLOOR = 1e-300
IDENTITY_FLOOR = 1e-20


def _support(profile: Profile):
    lo, hi = profile.support
    if not (lo > 0 and math.isfinite(hi)):
        raise ValueError("catalogue evaluation needs a profile with strict compact support")
    return lo, hi


def integrate_terms(terms, profile: Profile, Q, p=2.0, R=None, rel_tol=1e-10, ctx=None, fields=None,
                    scale_floor=0.0, term_groups=None):
    """Raw integrals (coefficient 1) of the kernels of ``terms``; deduplicated by key.

    ``term_groups`` labels each term with the problem it belongs to, so the
    scale floor is relative to that problem's largest term.
    """
    ctx = ctx or GroupContext(Q)
    uniq = {}
    member = {}
    for i, t in enumerate(terms):
        uniq.setdefault(t.key(), t.scaled(1.0 / t.coef) if t.coef != 0 else t)
        if term_groups is not None:
            member.setdefault(t.key(), set()).add(term_groups[i])
    keys = list(uniq)
    groups = None
    if term_groups is not None:
        labels = sorted(set(term_groups))
        groups = np.array([[lab in member[k] for k in keys] for lab in labels], dtype=bool)
    reps = [uniq[k] for k in keys]
    ops = set()
    for t in reps:
        ops |= t.ops()
    critical = L_OP in ops
    if critical and R is None:
        raise ValueError("critical terms need R")
    F = fields or Fields(profile, Q, R if critical else None)
    lo, hi = _support(profile)
    bps = set(profile.breakpoints())
    singular = set()
    if critical and lo < R < hi:
        bps.add(float(R))
    if F.is_real:
        need = {}
        for t in reps:
            for comb, sing in _needs_zero_handling(t, p):
                k = _rk(comb)
                need[k] = (comb, need.get(k, (comb, False))[1] or sing)
        items = list(need.values())
        for (comb, sing), zs in zip(items, F.zeros_many([c for c, _ in items], lo, hi)):
            for z in zs:
                bps.add(z)
                if sing:
                    singular.add((z, p if p < 2 else 1.5))
    ops_list = sorted(ops)

    def evaluator(r):
        vals = F.ops(r, ops_list)
        return np.stack([term_integrand(t, F, vals, r, p) for t in reps])

    if not reps:
        return {}
    res = integrate_many(ctx, Integrand(evaluator, (lo, hi), tuple(sorted(bps)), tuple(sorted(singular))),
                         rel_tol=rel_tol, scale_floor=scale_floor, groups=groups)
    out = {k: (q.value, q.abs_error_estimate) for k, q in zip(keys, res)}
    if critical and lo < R < hi:
        for k, t in zip(keys, reps):
            if t.uses_L():
                tv = _critical_tail(t, F, p, lo, hi, R, ctx)
                v, e = out[k]
                out[k] = (v + tv, e)
    return out


def _critical_tail(t: Term, F: Fields, p, lo, hi, R, ctx):
    """Exact integral over (0, lo) and (hi, inf) where f = 0 and f_R is constant.

    There the kernel times r^{Q-1} equals K |ln(R/r)|^{-q} / r; K is read off
    two probe radii on each side and checked for consistency.
    """
    if t.kind == "pow":
        q = 0.0
        for comb, qq in t.factors:
            if any(o == L_OP for _, o, _ in comb):
                q += qq
            elif all(o.j >= 0 for _, o, _ in comb):
                return 0.0  # a factor of f kills the tail
    elif t.kind == "rp":
        q = p
    else:
        return 0.0
    probes = np.array([lo * 0.5, lo * 0.25, hi * 2.0, hi * 4.0])
    vals = F.ops(probes, sorted(t.ops()))
    kern = term_integrand(t, F, vals, probes, p) * probes ** (F.Q - 1)
    Ks = kern * probes * np.abs(np.log(R / probes)) ** q
    Kv = Ks[0]
    if not np.allclose(Ks, Kv, rtol=1e-9, atol=1e-300):
        raise QuadratureError("critical tail kernel does not have the expected logarithmic form")
    if Kv == 0:
        return 0.0
    tail = Kv * (math.log(R / lo) ** (1 - q) + math.log(hi / R) ** (1 - q)) / (q - 1)
    return ctx.sphere_mass * tail


def _side_sum(terms, raw):
    vals = [t.coef * raw[t.key()][0] for t in terms]
    return math.fsum(vals), vals


def residual_of(ident: Identity, raw):
    L, lv = _side_sum(ident.lhs, raw)
    Rv, rv = _side_sum(ident.rhs, raw)
    scale = max([abs(v) for v in lv + rv] + [0.0])
    err = math.fsum(abs(t.coef) * raw[t.key()][1] for t in ident.terms())
    return abs(L - Rv), scale, err


def params_for(entry: CatalogueEntry, P_: ParamPoint):
    d = {"Q": P_.Q}
    for k in entry.params_schema:
        d[k] = getattr(P_, k if k != "alpha" else "alpha")
    if entry.lp and "p" not in d:
        d["p"] = P_.p
    return d


def _check(entry_id, params):
    if entry_id not in CATALOGUE:
        raise KeyError(f"unknown catalogue id {entry_id!r}")
    e = CATALOGUE[entry_id]
    if e.critical and params.R is None:
        raise ValueError(f"{entry_id} needs R")
    return e


def evaluate_identity(entry_id: str, params: ParamPoint, f: Profile | str, tol=1e-8, profile_name=None):
    return evaluate_identity_batch(entry_id, [params], f, tol, profile_name)[0]


def mutate_identity(ident: Identity, factor: float) -> Identity:
    """Multiply the coefficient of the first right-hand term; a regression fixture."""
    if not ident.rhs:
        return ident
    return Identity(ident.lhs, (ident.rhs[0].scaled(factor),) + tuple(ident.rhs[1:]), ident.form)


def evaluate_identity_batch(entry_id, params_list, f, tol=1e-8, profile_name=None, rel_tol=1e-10, mutate=None):
    """Evaluate one entry at several parameter points sharing Q, p and R in one quadrature.

    ``mutate`` (a factor) perturbs one constant in both forms; it exists so a
    regression suite can confirm that a wrong constant is caught.
    """
    prof = parse_profile(f) if isinstance(f, str) else f
    name = profile_name or (f if isinstance(f, str) else prof.describe())
    e = None
    groups = {}
    for P_ in params_list:
        e = _check(entry_id, P_)
        if e.lp is False and P_.p != 2.0:
            P_ = P_.replace(p=2.0)
        groups.setdefault((P_.Q, P_.p, P_.R), []).append(P_)
    reports = {}
    for (Q, p, R), plist in groups.items():
        built = []
        all_terms = []
        labels = []
        for i, P_ in enumerate(plist):
            pr = e.build(P_, "printed")
            co = e.build(P_, "composed") if e.composed is not None else None
            if mutate is not None:
                pr = mutate_identity(pr, mutate)
                co = mutate_identity(co, mutate) if co is not None else None
            built.append((P_, pr, co))
            ts = list(pr.terms()) + (list(co.terms()) if co else [])
            all_terms += ts
            labels += [i] * len(ts)
        # terms below 1e-20 of the largest in their identity cannot move its residual;
        # the floor stops refinement on pure rounding noise (e.g. a phase of size 1e-49)
        raw = integrate_terms(all_terms, prof, Q, p, R, rel_tol=rel_tol, scale_floor=IDENTITY_FLOOR,
                              term_groups=labels)
        for P_, pr, co in built:
            # a verdict may not claim more than the quadrature resolves
            res_p, scale_p, err_p = residual_of(pr, raw)
            if co is not None:
                res_c, scale_c, err_c = residual_of(co, raw)
            else:
                res_c, scale_c, err_c = res_p, scale_p, err_p
            ok_c = res_c + err_c <= tol * max(scale_c, ABS_FLOOR)
            ok_p = res_p + err_p <= tol * max(scale_p, ABS_FLOOR)
            if ok_c and ok_p:
                status = "pass"
            elif ok_c:
                status = "erratum"
            else:
                status = "fail"
            norm = co if co is not None else pr
            tv = []
            for side, terms in (("lhs", norm.lhs), ("rhs", norm.rhs)):
                for t in terms:
                    v, er = raw[t.key()]
                    tv.append(TermValue(t.describe(), t.coef * v, abs(t.coef) * er, t.coef, v, side, t.remainder))
            reports[id(P_)] = IdentityReport(
                entry_id, params_for(e, P_), name, tv, res_c, scale_c, "pass" if ok_c else "fail", tol, status,
                res_p / max(scale_p, ABS_FLOOR), res_c / max(scale_c, ABS_FLOOR), error_bound=err_c)
    out = []
    for P_ in params_list:
        key = P_ if (e.lp or P_.p == 2.0) else P_.replace(p=2.0)
        for (Q, p, R), plist in groups.items():
            for q in plist:
                if q == key and id(q) in reports:
                    out.append(reports[id(q)])
                    break
            else:
                continue
            break
    return out


# --------------------------------------------------------- inequalities

@dataclass(frozen=True)
class InequalitySpec:
    id: str
    lower: callable  # ParamPoint -> Term (coefficient 1)
    upper: callable
    info: str
    printed_lower: callable | None = None


def _lower_upper(ineq_id, P_: ParamPoint):
    Q, p, a, k, l = P_.Q, P_.p, P_.alpha, P_.k, P_.l
    if ineq_id == "INEQ-H2":
        return P(1, lc(F0), 2 * a + 2), P(1, lc(F1), 2 * a)
    if ineq_id == "INEQ-R2":
        return P(1, lc(F0), 2 * a + 4), P(1, lc(Op(1)), 2 * a)
    if ineq_id == "INEQ-HR-even":
        return P(1, lc(F0), 4 * k + 2 * a), P(1, lc(R2k(k)), 2 * a)
    if ineq_id == "INEQ-HR-odd":
        return P(1, lc(F0), 4 * k + 2 + 2 * a), P(1, lc(R2k(k, 1)), 2 * a)
    if ineq_id == "INEQ-12":
        return P(1, lc(F1), 2 + 2 * a), P(1, lc(Op(1)), 2 * a)
    if ineq_id == "INEQ-L2new-even":
        return P(1, lc(R2k(l, 1)), 4 * (k - l) - 2 + 2 * a), P(1, lc(R2k(k)), 2 * a)
    if ineq_id == "INEQ-L2new-odd":
        return P(1, lc(R2k(l, 1)), 4 * (k - l) + 2 * a), P(1, lc(R2k(k, 1)), 2 * a)
    if ineq_id == "INEQ-LpH":
        return P(1, lc(F0), p * (1 + a), p), P(1, lc(F1), p * a, p)
    if ineq_id == "INEQ-LpR":
        return P(1, lc(F0), p * (2 + a), p), P(1, lc(Op(1)), p * a, p)
    if ineq_id == "INEQ-Lp-even":
        return P(1, lc(F0), p * (2 * k + a), p), P(1, lc(R2k(k)), p * a, p)
    if ineq_id == "INEQ-Lp-odd":
        return P(1, lc(F0), p * (2 * k + 1 + a), p), P(1, lc(R2k(k, 1)), p * a, p)
    if ineq_id == "INEQ-Lp12":
        return P(1, lc(F1), p * (1 + a), p), P(1, lc(Op(1)), p * a, p)
    if ineq_id == "INEQ-LpHRnew-even":
        return P(1, lc(R2k(l, 1)), p * (2 * (k - l) - 1 + a), p), P(1, lc(R2k(k)), p * a, p)
    if ineq_id == "INEQ-LpHRnew-odd":
        # normative weight p(2(k-l)+a); printed as p(2(k-l)-1+a)
        return P(1, lc(R2k(l, 1)), p * (2 * (k - l) + a), p), P(1, lc(R2k(k, 1)), p * a, p)
    if ineq_id == "INEQ-crit-H":
        return P(1, lc(L_OP), Q, p), P(1, lc(F1), Q - p, p)
    if ineq_id == "INEQ-crit-R":
        return P(1, lc(L_OP), Q, p), P(1, lc(Op(1)), Q - 2 * p, p)
    if ineq_id == "INEQ-crit-even":
        return P(1, lc(L_OP), Q, p), P(1, lc(R2k(k)), Q - 2 * k * p, p)
    if ineq_id == "INEQ-crit-odd":
        return P(1, lc(L_OP), Q, p), P(1, lc(R2k(k, 1)), Q - (2 * k + 1) * p, p)
    raise KeyError(f"unknown inequality id {ineq_id!r}")


INEQUALITY_IDS = tuple(i for i in K.SHARP_IDS if i.startswith("INEQ-"))
UNCERTAINTY_IDS = tuple(i for i in K.SHARP_IDS if i.startswith("UNC-"))
CRITICAL_INEQ = ("INEQ-crit-H", "INEQ-crit-R", "INEQ-crit-even", "INEQ-crit-odd")


def sup_grid(profile: Profile):
    lo, hi = _support(profile)
    mid = 0.5 * (lo + hi)
    return (0.5, 1.0, mid, hi, 2 * hi)


def evaluate_inequality(entry_id, params: ParamPoint, f, tol=1e-9, window="derived", profile_name=None):
    """Check const * lower <= upper (1 + tol); report the Rayleigh quotient upper/lower."""
    eid = entry_id.replace("ID-", "INEQ-")
    prof = parse_profile(f) if isinstance(f, str) else f
    name = profile_name or (f if isinstance(f, str) else prof.describe())
    info = K.sharp_info(eid, params)
    win = info.derived if window == "derived" else info.printed
    if not (info.preconditions and win.contains(params.alpha)):
        raise ValueError(f"{eid}: parameters outside the validity window")
    low, up = _lower_upper(eid, params)
    R = params.R
    if eid in CRITICAL_INEQ and R is None:
        raise ValueError("critical inequality needs R")
    raw = integrate_terms([low, up], prof, params.Q, params.p, R if eid in CRITICAL_INEQ else None)
    lv = raw[low.key()][0]
    uv = raw[up.key()][0]
    const = info.value
    if lv == 0 and uv == 0:
        verdict, quotient = "pass", math.nan
    else:
        quotient = uv / lv if lv != 0 else math.inf
        verdict = "pass" if const * lv <= uv * (1 + tol) else "fail"
    terms = [TermValue(low.describe(), lv, raw[low.key()][1], 1.0, lv, "lower", False),
             TermValue(up.describe(), uv, raw[up.key()][1], 1.0, uv, "upper", False)]
    rep = IdentityReport(eid, params.as_dict(), name, terms, max(const * lv - uv, 0.0), max(abs(lv), abs(uv)),
                         verdict, tol)
    rep.extras = {"constant": const, "quotient": quotient, "slack": quotient / const - 1 if const else math.inf,
                  "degenerate": lv == 0 and uv == 0, "window": [win.lo, win.hi]}
    return rep


def _holder_terms(eid, P_: ParamPoint):
    """(lhs_terms, lhs_combine, [(term, exponent), ...]) for an uncertainty entry."""
    Q, p, a, k = P_.Q, P_.p, P_.alpha, P_.k
    pp = p / (p - 1)
    if eid == "UNC-even":
        return [P(1, lc(F0), 0.0)], [(P(1, lc(R2k(k)), p * a, p), 1 / p), (P(1, lc(F0), -pp * (2 * k + a), pp), 1 / pp)]
    if eid == "UNC-odd":
        return [P(1, lc(F0), 0.0)], [(P(1, lc(R2k(k, 1)), p * a, p), 1 / p),
                                     (P(1, lc(F0), -pp * (2 * k + 1 + a), pp), 1 / pp)]
    if eid in ("UNC-crit-1", "UNC-crit-2"):
        q = 2 * p / (p - 2) if p > 2 else math.inf
        prod_t = Term("pow", 1.0, 2 * Q / p, factors=((lc(F0), 2.0), (lc(L_OP), 2.0)))
        up = P(1, lc(R2k(k)), Q - 2 * k * p, p) if eid == "UNC-crit-1" else P(1, lc(R2k(k, 1)), Q - (2 * k + 1) * p, p)
        return [prod_t], [(P(1, lc(F0), 0.0, q), 1 / q), (up, 1 / p)]
    if eid in ("UNC-crit-3", "UNC-crit-4"):
        up = P(1, lc(R2k(k)), Q - 2 * k * p, p) if eid == "UNC-crit-3" else P(1, lc(R2k(k, 1)), Q - (2 * k + 1) * p, p)
        return [P(1, lc(L_OP), Q, 2.0)], [(up, 1 / p), (P(1, lc(L_OP), Q, pp), 1 / pp)]
    raise KeyError(f"unknown uncertainty id {eid!r}")


def evaluate_uncertainty(entry_id, params: ParamPoint, f, tol=1e-9, profile_name=None):
    """const * A <= B^{1/s} C^{1/t}; UNC-crit-1/2 compare sqrt(A), and UNC-crit-2 also reports the unrooted form."""
    eid = entry_id
    prof = parse_profile(f) if isinstance(f, str) else f
    name = profile_name or (f if isinstance(f, str) else prof.describe())
    info = K.sharp_info(eid, params)
    if eid in ("UNC-crit-1", "UNC-crit-2") and not params.p > 2:
        raise ValueError("1/p + 1/q = 1/2 needs p > 2")
    if not (info.preconditions and info.derived.contains(params.alpha)):
        raise ValueError(f"{eid}: parameters outside the validity window")
    lhs_terms, rhs_pairs = _holder_terms(eid, params)
    crit = eid.startswith("UNC-crit")
    if crit and params.R is None:
        raise ValueError("critical uncertainty needs R")
    raw = integrate_terms(lhs_terms + [t for t, _ in rhs_pairs], prof, params.Q, params.p,
                          params.R if crit else None)
    A = raw[lhs_terms[0].key()][0]
    rhs = 1.0
    for t, e in rhs_pairs:
        rhs *= max(raw[t.key()][0], 0.0) ** e
    const = info.value
    left = math.sqrt(A) if eid in ("UNC-crit-1", "UNC-crit-2") else A
    verdict = "pass" if const * left <= rhs * (1 + tol) else "fail"
    terms = [TermValue(lhs_terms[0].describe(), A, raw[lhs_terms[0].key()][1], 1.0, A, "lhs", False)]
    for t, e in rhs_pairs:
        v, er = raw[t.key()]
        terms.append(TermValue(t.describe(), v, er, e, v, "rhs", False))
    rep = IdentityReport(eid, params.as_dict(), name, terms, max(const * left - rhs, 0.0), max(const * left, rhs),
                         verdict, tol)
    rep.extras = {"constant": float(const), "lhs": float(const * left), "rhs": float(rhs),
                  "slack": float(rhs / (const * left) - 1) if const * left else math.inf}
    if eid == "UNC-crit-2":
        unrooted = const * A <= rhs * (1 + tol)
        rep.extras["printed_form_holds"] = bool(unrooted)
        rep.extras["printed_form_lhs"] = const * A
    return rep


def report_json(obj) -> str:
    return json.dumps(obj, sort_keys=True)


# ------------------------------------------------------------ test grid

GRID_Q = (4.5, 5.0, 7.0, 9.0, 12.0)
GRID_P = (1.5, 2.0, 3.0)
GRID_PROFILES = (
    "bump:1,2",
    "pow:2*bump:0.8,2.5",
    "bump:1,2+scale:0.6*bump:1.4,3",
    "polar(bump:1,2, theta=pow:1)",
    "polar(pow:-1*bump:0.7,2.2, theta=scale:0.5*pow:2)",
)


def alpha_grid(entry: CatalogueEntry, P_: ParamPoint):
    """Five weights inside the entry's validity window and two outside it."""
    if entry.inequality is None:
        win = K.REAL_LINE
    else:
        win = K.sharp_info(entry.inequality, P_).derived
    return tuple(win.interior()) + tuple(win.exterior())


def radius_grid(profile: Profile):
    lo, hi = _support(profile)
    w = hi - lo
    return (0.5 * lo, lo + 0.3 * w, lo + 0.5 * w, lo + 0.7 * w, 2.0 * hi)


def equality_grid(entries=None, Qs=GRID_Q, ps=GRID_P, profiles=GRID_PROFILES):
    """Yield (entry id, [ParamPoint, ...], profile text) batches covering the equality grid."""
    for eid in entries or EQUALITY_IDS:
        e = CATALOGUE[eid]
        kls = e.ks or ((1, 0),)
        for kl in kls:
            k, l = kl if isinstance(kl, tuple) else (kl, 0)
            for Q in Qs:
                for p in (ps if e.lp else (2.0,)):
                    base = ParamPoint(Q=Q, p=p, k=k, l=l)
                    for prof in profiles:
                        if e.critical:
                            pr = parse_profile(prof)
                            yield eid, [base.replace(R=R) for R in radius_grid(pr)], prof
                        else:
                            yield eid, [base.replace(alpha=a) for a in alpha_grid(e, base)], prof


def run_equality_grid(entries=None, tol=1e-8, progress=None, **kw):
    reports = []
    for eid, plist, prof in equality_grid(entries, **kw):
        reps = evaluate_identity_batch(eid, plist, prof, tol)
        reports.extend(reps)
        if progress:
            progress(eid, reps)
    return reports


INEQ_KS = {
    "INEQ-HR-even": (1, 2, 3), "INEQ-HR-odd": (1, 2, 3), "INEQ-Lp-even": (1, 2, 3), "INEQ-Lp-odd": (1, 2, 3),
    "INEQ-L2new-even": _kl_pairs(), "INEQ-L2new-odd": _kl_pairs(), "INEQ-LpHRnew-even": _kl_pairs(),
    "INEQ-LpHRnew-odd": _kl_pairs(), "INEQ-crit-even": (2, 3), "INEQ-crit-odd": (1, 2, 3),
    "UNC-even": (1, 2, 3), "UNC-odd": (0, 1, 2), "UNC-crit-1": (1, 2, 3), "UNC-crit-2": (0, 1, 2),
    "UNC-crit-3": (1, 2, 3), "UNC-crit-4": (0, 1, 2),
}
L2_ONLY = ("INEQ-H2", "INEQ-R2", "INEQ-HR-even", "INEQ-HR-odd", "INEQ-12", "INEQ-L2new-even", "INEQ-L2new-odd")


def inequality_grid(entries=None, Qs=GRID_Q, ps=GRID_P, profiles=GRID_PROFILES):
    """Yield (id, ParamPoint, profile text) inside every nonempty validity window."""
    for eid in entries or (INEQUALITY_IDS + UNCERTAINTY_IDS):
        for kl in INEQ_KS.get(eid, (1,)):
            k, l = kl if isinstance(kl, tuple) else (kl, 0)
            for Q in Qs:
                for p in ((2.0,) if eid in L2_ONLY else ps):
                    if eid in ("UNC-crit-1", "UNC-crit-2") and not p > 2:
                        continue
                    base = ParamPoint(Q=Q, p=p, k=k, l=l)
                    info = K.sharp_info(eid, base)
                    win = info.derived
                    if not (info.preconditions and win.lo < win.hi):
                        continue
                    crit = eid in CRITICAL_INEQ or eid.startswith("UNC-crit")
                    alphas = (0.0,) if crit else tuple(a for a in win.interior() if win.contains(a))
                    for prof in profiles:
                        if crit:
                            for R in sup_grid(parse_profile(prof)):
                                yield eid, base.replace(R=R), prof
                        else:
                            for a in alphas:
                                P_ = base.replace(alpha=a)
                                if K.sharp_info(eid, P_).preconditions:
                                    yield eid, P_, prof


def evaluate_any(entry_id, params: ParamPoint, f, tol=None, profile_name=None):
    """Dispatch on the id prefix: ID- equality, INEQ- inequality, UNC- uncertainty."""
    if entry_id.startswith("ID-"):
        return evaluate_identity(entry_id, params, f, 1e-8 if tol is None else tol, profile_name)
    if entry_id.startswith("INEQ-"):
        return evaluate_inequality(entry_id, params, f, 1e-9 if tol is None else tol, profile_name=profile_name)
    if entry_id.startswith("UNC-"):
        return evaluate_uncertainty(entry_id, params, f, 1e-9 if tol is None else tol, profile_name=profile_name)
    raise KeyError(f"unknown catalogue id {entry_id!r}")


def run_inequality_grid(entries=None, tol=1e-9, progress=None, **kw):
    reports = []
    for eid, P_, prof in inequality_grid(entries, **kw):
        rep = evaluate_any(eid, P_, prof, tol)
        reports.append(rep)
        if progress:
            progress(eid, [rep])
    return reports
