"""Closed-form constants, sharp constants and validity windows."""

from __future__ import annotations

import math
from dataclasses import dataclass, field


@dataclass(frozen=True)
class ParamPoint:
    Q: float
    p: float = 2.0
    alpha: float = 0.0
    k: int = 1
    l: int = 0
    R: float | None = None

    def __post_init__(self):
        if not self.p > 1:
            raise ValueError("p must exceed 1")

    @property
    def p_prime(self) -> float:
        return self.p / (self.p - 1.0)

    def replace(self, **kw) -> "ParamPoint":
        d = dict(Q=self.Q, p=self.p, alpha=self.alpha, k=self.k, l=self.l, R=self.R)
        d.update(kw)
        return ParamPoint(**d)

    def as_dict(self) -> dict:
        return {"Q": self.Q, "p": self.p, "alpha": self.alpha, "k": self.k, "l": self.l, "R": self.R}


@dataclass(frozen=True)
class ConstantValue:
    name: str
    value: float
    valid: bool

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise ValueError(f"constant {self.name} is not finite")


def c_alpha(Q, alpha):
    return (Q + 2 * alpha) * (Q - 4 - 2 * alpha) / 4


def c_p_alpha(Q, p, alpha):
    if not p > 1:
        raise ValueError("p must exceed 1")
    pp = p / (p - 1)
    return (Q - 2 * p - p * alpha) * (Q + pp * alpha) / (p * pp)


def d_p_alpha(Q, p, alpha):
    if not p > 1:
        raise ValueError("p must exceed 1")
    return (Q - p * (1 + alpha)) / p


def a_jQ(j, Q):
    return 2 * j * (Q - 2 * j - 2)


def spow(x, e):
    """Signed power |x|^(e-1) x, continuous at 0."""
    return math.copysign(abs(x) ** e, x) if x != 0 else 0.0


def prod(values):
    out = 1.0
    for v in values:  # ascending index order
        out *= v
    return out


def crit_even_product(Q, p, k):
    """((Q-2)/p' prod_{i=1}^{k-1} a_{i,Q})^p."""
    pp = p / (p - 1)
    return ((Q - 2) / pp * prod(a_jQ(i, Q) for i in range(1, k))) ** p


def crit_even_closed(Q, p, k):
    pp = p / (p - 1)
    return (2 ** (k - 1) * math.factorial(k - 1) / pp * prod(Q - 2 * i - 2 for i in range(k))) ** p


def crit_odd_product(Q, p, k):
    return (2 * k) ** p * crit_even_product(Q, p, k)


def crit_odd_closed(Q, p, k):
    pp = p / (p - 1)
    return (2**k * math.factorial(k) / pp * prod(Q - 2 * i - 2 for i in range(k))) ** p


def l2new_even_constant(Q, alpha, k, l):
    m = k - l
    # the i = 0 factor cancels against 4 / (Q - 2 alpha)^2; kept cancelled so
    # alpha = Q/2 is not a removable 0/0
    head = (Q + 2 * alpha) ** 2 / 4
    return head * prod((Q**2 - 4 * (2 * i + alpha) ** 2) / 4 for i in range(1, m)) ** 2


def l2new_even_via_c(Q, alpha, k, l):
    """The same constant written through c_alpha, as used in the induction."""
    m = k - l
    return ((Q + 4 * (m - 1) + 2 * alpha) / 2) ** 2 * prod(c_alpha(Q, 2 * i + alpha) for i in range(m - 1)) ** 2


def l2new_odd_constant(Q, alpha, k, l):
    m = k - l
    return prod((Q**2 - 4 * (1 + alpha + 2 * i) ** 2) / 4 for i in range(m)) ** 2


def lphrnew_even_constant(Q, p, alpha, k, l):
    pp = p / (p - 1)
    m = k - l
    # p / |Q - p alpha| cancels the i = 0 factor of the product
    inner = (Q + pp * alpha) / pp
    inner *= prod((Q - p * (2 * i + alpha)) * (Q + pp * (2 * i + alpha)) / (p * pp) for i in range(1, m))
    return abs(inner) ** p


def lphrnew_odd_constant(Q, p, alpha, k, l):
    pp = p / (p - 1)
    m = k - l
    inner = prod((Q - p * (2 * i + 1 + alpha)) * (Q + pp * (2 * i + 1 + alpha)) / (p * pp) for i in range(m))
    return abs(inner) ** p


# ----------------------------------------------------------------- windows

INF = math.inf


@dataclass(frozen=True)
class Window:
    """Open interval of alpha, plus a parameter precondition."""

    lo: float
    hi: float
    note: str = ""
    excluded: tuple = ()

    def contains(self, alpha) -> bool:
        return self.lo < alpha < self.hi and all(abs(alpha - e) > 1e-12 for e in self.excluded)

    def interior(self, fractions=(0.1, 0.3, 0.5, 0.7, 0.9)):
        if self.lo == -INF and self.hi == INF:
            return [-2.0, -1.0, 0.0, 1.0, 2.0]
        if self.lo == -INF:
            return [self.hi - 5 * (1 - f) for f in fractions]
        if self.hi == INF:
            return [self.lo + 5 * f for f in fractions]
        w = self.hi - self.lo
        return [self.lo + f * w for f in fractions]

    def exterior(self):
        if self.lo == -INF and self.hi == INF:
            return [-3.5, 3.5]
        out = []
        w = (self.hi - self.lo) if math.isfinite(self.hi - self.lo) else 5.0
        if self.lo > -INF:
            out.append(self.lo - 0.3 * w)
        if self.hi < INF:
            out.append(self.hi + 0.3 * w)
        if len(out) == 1:
            # half-line: a second point further out
            out.append(self.lo - 0.8 * w if self.lo > -INF else self.hi + 0.8 * w)
        return out


REAL_LINE = Window(-INF, INF)
EMPTY = Window(0.0, 0.0, "empty")


@dataclass(frozen=True)
class SharpInfo:
    """Sharp constant of an inequality entry with its two windows.

    ``printed`` is the window as stated with the theorem; ``derived`` is the
    set of alpha where every dropped remainder has a nonnegative coefficient.
    """

    name: str
    value: float
    printed: Window
    derived: Window
    preconditions: bool = True
    notes: tuple = field(default_factory=tuple)


def _const_window(lo, hi, ok=True, note=""):
    return Window(lo, hi, note) if ok and lo < hi else Window(lo, lo, note or "empty")


def sharp_info(theorem_id: str, P: ParamPoint) -> SharpInfo:
    Q, p, a, k, l = P.Q, P.p, P.alpha, P.k, P.l
    pp = p / (p - 1) if p > 1 else INF
    tid = theorem_id.replace("ID-", "INEQ-")
    if tid == "INEQ-H2":
        return SharpInfo("((Q-2-2a)/2)^2", ((Q - 2 - 2 * a) / 2) ** 2, REAL_LINE, REAL_LINE, Q >= 3)
    if tid == "INEQ-R2":
        w = Window(-Q / 2, (Q - 4) / 2)
        return SharpInfo("c_a^2", c_alpha(Q, a) ** 2, w, w, Q >= 5)
    if tid == "INEQ-HR-even":
        val = prod(c_alpha(Q, 2 * i + a) for i in range(k)) ** 2
        w = Window(-Q / 2, (Q - 4 * k) / 2)
        return SharpInfo("(prod c_{2i+a})^2", val, w, w, Q >= 4 * k + 1)
    if tid == "INEQ-HR-odd":
        val = ((Q - 2 - 2 * a) / 2 * prod(c_alpha(Q, 2 * i + 1 + a) for i in range(k))) ** 2
        w = Window(-(Q + 2) / 2, (Q - 4 * k - 2) / 2)
        return SharpInfo("((Q-2-2a)/2 prod c_{2i+1+a})^2", val, w, w, Q >= 4 * k + 3 and k >= 1)
    if tid == "INEQ-12":
        return SharpInfo("(Q+2a)^2/4", (Q + 2 * a) ** 2 / 4, REAL_LINE, REAL_LINE, Q >= 5)
    if tid == "INEQ-L2new-even":
        val = l2new_even_constant(Q, a, k, l)
        w = REAL_LINE if k == l + 1 else Window(-Q / 2, (Q - 4 * (k - l - 1)) / 2)
        return SharpInfo("4/(Q-2a)^2 (prod (Q^2-4(2i+a)^2)/4)^2", val, w, w, Q >= 4 * k + 1 and k >= l + 1)
    if tid == "INEQ-L2new-odd":
        val = l2new_odd_constant(Q, a, k, l)
        w = REAL_LINE if k == l + 1 else Window(-(Q + 2) / 2, (Q - 4 * (k - l) + 2) / 2)
        return SharpInfo("(prod (Q^2-4(1+a+2i)^2)/4)^2", val, w, w, Q >= 4 * k + 1 and k >= l + 1)
    if tid == "INEQ-LpH":
        w = Window(-INF, INF, excluded=(Q / p - 1,))
        return SharpInfo("|d_{p,a}|^p", abs(d_p_alpha(Q, p, a)) ** p, w, REAL_LINE, 1 < p < Q)
    if tid == "INEQ-LpR":
        w = Window(-(p - 1) * Q / p, (Q - 2 * p) / p)
        return SharpInfo("c_{p,a}^p", abs(c_p_alpha(Q, p, a)) ** p, w, w, 1 < p < Q / 2)
    if tid == "INEQ-Lp-even":
        val = abs(prod(c_p_alpha(Q, p, 2 * i + a) for i in range(k))) ** p
        w = Window(-Q * (p - 1) / p, (Q - 2 * p * k) / p)
        return SharpInfo("(prod c_{p,2i+a})^p", val, w, w, 1 < p < Q / (2 * k))
    if tid == "INEQ-Lp-odd":
        val = abs(d_p_alpha(Q, p, a) * prod(c_p_alpha(Q, p, 2 * i + 1 + a) for i in range(k))) ** p
        printed = Window(-(Q + pp) / pp, (Q - p * (2 * k + 1)) / p,
                         "the Euclidean analogue states the lower end as -2/p'")
        return SharpInfo("d_{p,a}^p (prod c_{p,2i+1+a})^p", val, printed, printed, 1 < p < Q / (2 * k + 1),
                         ("lower window end differs from the Euclidean analogue",))
    if tid == "INEQ-Lp12":
        return SharpInfo("|Q+p'a|^p/p'^p", abs(Q + pp * a) ** p / pp**p, REAL_LINE, REAL_LINE, 1 < p < Q / 2)
    if tid == "INEQ-LpHRnew-even":
        val = lphrnew_even_constant(Q, p, a, k, l)
        if k == l + 1:
            return SharpInfo("p^p/|Q-pa|^p |prod|^p", val, REAL_LINE, REAL_LINE, True)
        printed = Window(-Q * (p - 1) / p, (Q - 2 * p * (k - l - 1)) / 2)
        derived = Window(-Q * (p - 1) / p, (Q - 2 * p * (k - l - 1)) / p)
        return SharpInfo("p^p/|Q-pa|^p |prod|^p", val, printed, derived, True,
                         ("printed upper end divides by 2 where the remainder signs give /p",))
    if tid == "INEQ-LpHRnew-odd":
        val = lphrnew_odd_constant(Q, p, a, k, l)
        if k == l + 1:
            return SharpInfo("|prod|^p", val, REAL_LINE, REAL_LINE, True)
        w = Window(-(Q + pp) / pp, (Q - p * (2 * (k - l - 1) + 1)) / p)
        return SharpInfo("|prod|^p", val, w, w, True)
    if tid == "INEQ-crit-H":
        return SharpInfo("((p-1)/p)^p", ((p - 1) / p) ** p, REAL_LINE, REAL_LINE, Q >= 2)
    if tid == "INEQ-crit-R":
        return SharpInfo("((Q-2)/p')^p", ((Q - 2) / pp) ** p, REAL_LINE, REAL_LINE, Q >= 3)
    if tid == "INEQ-crit-even":
        ok = 2 <= k < Q / 2
        return SharpInfo("(2^{k-1}(k-1)!/p' prod (Q-2i-2))^p", crit_even_closed(Q, p, k), REAL_LINE, REAL_LINE, ok)
    if tid == "INEQ-crit-odd":
        ok = 1 <= k <= (Q - 1) / 2
        return SharpInfo("(2^k k!/p' prod (Q-2i-2))^p", crit_odd_closed(Q, p, k), REAL_LINE, REAL_LINE, ok)
    if tid == "UNC-even":
        val = prod(c_p_alpha(Q, p, 2 * i + a) for i in range(k))
        w = Window(-Q * (p - 1) / p, (Q - 2 * p * k) / p)
        return SharpInfo("prod c_{p,2i+a}", val, w, w, Q > 2 * k * p and k >= 1)
    if tid == "UNC-odd":
        val = abs(d_p_alpha(Q, p, a) * prod(c_p_alpha(Q, p, 2 * i + 1 + a) for i in range(k)))
        w = REAL_LINE if k == 0 else Window(-(Q + pp) / pp, (Q - p * (2 * k + 1)) / p)
        return SharpInfo("|d prod c_{p,2i+1+a}|", val, w, w, Q > (2 * k + 1) * p)
    if tid in ("UNC-crit-1", "UNC-crit-3"):
        val = 2 ** (k - 1) * math.factorial(k - 1) / pp * prod(Q - 2 * i - 2 for i in range(k))
        return SharpInfo("2^{l-1}(l-1)!/p' prod (Q-2i-2)", val, REAL_LINE, REAL_LINE, 1 <= k < Q / 2)
    if tid in ("UNC-crit-2", "UNC-crit-4"):
        val = 2**k * math.factorial(k) / pp * prod(Q - 2 * i - 2 for i in range(k))
        return SharpInfo("2^l l!/p' prod (Q-2i-2)", val, REAL_LINE, REAL_LINE, 0 <= k <= (Q - 1) / 2)
    raise KeyError(f"unknown theorem id {theorem_id!r}")


SHARP_IDS = (
    "INEQ-H2", "INEQ-R2", "INEQ-HR-even", "INEQ-HR-odd", "INEQ-12", "INEQ-L2new-even", "INEQ-L2new-odd",
    "INEQ-LpH", "INEQ-LpR", "INEQ-Lp-even", "INEQ-Lp-odd", "INEQ-Lp12", "INEQ-LpHRnew-even",
    "INEQ-LpHRnew-odd", "INEQ-crit-H", "INEQ-crit-R", "INEQ-crit-even", "INEQ-crit-odd",
    "UNC-even", "UNC-odd", "UNC-crit-1", "UNC-crit-2", "UNC-crit-3", "UNC-crit-4",
)


def sharp_constant(theorem_id: str, params: ParamPoint) -> ConstantValue:
    info = sharp_info(theorem_id, params)
    valid = bool(info.preconditions and info.printed.contains(params.alpha))
    return ConstantValue(info.name, float(info.value), valid)


def compare_factorial_products(k_range):
    """Both end-of-section factorial comparisons for each k."""
    rows = []
    for k in k_range:
        if k < 1:
            raise ValueError("k must be >= 1")
        first_lhs = 2 ** (2 * k - 2) * math.factorial(2 * k - 1)
        first_rhs = k * prod((2 * i + 1) * (4 * k - 2 * i - 3) for i in range(k - 1))
        second_lhs = (2 * k + 1) / 2 * prod((2 * k - 2 * i - 1) * (2 * k + 2 * i + 1) for i in range(k))
        second_rhs = 2 ** (2 * k - 1) * math.factorial(2 * k)
        rows.append({
            "k": k,
            "first_lhs": float(first_lhs), "first_rhs": float(first_rhs), "first_holds": first_lhs >= first_rhs,
            "second_lhs": float(second_lhs), "second_rhs": float(second_rhs), "second_holds": second_lhs > second_rhs,
        })
    return rows


def constants_table(P: ParamPoint) -> list:
    """Every named constant at a parameter point, with validity flags."""
    Q, p, a, k = P.Q, P.p, P.alpha, P.k
    rows = [
        ConstantValue("c_alpha", c_alpha(Q, a), True),
        ConstantValue("c_p_alpha", c_p_alpha(Q, p, a), True),
        ConstantValue("d_p_alpha", d_p_alpha(Q, p, a), True),
        ConstantValue(f"a_{k},Q", float(a_jQ(k, Q)), True),
    ]
    for tid in SHARP_IDS:
        try:
            cv = sharp_constant(tid, P)
        except (ValueError, ZeroDivisionError):
            continue
        rows.append(ConstantValue(tid, cv.value, cv.valid))
    return rows
