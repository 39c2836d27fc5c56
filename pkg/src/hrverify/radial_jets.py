"""Exact-derivative jets of radial test functions.

A profile is an immutable expression tree (atoms and combinators).  Evaluating
it at radii ``r`` yields a :class:`Jet` whose ``derivs[d]`` is the d-th
derivative in r.  All arithmetic happens directly on derivative values through
Leibniz-type recurrences, so products, exponentials and powers of jets share a
single code path.

Radii may be scalars or numpy arrays; every operation broadcasts over them.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

import numpy as np

K_MAX = 3
DEFAULT_ORDER = 2 * K_MAX + 1

# Below this ramp argument exp(-1/t) is under 1e-304; the ramp is taken as flat.
_RAMP_FLAT = 1.0 / 700.0


@dataclass(frozen=True)
class Jet:
    """Value and derivatives 0..order of a radial function at ``radius``."""

    radius: np.ndarray | float
    derivs: np.ndarray

    def __post_init__(self):
        if np.any(np.asarray(self.radius) <= 0):
            raise ValueError("jet radius must be positive")
        if len(self.derivs) == 0:
            raise ValueError("jet needs at least the value entry")

    @property
    def order(self) -> int:
        return len(self.derivs) - 1

    @property
    def value(self):
        return self.derivs[0]

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.derivs)))


def _binom_rows(n):
    return [[math.comb(d, i) for i in range(d + 1)] for d in range(n + 1)]


_BINOM = _binom_rows(40)


def jet_mul(a, b):
    """Leibniz product of two derivative arrays of equal length."""
    n = min(len(a), len(b))
    out = []
    for d in range(n):
        row = _BINOM[d]
        acc = a[0] * b[d]
        for i in range(1, d + 1):
            acc = acc + row[i] * a[i] * b[d - i]
        out.append(acc)
    return np.array(out)


def jet_exp(u):
    """Derivatives of exp(u) from those of u (h' = u' h)."""
    n = len(u)
    h = [np.exp(u[0])]
    for d in range(1, n):
        row = _BINOM[d - 1]
        acc = u[1] * h[d - 1]
        for i in range(1, d):
            acc = acc + row[i] * u[i + 1] * h[d - 1 - i]
        h.append(acc)
    return np.array(h)


def jet_recip(u):
    """Derivatives of 1/u (u v = 1)."""
    n = len(u)
    inv = 1.0 / u[0]
    v = [inv]
    for d in range(1, n):
        row = _BINOM[d]
        acc = row[1] * u[1] * v[d - 1]
        for i in range(2, d + 1):
            acc = acc + row[i] * u[i] * v[d - i]
        v.append(-acc * inv)
    return np.array(v)


def jet_pow(u, gamma):
    """Derivatives of u**gamma for u with nonzero value (u h' = gamma u' h)."""
    n = len(u)
    inv = 1.0 / u[0]
    h = [u[0] ** gamma]
    for d in range(1, n):
        # differentiate u h' = gamma u' h  (d-1) times and solve for h^(d)
        row = _BINOM[d - 1]
        acc = 0.0
        for i in range(d):
            acc = acc + row[i] * gamma * u[i + 1] * h[d - 1 - i]
        for i in range(1, d):
            acc = acc - row[i] * u[i] * h[d - i]
        h.append(acc * inv)
    return np.array(h)


def _variable(r, order, scale=1.0, shift=0.0):
    """Jet of t = scale * r + shift."""
    out = [scale * r + shift]
    if order >= 1:
        out.append(np.full_like(r, scale))
    for _ in range(2, order + 1):
        out.append(np.zeros_like(r))
    return np.array(out)


def _ramp(t, order):
    """Mollifier ramp s(t) = e^{-1/t} / (e^{-1/t} + e^{-1/(1-t)}) with jets.

    ``t`` is a jet of the ramp argument.  Outside (0, 1) the ramp is flat.
    """
    t0 = t[0]
    out = np.zeros((order + 1,) + np.shape(t0))
    hi = t0 >= 1.0 - _RAMP_FLAT
    out[0][hi] = 1.0
    mid = (t0 > _RAMP_FLAT) & ~hi
    if np.any(mid):
        tm = t[:, mid]
        e1 = jet_exp(-jet_recip(tm))
        one_minus = -tm
        one_minus[0] = 1.0 - tm[0]
        e2 = jet_exp(-jet_recip(one_minus))
        out[:, mid] = jet_mul(e1, jet_recip(e1 + e2))
    return out


class Profile:
    """Base class of radial profile expression trees."""

    support: tuple = (0.0, math.inf)
    max_order: int = DEFAULT_ORDER
    is_real: bool = True

    @property
    def strict_support(self) -> bool:
        lo, hi = self.support
        return lo > 0 and hi < math.inf

    def breakpoints(self) -> tuple:
        return ()

    def describe(self) -> str:
        raise NotImplementedError

    def _derivs(self, r, order):
        raise NotImplementedError

    def derivs(self, r, order):
        """Derivative array of shape (order+1, *r.shape); zero outside support."""
        r = np.asarray(r, dtype=float)
        if r.ndim == 0:
            return self.derivs(r.reshape(1), order)[:, 0]
        lo, hi = self.support
        inside = (r > lo) & (r < hi)
        dtype = float if self.is_real else complex
        if np.all(inside):
            return np.asarray(self._derivs(r, order), dtype=dtype)
        out = np.zeros((order + 1,) + r.shape, dtype=dtype)
        if np.any(inside):
            out[:, inside] = self._derivs(r[inside], order)
        return out

    def __repr__(self):
        return f"<profile {self.describe()}>"


def _fmt(x):
    return repr(float(x)) if not float(x).is_integer() else str(int(x))


@dataclass(frozen=True, repr=False)
class Power(Profile):
    a: float
    max_order: int = DEFAULT_ORDER

    def _derivs(self, r, order):
        out = []
        coef = 1.0
        for d in range(order + 1):
            out.append(coef * r ** (self.a - d))
            coef *= self.a - d
        return np.array(out)

    def describe(self):
        return f"pow:{_fmt(self.a)}"


@dataclass(frozen=True, repr=False)
class Constant(Profile):
    c: complex
    max_order: int = DEFAULT_ORDER

    @property
    def is_real(self):
        return complex(self.c).imag == 0

    def _derivs(self, r, order):
        out = np.zeros((order + 1,) + r.shape, dtype=float if self.is_real else complex)
        out[0] = self.c if not self.is_real else complex(self.c).real
        return out

    def describe(self):
        return f"const:{_fmt(complex(self.c).real)}"


@dataclass(frozen=True, repr=False)
class LogPower(Profile):
    """(ln(R/r))**gamma on (0, R); any r if gamma is a nonnegative integer."""

    R: float
    gamma: float
    max_order: int = DEFAULT_ORDER

    def __post_init__(self):
        if self.R <= 0:
            raise ValueError("log-power needs R > 0")

    @property
    def integer_gamma(self):
        return float(self.gamma).is_integer() and self.gamma >= 0

    def _derivs(self, r, order):
        if not self.integer_gamma and np.any(r >= self.R):
            raise ValueError("log-power with non-integer exponent is undefined for r >= R")
        u = [np.log(self.R / r)]
        for d in range(1, order + 1):
            u.append((-1.0) ** d * math.factorial(d - 1) / r**d)
        u = np.array(u)
        if self.integer_gamma:
            h = _variable(r, order, 0.0, 1.0)
            for _ in range(int(self.gamma)):
                h = jet_mul(h, u)
            return h
        return jet_pow(u, self.gamma)

    def describe(self):
        return f"logpow:R={_fmt(self.R)},g={_fmt(self.gamma)}"


@dataclass(frozen=True, repr=False)
class Cutoff(Profile):
    """Equals 1 on (0, inner], 0 on [outer, inf), smooth mollifier ramp between."""

    inner: float
    outer: float
    max_order: int = DEFAULT_ORDER

    def __post_init__(self):
        if not 0 < self.inner < self.outer:
            raise ValueError("cutoff needs 0 < inner < outer")

    @property
    def support(self):
        return (0.0, self.outer)

    def breakpoints(self):
        return (self.inner, self.outer)

    def _derivs(self, r, order):
        w = self.outer - self.inner
        s = _ramp(_variable(r, order, 1.0 / w, -self.inner / w), order)
        s = -s
        s[0] = 1.0 + s[0]
        return s

    def describe(self):
        return f"cutoff:{_fmt(self.inner)},{_fmt(self.outer)}"


@dataclass(frozen=True, repr=False)
class Bump(Profile):
    """Smooth bump supported in [a, b]: ramp up on [a, m], down on [m, b]."""

    a: float
    b: float
    max_order: int = DEFAULT_ORDER

    def __post_init__(self):
        if not 0 < self.a < self.b:
            raise ValueError("bump needs 0 < a < b")

    @property
    def support(self):
        return (self.a, self.b)

    def breakpoints(self):
        return (self.a, 0.5 * (self.a + self.b), self.b)

    def _derivs(self, r, order):
        h = 0.5 * (self.b - self.a)
        up = _ramp(_variable(r, order, 1.0 / h, -self.a / h), order)
        down = _ramp(_variable(r, order, -1.0 / h, self.b / h), order)
        return jet_mul(up, down)

    def describe(self):
        return f"bump:{_fmt(self.a)},{_fmt(self.b)}"


def _hull(supports):
    return (min(s[0] for s in supports), max(s[1] for s in supports))


@dataclass(frozen=True, repr=False)
class Sum(Profile):
    terms: tuple

    @property
    def support(self):
        return _hull([t.support for t in self.terms])

    @property
    def max_order(self):
        return min(t.max_order for t in self.terms)

    @property
    def is_real(self):
        return all(t.is_real for t in self.terms)

    def breakpoints(self):
        return tuple(sorted({b for t in self.terms for b in t.breakpoints()}))

    def _derivs(self, r, order):
        out = self.terms[0].derivs(r, order)
        for t in self.terms[1:]:
            out = out + t.derivs(r, order)
        return out

    def describe(self):
        return " + ".join(t.describe() for t in self.terms)


@dataclass(frozen=True, repr=False)
class Product(Profile):
    factors: tuple

    @property
    def support(self):
        lo = max(f.support[0] for f in self.factors)
        hi = min(f.support[1] for f in self.factors)
        return (lo, max(lo, hi))

    @property
    def max_order(self):
        return min(f.max_order for f in self.factors)

    @property
    def is_real(self):
        return all(f.is_real for f in self.factors)

    def breakpoints(self):
        lo, hi = self.support
        return tuple(sorted({b for f in self.factors for b in f.breakpoints() if lo <= b <= hi}))

    def _derivs(self, r, order):
        out = self.factors[0].derivs(r, order)
        for f in self.factors[1:]:
            out = jet_mul(out, f.derivs(r, order))
        return out

    def describe(self):
        parts = []
        for f in self.factors:
            s = f.describe()
            parts.append(f"({s})" if isinstance(f, Sum) else s)
        return "*".join(parts)


@dataclass(frozen=True, repr=False)
class Scaled(Profile):
    c: complex
    base: Profile

    @property
    def support(self):
        return self.base.support

    @property
    def max_order(self):
        return self.base.max_order

    @property
    def is_real(self):
        return self.base.is_real and complex(self.c).imag == 0

    def breakpoints(self):
        return self.base.breakpoints()

    def _derivs(self, r, order):
        c = complex(self.c).real if complex(self.c).imag == 0 else self.c
        return c * self.base.derivs(r, order)

    def describe(self):
        s = self.base.describe()
        return f"scale:{_fmt(complex(self.c).real)}*" + (f"({s})" if isinstance(self.base, Sum) else s)


@dataclass(frozen=True, repr=False)
class Dilated(Profile):
    """r -> base(lam * r)."""

    lam: float
    base: Profile

    def __post_init__(self):
        if self.lam <= 0:
            raise ValueError("dilation factor must be positive")

    @property
    def support(self):
        lo, hi = self.base.support
        return (lo / self.lam, hi / self.lam)

    @property
    def max_order(self):
        return self.base.max_order

    @property
    def is_real(self):
        return self.base.is_real

    def breakpoints(self):
        return tuple(b / self.lam for b in self.base.breakpoints())

    def _derivs(self, r, order):
        d = self.base.derivs(self.lam * r, order)
        powers = self.lam ** np.arange(order + 1)
        return d * powers.reshape((-1,) + (1,) * (d.ndim - 1))

    def describe(self):
        return f"dilate:{_fmt(self.lam)}({self.base.describe()})"


@dataclass(frozen=True, repr=False)
class Polar(Profile):
    """rho(r) * exp(i theta(r)) with rho > 0 on the open support of rho."""

    rho: Profile
    theta: Profile
    is_real: bool = field(default=False, init=False)

    def __post_init__(self):
        if not (self.rho.is_real and self.theta.is_real):
            raise ValueError("polar parts must be real profiles")
        lo, hi = self.rho.support
        if lo > 0 and hi < math.inf:
            w = hi - lo
            probe = np.linspace(lo + 0.02 * w, hi - 0.02 * w, 97)
            if np.any(self.rho.derivs(probe, 0)[0] <= 0):
                raise ValueError("polar modulus must be positive on the open support")

    @property
    def support(self):
        return self.rho.support

    @property
    def max_order(self):
        return min(self.rho.max_order, self.theta.max_order)

    def breakpoints(self):
        return self.rho.breakpoints()

    def polar_derivs(self, r, order):
        """(rho, theta) derivative arrays."""
        return self.rho.derivs(r, order), self.theta.derivs(r, order)

    def _derivs(self, r, order):
        rho = self.rho.derivs(r, order)
        theta = self.theta.derivs(r, order)
        if np.any(rho[0] < 0):
            raise ValueError("negative polar modulus")
        return jet_mul(rho.astype(complex), jet_exp(1j * theta))

    def describe(self):
        return f"polar({self.rho.describe()}, theta={self.theta.describe()})"


@dataclass(frozen=True, repr=False)
class Supported(Profile):
    """base restricted to [lo, hi]; the caller asserts base vanishes outside."""

    base: Profile
    lo: float
    hi: float

    def __post_init__(self):
        if not 0 <= self.lo < self.hi:
            raise ValueError("supported needs 0 <= lo < hi")

    @property
    def support(self):
        blo, bhi = self.base.support
        return (max(self.lo, blo), min(self.hi, bhi))

    @property
    def max_order(self):
        return self.base.max_order

    @property
    def is_real(self):
        return self.base.is_real

    def breakpoints(self):
        lo, hi = self.support
        return tuple(b for b in self.base.breakpoints() if lo <= b <= hi)

    def _derivs(self, r, order):
        return self.base.derivs(r, order)

    def describe(self):
        return f"supported:{_fmt(self.lo)},{_fmt(self.hi)}({self.base.describe()})"


def strip_constant_phase(f: Profile, order=4, n=257, rel=1e-12) -> Profile:
    """rho for a polar profile whose phase is numerically constant, else f unchanged.

    Every catalogue term depends on f only up to a constant unimodular factor,
    so dropping such a phase is exact; keeping it would leave rounding-level
    imaginary parts that blur the zeros of real combinations.
    """
    if not isinstance(f, Polar):
        return f
    lo, hi = f.support
    if not (lo > 0 and math.isfinite(hi)):
        return f
    r = np.linspace(lo, hi, n + 2)[1:-1]
    th = np.real(f.theta.derivs(r, min(order, f.theta.max_order)))[1:]
    scale = (1.0 / hi) ** np.arange(1, len(th) + 1)
    if np.all(np.max(np.abs(th), axis=1) <= rel * scale):
        return f.rho
    return f


@dataclass(frozen=True)
class CutoffSpec:
    inner: float
    outer: float

    def __post_init__(self):
        if not 0 < self.inner < self.outer:
            raise ValueError("cutoff needs 0 < inner < outer")


def make_power(a) -> Profile:
    return Power(float(a))


def make_log_power(R, gamma) -> Profile:
    if gamma == 0:
        return Constant(1.0)
    return LogPower(float(R), float(gamma))


def make_cutoff(spec: CutoffSpec) -> Profile:
    return Cutoff(spec.inner, spec.outer)


def make_bump(a, b) -> Profile:
    return Bump(float(a), float(b))


def complex_polar(rho: Profile, theta: Profile) -> Profile:
    return Polar(rho, theta)


def combine(op, *args) -> Profile:
    """Build add/mul/scale/dilate/complex_polar combinations."""
    if op == "add":
        return Sum(tuple(args))
    if op == "mul":
        return Product(tuple(args))
    if op == "scale":
        c, f = args
        return Scaled(c, f)
    if op == "dilate":
        lam, f = args
        return Dilated(float(lam), f)
    if op == "complex_polar":
        return Polar(*args)
    raise ValueError(f"unknown combinator {op!r}")


def eval_jet(f: Profile, r, order=None) -> Jet:
    """Jet of f at radius (or radii) r with derivatives 0..order."""
    if order is None:
        order = f.max_order
    if order > f.max_order:
        raise ValueError(f"order {order} exceeds profile max_order {f.max_order}")
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr <= 0):
        raise ValueError("radius must be positive")
    return Jet(r if np.ndim(r) == 0 else r_arr, f.derivs(r_arr, order))


def with_max_order(f: Profile, order: int) -> Profile:
    """Copy of the profile tree with every atom's order cap set to ``order``."""
    if isinstance(f, (Power, Constant, LogPower, Cutoff, Bump)):
        return type(f)(**{**{k: getattr(f, k) for k in f.__dataclass_fields__}, "max_order": order})
    if isinstance(f, Sum):
        return Sum(tuple(with_max_order(t, order) for t in f.terms))
    if isinstance(f, Product):
        return Product(tuple(with_max_order(t, order) for t in f.factors))
    if isinstance(f, Scaled):
        return Scaled(f.c, with_max_order(f.base, order))
    if isinstance(f, Dilated):
        return Dilated(f.lam, with_max_order(f.base, order))
    if isinstance(f, Polar):
        return Polar(with_max_order(f.rho, order), with_max_order(f.theta, order))
    if isinstance(f, Supported):
        return Supported(with_max_order(f.base, order), f.lo, f.hi)
    raise TypeError(type(f))


# ---------------------------------------------------------------- grammar

_NUM = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"
_TOKEN = re.compile(
    rf"\s*(?:(?P<atom>[a-z]+):(?P<args>(?:[A-Za-z]+=)?{_NUM}(?:\s*,\s*(?:[A-Za-z]+=)?{_NUM})*)"
    rf"|(?P<polar>polar\()|(?P<theta>theta\s*=)|(?P<sym>[()*+,]))"
)


class ProfileSyntaxError(ValueError):
    pass


def _tokenize(text):
    pos, out = 0, []
    text = text.strip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ProfileSyntaxError(f"cannot parse profile near {text[pos:]!r}")
        if m.group("atom"):
            out.append(("atom", m.group("atom"), m.group("args")))
        elif m.group("polar"):
            out.append(("polar",))
        elif m.group("theta"):
            out.append(("theta",))
        else:
            out.append(("sym", m.group("sym")))
        pos = m.end()
        while pos < len(text) and text[pos].isspace():
            pos += 1
    return out


def _atom(name, args):
    parts = [a.strip() for a in args.split(",")]
    kw = dict(p.split("=") for p in parts if "=" in p)
    pos = [float(p) for p in parts if "=" not in p]
    try:
        if name == "pow":
            return make_power(*pos)
        if name == "bump":
            return make_bump(*pos)
        if name == "cutoff":
            return make_cutoff(CutoffSpec(*pos))
        if name == "const":
            return Constant(*pos)
        if name == "logpow":
            return make_log_power(float(kw["R"]), float(kw["g"]))
    except (TypeError, KeyError) as exc:
        raise ProfileSyntaxError(f"bad arguments for {name}: {args}") from exc
    raise ProfileSyntaxError(f"unknown profile atom {name!r}")


class _Parser:
    def __init__(self, tokens):
        self.toks = tokens
        self.i = 0

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else None

    def take(self, sym=None):
        tok = self.peek()
        if tok is None or (sym is not None and tok != ("sym", sym)):
            raise ProfileSyntaxError(f"expected {sym!r}, got {tok}")
        self.i += 1
        return tok

    def expr(self):
        terms = [self.term()]
        while self.peek() == ("sym", "+"):
            self.take("+")
            terms.append(self.term())
        return terms[0] if len(terms) == 1 else Sum(tuple(terms))

    def term(self):
        factors, scale = [], 1.0
        pending = []
        while True:
            tok = self.peek()
            if tok and tok[0] == "atom" and tok[1] == "scale":
                self.i += 1
                scale *= float(tok[2])
            elif tok and tok[0] == "atom" and tok[1] == "dilate":
                self.i += 1
                self.take("(")
                inner = self.expr()
                self.take(")")
                factors.append(Dilated(float(tok[2]), inner))
            else:
                factors.append(self.factor())
            pending.append(None)
            if self.peek() == ("sym", "*"):
                self.take("*")
                continue
            break
        if not factors:
            raise ProfileSyntaxError("scale needs a profile to act on")
        base = factors[0] if len(factors) == 1 else Product(tuple(factors))
        return base if scale == 1.0 else Scaled(scale, base)

    def factor(self):
        tok = self.peek()
        if tok is None:
            raise ProfileSyntaxError("unexpected end of profile")
        if tok[0] == "atom":
            self.i += 1
            return _atom(tok[1], tok[2])
        if tok[0] == "polar":
            self.i += 1
            rho = self.expr()
            self.take(",")
            if self.peek() != ("theta",):
                raise ProfileSyntaxError("polar needs theta=<profile>")
            self.i += 1
            theta = self.expr()
            self.take(")")
            return Polar(rho, theta)
        if tok == ("sym", "("):
            self.take("(")
            e = self.expr()
            self.take(")")
            return e
        raise ProfileSyntaxError(f"unexpected token {tok}")


def parse_profile(text: str) -> Profile:
    """Parse the string grammar, e.g. ``polar(bump:1,2, theta=pow:1)``."""
    p = _Parser(_tokenize(text))
    prof = p.expr()
    if p.peek() is not None:
        raise ProfileSyntaxError(f"trailing input in profile {text!r}")
    return prof
