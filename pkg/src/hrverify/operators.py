"""Radial operators acting on jets.

R is d/dr, R2 = R^2 + (Q-1)/r R.  Jets here are derivative arrays (index d is
the d-th derivative) so that composing operators is just arithmetic on the
leading axis.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

from .radial_jets import Jet, Profile


@dataclass(frozen=True)
class GroupContext:
    """Homogeneous dimension and the mass of the unit quasi-sphere."""

    Q: float
    sphere_mass: float = 1.0

    def __post_init__(self):
        if not self.Q > 0:
            raise ValueError("Q must be positive")
        if not self.sphere_mass > 0:
            raise ValueError("sphere_mass must be positive")


def _as_derivs(j):
    return j.derivs if isinstance(j, Jet) else np.asarray(j)


def _wrap(like, derivs):
    if isinstance(like, Jet):
        return Jet(like.radius, derivs)
    return derivs


def shift_R(derivs):
    if len(derivs) < 2:
        raise ValueError("R needs a jet of order >= 1")
    return derivs[1:]


def shift_R2(Q, derivs, r):
    """R2 on a derivative array at radii r; result has two fewer entries."""
    n = len(derivs)
    if n < 3:
        raise ValueError("R2 needs a jet of order >= 2")
    r = np.asarray(r, dtype=float)
    inv = 1.0 / r
    # (1/r)^{(m)} = (-1)^m m! / r^{m+1}
    recip = [inv]
    for m in range(1, n - 2):
        recip.append(-m * recip[-1] * inv)
    out = []
    for d in range(n - 2):
        acc = derivs[d + 2]
        lower = 0.0
        for m in range(d + 1):
            lower = lower + math.comb(d, m) * recip[m] * derivs[d + 1 - m]
        out.append(acc + (Q - 1) * lower)
    return np.array(out)


def apply_R(j):
    return _wrap(j, shift_R(_as_derivs(j)))


def apply_R2(ctx: GroupContext, j: Jet):
    if not isinstance(j, Jet):
        raise TypeError("apply_R2 needs a Jet (radius is required)")
    return Jet(j.radius, shift_R2(ctx.Q, j.derivs, j.radius))


def apply_iterate(ctx: GroupContext, j: Jet, k: int, mixed: bool = False):
    """R2 applied k times, then R once if ``mixed``."""
    need = 2 * k + (1 if mixed else 0)
    if j.order < need:
        raise ValueError(f"jet order {j.order} too small for R2^{k}" + (" then R" if mixed else ""))
    d = j.derivs
    for _ in range(k):
        d = shift_R2(ctx.Q, d, j.radius)
    if mixed:
        d = shift_R(d)
    return Jet(j.radius, d)


def apply_conj(ctx: GroupContext, j: Jet, a: float, b: float):
    """Value of r^a d/dr (r^b f) = r^{a+b-1} (b f + r f')."""
    if j.order < 1:
        raise ValueError("conjugated derivative needs order >= 1")
    r = np.asarray(j.radius, dtype=float)
    f, fp = j.derivs[0], j.derivs[1]
    return r ** (a + b - 1) * (b * f + r * fp)


def euler_check(ctx: GroupContext, f: Profile, nu: float, sample, tol: float = 1e-10) -> bool:
    """True iff r f'(r) = nu f(r) at every sample radius, to tol (|nu f| + 1)."""
    r = np.asarray(sample, dtype=float)
    d = f.derivs(r, 1)
    lhs = r * d[1]
    rhs = nu * d[0]
    return bool(np.all(np.abs(lhs - rhs) <= tol * (np.abs(rhs) + 1)))


@dataclass(frozen=True)
class OperatorExpr:
    """R^mixed after R2^k, or a conjugated derivative r^a d/dr r^b."""

    k: int = 0
    mixed: bool = False
    conj: tuple | None = None

    @property
    def order(self) -> int:
        if self.conj is not None:
            return 1
        return 2 * self.k + (1 if self.mixed else 0)

    def apply(self, ctx: GroupContext, j: Jet):
        if self.conj is not None:
            return apply_conj(ctx, j, *self.conj)
        return apply_iterate(ctx, j, self.k, self.mixed)

    def __str__(self):
        if self.conj is not None:
            return f"conj:{self.conj[0]},{self.conj[1]}"
        if self.k == 0:
            return "R" if self.mixed else "id"
        base = "R2" if self.k == 1 else f"R2^{self.k}"
        return f"R.{base}" if self.mixed else base


_OP_RE = re.compile(r"^(?:(R)(?:\.|$))?(?:R2(?:\^(\d+))?)?$")


def parse_operator(text: str) -> OperatorExpr:
    """Parse ``R``, ``R2``, ``R2^k``, ``R.R2^k`` or ``conj:a,b``."""
    text = text.strip()
    if text.startswith("conj:"):
        a, b = (float(x) for x in text[5:].split(","))
        return OperatorExpr(conj=(a, b))
    if text in ("id", ""):
        return OperatorExpr()
    m = _OP_RE.match(text)
    if not m or text == "R.":
        raise ValueError(f"cannot parse operator {text!r}")
    mixed = m.group(1) is not None
    has_r2 = "R2" in text
    k = int(m.group(2)) if m.group(2) else (1 if has_r2 else 0)
    return OperatorExpr(k=k, mixed=mixed)
