"""Euclidean identities for separable functions f = g(r) Y(x/|x|).

For a spherical harmonic Y of degree ell the spherical derivatives act as

    sum_j L_j^2 f = -lambda g/r^2 Y,   L_j f = (g/r) T_j,   sum_j int_S T_j^2 = lambda |Y|_S^2,

with lambda = ell (ell + n - 2).  Every term of the two identities therefore
reduces to |Y|_S^2 times a one-dimensional radial integral carrying a power
lambda^0, lambda^1 or lambda^2.  The reductions are checked against a brute
force Monte Carlo estimate of the n-dimensional integrals, with derivatives of
f taken by nested forward-mode differentiation in jax.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .operators import GroupContext
from .quadrature import Integrand, integrate_many
from .radial_jets import (Bump, Constant, Cutoff, Dilated, Power, Product, Profile, Scaled, Sum, Supported,
                          parse_profile)

IDENTITIES = ("energy", "mow")
MIN_DIM = {"energy": 7, "mow": 5}


def sphere_area(n):
    return 2 * math.pi ** (n / 2) / math.gamma(n / 2)


@dataclass(frozen=True)
class ModeSpec:
    """Dimension n, degree ell and the explicit harmonic used for that degree."""

    n: int
    ell: int

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("dimension must be at least 2")
        if self.ell not in (0, 1, 2):
            raise ValueError("only ell in {0, 1, 2} has an explicit harmonic")
        if self.ell == 2 and self.n < 2:
            raise ValueError("x1 x2 / |x|^2 needs n >= 2")

    @property
    def lam(self) -> float:
        return float(self.ell * (self.ell + self.n - 2))

    @property
    def harmonic(self) -> str:
        return ("1", "x1/|x|", "x1 x2/|x|^2")[self.ell]

    @property
    def sphere_norm2(self) -> float:
        """Integral of Y^2 over the unit sphere."""
        s = sphere_area(self.n)
        if self.ell == 0:
            return s
        if self.ell == 1:
            return s / self.n
        return s / (self.n * (self.n + 2))

    def to_dict(self):
        return {"n": self.n, "ell": self.ell, "lambda": self.lam, "harmonic": self.harmonic,
                "sphere_norm2": self.sphere_norm2}


def energy_l_coefficient(n):
    """Coefficient of sum_j int |L_j f|^2/|x|^4 in the energy identity."""
    return (n * n - 24) / 2 * (n - 4) ** 2 / 4 + 2 * (n - 3) * (n - 7)


MOW_SHIFT = {"printed": lambda n: n - 2.0, "corrected": lambda n: (n - 2.0) / 2}


@dataclass(frozen=True)
class ModeTerm:
    name: str
    side: str
    lam_power: int
    coef: float


def term_list(identity, n, form="corrected"):
    if identity == "energy":
        c = (n * n - 24) / 2
        return [
            ModeTerm("|grad Lap f|^2", "lhs", 0, 1.0),
            ModeTerm("|d_r Lap_r f|^2", "rhs", 0, 1.0),
            ModeTerm("|d_r sum L_j^2 f|^2", "rhs", 2, 1.0),
            ModeTerm("sum |L_j Lap f|^2", "rhs", 1, 1.0),
            ModeTerm("sum |L_j f|^2/|x|^4", "rhs", 1, energy_l_coefficient(n)),
            ModeTerm("sum ||x|^(1-n/2) d_r(|x|^(n/2-2) L_j f)|^2", "rhs", 1, c),
            ModeTerm("sum ||x|^(1-n/2) d_r(|x|^(n/2-1) d_r L_j f)|^2", "rhs", 1, 2.0),
        ]
    if identity == "mow":
        return [
            ModeTerm("|Lap f|^2", "lhs", 0, 1.0),
            ModeTerm("|Lap_r f|^2", "rhs", 0, 1.0),
            ModeTerm("|sum L_j^2 f|^2", "rhs", 2, 1.0),
            ModeTerm("sum |L_j f|^2/|x|^2", "rhs", 1, n * (n - 4) / 2),
            ModeTerm(f"sum |d_r L_j f + s/|x| L_j f|^2 (s={MOW_SHIFT[form](n):g})", "rhs", 1, 2.0),
        ]
    raise ValueError(f"unknown Euclidean identity {identity!r}")


def _radial_kernels(identity, n, lam, d, r, form="corrected"):
    """Kernels (without r^{n-1} and |Y|^2) of every term, coefficients included."""
    g, g1, g2, g3 = d[0], d[1], d[2], d[3]
    D = g2 + (n - 1) * g1 / r
    D1 = g3 + (n - 1) * (g2 / r - g1 / r**2)
    lap = D - lam * g / r**2
    lap1 = D1 - lam * (g1 / r**2 - 2 * g / r**3)
    u = g / r
    u1 = g1 / r - g / r**2
    u2 = g2 / r - 2 * g1 / r**2 + 2 * g / r**3
    coefs = [t.coef for t in term_list(identity, n, form)]
    if identity == "energy":
        ks = [lap1**2 + lam * lap**2 / r**2,
              D1**2,
              lam**2 * (g1 / r**2 - 2 * g / r**3) ** 2,
              lam * lap**2 / r**2,
              lam * g**2 / r**6,
              lam * (u1 / r + (n / 2 - 2) * u / r**2) ** 2,
              lam * (u2 + (n / 2 - 1) * u1 / r) ** 2]
    else:
        s = MOW_SHIFT[form](n)
        ks = [lap**2, D**2, lam**2 * g**2 / r**4, lam * g**2 / r**4, lam * (u1 + s * u / r) ** 2]
    return [c * k for c, k in zip(coefs, ks)]


def _as_profile(g):
    return parse_profile(g) if isinstance(g, str) else g


def reduce_mode_terms(identity, mode: ModeSpec, g, form="corrected", rel_tol=1e-11):
    """[(name, side, value, err)] of the radial reductions, each times |Y|_S^2."""
    identity = identity.lower()
    prof = _as_profile(g)
    if not prof.is_real:
        raise ValueError("Euclidean modes take a real radial profile")
    if prof.max_order < 3:
        raise ValueError("the reductions need a jet of order 3")
    lo, hi = prof.support
    if not (lo > 0 and math.isfinite(hi)):
        raise ValueError("profile must have strict compact support")
    n, lam = mode.n, mode.lam

    def evaluator(r):
        return np.stack(_radial_kernels(identity, n, lam, prof.derivs(r, 3), r, form))

    ctx = GroupContext(float(n), mode.sphere_norm2)
    res = integrate_many(ctx, Integrand(evaluator, (lo, hi), prof.breakpoints()), rel_tol=rel_tol, scale_floor=0.0)
    return [(t.name, t.side, q.value, q.abs_error_estimate) for t, q in zip(term_list(identity, n, form), res)]


# ------------------------------------------------------------ MC oracle

def _jax():
    import jax

    jax.config.update("jax_enable_x64", True)
    import jax.numpy as jnp

    return jax, jnp


def jax_profile(prof: Profile):
    """Translate a real profile tree into a jax function of r."""
    jax, jnp = _jax()

    def ramp(t):
        inside = (t > 0) & (t < 1)
        tc = jnp.where(inside, t, 0.5)
        e1 = jnp.exp(-1 / tc)
        e2 = jnp.exp(-1 / (1 - tc))
        return jnp.where(t >= 1, 1.0, jnp.where(inside, e1 / (e1 + e2), 0.0))

    def build(p):
        if isinstance(p, Power):
            return lambda r: r ** p.a
        if isinstance(p, Constant):
            if not p.is_real:
                raise ValueError("real profiles only")
            c = complex(p.c).real
            return lambda r: c + 0.0 * r
        if isinstance(p, Bump):
            h = 0.5 * (p.b - p.a)
            return lambda r: ramp((r - p.a) / h) * ramp((p.b - r) / h)
        if isinstance(p, Cutoff):
            w = p.outer - p.inner
            return lambda r: 1.0 - ramp((r - p.inner) / w)
        if isinstance(p, Sum):
            fs = [build(t) for t in p.terms]
            return lambda r: sum(f(r) for f in fs)
        if isinstance(p, Product):
            fs = [build(t) for t in p.factors]

            def prod(r):
                out = fs[0](r)
                for f in fs[1:]:
                    out = out * f(r)
                return out
            return prod
        if isinstance(p, Scaled):
            if complex(p.c).imag != 0:
                raise ValueError("real profiles only")
            c = complex(p.c).real
            f = build(p.base)
            return lambda r: c * f(r)
        if isinstance(p, Dilated):
            f = build(p.base)
            return lambda r: f(p.lam * r)
        if isinstance(p, Supported):
            f = build(p.base)
            return lambda r: jnp.where((r > p.lo) & (r < p.hi), f(r), 0.0)
        raise ValueError(f"no jax translation for {type(p).__name__}")

    return build(prof)


def _term_sampler(identity, mode: ModeSpec, prof: Profile, form):
    """jax function x -> vector of term integrands (coefficients included)."""
    jax, jnp = _jax()
    n = mode.n
    g = jax_profile(prof)

    def harmonic(x, r):
        if mode.ell == 0:
            return 1.0
        if mode.ell == 1:
            return x[0] / r
        return x[0] * x[1] / r**2

    def f(x):
        r = jnp.sqrt(jnp.sum(x * x))
        return g(r) * harmonic(x, r)

    grad = jax.grad(f)
    hess = jax.jacfwd(grad)

    def unit(x):
        r = jnp.sqrt(jnp.sum(x * x))
        return x / r, r

    def lap(x):
        return jnp.trace(hess(x))

    def lap_r(x):
        w, r = unit(x)
        return w @ hess(x) @ w + (n - 1) / r * (w @ grad(x))

    def Lvec(x):
        w, _ = unit(x)
        gr = grad(x)
        return gr - w * (w @ gr)

    def dr_L(x):
        w, _ = unit(x)
        return jax.jacfwd(Lvec)(x) @ w

    coefs = [t.coef for t in term_list(identity, n, form)]

    if identity == "energy":
        grad_lap = jax.grad(lap)
        grad_lap_r = jax.grad(lap_r)
        grad_sph = jax.grad(lambda x: lap(x) - lap_r(x))

        def terms(x):
            w, r = unit(x)
            gl = grad_lap(x)
            h = Lvec(x)
            k = dr_L(x)
            dk = jax.jacfwd(dr_L)(x) @ w
            return jnp.array([
                gl @ gl,
                (w @ grad_lap_r(x)) ** 2,
                (w @ grad_sph(x)) ** 2,
                gl @ gl - (w @ gl) ** 2,
                (h @ h) / r**4,
                jnp.sum((k / r + (n / 2 - 2) * h / r**2) ** 2),
                jnp.sum((dk + (n / 2 - 1) * k / r) ** 2),
            ]) * jnp.array(coefs)
    else:
        s = MOW_SHIFT[form](n)

        def terms(x):
            w, r = unit(x)
            a = lap(x)
            b = lap_r(x)
            h = Lvec(x)
            k = dr_L(x)
            return jnp.array([a**2, b**2, (a - b) ** 2, (h @ h) / r**2,
                              jnp.sum((k + s * h / r) ** 2)]) * jnp.array(coefs)

    return jax.jit(jax.vmap(terms))


def proposal_scale(prof: Profile, n: int) -> float:
    """Gaussian width whose typical radius sigma sqrt(n) sits at the profile's mass centroid."""
    lo, hi = prof.support
    r = np.linspace(lo, hi, 2001)[1:-1]
    w = np.abs(prof.derivs(r, 0)[0]) * r ** (n - 1)
    centroid = float(np.sum(w * r) / np.sum(w)) if np.sum(w) > 0 else 0.5 * (lo + hi)
    return centroid / math.sqrt(n)


@dataclass
class OracleValue:
    name: str
    value: float
    se: float


def mc_oracle(identity, mode: ModeSpec, g, n_samples=1_000_000, seed=0, form="corrected", block=50_000):
    """Importance-sampled estimates of every term, with standard errors; deterministic in seed."""
    jax, jnp = _jax()
    identity = identity.lower()
    prof = _as_profile(g)
    n = mode.n
    sigma = proposal_scale(prof, n)
    sampler = _term_sampler(identity, mode, prof, form)
    key = jax.random.PRNGKey(int(seed))
    n_samples = int(n_samples)
    nblocks = max(1, math.ceil(n_samples / block))
    log_norm = -0.5 * n * math.log(2 * math.pi * sigma**2)
    s1 = None
    s2 = None
    done = 0
    for b in range(nblocks):
        m = min(block, n_samples - done)
        # per-block key derived from the master seed
        x = sigma * jax.random.normal(jax.random.fold_in(key, b), (m, n), dtype=jnp.float64)
        logq = log_norm - 0.5 * jnp.sum(x * x, axis=1) / sigma**2
        vals = sampler(x) * jnp.exp(-logq)[:, None]
        vals = np.asarray(vals)
        if not np.all(np.isfinite(vals)):
            raise ArithmeticError("non-finite Monte Carlo sample")
        bs1 = vals.sum(axis=0)
        bs2 = (vals * vals).sum(axis=0)
        s1 = bs1 if s1 is None else s1 + bs1
        s2 = bs2 if s2 is None else s2 + bs2
        done += m
    mean = s1 / done
    var = np.maximum(s2 / done - mean**2, 0.0)
    se = np.sqrt(var / done)
    return [OracleValue(t.name, float(v), float(e)) for t, v, e in zip(term_list(identity, n, form), mean, se)]


# ------------------------------------------------------------ reports

@dataclass
class ModeReport:
    identity: str
    mode: ModeSpec
    profile: str
    terms: list
    residual: float
    scale: float
    verdict: str
    tol: float
    form: str = "corrected"
    extras: dict = field(default_factory=dict)

    def to_dict(self):
        return {"identity": self.identity, "mode": self.mode.to_dict(), "profile": self.profile,
                "terms": self.terms, "residual": self.residual, "scale": self.scale, "verdict": self.verdict,
                "tol": self.tol, "form": self.form, "extras": self.extras}


def _residual(vals):
    lhs = math.fsum(v for _, side, v, _ in vals if side == "lhs")
    rhs = math.fsum(v for _, side, v, _ in vals if side == "rhs")
    scale = max(abs(v) for _, _, v, _ in vals)
    return abs(lhs - rhs), scale


# terms that vanish identically come out of the sampler as rounding noise;
# differences below this fraction of the identity's scale are not statistical
NOISE_FLOOR = 1e-12


def _attach_oracle(rows, identity, mode, prof, samples, seed, form, z_max, scale):
    oracle = mc_oracle(identity, mode, prof, samples, seed, form)
    ok = True
    floor = NOISE_FLOOR * scale
    for row, o in zip(rows, oracle):
        d = abs(row["value"] - o.value)
        z = d / o.se if o.se > 0 else (0.0 if d == 0 else math.inf)
        agree = d <= z_max * o.se + floor
        row.update({"oracle": o.value, "oracle_se": o.se, "z": z, "agrees": bool(agree)})
        ok = ok and agree
    return ok


def _check(identity, mode: ModeSpec, g, tol, oracle_samples, seed, z_max, form):
    prof = _as_profile(g)
    vals = reduce_mode_terms(identity, mode, prof, form)
    res, scale = _residual(vals)
    rows = [{"name": nme, "side": side, "value": v, "err": e} for nme, side, v, e in vals]
    ok = res <= tol * scale
    rep = ModeReport(identity.upper(), mode, prof.describe(), rows, res, scale, "pass" if ok else "fail", tol, form)
    rep.extras["dimension_ok"] = mode.n >= MIN_DIM[identity]
    if oracle_samples:
        agree = _attach_oracle(rows, identity, mode, prof, oracle_samples, seed, form, z_max, scale)
        rep.extras.update({"oracle_samples": int(oracle_samples), "seed": int(seed), "oracle_agrees": agree,
                           "z_max": z_max})
        if not agree:
            rep.verdict = "fail"
    return rep, vals


def check_energy_identity(mode: ModeSpec, g, tol=1e-8, oracle_samples=0, seed=0, z_max=3.0) -> ModeReport:
    """Energy identity for |grad Lap f|^2, with the slack of the radial comparison."""
    rep, vals = _check("energy", mode, g, tol, oracle_samples, seed, z_max, "corrected")
    rep.form = "printed"
    lhs = vals[0][2]
    radial = vals[1][2]
    rep.extras["compare_slack"] = (lhs - radial) / rep.scale
    rep.extras["l_coefficient"] = energy_l_coefficient(mode.n)
    return rep


def check_mow_identity(mode: ModeSpec, g, tol=1e-8, oracle_samples=0, seed=0, z_max=3.0) -> ModeReport:
    """The |Lap f|^2 identity; the corrected form is normative, the printed one is reported."""
    rep, _ = _check("mow", mode, g, tol, oracle_samples, seed, z_max, "corrected")
    pv = reduce_mode_terms("mow", mode, _as_profile(g), "printed")
    pres, pscale = _residual(pv)
    rep.extras["printed_residual"] = pres / pscale
    rep.extras["corrected_residual"] = rep.residual / rep.scale
    rep.extras["status"] = ("pass" if pres <= tol * pscale else "erratum") if rep.verdict == "pass" else "fail"
    return rep


def check_identity(identity, mode: ModeSpec, g, tol=1e-8, oracle_samples=0, seed=0) -> ModeReport:
    identity = identity.lower()
    if identity == "energy":
        return check_energy_identity(mode, g, tol, oracle_samples, seed)
    if identity == "mow":
        return check_mow_identity(mode, g, tol, oracle_samples, seed)
    raise ValueError(f"unknown Euclidean identity {identity!r}")
