import csv
import math

import mpmath as mp
import numpy as np
import pytest

from hrverify import sharpness as S
from hrverify.constants import ParamPoint
from hrverify.radial_jets import eval_jet


def test_plateau_family_support_and_exponent():
    P = ParamPoint(Q=9, alpha=0.0)
    for eps in (1e-2, 1e-5):
        f = S.plateau_power_family(P, eps)
        assert f.support == (eps, 2 / eps)
    assert S.plateau_exponent("INEQ-R2", P) == pytest.approx(-2.5, abs=1e-15)


def test_plateau_lower_integral_slope():
    # |f_eps|^2 r^{-4} r^{Q-1} = 1/r on the plateau [2 eps, 1/eps], whose log-length is -2 ln eps - ln 2
    P = ParamPoint(Q=9, alpha=0.0)
    xs, ys = [], []
    for eps in S.DEFAULT_EPS:
        (lv, _), _ = S._plateau_integrals("INEQ-R2", P, eps)
        xs.append(-math.log(eps))
        ys.append(lv)
    fit = S.linear_fit(xs, ys)
    assert fit.slope == pytest.approx(2.0, rel=0.02)
    assert fit.residual < 1e-8 * max(ys)


def _core_oracle(G, U, pd):
    # v = s^{-p delta} turns the slow s^{-1-p delta} tail into a bounded integrand
    with mp.workdps(30):
        f = lambda v: G(v ** (-1 / pd)) * v ** (-1 / pd) / (pd * v)  # noqa: E731
        return float(mp.quad(f, [0, U ** (-pd) / 4, U ** (-pd)]))


@pytest.mark.parametrize("delta", [0.3, 0.05, 0.01])
def test_critical_core_against_oracle(delta):
    Q, p, R = 6.0, 2.0, 3.0
    P = ParamPoint(Q=Q, p=p)
    g = S.log_power_exponent(P, delta)
    lnR = math.log(R)
    pd = p * delta
    lo, up = S.critical_core("INEQ-crit-R", P, delta, R)
    assert lo == pytest.approx(lnR ** (-pd) / pd, rel=1e-12)
    G = lambda s: abs(g * (g - 1) * s ** (g - 2) - (Q - 2) * g * s ** (g - 1)) ** p  # noqa: E731
    assert up == pytest.approx(_core_oracle(G, lnR, pd), rel=1e-10)


def test_critical_lower_bound_and_divergence():
    P = ParamPoint(Q=6.0, p=2.0)
    R = 3.0
    prev = 0.0
    for delta in (0.4, 0.1, 0.02, 0.004):
        (lv, _), (uv, _) = S._log_integrals("INEQ-crit-R", P, delta, R)
        bound = math.log(R) ** (-2 * delta) / (2 * delta)
        assert lv >= bound
        assert lv > prev and math.isfinite(uv / lv)
        prev = lv
    f = S.log_power_family(P, 0.1, R)
    assert not np.any(eval_jet(f, R, 3).derivs)
    with pytest.raises(ValueError):
        S.log_power_family(P, 0.1, 1.5)


def test_log_jet_coefficients_match_operators():
    from hrverify.identities import Op
    from hrverify.operators import GroupContext, apply_iterate
    from hrverify.radial_jets import LogPower

    Q, g, R, r = 7.0, 0.37, 3.0, 0.6
    L = math.log(R / r)
    j = eval_jet(LogPower(R, g), r, 7)
    for op in (Op(1), Op(1, 1), Op(2), Op(2, 1), Op(3)):
        m, c = S.log_jet_coefficients(Q, g, op)
        val = r ** (-m) * sum(cj * L ** (g - i) for i, cj in enumerate(c))
        ref = apply_iterate(GroupContext(Q), j, op.j, bool(op.m)).derivs[0]
        assert val == pytest.approx(ref, rel=1e-12)


def test_r2_trace_and_csv(tmp_path):
    tr = S.run_trace("ID-R2", ParamPoint(Q=9, alpha=0.0))
    assert tr.constant == 126.5625
    assert tr.verdict == "pass", tr.checks
    gaps = [p.gap for p in tr.points]
    assert gaps[-1] <= 0.15 and gaps[-1] < gaps[0]
    out = tmp_path / "trace.csv"
    S.write_csv(tr, out)
    rows = list(csv.reader(out.open()))
    assert rows[0] == list(S.CSV_COLUMNS) and len(rows) == 5
    assert float(rows[-1][0]) == 1e-8


@pytest.mark.parametrize("eid,P,target", [
    ("INEQ-crit-R", ParamPoint(Q=6, p=2), 4.0),
    ("INEQ-crit-odd", ParamPoint(Q=6, p=2, k=1), 16.0),
])
def test_critical_traces(eid, P, target):
    tr = S.run_trace(eid, P)
    assert tr.constant == pytest.approx(target, rel=1e-15)
    assert tr.verdict == "pass", tr.checks


@pytest.mark.parametrize("eid,P", [
    ("INEQ-H2", ParamPoint(Q=9)), ("INEQ-HR-even", ParamPoint(Q=9, k=2)), ("INEQ-HR-odd", ParamPoint(Q=9, k=1)),
    ("INEQ-LpH", ParamPoint(Q=9, p=1.5)), ("INEQ-LpR", ParamPoint(Q=9, p=3.0)),
    ("INEQ-Lp-even", ParamPoint(Q=9, p=1.5, k=2)), ("INEQ-Lp-odd", ParamPoint(Q=9, p=1.5, k=1)),
    ("INEQ-crit-H", ParamPoint(Q=5, p=2.5)), ("INEQ-crit-even", ParamPoint(Q=9, p=2, k=2)),
])
def test_traces_stay_above_constant_and_improve(eid, P):
    tr = S.run_trace(eid, P)
    assert tr.checks["above_constant"] and tr.checks["monotone"] and tr.checks["improves"], tr.checks
    assert tr.checks["slope_ratio"], tr.slope_ratio / tr.constant


def test_trace_argument_errors():
    with pytest.raises(ValueError):
        S.run_trace("INEQ-R2", ParamPoint(Q=9), family="log_power")
    with pytest.raises(ValueError):
        S.run_trace("INEQ-R2", ParamPoint(Q=9, alpha=5.0))
    with pytest.raises(ValueError):
        S.run_trace("INEQ-R2", ParamPoint(Q=9), grid=[1e-2])
    with pytest.raises(ValueError):
        S.run_trace("INEQ-12", ParamPoint(Q=9))


def test_linear_fit_exact_line():
    fit = S.linear_fit([1, 2, 3, 4], [3, 5, 7, 9])
    assert fit.slope == pytest.approx(2.0) and fit.offset == pytest.approx(1.0) and fit.residual < 1e-12


def test_trace_dict_roundtrip():
    tr = S.run_trace("INEQ-R2", ParamPoint(Q=9), grid=(1e-2, 1e-3))
    d = tr.to_dict()
    assert d["id"] == "INEQ-R2" and len(d["points"]) == 2 and set(d["checks"]) == set(tr.checks)
