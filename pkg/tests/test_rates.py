import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rough_em import models as M
from rough_em.brownian import sample_path
from rough_em.integrator import CSV_HEADER, DivergenceError, Trajectory, integrate
from rough_em.modulus import Linear, LogPower, Power
from rough_em.rates import (CSV_COLUMNS, GridMismatchError, RateFitError, RateStudy,
                            bound_curve_thm11, bound_curve_thm13, bound_curve_thm13_values,
                            envelope_check, fit_rate, strong_error, sup_distance)


def _custom(name, drift, sigma, T=1.0):
    base = M.make_catalog_model("zero", T=T)
    return M.SdeModel(name, 1, drift, None, T, base.meta, constant_diffusion=np.asarray(sigma, float))


def _traj(states):
    states = np.asarray(states, float)
    return Trajectory(np.linspace(0, 1, len(states)), states, 0, "t")


def test_sup_distance_examples():
    a = _traj([[0.0], [1.0], [2.0]])
    assert sup_distance(a, a) == 0.0
    assert sup_distance(_traj([[1.0, 2.0]] * 3), _traj([[4.0, 6.0]] * 3)) == 5.0
    zero = M.make_catalog_model("zero")
    path = sample_path(0, 0, 1.0, 6, 1)
    neg = type(path)(1.0, 6, 1, 0, 0, -path.increments)
    d = sup_distance(integrate(zero, path, 6, [0.0]), integrate(zero, neg, 6, [0.0]))
    assert d == pytest.approx(2 * np.max(np.abs(path.cumulative())), rel=1e-15)
    with pytest.raises(GridMismatchError):
        sup_distance(a, _traj([[0.0]] * 5))


def test_zero_model_errors_vanish():
    rep = strong_error(RateStudy(M.make_catalog_model("zero"), (2, 3, 4), 8, 20, seed=3))
    assert all(e <= 1e-12 for e in rep.errors)
    assert not rep.reference_limited


def test_deterministic_euler_matches_closed_form():
    model = _custom("decay", lambda t, x: -x, [[0.0]])
    L, levels = 10, (3, 4, 5, 6)
    rep = strong_error(RateStudy(model, levels, L, 4, x0=(1.0,)))

    def euler(level):
        n, r = 1 << level, 1 << (L - level)
        d = 1.0 / n
        k = np.arange((1 << L) + 1)
        c = np.minimum(k // r, n - 1)
        return (1 - d) ** c * (1 - (k - c * r) / (1 << L))

    ref = euler(L)
    for level, e in zip(levels, rep.errors):
        assert e == pytest.approx(np.max((euler(level) - ref) ** 2), rel=1e-9)
    assert rep.slope == pytest.approx(2.0, abs=0.1)


def test_study_validation():
    zero = M.make_catalog_model("zero")
    with pytest.raises(ValueError):
        RateStudy(zero, (3, 3), 8, 10)
    with pytest.raises(ValueError):
        RateStudy(zero, (3, 8), 8, 10)
    with pytest.raises(ValueError):
        RateStudy(zero, (3,), 8, 1)
    with pytest.raises(ValueError):
        RateStudy(zero, (3,), 8, 10, reference="exact")
    with pytest.raises(ValueError):
        RateStudy(zero, (3,), 8, 10, x0=(0.0, 0.0))


def test_thread_count_does_not_change_results():
    model = M.make_catalog_model("holder")
    study = dict(levels=(2, 3, 4), reference_level=7, M=600, seed=5)
    a = strong_error(RateStudy(model, **study), threads=1).csv_text()
    b = strong_error(RateStudy(model, **study), threads=3).csv_text()
    assert a == b


def test_csv_layout():
    rep = strong_error(RateStudy(M.make_catalog_model("ou"), (2, 3), 6, 10))
    lines = rep.csv_text().splitlines()
    assert lines[0] == CSV_HEADER
    assert lines[1] == ",".join(CSV_COLUMNS)
    assert len(lines) == 4


def test_exact_reference_for_kinetic():
    rep = strong_error(RateStudy(M.make_catalog_model("kinetic"), (3, 4, 5), 10, 200,
                                 reference="exact"))
    assert rep.reference_kind == "exact"
    assert rep.errors[0] > rep.errors[-1] > 0


def test_divergent_study_fails_loudly():
    model = _custom("blowup", lambda t, x: x ** 3, [[1.0]])
    with pytest.raises(DivergenceError) as info:
        strong_error(RateStudy(model, (2, 3), 6, 5, x0=(60.0,)))
    assert info.value.count >= 1


def test_fit_rate_examples():
    d = [2.0 ** -j for j in range(6, 11)]
    s, _, r2 = fit_rate(list(zip(d, d)))
    assert s == pytest.approx(1.0) and r2 == pytest.approx(1.0)
    assert fit_rate([(x, 3.0) for x in d])[0] == pytest.approx(0.0, abs=1e-12)
    dd = [2.0 ** -j for j in range(6, 17)]
    e = [x ** 0.5 * math.log(math.e + 1 / x) ** -2 for x in dd]
    slope = fit_rate(list(zip(dd, e)))[0]
    # the log factor adds about 2 / log(1/delta) to the local slope
    assert slope == pytest.approx(np.polyfit(np.log(dd), np.log(e), 1)[0], rel=1e-12)
    assert 0.5 + 2 / math.log(2.0 ** 16) < slope < 0.5 + 2 / math.log(2.0 ** 6)
    with pytest.raises(RateFitError, match="envelope"):
        fit_rate([(0.5, 0.0), (0.25, 1.0)])


def test_bound_curve_thm11_examples():
    d = [2.0 ** -j for j in range(4, 12)]
    np.testing.assert_allclose(bound_curve_thm11(Power(0.5), 1.0, d).values, np.sqrt(d), rtol=1e-14)
    np.testing.assert_allclose(bound_curve_thm11(Linear(1.0), 1.0, d).values, d, rtol=1e-14)
    vals = bound_curve_thm11(LogPower(), 1.0, [10.0 ** -k for k in range(2, 300, 40)]).values
    assert np.all(np.diff(vals) < 0) and vals[-1] < 1e-5
    curve = bound_curve_thm11(Linear(1.0), 1.0, d, errors=[3 * x for x in d])
    assert curve.envelope_constant == pytest.approx(3.0)
    with pytest.raises(ValueError):
        bound_curve_thm11(Linear(1.0), 0.5, d)


def test_bound_curve_thm13_examples():
    delta = 2.0 ** -40
    value = bound_curve_thm13(0.5, delta, [round(0.1 * i, 1) for i in range(1, 10)])
    assert all(value > delta ** (0.5 * (1 - e)) for e in np.arange(0.1, 1.0, 0.1))
    vals = bound_curve_thm13_values(0.5, [2.0 ** -k for k in (40, 200, 1000)])
    assert vals[0] > vals[1] > vals[2]
    with pytest.raises(ValueError):
        bound_curve_thm13(0.5, 0.5)


@settings(max_examples=30, deadline=None)
@given(k=st.integers(10, 300), e1=st.floats(0.05, 0.9), e2=st.floats(0.05, 0.9))
def test_second_term_increasing_in_eps(k, e1, e2):
    lo, hi = sorted((e1, e2))
    d = 2.0 ** -k
    assert d ** (0.5 * (1 - lo)) <= d ** (0.5 * (1 - hi))


def test_envelope_examples():
    d = [2.0 ** -j for j in range(5, 10)]
    b = [x ** 0.5 for x in d]
    zero = envelope_check([0.0] * 5, b, deltas=d)
    assert zero.passed and zero.constant == 0.0
    two = envelope_check([2 * x for x in b], b, deltas=d)
    assert two.passed and two.constant == pytest.approx(2.0) and two.trend_slope == pytest.approx(0, abs=1e-12)
    up = envelope_check([x * math.log(1 / y) for x, y in zip(b, d)], b, deltas=d)
    assert not up.passed


@settings(max_examples=40, deadline=None)
@given(c=st.floats(1e-3, 1e3), beta=st.floats(0.05, 1.0), faster=st.floats(0.0, 1.0))
def test_envelope_accepts_anything_faster_than_the_bound(c, beta, faster):
    d = [2.0 ** -j for j in range(4, 12)]
    b = [x ** beta for x in d]
    e = [c * x ** (beta + faster) for x in d]
    res = envelope_check(e, b, deltas=d)
    assert res.passed
    assert all(ei <= res.constant * bi * (1 + 1e-12) for ei, bi in zip(e, b))
