import dataclasses
import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rough_em import models as M
from rough_em.brownian import BrownianPathGrid, sample_path
from rough_em.integrator import (CSV_HEADER, DivergenceError, integrate, integrate_degenerate,
                                 one_step_moment_check)


def _custom(name, drift, sigma, n=1, T=1.0):
    base = M.make_catalog_model("zero", n=n, T=T)
    return M.SdeModel(name, n, drift, None, T, base.meta, constant_diffusion=np.asarray(sigma, float))


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10**6), L=st.integers(0, 9), data=st.data())
def test_zero_model_reproduces_brownian_motion(seed, L, data):
    level = data.draw(st.integers(0, L))
    path = sample_path(seed, 0, 1.0, L, 1)
    tr = integrate(M.make_catalog_model("zero"), path, level, [0.5])
    np.testing.assert_allclose(tr.states[:, 0], 0.5 + path.cumulative()[:, 0], rtol=0, atol=1e-14)


@pytest.mark.parametrize("level", [0, 2, 5])
def test_deterministic_drift_is_exact_at_gridpoints(level):
    model = _custom("ones", lambda t, x: np.ones_like(x), [[0.0]])
    path = sample_path(0, 0, 1.0, 6, 1)
    tr = integrate(model, path, level, [0.0])
    np.testing.assert_allclose(tr.states[:, 0], tr.times, rtol=1e-12, atol=1e-15)


@settings(max_examples=20, deadline=None)
@given(c=st.floats(-3, 3), s=st.floats(-2, 2), x0=st.floats(-5, 5), L=st.integers(1, 8))
def test_affine_problem_is_exact(c, s, x0, L):
    model = _custom("affine", lambda t, x: np.full_like(x, c), [[s]])
    path = sample_path(1, 3, 1.0, L, 1)
    tr = integrate(model, path, 0, [x0])
    exact = x0 + c * tr.times + s * path.cumulative()[:, 0]
    np.testing.assert_allclose(tr.states[:, 0], exact, rtol=1e-12, atol=1e-12)


def test_ou_single_step():
    model = M.make_catalog_model("ou", sigma=1.0)
    path = sample_path(2, 0, 1.0, 4, 1)
    tr = integrate(model, path, 0, [1.0])
    assert tr.states[-1, 0] == pytest.approx(1.0 - 1.0 + path.cumulative()[-1, 0], abs=1e-15)


def test_refined_path_gives_same_scheme():
    model = M.make_catalog_model("ou-multiplicative")
    fine = sample_path(5, 1, 1.0, 9, 1)
    coarse = BrownianPathGrid(1.0, 8, 1, 5, 1, fine.coarsen(8))
    a = integrate(model, coarse, 8, [0.3])
    b = integrate(model, fine, 8, [0.3])
    np.testing.assert_allclose(b.states[::2], a.states, rtol=0, atol=1e-10)


def test_kinetic_at_finest_level():
    model = M.make_catalog_model("kinetic")
    path = sample_path(0, 0, 1.0, 7, 1)
    tr = integrate_degenerate(model, path, 7, [0.2, -0.4])
    w = path.cumulative()[:, 0]
    np.testing.assert_allclose(tr.states[:, 1], -0.4 + w, atol=1e-14)
    riemann = 0.2 + np.concatenate([[0.0], np.cumsum((-0.4 + w[:-1]) * path.step)])
    np.testing.assert_allclose(tr.states[:, 0], riemann, atol=1e-13)


def test_first_block_ignores_noise_sign():
    base = M.make_catalog_model("kinetic")
    still = dataclasses.replace(base, drift1_fn=lambda t, x1, x2: np.zeros_like(x1))
    path = sample_path(3, 0, 1.0, 6, 1)
    flipped = BrownianPathGrid(1.0, 6, 1, 3, 0, -path.increments)
    a = integrate_degenerate(still, path, 3, [1.0, 2.0])
    b = integrate_degenerate(still, flipped, 3, [1.0, 2.0])
    np.testing.assert_array_equal(a.states[:, 0], b.states[:, 0])
    np.testing.assert_array_equal(a.states[:, 0], 1.0)


def test_argument_checks():
    path = sample_path(0, 0, 1.0, 3, 1)
    with pytest.raises(ValueError):
        integrate(M.make_catalog_model("zero"), path, 4, [0.0])
    with pytest.raises(ValueError):
        integrate(M.make_catalog_model("zero", n=2), path, 2, [0.0, 0.0])
    with pytest.raises(TypeError):
        integrate(M.make_catalog_model("kinetic"), path, 2, [0.0, 0.0])
    with pytest.raises(TypeError):
        integrate_degenerate(M.make_catalog_model("zero"), path, 2, [0.0])


def test_divergence_reports_first_bad_time():
    model = _custom("blowup", lambda t, x: x ** 3, [[1.0]])
    path = sample_path(0, 0, 1.0, 6, 1)
    with pytest.raises(DivergenceError) as info:
        integrate(model, path, 3, [50.0])
    assert info.value.path_index == 0
    assert 0 < info.value.time <= 1.0


def test_trajectory_csv():
    tr = integrate(M.make_catalog_model("zero"), sample_path(0, 0, 1.0, 2, 1), 1, [0.0])
    buf = io.StringIO()
    tr.to_csv(buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == CSV_HEADER and lines[1] == "time,x0"
    assert float(lines[-1].split(",")[0]) == 1.0


def test_moment_check_zero_model_is_linear():
    rep = one_step_moment_check(M.make_catalog_model("zero"), levels=(3, 4, 5), M=4000, seed=1)
    # E|W_t - W_{t_d}|^2 = t - t_d, largest (= delta) at t = T
    for d, m, se in zip(rep.deltas, rep.sup_means, rep.stderrs):
        assert abs(m - d) <= 5 * se
    assert rep.passed and abs(rep.slope - 1) < 0.1


def test_moment_check_deterministic_drift_has_slope_two():
    model = _custom("ones", lambda t, x: np.ones_like(x), [[0.0]])
    rep = one_step_moment_check(model, levels=(3, 4, 5), M=10, seed=0)
    assert rep.slope == pytest.approx(2.0, abs=1e-9)
    assert rep.passed


def test_moment_check_needs_bounded_model():
    with pytest.raises(ValueError):
        one_step_moment_check(M.make_catalog_model("ou"), M=10)
