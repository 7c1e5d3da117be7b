import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rough_em import models as M
from rough_em.modulus import Linear, Power, estimate_seminorm


@pytest.mark.parametrize("name", M.CATALOG_NAMES)
@pytest.mark.parametrize("n", [1, 2])
def test_catalog_validates_at_full_sample_size(name, n):
    model = M.make_catalog_model(name, n=n, validate=False)
    report = M.validate_model(model, n_samples=10_000, seed=0, tol=1e-8)
    assert report.passed, report.to_text()


@pytest.mark.parametrize("name", [n for n in M.CATALOG_NAMES])
def test_declared_drift_sup_matches_grid(name):
    model = M.make_catalog_model(name, validate=False)
    if model.degenerate or not model.meta.bounded:
        pytest.skip("unbounded drift")
    assert abs(M._grid_drift_sup(model) - model.meta.drift_sup) <= 1e-8


def test_zero_model():
    m = M.make_catalog_model("zero", n=1)
    np.testing.assert_array_equal(M.eval_drift(m, 0.5, [3.0]), [0.0])
    np.testing.assert_array_equal(M.eval_diffusion(m, 0.5, [3.0]), [[1.0]])
    assert m.meta.spatial_modulus == Linear(0.0)
    assert M.is_autonomous(m)


def test_coefficient_examples():
    c = M.make_catalog_model("constant-drift", c=1.0)
    np.testing.assert_array_equal(M.eval_drift(c, 0.7, [-4.0]), [1.0])
    k = M.make_catalog_model("kinetic")
    np.testing.assert_array_equal(M.eval_drift(k, 0.0, [0.0, 3.0]), [3.0, 0.0])
    np.testing.assert_array_equal(M.eval_diffusion(k, 0.0, [0.0, 3.0]), [[0.0], [1.0]])
    assert k.meta.ellipticity_floor == 1.0
    ou = M.make_catalog_model("ou")
    np.testing.assert_array_equal(M.eval_drift(ou, 0.0, [2.0]), [-2.0])


def test_time_domain_is_enforced():
    m = M.make_catalog_model("zero", T=2.0)
    M.eval_drift(m, 2.0, [0.0])
    with pytest.raises(M.TimeDomainError):
        M.eval_drift(m, 2.5, [0.0])
    with pytest.raises(M.TimeDomainError):
        M.eval_diffusion(m, -0.1, [0.0])


def test_catalog_errors():
    with pytest.raises(M.CatalogError):
        M.make_catalog_model("no-such-model")
    with pytest.raises(M.CatalogError):
        M.make_catalog_model("holder", gamma=1.0)
    with pytest.raises(M.CatalogError):
        M.make_catalog_model("holder", beta=1.5)
    with pytest.raises(M.CatalogError):
        M.make_catalog_model("zero", n=0)
    with pytest.raises(M.CatalogError):
        M.make_catalog_model("log-dini", p=0.5)


def test_holder_seminorm_brute_force():
    m = M.make_catalog_model("holder", beta=0.5)
    assert m.meta.spatial_modulus == Power(0.5)
    f = lambda x: m.drift(0.0, np.atleast_2d(x))[0]
    est = estimate_seminorm(f, Power(0.5), ([-3.0], [3.0]), 20_000)
    assert est <= 1 + 1e-12


def test_broken_model_is_reported():
    good = M.make_catalog_model("holder", validate=False)
    bad_meta = M.ModelMetadata(**{**good.meta.__dict__, "spatial_modulus": Power(1.0)})
    bad = M.SdeModel("bad", 1, good.drift_fn, None, 1.0, bad_meta,
                     diffusion_inverse_fn=good.diffusion_inverse_fn,
                     constant_diffusion=np.eye(1))
    rep = M.validate_model(bad, n_samples=2000)
    assert not rep.passed
    assert any(c.name == "spatial-modulus" and not c.passed for c in rep.checks)


@settings(max_examples=40, deadline=None)
@given(t=st.floats(0, 1), x=st.floats(-50, 50), y=st.floats(-50, 50))
def test_log_dini_modulus_inequality(t, x, y):
    m = M.make_catalog_model("log-dini")
    phi = m.meta.spatial_modulus
    d = abs(m.drift(t, np.array([[x]]))[0, 0] - m.drift(t, np.array([[y]]))[0, 0])
    assert d <= phi(abs(x - y)) + 1e-12


@settings(max_examples=40, deadline=None)
@given(x=st.lists(st.floats(-5, 5), min_size=2, max_size=2))
def test_kinetic_rough_hypoellipticity(x):
    m = M.make_catalog_model("kinetic-rough")
    g = m.grad2_drift1_fn(0.3, np.array([[x[0]]]), np.array([[x[1]]]))
    assert np.min(np.linalg.svd(g, compute_uv=False)) >= m.meta.ellipticity_floor
