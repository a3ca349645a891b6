import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from conftest import make_dataset
from hedonic_gam.errors import ConfigError, NumericalError, SchemaError
from hedonic_gam.gam import (
    GamConfig,
    adjusted_r2,
    fit_gam,
    partial_effect,
    predict,
    refit_without,
    with_overrides,
)
from hedonic_gam.smoothing import difference_penalty, evaluate_basis, fit_penalized

TIGHT = GamConfig(backfit_tol=1e-14, max_sweeps=2000)


def correlated_problem(seed, n=300, rho=0.6):
    r = np.random.default_rng(seed)
    C = np.array([[1, rho, rho / 2], [rho, 1, 0.2], [rho / 2, 0.2, 1]])
    X = r.normal(size=(n, 3)) @ np.linalg.cholesky(C).T
    y = np.sin(X[:, 0]) + 0.3 * X[:, 1] ** 2 + 0.5 * X[:, 2] + r.normal(0, 0.1, n)
    return make_dataset(X, y)


def test_config_validation_and_aliases():
    assert GamConfig(lambda_mode="edf").lambda_mode == "fixed_edf"
    for bad in (dict(lambda_mode="aic"), dict(target_edf_per_smooth=2.0), dict(target_edf_per_smooth=14.0),
                dict(n_segments=0), dict(backfit_tol=0.0), dict(max_sweeps=0)):
        with pytest.raises(ConfigError):
            GamConfig(**bad)
    c = with_overrides(GamConfig(), n_segments=20, degree=None)
    assert c.n_segments == 20 and c.degree == 3
    assert GamConfig().to_dict()["target_edf_per_smooth"] == 4.0


def test_adjusted_r2_arithmetic():
    assert adjusted_r2(0.0, 5.0, 50, 6.0) == 1.0
    assert adjusted_r2(5.0, 5.0, 50, 6.0) <= 0.0
    # r2 = 0.694 at n = 100 with 11 model df: 1 - 0.306 * 99 / 89
    assert adjusted_r2(30.6, 100.0, 100, 11.0) == pytest.approx(0.6596179775280899, abs=1e-12)
    with pytest.raises(NumericalError):
        adjusted_r2(1.0, 0.0, 10, 2.0)
    with pytest.raises(NumericalError):
        adjusted_r2(1.0, 2.0, 10, 10.0)


def test_noiseless_line_is_reproduced(rng):
    x = rng.uniform(-3, 3, 200)
    ds = make_dataset(x[:, None], 0.7 * x + 2.0)
    m = fit_gam(ds)
    assert m.adj_r2 >= 0.999
    z = ds.X[:, 0]
    line = np.polyval(np.polyfit(z, ds.y, 1), z)
    np.testing.assert_allclose(m.fitted, line, atol=1e-6)
    assert m.intercept == pytest.approx(ds.y.mean(), abs=1e-15)


@pytest.mark.parametrize("seed", range(10))
def test_pure_noise_term_is_small(seed):
    r = np.random.default_rng(seed)
    n, sd = 2000, 0.1
    X = r.normal(size=(n, 2))
    ds = make_dataset(X, np.sin(X[:, 0]) + r.normal(0, sd, n))
    m = fit_gam(ds)
    t = m.term("x2")
    # RMS of a smoother of pure noise has expectation <= sd * sqrt(edf / n)
    rms = np.sqrt(np.mean(t.contribution**2))
    assert rms <= 3 * sd * np.sqrt(t.edf / n)


def test_orthogonal_design_decouples_into_single_smooths():
    g = np.linspace(-2, 2, 45)
    x1, x2 = np.repeat(g, 45), np.tile(g, 45)  # full factorial: exact empirical independence
    r = np.random.default_rng(11)
    y = np.sin(1.5 * x1) + 0.4 * x2**2 + r.normal(0, 0.1, x1.size)
    ds = make_dataset(np.column_stack([x1, x2]), y)
    m = fit_gam(ds)
    for j, t in enumerate(m.terms):
        B = evaluate_basis(t.smooth.basis, ds.X[:, j])
        alone = B @ fit_penalized(B, ds.y, difference_penalty(B.shape[1]), t.lam).coef
        alone -= alone.mean()
        assert np.sqrt(np.mean((alone - t.contribution) ** 2)) <= 1e-3


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_backfitting_converges_to_joint_penalized_solution(seed):
    ds = correlated_problem(seed)
    m = fit_gam(ds, TIGHT)
    assert m.converged
    b0, fs = oracles.joint_gam_solve(ds.X, ds.y, [t.lam for t in m.terms])
    assert m.intercept == pytest.approx(b0, abs=1e-14)
    for f, t in zip(fs, m.terms):
        assert np.max(np.abs(f - t.contribution)) < 1e-8


@given(st.integers(0, 10_000))
def test_penalized_objective_never_increases(seed):
    m = fit_gam(correlated_problem(seed, n=150, rho=0.8))
    obj = np.array(m.objective_history)
    assert np.all(np.diff(obj) <= 1e-9 * obj[:-1])
    assert m.sweeps_used <= 100 and m.converged


@given(st.permutations(range(3)), st.integers(0, 500))
def test_factor_order_does_not_change_the_fit(perm, seed):
    ds = correlated_problem(seed, n=150)
    a = fit_gam(ds, TIGHT)
    b = fit_gam(ds.select([ds.names[i] for i in perm]), TIGHT)
    np.testing.assert_allclose(a.fitted, b.fitted, atol=1e-6)
    assert a.adj_r2 == pytest.approx(b.adj_r2, abs=1e-9)


def test_model_bookkeeping(rng):
    ds = correlated_problem(7)
    m = fit_gam(ds)
    np.testing.assert_allclose(m.residuals, ds.y - m.fitted, atol=1e-14)
    assert m.rss == pytest.approx(float(m.residuals @ m.residuals), rel=1e-12)
    assert m.r2 == pytest.approx(1 - m.rss / m.tss, rel=1e-12)
    assert m.total_edf == pytest.approx(1 + sum(t.edf for t in m.terms), rel=1e-12)
    for t in m.terms:
        assert t.edf == pytest.approx(3.0, abs=1e-3)  # target 4 minus the centering constraint
        assert abs(t.contribution.mean()) < 1e-12
    assert len(m.rss_history) == m.sweeps_used == len(m.objective_history)
    assert m.names == ds.names
    with pytest.raises(SchemaError):
        m.term("nope")


def test_prediction_contracts(rng):
    ds = correlated_problem(3)
    m = fit_gam(ds)
    np.testing.assert_allclose(predict(m, ds.X), m.fitted, atol=1e-9)
    for j, t in enumerate(m.terms):
        np.testing.assert_allclose(t(ds.X[:, j]), t.contribution, atol=1e-9)
    zero = predict(m, np.zeros((1, 3)))[0]
    assert zero == pytest.approx(m.intercept + sum(float(t(np.zeros(1))[0]) for t in m.terms), abs=1e-14)
    hi = ds.X.max(axis=0)
    np.testing.assert_allclose(predict(m, hi + 50.0), predict(m, hi), atol=0)
    as_map = {nm: ds.column(nm) for nm in reversed(ds.names)}
    np.testing.assert_allclose(predict(m, as_map), m.fitted, atol=1e-9)
    with pytest.raises(SchemaError):
        predict(m, np.zeros((2, 2)))
    with pytest.raises(SchemaError):
        predict(m, {"x1": [0.0]})


def test_prediction_from_raw_units(rng):
    raw = np.column_stack([rng.normal(2000, 400, 300), rng.normal(1980, 20, 300)])
    y = 5 + 1e-4 * raw[:, 0] + rng.normal(0, 0.05, 300)
    ds = make_dataset(raw, y)
    m = fit_gam(ds)
    np.testing.assert_allclose(predict(m, raw, norm=m.norm), m.fitted, atol=1e-9)


def test_symmetric_truth_gives_symmetric_effect():
    r = np.random.default_rng(2)
    n = 5000
    x = r.uniform(-1, 1, n)
    x = np.concatenate([x, -x])  # exactly symmetric design
    y = x**2 - 1 + r.normal(0, 0.1, 2 * n)
    m = fit_gam(make_dataset(x[:, None], y))
    g = np.linspace(0, 1.6, 50)
    a, b = partial_effect(m, "x1", g), partial_effect(m, "x1", -g)
    assert np.sqrt(np.mean((a - b) ** 2)) <= 5e-2


def test_binary_and_sparse_factors_become_linear(rng):
    n = 400
    X = np.column_stack([rng.normal(size=n), rng.integers(0, 2, n), rng.integers(0, 4, n)])
    y = X[:, 0] + 0.3 * X[:, 1] + 0.1 * X[:, 2] + rng.normal(0, 0.1, n)
    ds = make_dataset(X, y, binary={"x2"})
    with pytest.warns(RuntimeWarning, match="distinct"):
        m = fit_gam(ds)
    kinds = [t.kind for t in m.terms]
    assert kinds == ["smooth", "linear", "linear"]
    assert m.term("x2").edf == 1.0 and m.term("x2").lam is None
    assert m.term("x2").slope == pytest.approx(0.3, abs=0.03)
    # a demoted z-scored column has mean zero, so its effect is the bare line
    s = m.term("x3").slope
    np.testing.assert_allclose(partial_effect(m, "x3", [-1, 0, 1]), [-s, 0, s], atol=1e-12)
    # a binary column is centered at its prevalence
    p = ds.column("x2").mean()
    s2 = m.term("x2").slope
    np.testing.assert_allclose(partial_effect(m, "x2", [0, 1]), [-s2 * p, s2 * (1 - p)], atol=1e-12)


def test_non_convergence_warns_and_flags(rng):
    ds = correlated_problem(1, rho=0.9)
    with pytest.warns(RuntimeWarning, match="converge"):
        m = fit_gam(ds, GamConfig(max_sweeps=2, backfit_tol=1e-12))
    assert not m.converged and m.sweeps_used == 2


def test_constant_response_is_rejected(rng):
    ds = make_dataset(rng.normal(size=(30, 1)), np.ones(30))
    with pytest.raises(NumericalError):
        fit_gam(ds)


def test_gcv_mode_and_refit_without(rng):
    ds = correlated_problem(4)
    m = fit_gam(ds, GamConfig(lambda_mode="gcv"))
    assert m.converged and all(t.lam > 0 for t in m.terms)
    r = refit_without(ds, "x2")
    assert r.names == ["x1", "x3"] and r.rss >= m.rss * 0.9
