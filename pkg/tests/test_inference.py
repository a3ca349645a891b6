import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import make_dataset
from hedonic_gam.gam import GamConfig, fit_gam
from hedonic_gam.glm import fit_glm
from hedonic_gam.inference import (
    TermTest,
    gam_term_significance,
    glm_term_significance,
    nested_f_test,
    parallel_map,
    reduced_fits,
    stars,
)


def signal_and_noise(seed, n=2000):
    r = np.random.default_rng(seed)
    X = r.normal(size=(n, 3))
    y = 0.8 * np.sin(1.5 * X[:, 0]) + 0.3 * X[:, 1] + r.normal(0, 0.1, n)
    return make_dataset(X, y)


def test_star_threshold():
    assert stars(0.0009) == "***"
    assert stars(0.002) == ""
    assert stars(0.001) == ""
    assert TermTest("a", 1.0, 1.0, 10.0, 1e-5).stars == "***"
    with pytest.raises(ValueError):
        TermTest("a", 1.0, 1.0, 10.0, 1.5)


def test_dominant_term_and_null_term():
    ds = signal_and_noise(0)
    tests = gam_term_significance(ds)
    assert [t.factor for t in tests] == ds.names
    by = {t.factor: t for t in tests}
    assert by["x1"].p_value < 1e-10 and by["x2"].p_value < 1e-10
    assert by["x3"].p_value > 1e-4
    for t in tests:
        assert t.reliable and t.statistic >= 0 and t.df1 > 0
        assert t.df2 == pytest.approx(ds.n - fit_gam(ds).total_edf, rel=1e-12)


@settings(max_examples=10)
@given(st.integers(0, 10_000))
def test_nested_refit_statistic_is_nonnegative(seed):
    ds = signal_and_noise(seed, n=200)
    for t in gam_term_significance(ds):
        assert t.statistic >= 0 and 0 <= t.p_value <= 1


def test_f_statistic_arithmetic():
    ds = signal_and_noise(1, n=300)
    full = fit_gam(ds)
    red = reduced_fits(ds)["x2"]
    t = nested_f_test(full, red, "x2")
    df1 = full.total_edf - red.total_edf
    df2 = full.n - full.total_edf
    expected = ((red.rss - full.rss) / df1) / (full.rss / df2)
    assert t.statistic == pytest.approx(max(expected, 0.0), rel=1e-12)
    assert (t.df1, t.df2) == (df1, df2)


def test_reduced_fit_with_smaller_rss_is_clamped():
    ds = signal_and_noise(2, n=300)
    full = fit_gam(ds)
    red = replace(reduced_fits(ds)["x3"], rss=0.5 * full.rss)
    t = nested_f_test(full, red, "x3")
    assert t.statistic == 0.0 and t.p_value == 1.0
    # no df left for the term: reported as unreliable with p = 1
    t = nested_f_test(full, full, "x1")
    assert not t.reliable and t.p_value == 1.0


def test_non_converged_refits_are_flagged():
    ds = signal_and_noise(3, n=300)
    cfg = GamConfig(max_sweeps=1, backfit_tol=1e-14)
    with pytest.warns(RuntimeWarning):
        full = fit_gam(ds, cfg)
    with pytest.warns(RuntimeWarning, match="unreliable"):
        tests = gam_term_significance(ds, cfg, full_model=full)
    assert not any(t.reliable for t in tests)


def test_parallel_map_keeps_order():
    assert parallel_map(lambda v: v * v, range(8), workers=4) == [v * v for v in range(8)]
    ds = signal_and_noise(4, n=300)
    a = gam_term_significance(ds)
    b = gam_term_significance(ds, workers=3)
    assert [t.p_value for t in a] == [t.p_value for t in b]


def test_glm_term_tests(rng):
    X = rng.normal(size=(101, 2))
    ds = make_dataset(X, 0.5 * X[:, 0] + rng.normal(0, 1, 101))
    m = fit_glm(ds)
    tests = glm_term_significance(m)
    assert [t.factor for t in tests] == ["x1", "x2"]
    for j, t in enumerate(tests):
        assert t.test == "t" and t.df1 == 1.0 and t.df2 == 98.0
        assert t.statistic == m.t_stats[j + 1] and t.p_value == m.p_values[j + 1]
    assert tests[0].stars == "***"


def test_interpolating_full_fit_gives_zero_p():
    ds = signal_and_noise(5, n=300)
    full = replace(fit_gam(ds), rss=0.0)
    t = nested_f_test(full, reduced_fits(ds)["x1"], "x1")
    assert math.isinf(t.statistic) and t.p_value == 0.0
