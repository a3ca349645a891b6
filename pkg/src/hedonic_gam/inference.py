"""Per-factor significance tests for the GAM and GLM fits."""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from .data_model import Dataset
from .gam import GamConfig, GamModel, fit_gam
from .glm import GlmModel
from .special import f_sf, t_sf  # noqa: F401  (re-exported)

STAR_THRESHOLD = 0.001


def stars(p: float) -> str:
    """Significance code: ``"***"`` iff ``p < 0.001``."""
    return "***" if p < STAR_THRESHOLD else ""


@dataclass(frozen=True)
class TermTest:
    factor: str
    statistic: float
    df1: float
    df2: float
    p_value: float
    test: str = "F"
    reliable: bool = True

    def __post_init__(self):
        if not (0.0 <= self.p_value <= 1.0):
            raise ValueError(f"p-value {self.p_value} outside [0, 1]")

    @property
    def stars(self) -> str:
        return stars(self.p_value)


def parallel_map(fn, items, workers=None):
    """``list(map(fn, items))``, optionally on a thread pool; order is kept."""
    items = list(items)
    if not workers or workers <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def reduced_fits(dataset: Dataset, config: GamConfig | None = None, workers=None) -> dict[str, GamModel]:
    """Refit the GAM once per factor with that factor left out.

    Smoothing parameters are selected afresh in every refit.
    """
    config = config or GamConfig()

    def refit(name):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            return fit_gam(dataset.drop(name), config)

    return dict(zip(dataset.names, parallel_map(refit, dataset.names, workers)))


def nested_f_test(full: GamModel, reduced: GamModel, factor: str) -> TermTest:
    """F-test of ``reduced`` against ``full`` using effective df.

    ``F = ((RSS_r - RSS_f) / (edf_f - edf_r)) / (RSS_f / (n - edf_f))``;
    a reduced fit with smaller RSS than the full one gives ``F = 0``.
    """
    df1 = full.total_edf - reduced.total_edf
    df2 = full.n - full.total_edf
    reliable = full.converged and reduced.converged
    if df1 <= 1e-8 or df2 <= 0:
        return TermTest(factor, 0.0, df1, df2, 1.0, reliable=False)
    if full.rss <= 0:
        F = math.inf if reduced.rss > 0 else 0.0
    else:
        F = max(reduced.rss - full.rss, 0.0) / df1 / (full.rss / df2)
    return TermTest(factor, F, df1, df2, f_sf(F, df1, df2), reliable=reliable)


def gam_term_significance(
    dataset: Dataset,
    config: GamConfig | None = None,
    full_model: GamModel | None = None,
    reduced: dict[str, GamModel] | None = None,
    workers=None,
) -> list[TermTest]:
    """Nested-refit F-test for every factor, in roster order.

    Tests whose full or reduced fit failed to converge carry
    ``reliable=False`` and raise a RuntimeWarning.
    """
    config = config or GamConfig()
    full = full_model or fit_gam(dataset, config)
    if reduced is None:
        reduced = reduced_fits(dataset, config, workers)
    tests = [nested_f_test(full, reduced[name], name) for name in dataset.names]
    flaky = [t.factor for t in tests if not t.reliable]
    if flaky:
        warnings.warn(f"term tests unreliable (non-converged or degenerate refits): {flaky}",
                      RuntimeWarning, stacklevel=2)
    return tests


def glm_term_significance(model: GlmModel) -> list[TermTest]:
    """Two-sided t-test per coefficient, intercept excluded."""
    return [
        TermTest(name, float(model.t_stats[j + 1]), 1.0, float(model.df_resid),
                 float(model.p_values[j + 1]), test="t")
        for j, name in enumerate(model.names)
    ]
