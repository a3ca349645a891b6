"""Linear benchmark model ``y = X beta`` fitted by ordinary least squares."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .data_model import Dataset, FactorSpec, NormalizationStats, normalize_with
from .errors import DataError, RankDeficiencyError
from .gam import _columns, adjusted_r2
from .special import t_sf

CONDITION_LIMIT = 1e12


@dataclass(frozen=True, eq=False)
class GlmModel:
    factors: tuple[FactorSpec, ...]
    norm: NormalizationStats
    beta: np.ndarray  # intercept first
    se: np.ndarray
    t_stats: np.ndarray
    p_values: np.ndarray
    fitted: np.ndarray
    residuals: np.ndarray
    rss: float
    tss: float
    r2: float
    adj_r2: float
    n: int
    df_resid: int

    @property
    def names(self):
        return [f.name for f in self.factors]

    @property
    def total_edf(self) -> float:
        return float(len(self.beta))

    @property
    def intercept(self) -> float:
        return float(self.beta[0])

    def coef(self, name: str) -> float:
        return float(self.beta[1 + self.names.index(name)])


def design_matrix(X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    return np.column_stack([np.ones(X.shape[0]), X])


def _collinear_columns(Xs, labels):
    # the right singular vector of the smallest singular value names the culprits
    v = np.linalg.svd(Xs, full_matrices=False)[2][-1]
    return [labels[i] for i in np.flatnonzero(np.abs(v) > 0.1)] or list(labels)


def coefficient_p_values(beta, se, df_resid):
    """Two-sided t-test p-values; ``se == 0`` gives p = 0 unless beta == 0."""
    beta = np.asarray(beta, dtype=float)
    se = np.asarray(se, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(se > 0, beta / np.where(se > 0, se, 1.0), np.where(beta == 0, 0.0, np.sign(beta) * np.inf))
    p = np.array([t_sf(ti, df_resid) for ti in t])
    return t, p


def ols(X, y, names=None) -> dict:
    """Least squares with an intercept on raw arrays.

    Returns a dict with beta, se, t_stats, p_values, fitted, residuals,
    rss, tss, r2, adj_r2, n and df_resid. Raises RankDeficiencyError when
    the column-normalized design has a condition number above 1e12.
    """
    y = np.asarray(y, dtype=float)
    X = design_matrix(X)
    n, p = X.shape
    if n <= p:
        raise DataError(f"need n > m + 1 observations, got n={n}, m+1={p}")
    names = list(names) if names is not None else [f"x{j + 1}" for j in range(p - 1)]
    labels = ["(Intercept)"] + names
    norms = np.linalg.norm(X, axis=0)
    Xs = X / np.where(norms > 0, norms, 1.0)
    cond = np.linalg.cond(Xs)
    if not np.isfinite(cond) or cond > CONDITION_LIMIT or np.any(norms == 0):
        cols = _collinear_columns(Xs, labels)
        raise RankDeficiencyError(
            f"design matrix is rank deficient (condition {cond:.3g}); collinear columns: {cols}",
            columns=cols,
        )

    Q, R = np.linalg.qr(X)
    beta = linalg.solve_triangular(R, Q.T @ y)
    fitted = X @ beta
    residuals = y - fitted
    rss = float(residuals @ residuals)
    yc = y - y.mean()
    tss = float(yc @ yc)
    df_resid = n - p
    Rinv = linalg.solve_triangular(R, np.eye(p))
    xtx_inv_diag = np.sum(Rinv**2, axis=1)
    se = np.sqrt(rss / df_resid * xtx_inv_diag)
    t, pv = coefficient_p_values(beta, se, df_resid)
    return dict(
        beta=beta, se=se, t_stats=t, p_values=pv, fitted=fitted, residuals=residuals,
        rss=rss, tss=tss, r2=1.0 - rss / tss, adj_r2=adjusted_r2(rss, tss, n, p),
        n=n, df_resid=df_resid,
    )


def fit_glm(dataset: Dataset) -> GlmModel:
    """OLS fit of ``dataset`` with standard errors, two-sided t p-values
    and adjusted R^2 (see :func:`ols`)."""
    return GlmModel(factors=dataset.factors, norm=dataset.norm, **ols(dataset.X, dataset.y, dataset.names))


def predict_glm(model: GlmModel, X_new, norm: NormalizationStats | None = None) -> np.ndarray:
    X = _columns(model.factors, X_new)
    if norm is not None:
        X = normalize_with(model.factors, norm, X)
    return design_matrix(X) @ model.beta
