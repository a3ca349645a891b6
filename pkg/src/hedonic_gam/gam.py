"""Additive model fitted by backfitting, identity link.

Continuous factors get a cubic P-spline smooth, binary (and degenerate
continuous) factors a single linear coefficient. Every term is centered
to mean zero over the training data so the intercept is ``mean(y)``.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field, replace
from typing import Mapping

import numpy as np

from .data_model import Dataset, FactorSpec, NormalizationStats, normalize_with
from .errors import ConfigError, NumericalError, SchemaError
from .smoothing import (
    BSplineBasis,
    SmoothFit,
    _factorize,
    difference_penalty,
    evaluate_basis,
    gcv_lambda,
    make_basis,
    solve_lambda_for_edf,
)

log = logging.getLogger(__name__)

LAMBDA_MODES = ("fixed_edf", "gcv")


@dataclass(frozen=True)
class GamConfig:
    target_edf_per_smooth: float = 4.0
    n_segments: int = 10
    degree: int = 3
    penalty_order: int = 2
    backfit_tol: float = 1e-6
    max_sweeps: int = 100
    lambda_mode: str = "fixed_edf"
    # Re-selecting lambda every sweep breaks the RSS monotonicity guarantee.
    reselect_lambda: bool = False

    def __post_init__(self):
        if self.lambda_mode == "edf":
            object.__setattr__(self, "lambda_mode", "fixed_edf")
        if self.lambda_mode not in LAMBDA_MODES:
            raise ConfigError(f"lambda_mode must be one of {LAMBDA_MODES}, got {self.lambda_mode!r}")
        if not self.target_edf_per_smooth > self.penalty_order:
            raise ConfigError(
                f"target_edf_per_smooth ({self.target_edf_per_smooth}) must exceed "
                f"penalty_order ({self.penalty_order})"
            )
        if self.target_edf_per_smooth > self.n_segments + self.degree:
            raise ConfigError(
                f"target_edf_per_smooth ({self.target_edf_per_smooth}) exceeds the basis "
                f"dimension ({self.n_segments + self.degree})"
            )
        if self.n_segments < 1 or self.degree < 0 or self.penalty_order < 1:
            raise ConfigError("n_segments >= 1, degree >= 0 and penalty_order >= 1 are required")
        if not (self.backfit_tol > 0):
            raise ConfigError("backfit_tol must be positive")
        if self.max_sweeps < 1:
            raise ConfigError("max_sweeps must be >= 1")

    @property
    def min_distinct(self) -> int:
        return max(self.degree + 2, 10)

    def to_dict(self):
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


@dataclass(frozen=True, eq=False)
class TermFit:
    """One additive term ``f_j``.

    ``offset`` is the centering constant: the term evaluates to
    ``raw_effect(x) - offset`` where ``raw_effect`` is the spline (or
    ``slope * x``) before centering.
    """

    factor: str
    kind: str
    contribution: np.ndarray
    edf: float
    offset: float
    smooth: SmoothFit | None = None
    slope: float | None = None

    @property
    def lam(self):
        return None if self.smooth is None else self.smooth.lam

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.kind == "smooth":
            return evaluate_basis(self.smooth.basis, x) @ self.smooth.coef - self.offset
        return self.slope * x - self.offset


@dataclass(frozen=True, eq=False)
class GamModel:
    factors: tuple[FactorSpec, ...]
    norm: NormalizationStats
    intercept: float
    terms: tuple[TermFit, ...]
    fitted: np.ndarray
    residuals: np.ndarray
    rss: float
    tss: float
    n: int
    total_edf: float
    r2: float
    adj_r2: float
    sweeps_used: int
    converged: bool
    config: GamConfig = field(default_factory=GamConfig)
    rss_history: tuple[float, ...] = ()
    # RSS + sum of lambda_j * a_j' G a_j after each sweep; backfitting is
    # block coordinate descent on this, so it (not RSS) is monotone.
    objective_history: tuple[float, ...] = ()

    @property
    def names(self):
        return [f.name for f in self.factors]

    def term(self, name: str) -> TermFit:
        for t in self.terms:
            if t.factor == name:
                return t
        raise SchemaError(f"model has no term for factor {name!r}")


def r_squared(rss: float, tss: float) -> float:
    return 1.0 - rss / tss


def adjusted_r2(rss: float, tss: float, n: int, total_edf: float) -> float:
    """Adjusted R^2 with ``total_edf`` (intercept included) model df.

    ``1 - (1 - R^2) (n - 1) / (n - total_edf)``
    """
    if not tss > 0:
        raise NumericalError("total sum of squares must be positive")
    if n <= total_edf:
        raise NumericalError(f"n ({n}) must exceed the model df ({total_edf})")
    r2 = 1.0 - rss / tss
    return 1.0 - (1.0 - r2) * (n - 1) / (n - total_edf)


class _SmoothUpdater:
    """Per-term state for backfitting a P-spline smooth."""

    def __init__(self, x, config: GamConfig):
        self.basis = make_basis(x.min(), x.max(), config.n_segments, config.degree)
        self.B = evaluate_basis(self.basis, x)
        self.BtB = self.B.T @ self.B
        self.penalty = difference_penalty(self.basis.k, config.penalty_order)
        self.config = config
        self.lam = None
        self.fac = None
        self.edf = None

    def select_lambda(self, partial):
        cfg = self.config
        if cfg.lambda_mode == "fixed_edf":
            lam = solve_lambda_for_edf(self.B, self.penalty, cfg.target_edf_per_smooth, gram=self.BtB)
        else:
            lam = gcv_lambda(self.B, partial, self.penalty)
        self.lam = lam
        self.fac = _factorize(self.BtB, self.penalty.G, lam)
        self.edf = float(np.trace(self.fac.solve(self.BtB)))

    def update(self, partial):
        coef = self.fac.solve(self.B.T @ partial)
        raw = self.B @ coef
        offset = float(raw.mean())
        return raw - offset, (coef, offset)

    def penalty_value(self, state):
        coef, _ = state
        return self.lam * float(coef @ self.penalty.G @ coef)

    def term(self, name, contribution, state):
        coef, offset = state
        smooth = SmoothFit(self.basis, coef, self.lam, self.edf, self.penalty.order, self.fac.jitter)
        return TermFit(name, "smooth", contribution, self.edf - 1.0, offset, smooth=smooth)


class _LinearUpdater:
    def __init__(self, x):
        self.x = x
        self.xbar = float(x.mean())
        self.xc = x - self.xbar
        self.sxx = float(self.xc @ self.xc)
        if not self.sxx > 0:
            raise NumericalError("linear term column is constant")

    def select_lambda(self, partial):
        pass

    def update(self, partial):
        slope = float(self.xc @ partial) / self.sxx
        return slope * self.xc, slope

    def penalty_value(self, state):
        return 0.0

    def term(self, name, contribution, slope):
        return TermFit(name, "linear", contribution, 1.0, slope * self.xbar, slope=slope)


def _make_updaters(dataset: Dataset, config: GamConfig):
    updaters = []
    for j, f in enumerate(dataset.factors):
        x = dataset.X[:, j]
        if f.is_binary:
            updaters.append(_LinearUpdater(x))
            continue
        n_distinct = np.unique(x).size
        if n_distinct < config.min_distinct:
            warnings.warn(
                f"factor {f.name!r} has only {n_distinct} distinct values "
                f"(< {config.min_distinct}); fitting it as a linear term",
                RuntimeWarning,
                stacklevel=3,
            )
            updaters.append(_LinearUpdater(x))
        else:
            updaters.append(_SmoothUpdater(x, config))
    return updaters


def fit_gam(dataset: Dataset, config: GamConfig | None = None) -> GamModel:
    """Fit ``y = b0 + sum_j f_j(x_j)`` by backfitting.

    Smoothing parameters are chosen once during the first sweep (target
    effective df or GCV against the partial residual) and then frozen,
    unless ``config.reselect_lambda`` is set. Iteration stops when the
    relative change in RSS falls to ``config.backfit_tol``; running out of
    sweeps only sets ``converged=False`` and emits a warning.
    """
    config = config or GamConfig()
    y = dataset.y
    n, m = dataset.n, dataset.m
    intercept = float(y.mean())
    yc = y - intercept
    tss = float(yc @ yc)
    if not tss > 0:
        raise NumericalError("response is constant; R^2 is undefined")

    updaters = _make_updaters(dataset, config)
    contrib = np.zeros((m, n))
    total = np.zeros(n)
    states = [None] * m
    rss_prev = tss
    history = []
    objective = []
    converged = m == 0
    sweeps = 0

    for sweep in range(1, config.max_sweeps + 1 if m else 1):
        sweeps = sweep
        for j, upd in enumerate(updaters):
            partial = yc - (total - contrib[j])
            if sweep == 1 or config.reselect_lambda:
                upd.select_lambda(partial)
            new, states[j] = upd.update(partial)
            total += new - contrib[j]
            contrib[j] = new
        # recompute the running sum to keep roundoff from accumulating
        total = contrib.sum(axis=0)
        resid = yc - total
        rss = float(resid @ resid)
        history.append(rss)
        objective.append(rss + sum(u.penalty_value(s) for u, s in zip(updaters, states)))
        log.debug("sweep %d: rss=%.12g", sweep, rss)
        if rss <= 1e-30 * tss or abs(rss_prev - rss) <= config.backfit_tol * rss_prev:
            converged = True
            break
        rss_prev = rss

    if not converged:
        warnings.warn(
            f"backfitting did not converge in {config.max_sweeps} sweeps "
            f"(last relative RSS change {abs(history[-2] - history[-1]) / history[-2]:.3g})"
            if len(history) > 1
            else "backfitting did not converge",
            RuntimeWarning,
            stacklevel=2,
        )

    terms = tuple(
        upd.term(f.name, contrib[j], states[j])
        for j, (f, upd) in enumerate(zip(dataset.factors, updaters))
    )
    for t in terms:
        t.contribution.setflags(write=False)
    fitted = intercept + total
    residuals = y - fitted
    rss = float(residuals @ residuals)
    total_edf = 1.0 + sum(t.edf for t in terms)
    return GamModel(
        factors=dataset.factors,
        norm=dataset.norm,
        intercept=intercept,
        terms=terms,
        fitted=fitted,
        residuals=residuals,
        rss=rss,
        tss=tss,
        n=n,
        total_edf=total_edf,
        r2=r_squared(rss, tss),
        adj_r2=adjusted_r2(rss, tss, n, total_edf),
        sweeps_used=sweeps,
        converged=converged,
        config=config,
        rss_history=tuple(history),
        objective_history=tuple(objective),
    )


def _columns(model_factors, X_new):
    names = [f.name for f in model_factors]
    if isinstance(X_new, Mapping) or hasattr(X_new, "columns"):
        cols = list(X_new.keys()) if isinstance(X_new, Mapping) else list(X_new.columns)
        missing = [nm for nm in names if nm not in cols]
        if missing:
            raise SchemaError(f"input is missing factor columns {missing}")
        if not names:
            raise SchemaError("model has no factors")
        return np.column_stack([np.asarray(X_new[nm], dtype=float) for nm in names])
    X = np.asarray(X_new, dtype=float)
    if X.ndim == 1:
        X = X.reshape(1, -1)
    if X.shape[1] != len(names):
        raise SchemaError(f"expected {len(names)} factor columns ({names}), got {X.shape[1]}")
    return X


def predict(model: GamModel, X_new, norm: NormalizationStats | None = None) -> np.ndarray:
    """Identity-link prediction ``b0 + sum_j f_j(x_j)``.

    ``X_new`` is an array with columns in model roster order or a mapping /
    DataFrame keyed by factor name. When ``norm`` is given the continuous
    columns are raw values and are z-scored with it (pass the training
    stats, e.g. ``model.norm``); otherwise they are taken as z-scores.
    Smooth terms clamp inputs to the training range.
    """
    X = _columns(model.factors, X_new)
    if norm is not None:
        X = normalize_with(model.factors, norm, X)
    out = np.full(X.shape[0], model.intercept)
    for j, t in enumerate(model.terms):
        out += t(X[:, j])
    return out


def partial_effect(model: GamModel, factor: str, grid) -> np.ndarray:
    """Centered ``f_j`` of ``factor`` on ``grid`` (z-score units)."""
    return model.term(factor)(np.asarray(grid, dtype=float))


def refit_without(dataset: Dataset, factor: str, config: GamConfig | None = None) -> GamModel:
    return fit_gam(dataset.drop(factor), config)


def with_overrides(config: GamConfig, **overrides) -> GamConfig:
    return replace(config, **{k: v for k, v in overrides.items() if v is not None})

