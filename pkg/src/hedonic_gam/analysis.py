"""Factor contribution and redundancy analysis.

Leave-one-factor-out change in adjusted R^2, the Pearson correlation
matrix of the factors, banded strength labels and the pairwise
keep / review / drop recommendation derived from them.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from .data_model import SD_FLOOR, Dataset
from .errors import ConstantColumnError, DomainError, SchemaError
from .gam import GamConfig, GamModel, fit_gam
from .inference import reduced_fits

DELTA_STAR_THRESHOLD = 0.001
REPORT_FLOOR = 0.10


@dataclass(frozen=True)
class FactorContribution:
    factor: str
    baseline_adj_r2: float
    dropped_adj_r2: float
    reliable: bool = True
    esg: bool = False

    @property
    def delta_r2(self) -> float:
        return self.baseline_adj_r2 - self.dropped_adj_r2

    @property
    def negligible(self) -> bool:
        """True when the change renders as ``***`` (|delta| < 0.001)."""
        return abs(self.delta_r2) < DELTA_STAR_THRESHOLD


def delta_r2_analysis(
    dataset: Dataset,
    config: GamConfig | None = None,
    baseline: GamModel | None = None,
    reduced: dict[str, GamModel] | None = None,
    workers=None,
) -> list[FactorContribution]:
    """Rank factors by the drop in GAM adjusted R^2 when each is removed.

    Sorted by descending delta; ties keep roster order.
    """
    config = config or GamConfig()
    baseline = baseline or fit_gam(dataset, config)
    if reduced is None:
        reduced = reduced_fits(dataset, config, workers)
    out = []
    for f in dataset.factors:
        r = reduced[f.name]
        out.append(FactorContribution(
            f.name, baseline.adj_r2, r.adj_r2,
            reliable=baseline.converged and r.converged, esg=f.is_esg,
        ))
    return sorted(out, key=lambda c: -c.delta_r2)


@dataclass(frozen=True, eq=False)
class CorrelationMatrix:
    names: tuple[str, ...]
    r: np.ndarray

    def __getitem__(self, pair):
        a, b = pair
        return float(self.r[self.names.index(a), self.names.index(b)])

    def reorder(self, names: Sequence[str]) -> "CorrelationMatrix":
        if sorted(names) != sorted(self.names):
            raise SchemaError(f"reorder() needs a permutation of {list(self.names)}")
        idx = [self.names.index(nm) for nm in names]
        return CorrelationMatrix(tuple(names), self.r[np.ix_(idx, idx)])


def pearson_matrix(X, names: Sequence[str]) -> CorrelationMatrix:
    """Pearson correlations of the columns of ``X`` (n - 1 convention)."""
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    Xc = X - X.mean(axis=0)
    sd = np.sqrt(np.sum(Xc**2, axis=0) / (n - 1))
    for name, s in zip(names, sd):
        if not s > SD_FLOOR:
            raise ConstantColumnError(name)
    cov = Xc.T @ Xc / (n - 1)
    r = cov / np.outer(sd, sd)
    r = np.clip(0.5 * (r + r.T), -1.0, 1.0)
    np.fill_diagonal(r, 1.0)
    r.setflags(write=False)
    return CorrelationMatrix(tuple(names), r)


def correlation_matrix(dataset: Dataset) -> CorrelationMatrix:
    return pearson_matrix(dataset.X, dataset.names)


class StrengthLabel(str, Enum):
    NEGLIGIBLE = "negligible"
    WEAK = "weak"
    MODERATE = "moderate"
    STRONG = "strong"
    VERY_STRONG = "very_strong"


# lower edges of the half-open bands on |r|
_BANDS = (
    (0.70, StrengthLabel.VERY_STRONG),
    (0.50, StrengthLabel.STRONG),
    (0.30, StrengthLabel.MODERATE),
    (0.10, StrengthLabel.WEAK),
)


def classify_strength(r: float) -> StrengthLabel:
    a = abs(float(r))
    if not a <= 1.0:
        raise DomainError(f"correlation must lie in [-1, 1], got {r}")
    for edge, label in _BANDS:
        if a >= edge:
            return label
    return StrengthLabel.NEGLIGIBLE


class Recommendation(str, Enum):
    KEEP_BOTH = "keep_both"
    REVIEW_COMBINATION = "review_combination"
    DROP_ONE = "drop_one"


def recommend(label: StrengthLabel) -> Recommendation:
    if label in (StrengthLabel.STRONG, StrengthLabel.VERY_STRONG):
        return Recommendation.DROP_ONE
    if label is StrengthLabel.MODERATE:
        return Recommendation.REVIEW_COMBINATION
    return Recommendation.KEEP_BOTH


@dataclass(frozen=True)
class RedundancyFinding:
    pair: tuple[str, str]
    r_value: float
    label: StrengthLabel
    recommendation: Recommendation
    delta_r2: tuple[float, float] | None = None


def redundancy_report(contributions, corr: CorrelationMatrix) -> list[RedundancyFinding]:
    """Findings for every factor pair with |r| >= 0.10, strongest first.

    ``contributions`` (from :func:`delta_r2_analysis`) may be None, in
    which case findings carry no delta context.
    """
    deltas = None
    if contributions is not None:
        deltas = {c.factor: c.delta_r2 for c in contributions}
        if set(deltas) != set(corr.names):
            raise SchemaError(
                f"contribution factors {sorted(deltas)} do not match correlation factors {sorted(corr.names)}"
            )
    found = []
    for i, j in itertools.combinations(range(len(corr.names)), 2):
        r = float(corr.r[i, j])
        if abs(r) < REPORT_FLOOR:
            continue
        a, b = corr.names[i], corr.names[j]
        label = classify_strength(r)
        found.append(RedundancyFinding(
            (a, b), r, label, recommend(label),
            None if deltas is None else (deltas[a], deltas[b]),
        ))
    found.sort(key=lambda f: -abs(f.r_value))
    return found
