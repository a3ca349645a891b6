"""Core tabular types: factor specs, normalization state and the Dataset."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Sequence

import numpy as np

from .errors import ConstantColumnError, DataError, DomainError, SchemaError

# Columns whose sample sd falls below this are treated as constant.
SD_FLOOR = 1e-12
ZSCORE_TOL = 1e-9


class FactorKind(str, Enum):
    CONTINUOUS = "continuous"
    BINARY = "binary"


class FactorCategory(str, Enum):
    INTRINSIC = "intrinsic"
    EXTRINSIC = "extrinsic"
    ESG = "esg"


@dataclass(frozen=True)
class FactorSpec:
    """A named model factor.

    ``column`` names the raw-record field the factor is read from; it
    defaults to the lower-cased factor name.
    """

    name: str
    kind: FactorKind = FactorKind.CONTINUOUS
    category: FactorCategory = FactorCategory.INTRINSIC
    column: str | None = None

    def __post_init__(self):
        if not self.name or not str(self.name).strip():
            raise SchemaError("factor name must be nonempty")
        object.__setattr__(self, "kind", FactorKind(self.kind))
        object.__setattr__(self, "category", FactorCategory(self.category))
        if self.column is None:
            object.__setattr__(self, "column", self.name.lower())

    @property
    def is_binary(self) -> bool:
        return self.kind is FactorKind.BINARY

    @property
    def is_esg(self) -> bool:
        return self.category is FactorCategory.ESG


_C, _B = FactorKind.CONTINUOUS, FactorKind.BINARY
_I, _X, _E = FactorCategory.INTRINSIC, FactorCategory.EXTRINSIC, FactorCategory.ESG

# Water is extrinsic and Green/Access intrinsic, but all three are ESG flags;
# the ESG tag wins since that is what reports highlight.
DEFAULT_ROSTER: tuple[FactorSpec, ...] = (
    FactorSpec("SqFt", _C, _I, "sqft"),
    FactorSpec("Lot", _C, _I, "lot"),
    FactorSpec("Beds", _C, _I, "beds"),
    FactorSpec("Baths", _C, _I, "baths"),
    FactorSpec("Year", _C, _I, "year"),
    FactorSpec("Lat", _C, _X, "lat"),
    FactorSpec("Long", _C, _X, "long"),
    FactorSpec("Water", _B, _E, "water"),
    FactorSpec("Green", _B, _E, "green"),
    FactorSpec("Access", _B, _E, "access"),
)


def default_roster() -> list[FactorSpec]:
    return list(DEFAULT_ROSTER)


@dataclass(frozen=True)
class NormalizationStats:
    """Per-factor raw-unit mean and sample sd for the continuous factors."""

    mean: Mapping[str, float] = field(default_factory=dict)
    sd: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if set(self.mean) != set(self.sd):
            raise SchemaError("mean and sd must cover the same factors")
        for name, s in self.sd.items():
            if not (s > SD_FLOOR):
                raise ConstantColumnError(name)
        object.__setattr__(self, "mean", dict(self.mean))
        object.__setattr__(self, "sd", dict(self.sd))

    def __contains__(self, name):
        return name in self.mean

    def to_dict(self):
        return {"mean": dict(self.mean), "sd": dict(self.sd)}

    @classmethod
    def from_dict(cls, d):
        return cls(mean=d["mean"], sd=d["sd"])


def column_stats(raw_column) -> tuple[float, float]:
    """Sample mean and sample sd (n - 1 denominator) of a column."""
    x = np.asarray(raw_column, dtype=float)
    if x.size < 2:
        raise DataError("need at least two values to compute a sample sd")
    return float(np.mean(x)), float(np.std(x, ddof=1))


def normalize(raw_column, mean: float, sd: float) -> np.ndarray:
    """Z-score ``raw_column`` with the given mean and sd."""
    if not (sd > SD_FLOOR):
        raise ConstantColumnError("<column>", f"standard deviation {sd!r} is below {SD_FLOOR}")
    return (np.asarray(raw_column, dtype=float) - mean) / sd


def denormalize(z, mean: float, sd: float) -> np.ndarray:
    return np.asarray(z, dtype=float) * sd + mean


def log_price(price):
    """Base-10 log of a sale price; scalars in, scalars out."""
    p = np.asarray(price, dtype=float)
    if np.any(~(p > 0)):
        raise DomainError(f"price must be positive, got {price!r}")
    out = np.log10(p)
    return float(out) if out.ndim == 0 else out


def _readonly(a):
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Dataset:
    """N observations of m factors plus the log10-price response.

    ``X`` holds z-scored continuous columns and {0, 1} binary columns in
    the same order as ``factors``. Instances are immutable.
    """

    factors: tuple[FactorSpec, ...]
    X: np.ndarray
    y: np.ndarray
    norm: NormalizationStats = field(default_factory=NormalizationStats)

    def __post_init__(self):
        factors = tuple(self.factors)
        X = _readonly(self.X)
        y = _readonly(self.y).ravel()
        if X.ndim == 1 and len(factors) == 0:
            X = X.reshape(len(y), 0)
        if X.ndim != 2:
            raise SchemaError("X must be two-dimensional")
        n, m = X.shape
        if m != len(factors):
            raise SchemaError(f"X has {m} columns but {len(factors)} factors were given")
        if len(y) != n:
            raise SchemaError(f"y has length {len(y)} but X has {n} rows")
        names = [f.name for f in factors]
        dupes = sorted({nm for nm in names if names.count(nm) > 1})
        if dupes:
            raise SchemaError(f"duplicate factor names: {dupes}")
        if not np.all(np.isfinite(X)) or not np.all(np.isfinite(y)):
            raise DataError("X and y must be finite")
        if n <= m + 2:
            raise DataError(f"need n > m + 2 observations, got n={n}, m={m}")
        for j, f in enumerate(factors):
            col = X[:, j]
            if f.is_binary:
                if f.name in self.norm:
                    raise DataError(f"binary factor {f.name!r} must not carry normalization stats")
                bad = ~np.isin(col, (0.0, 1.0))
                if np.any(bad):
                    raise DataError(
                        f"binary factor {f.name!r} has non-0/1 value {col[bad][0]!r}"
                    )
            else:
                mu = col.mean()
                sd = col.std(ddof=1)
                if sd < SD_FLOOR:
                    raise ConstantColumnError(f.name)
                if abs(mu) > ZSCORE_TOL or abs(sd - 1.0) > ZSCORE_TOL:
                    raise DataError(
                        f"continuous factor {f.name!r} is not z-scored (mean={mu:.3g}, sd={sd:.3g})"
                    )
        object.__setattr__(self, "factors", factors)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def m(self) -> int:
        return self.X.shape[1]

    @property
    def names(self) -> list[str]:
        return [f.name for f in self.factors]

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise SchemaError(f"unknown factor {name!r}") from None

    def factor(self, name: str) -> FactorSpec:
        return self.factors[self.index(name)]

    def column(self, name: str) -> np.ndarray:
        return self.X[:, self.index(name)]

    def _subset(self, names):
        idx = [self.index(nm) for nm in names]
        keep = {self.factors[i].name for i in idx}
        norm = NormalizationStats(
            {k: v for k, v in self.norm.mean.items() if k in keep},
            {k: v for k, v in self.norm.sd.items() if k in keep},
        )
        return Dataset(tuple(self.factors[i] for i in idx), self.X[:, idx], self.y, norm)

    def drop(self, name: str) -> "Dataset":
        self.index(name)
        return self._subset([nm for nm in self.names if nm != name])

    def select(self, names: Sequence[str]) -> "Dataset":
        """Subset and/or reorder factors; X columns follow ``names``."""
        if len(set(names)) != len(names):
            raise SchemaError("select() names must be unique")
        return self._subset(list(names))

    @classmethod
    def from_raw(cls, factors: Sequence[FactorSpec], raw_X, y) -> "Dataset":
        """Build a Dataset by z-scoring the continuous columns of ``raw_X``."""
        factors = tuple(factors)
        raw = np.asarray(raw_X, dtype=float)
        if raw.ndim == 1:
            raw = raw.reshape(-1, len(factors)) if factors else raw.reshape(-1, 0)
        if raw.shape[1] != len(factors):
            raise SchemaError(f"raw_X has {raw.shape[1]} columns but {len(factors)} factors")
        X = raw.copy()
        mean, sd = {}, {}
        for j, f in enumerate(factors):
            if f.is_binary:
                continue
            mu, s = column_stats(raw[:, j])
            if not (s > SD_FLOOR):
                raise ConstantColumnError(f.name)
            X[:, j] = normalize(raw[:, j], mu, s)
            # a second centering pass removes the O(eps * |mu|/s) residual mean
            X[:, j] -= X[:, j].mean()
            mean[f.name], sd[f.name] = mu, s
        return cls(factors, X, y, NormalizationStats(mean, sd))

    def normalize_raw(self, raw_X) -> np.ndarray:
        """Apply this dataset's normalization to new raw rows (roster order)."""
        return normalize_with(self.factors, self.norm, raw_X)


def normalize_with(factors, norm: NormalizationStats, raw_X) -> np.ndarray:
    raw = np.atleast_2d(np.asarray(raw_X, dtype=float))
    if raw.shape[1] != len(factors):
        raise SchemaError(f"expected {len(factors)} columns, got {raw.shape[1]}")
    out = raw.copy()
    for j, f in enumerate(factors):
        if not f.is_binary:
            if f.name not in norm:
                raise SchemaError(f"no normalization stats for {f.name!r}")
            out[:, j] = normalize(raw[:, j], norm.mean[f.name], norm.sd[f.name])
    return out

