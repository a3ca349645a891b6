"""Seeded housing-like datasets with known additive structure.

Random source: numpy ``PCG64`` bit generator (stable stream since numpy
1.17). Uniforms are built from 53-bit integers as ``(k + 0.5) / 2**53``
and mapped to normals with the inverse normal CDF, so a seed reproduces
the same data on any platform.
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy import optimize, special, stats

from .data_model import DEFAULT_ROSTER, Dataset, FactorSpec, NormalizationStats
from .errors import ConfigError, NotPositiveDefiniteError

RNG_ALGORITHM = "numpy.random.PCG64"
_TWO53 = float(2**53)


# ---------------------------------------------------------------------------
# ground-truth effect shapes (arguments in z-score units)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Zero:
    def __call__(self, x):
        return np.zeros_like(np.asarray(x, dtype=float))


@dataclass(frozen=True)
class Linear:
    slope: float

    def __call__(self, x):
        return self.slope * np.asarray(x, dtype=float)


@dataclass(frozen=True)
class Quadratic:
    curvature: float
    slope: float = 0.0

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return self.curvature * x**2 + self.slope * x


@dataclass(frozen=True)
class Sine:
    freq: float
    amp: float
    phase: float = 0.0

    def __call__(self, x):
        return self.amp * np.sin(self.freq * np.asarray(x, dtype=float) + self.phase)


@dataclass(frozen=True)
class Table:
    """Piecewise-linear effect through ``(xs, ys)``, flat beyond the ends."""

    xs: tuple[float, ...]
    ys: tuple[float, ...]

    def __call__(self, x):
        return np.interp(np.asarray(x, dtype=float), self.xs, self.ys)


@dataclass(frozen=True, eq=False)
class SyntheticSpec:
    n: int
    roster: tuple[FactorSpec, ...]
    target_corr: np.ndarray
    truth: Mapping[str, object]
    noise_sd: float = 0.1
    seed: int = 0
    binary_prevalence: Mapping[str, float] = field(default_factory=dict)
    intercept: float = 0.0
    # raw-unit (mean, sd) per continuous factor, used when writing CSV
    raw_units: Mapping[str, tuple[float, float]] = field(default_factory=dict)
    repair_delta: float = 0.0
    name: str = "custom"

    def __post_init__(self):
        roster = tuple(self.roster)
        object.__setattr__(self, "roster", roster)
        C = np.array(self.target_corr, dtype=float)
        m = len(roster)
        if C.shape != (m, m):
            raise ConfigError(f"target_corr must be {m}x{m}, got {C.shape}")
        if not np.allclose(C, C.T, atol=1e-12):
            raise ConfigError("target_corr must be symmetric")
        if not np.allclose(np.diag(C), 1.0, atol=1e-12):
            raise ConfigError("target_corr must have a unit diagonal")
        C.setflags(write=False)
        object.__setattr__(self, "target_corr", C)
        if self.n < 1:
            raise ConfigError("n must be positive")
        if not self.noise_sd >= 0:
            raise ConfigError("noise_sd must be >= 0")
        names = {f.name for f in roster}
        for nm in self.truth:
            if nm not in names:
                raise ConfigError(f"truth given for unknown factor {nm!r}")
        for f in roster:
            if f.is_binary:
                p = self.binary_prevalence.get(f.name, 0.5)
                if not 0.0 < p < 1.0:
                    raise ConfigError(f"prevalence for {f.name!r} must lie in (0, 1), got {p}")

    def truth_for(self, name):
        return self.truth.get(name, Zero())

    def prevalence(self, name) -> float:
        return self.binary_prevalence.get(name, 0.5)


@dataclass(frozen=True, eq=False)
class GroundTruth:
    grids: Mapping[str, np.ndarray]
    effects: Mapping[str, np.ndarray]
    noiseless_y: np.ndarray
    truth: Mapping[str, object]
    intercept: float

    def effect(self, name, x):
        """True effect of ``name`` at ``x`` (z-score units, uncentered)."""
        return self.truth[name](x)


def check_positive_definite(C) -> np.ndarray:
    """Cholesky factor of ``C``; raises naming the first failing leading minor."""
    C = np.asarray(C, dtype=float)
    for k in range(1, C.shape[0] + 1):
        try:
            np.linalg.cholesky(C[:k, :k])
        except np.linalg.LinAlgError:
            raise NotPositiveDefiniteError(
                f"target_corr is not positive definite: leading minor {k} fails",
                minor_index=k,
            ) from None
    return np.linalg.cholesky(C)


def _uniforms(rng, size):
    return (rng.integers(0, 2**53, size=size, dtype=np.int64).astype(float) + 0.5) / _TWO53


def standard_normals(rng, size) -> np.ndarray:
    return special.ndtri(_uniforms(rng, size))


def generate(spec: SyntheticSpec) -> tuple[Dataset, GroundTruth]:
    """Draw a Dataset from ``spec``; identical seeds give identical data."""
    L = check_positive_definite(spec.target_corr)
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    m, n = len(spec.roster), spec.n
    latent = standard_normals(rng, (n, m)) @ L.T
    noise = standard_normals(rng, n)

    X = np.empty((n, m))
    mean, sd = {}, {}
    for j, f in enumerate(spec.roster):
        col = latent[:, j]
        if f.is_binary:
            cut = special.ndtri(1.0 - spec.prevalence(f.name))
            X[:, j] = (col > cut).astype(float)
        else:
            mu, s = col.mean(), col.std(ddof=1)
            z = (col - mu) / s
            X[:, j] = z - z.mean()
            raw_mu, raw_sd = spec.raw_units.get(f.name, (0.0, 1.0))
            mean[f.name] = raw_mu + raw_sd * mu
            sd[f.name] = raw_sd * s

    effects = np.column_stack([spec.truth_for(f.name)(X[:, j]) for j, f in enumerate(spec.roster)]) \
        if m else np.zeros((n, 0))
    noiseless = spec.intercept + effects.sum(axis=1)
    y = noiseless + spec.noise_sd * noise

    grids, grid_effects = {}, {}
    for j, f in enumerate(spec.roster):
        g = np.array([0.0, 1.0]) if f.is_binary else np.linspace(X[:, j].min(), X[:, j].max(), 201)
        grids[f.name] = g
        grid_effects[f.name] = spec.truth_for(f.name)(g)
    truth = {f.name: spec.truth_for(f.name) for f in spec.roster}
    ds = Dataset(spec.roster, X, y, NormalizationStats(mean, sd))
    return ds, GroundTruth(grids, grid_effects, noiseless, truth, spec.intercept)


def identity_spec(names: Sequence[str], truth: Mapping[str, object], n=2000, noise_sd=0.1, seed=0,
                  **kw) -> SyntheticSpec:
    """Independent continuous factors with the given truths."""
    roster = tuple(FactorSpec(nm) for nm in names)
    return SyntheticSpec(n, roster, np.eye(len(roster)), dict(truth), noise_sd, seed, **kw)


# ---------------------------------------------------------------------------
# city presets
# ---------------------------------------------------------------------------

# Lower triangles of the reference factor correlation matrices, in their native row order.
_CITY_TABLES = {
    "DEN": (
        ("SqFt", "Long", "Lat", "Baths", "Year", "Lot", "Beds", "Water", "Green", "Access"),
        (
            (),
            (0.11,),
            (-0.15, 0.33),
            (0.83, 0.18, -0.09),
            (0.37, 0.42, 0.09, 0.44),
            (0.26, -0.13, -0.25, 0.14, 0.04),
            (0.63, 0.05, -0.11, 0.63, 0.26, 0.20),
            (0.08, -0.04, -0.05, 0.05, 0.05, 0.05, 0.02),
            (0.05, 0.00, 0.00, 0.05, 0.03, 0.01, 0.04, 0.00),
            (-0.37, -0.25, -0.08, -0.46, -0.28, 0.10, -0.21, 0.00, 0.00),
        ),
    ),
    "JAX": (
        ("SqFt", "Long", "Lat", "Year", "Access", "Baths", "Water", "Lot", "Beds", "Green"),
        (
            (),
            (0.18,),
            (-0.11, 0.00),
            (0.25, 0.11, -0.04),
            (-0.27, -0.05, 0.01, -0.07),
            (0.81, 0.17, -0.11, 0.34, -0.31),
            (0.28, 0.12, -0.01, 0.11, -0.02, 0.22),
            (0.03, 0.00, 0.01, -0.05, -0.04, 0.19, 0.23),
            (0.61, 0.06, -0.01, 0.25, -0.17, 0.60, 0.13, 0.13),
            (0.03, 0.01, 0.00, 0.02, -0.01, 0.03, 0.04, 0.02, 0.03),
        ),
    ),
    "PHX": (
        ("Long", "SqFt", "Lat", "Year", "Lot", "Baths", "Beds", "Access", "Water", "Green"),
        (
            (),
            (0.20,),
            (0.13, 0.13),
            (-0.14, 0.32, 0.11),
            (0.17, 0.46, 0.16, -0.02),
            (0.15, 0.81, 0.08, 0.33, 0.35),
            (0.02, 0.64, 0.03, 0.21, 0.23, 0.61),
            (-0.22, -0.37, -0.14, -0.26, -0.07, -0.33, -0.26),
            (0.02, 0.02, -0.03, 0.01, 0.01, 0.02, 0.00, -0.02),
            (0.04, 0.07, 0.02, 0.02, 0.03, 0.07, 0.06, -0.04, 0.03),
        ),
    ),
}
CITIES = tuple(_CITY_TABLES)


def city_correlation_table(city: str) -> tuple[tuple[str, ...], np.ndarray]:
    """Published factor order and full symmetric matrix for ``city``."""
    try:
        names, rows = _CITY_TABLES[city.upper()]
    except KeyError:
        raise ConfigError(f"unknown city {city!r}; choose from {CITIES}") from None
    m = len(names)
    R = np.eye(m)
    for i, row in enumerate(rows):
        for j, v in enumerate(row):
            R[i, j] = R[j, i] = v
    return names, R


# Prevalence of the ESG flags; not published, chosen to look like listing data.
PRESET_PREVALENCE = {"Water": 0.04, "Green": 0.06, "Access": 0.25}

# Rough raw-unit scales so emitted CSVs look like listing data and clear
# the default ingest filters.
PRESET_RAW_UNITS = {
    "SqFt": (2000.0, 350.0),
    "Lot": (8000.0, 1800.0),
    "Beds": (3.3, 0.6),
    "Baths": (2.4, 0.35),
    "Year": (1978.0, 22.0),
    "Lat": (33.5, 0.08),
    "Long": (-112.05, 0.1),
}

PRESET_TRUTH = {
    "SqFt": Quadratic(-0.03, 0.14),
    "Long": Sine(1.6, 0.09),
    "Lat": Sine(1.3, 0.07, 0.6),
    "Year": Quadratic(0.03, 0.01),
    "Lot": Linear(0.015),
    "Beds": Linear(-0.008),
    "Baths": Linear(0.015),
    "Water": Linear(0.05),
    "Green": Linear(0.02),
    "Access": Linear(-0.02),
}
PRESET_INTERCEPT = 5.65
PRESET_NOISE_SD = 0.1


def _pointbiserial_factor(p):
    # corr(Z, 1{W > c}) = rho * phi(c) / sqrt(p (1 - p)) with c = Phi^-1(1 - p)
    c = special.ndtri(1.0 - p)
    return stats.norm.pdf(c) / np.sqrt(p * (1.0 - p))


def _phi_coefficient(rho, p1, p2):
    c1, c2 = special.ndtri(1.0 - p1), special.ndtri(1.0 - p2)
    p11 = stats.multivariate_normal.cdf([-c1, -c2], mean=[0, 0], cov=[[1, rho], [rho, 1]])
    return (p11 - p1 * p2) / np.sqrt(p1 * (1 - p1) * p2 * (1 - p2))


def latent_correlation(observed, roster: Sequence[FactorSpec], prevalence: Mapping[str, float]) -> np.ndarray:
    """Latent Gaussian correlations whose thresholded columns hit ``observed``.

    Continuous pairs pass through; continuous/binary pairs are scaled by
    the point-biserial attenuation; binary/binary pairs are solved for the
    matching phi coefficient.
    """
    R = np.array(observed, dtype=float)
    m = len(roster)
    out = np.eye(m)
    for i in range(m):
        for j in range(i):
            fi, fj = roster[i], roster[j]
            r = R[i, j]
            if not fi.is_binary and not fj.is_binary:
                rho = r
            elif fi.is_binary and fj.is_binary:
                p1, p2 = prevalence[fi.name], prevalence[fj.name]
                if r == 0.0:
                    rho = 0.0
                else:
                    rho = optimize.brentq(lambda t: _phi_coefficient(t, p1, p2) - r, -0.99, 0.99, xtol=1e-10)
            else:
                p = prevalence[fi.name if fi.is_binary else fj.name]
                rho = r / _pointbiserial_factor(p)
            out[i, j] = out[j, i] = float(np.clip(rho, -0.99, 0.99))
    return out


def nearest_correlation(C, floor=1e-6) -> tuple[np.ndarray, float]:
    """Clip eigenvalues at ``floor`` and rescale to a unit diagonal.

    Returns the repaired matrix and the largest absolute entry change.
    """
    C = np.asarray(C, dtype=float)
    w, V = np.linalg.eigh(0.5 * (C + C.T))
    if w.min() >= floor:
        return C.copy(), 0.0
    A = (V * np.maximum(w, floor)) @ V.T
    d = np.sqrt(np.diag(A))
    A = A / np.outer(d, d)
    A = 0.5 * (A + A.T)
    np.fill_diagonal(A, 1.0)
    return A, float(np.max(np.abs(A - C)))


def city_scenario(city: str = "PHX", n: int = 20000, seed: int = 0,
                  noise_sd: float = PRESET_NOISE_SD, truth=None) -> SyntheticSpec:
    """Ten-factor preset whose observed correlations follow ``city``'s table.

    Size, location and construction year carry nonlinear effects; the ESG
    flags carry small linear ones.
    """
    names, R = city_correlation_table(city)
    roster = DEFAULT_ROSTER
    idx = [names.index(f.name) for f in roster]
    observed = R[np.ix_(idx, idx)]
    latent = latent_correlation(observed, roster, PRESET_PREVALENCE)
    repaired, delta = nearest_correlation(latent)
    return SyntheticSpec(
        n=n,
        roster=roster,
        target_corr=repaired,
        truth=dict(PRESET_TRUTH if truth is None else truth),
        noise_sd=noise_sd,
        seed=seed,
        binary_prevalence=dict(PRESET_PREVALENCE),
        intercept=PRESET_INTERCEPT,
        raw_units=dict(PRESET_RAW_UNITS),
        repair_delta=delta,
        name=f"city-{city.upper()}",
    )


# ---------------------------------------------------------------------------
# raw-record export
# ---------------------------------------------------------------------------

SALE_WINDOW = (dt.date(2022, 1, 1), dt.date(2024, 12, 31))


def to_records(dataset: Dataset, seed: int = 0, id_prefix: str = "SYN"):
    """Raw-unit sale records for ``dataset`` (default roster factors only).

    Continuous columns are mapped back through the dataset's normalization
    stats, prices are ``10**y`` and sale dates are drawn uniformly over
    2022-2024 from a seed-derived stream.
    """
    from .ingest import RawRecord

    missing = [f.name for f in DEFAULT_ROSTER if f.name not in dataset.names]
    if missing:
        raise ConfigError(f"record export needs the default roster; missing {missing}")
    rng = np.random.Generator(np.random.PCG64([seed, 0x5A1E]))
    span = (SALE_WINDOW[1] - SALE_WINDOW[0]).days
    offsets = np.floor(_uniforms(rng, dataset.n) * (span + 1)).astype(int)
    cols = {}
    for f in DEFAULT_ROSTER:
        z = dataset.column(f.name)
        if f.is_binary:
            cols[f.column] = z.astype(int)
        else:
            cols[f.column] = dataset.norm.mean[f.name] + dataset.norm.sd[f.name] * z
    width = len(str(dataset.n))
    out = []
    for i in range(dataset.n):
        out.append(RawRecord(
            listing_id=f"{id_prefix}-{i + 1:0{width}d}",
            price=round(float(10.0 ** dataset.y[i]), 2),
            sqft=round(float(cols["sqft"][i]), 3),
            lot=round(float(cols["lot"][i]), 3),
            beds=round(float(cols["beds"][i]), 4),
            baths=round(float(cols["baths"][i]), 4),
            year=round(float(cols["year"][i]), 3),
            lat=round(float(cols["lat"][i]), 7),
            long=round(float(cols["long"][i]), 7),
            water=int(cols["water"][i]),
            green=int(cols["green"][i]),
            access=int(cols["access"][i]),
            sold_date=SALE_WINDOW[0] + dt.timedelta(days=int(offsets[i])),
        ))
    return out
