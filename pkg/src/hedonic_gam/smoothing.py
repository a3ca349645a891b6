"""P-spline building blocks.

Equally spaced B-spline bases (uniform knot extension past the domain
ends), difference penalties on the coefficients, penalized least squares,
effective degrees of freedom and smoothing-parameter selection.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg
from scipy.optimize import minimize_scalar

from .errors import LambdaRangeError, NumericalError, SingularSystemError

LOG10_LAMBDA_MIN = -8.0
LOG10_LAMBDA_MAX = 12.0
# Systems with a larger 2-norm condition number get the ridge jitter.
CONDITION_LIMIT = 1e13
JITTER_SCALE = 1e-10


@dataclass(frozen=True, eq=False)
class BSplineBasis:
    degree: int
    knots: np.ndarray
    x_min: float
    x_max: float
    n_segments: int

    @property
    def k(self) -> int:
        return self.n_segments + self.degree

    @property
    def domain(self) -> tuple[float, float]:
        return (self.x_min, self.x_max)

    @property
    def spacing(self) -> float:
        return (self.x_max - self.x_min) / self.n_segments

    def __call__(self, x) -> np.ndarray:
        return evaluate_basis(self, x)

    def to_dict(self):
        return {
            "degree": self.degree,
            "x_min": self.x_min,
            "x_max": self.x_max,
            "n_segments": self.n_segments,
        }

    @classmethod
    def from_dict(cls, d):
        return make_basis(d["x_min"], d["x_max"], d["n_segments"], d["degree"])


def make_basis(x_min: float, x_max: float, n_segments: int = 10, degree: int = 3) -> BSplineBasis:
    """Build an equally spaced B-spline basis on ``[x_min, x_max]``.

    The knot grid is extended uniformly ``degree`` spacings beyond each end
    of the domain, giving ``n_segments + degree`` basis functions that sum
    to one everywhere inside the domain.
    """
    x_min, x_max = float(x_min), float(x_max)
    if not (math.isfinite(x_min) and math.isfinite(x_max)) or not x_min < x_max:
        raise ValueError(f"degenerate basis domain [{x_min}, {x_max}]")
    if int(n_segments) != n_segments or n_segments < 1:
        raise ValueError(f"n_segments must be a positive integer, got {n_segments!r}")
    if int(degree) != degree or degree < 0:
        raise ValueError(f"degree must be a nonnegative integer, got {degree!r}")
    n_segments, degree = int(n_segments), int(degree)
    h = (x_max - x_min) / n_segments
    knots = x_min + h * np.arange(-degree, n_segments + degree + 1, dtype=float)
    # pin the domain ends exactly so clamped inputs hit the end intervals
    knots[degree] = x_min
    knots[degree + n_segments] = x_max
    knots.setflags(write=False)
    return BSplineBasis(degree, knots, x_min, x_max, n_segments)


def evaluate_basis(basis: BSplineBasis, x) -> np.ndarray:
    """Design matrix of ``basis`` at ``x`` (N x k), via Cox-de Boor.

    Inputs outside the domain are clamped to the nearest endpoint.
    """
    x = np.clip(np.atleast_1d(np.asarray(x, dtype=float)).ravel(), basis.x_min, basis.x_max)
    p, t = basis.degree, basis.knots
    # interval index i with t[i] <= x < t[i+1]; the right end belongs to the last interval
    seg = np.floor((x - basis.x_min) / basis.spacing).astype(np.intp)
    seg = np.clip(seg, 0, basis.n_segments - 1)
    i = seg + p
    # guard against rounding in the division placing x one interval off
    i = np.where((x < t[i]) & (i > p), i - 1, i)
    i = np.where((x >= t[i + 1]) & (i < p + basis.n_segments - 1), i + 1, i)

    n = x.size
    vals = np.zeros((n, p + 1))
    vals[:, 0] = 1.0
    left = np.empty((n, p + 1))
    right = np.empty((n, p + 1))
    for j in range(1, p + 1):
        left[:, j] = x - t[i + 1 - j]
        right[:, j] = t[i + j] - x
        saved = np.zeros(n)
        for r in range(j):
            temp = vals[:, r] / (right[:, r + 1] + left[:, j - r])
            vals[:, r] = saved + right[:, r + 1] * temp
            saved = left[:, j - r] * temp
        vals[:, j] = saved

    B = np.zeros((n, basis.k))
    cols = (i - p)[:, None] + np.arange(p + 1)[None, :]
    B[np.arange(n)[:, None], cols] = vals
    return B


@dataclass(frozen=True, eq=False)
class PenaltyMatrix:
    order: int
    D: np.ndarray
    G: np.ndarray

    @property
    def k(self) -> int:
        return self.G.shape[0]


def difference_penalty(k: int, order: int = 2) -> PenaltyMatrix:
    """Order-``order`` difference operator on ``k`` coefficients and its Gram matrix."""
    if order < 1:
        raise ValueError(f"penalty order must be >= 1, got {order}")
    if k <= order:
        raise ValueError(f"need k > order, got k={k}, order={order}")
    D = np.diff(np.eye(k), n=order, axis=0)
    return PenaltyMatrix(order, D, D.T @ D)


@dataclass(frozen=True, eq=False)
class SmoothFit:
    basis: BSplineBasis
    coef: np.ndarray
    lam: float
    edf: float
    penalty_order: int = 2
    jitter: float = 0.0

    def __call__(self, x) -> np.ndarray:
        return evaluate_basis(self.basis, x) @ self.coef


@dataclass
class _Factor:
    cho: tuple
    jitter: float = 0.0
    condition: float = field(default=float("nan"))

    def solve(self, b):
        return linalg.cho_solve(self.cho, b)


def _factorize(BtB, G, lam) -> _Factor:
    k = BtB.shape[0]
    A = BtB + lam * G
    cond = np.linalg.cond(A)
    jitter = 0.0
    if not np.isfinite(cond) or cond > CONDITION_LIMIT:
        jitter = JITTER_SCALE * np.trace(BtB) / k
        A = A + jitter * np.eye(k)
        cond = np.linalg.cond(A)
    try:
        cho = linalg.cho_factor(A, lower=True, check_finite=True)
    except linalg.LinAlgError:
        raise SingularSystemError(
            f"penalized normal equations are singular (condition estimate {cond:.3g})",
            condition=cond,
        ) from None
    if not np.isfinite(cond) or cond > 1.0 / np.finfo(float).eps:
        raise SingularSystemError(
            f"penalized normal equations are singular (condition estimate {cond:.3g})",
            condition=cond,
        )
    return _Factor(cho, jitter, cond)


def _check_lambda(lam):
    lam = float(lam)
    if not lam >= 0 or not math.isfinite(lam):
        raise ValueError(f"lambda must be finite and >= 0, got {lam!r}")
    return lam


def fit_penalized(B, y, penalty: PenaltyMatrix, lam: float, basis: BSplineBasis | None = None) -> SmoothFit:
    """Solve ``(B'B + lam * G) a = B'y`` and report the effective df."""
    B = np.asarray(B, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    if B.shape[0] != y.size:
        raise ValueError(f"B has {B.shape[0]} rows but y has length {y.size}")
    if B.shape[1] != penalty.k:
        raise ValueError(f"B has {B.shape[1]} columns but penalty is {penalty.k}x{penalty.k}")
    lam = _check_lambda(lam)
    BtB = B.T @ B
    fac = _factorize(BtB, penalty.G, lam)
    coef = fac.solve(B.T @ y)
    spec = penalty_spectrum(BtB, penalty)
    edf = _edf_from_spectrum(spec, lam) if spec is not None else float(np.trace(fac.solve(BtB)))
    return SmoothFit(basis, coef, lam, edf, penalty.order, fac.jitter)


# B'B with a larger condition number uses the direct trace formula instead
SPECTRUM_CONDITION_LIMIT = 1e10


def penalty_spectrum(BtB, penalty: PenaltyMatrix):
    """Eigenvalues ``s`` of ``R^-T G R^-1`` where ``B'B = R'R``.

    The smoother trace is then ``sum(1 / (1 + lam * s))``, exactly
    decreasing in lambda. The ``penalty.order`` smallest values span the
    penalty null space and are set to zero. Returns None when ``B'B``
    is too ill-conditioned to factor reliably.
    """
    BtB = np.asarray(BtB, dtype=float)
    if not np.linalg.cond(BtB) < SPECTRUM_CONDITION_LIMIT:
        return None
    R = linalg.cholesky(BtB, lower=False)
    Rinv = linalg.solve_triangular(R, np.eye(BtB.shape[0]))
    s = np.sort(np.linalg.eigvalsh(Rinv.T @ penalty.G @ Rinv))
    s[: penalty.order] = 0.0
    return np.maximum(s, 0.0)


def _edf_from_spectrum(s, lam):
    return float(np.sum(1.0 / (1.0 + lam * s)))


def edf_for_lambda(B, penalty: PenaltyMatrix, lam: float, gram=None, spectrum=None) -> float:
    """Trace of the smoother matrix ``B (B'B + lam G)^-1 B'``."""
    lam = _check_lambda(lam)
    BtB = np.asarray(B, dtype=float).T @ np.asarray(B, dtype=float) if gram is None else gram
    if spectrum is None:
        spectrum = penalty_spectrum(BtB, penalty)
    if spectrum is not None:
        return _edf_from_spectrum(spectrum, lam)
    fac = _factorize(BtB, penalty.G, lam)
    return float(np.trace(fac.solve(BtB)))


def hat_matrix(B, penalty: PenaltyMatrix, lam: float) -> np.ndarray:
    """Explicit N x N smoother matrix; intended for small problems."""
    B = np.asarray(B, dtype=float)
    fac = _factorize(B.T @ B, penalty.G, _check_lambda(lam))
    return B @ fac.solve(B.T)


def solve_lambda_for_edf(
    B,
    penalty: PenaltyMatrix,
    target_edf: float,
    tol: float = 1e-4,
    max_iter: int = 200,
    gram=None,
) -> float:
    """Find the lambda whose smoother has ``target_edf`` effective df.

    Bisection on log10(lambda) over [-8, 12]. Targets within ``tol`` of
    the reachable range snap to its nearer bound; targets at or beyond it
    but still within [penalty order, rank(B)] snap with a RuntimeWarning.
    Anything else raises LambdaRangeError.
    """
    BtB = np.asarray(B, dtype=float).T @ np.asarray(B, dtype=float) if gram is None else gram
    spec = penalty_spectrum(BtB, penalty)

    def edf(log_lam):
        return edf_for_lambda(None, penalty, 10.0**log_lam, gram=BtB, spectrum=spec)

    lo, hi = LOG10_LAMBDA_MIN, LOG10_LAMBDA_MAX
    edf_max, edf_min = edf(lo), edf(hi)
    if target_edf > edf_max - tol:
        if target_edf < edf_max:
            return 10.0**lo
        rank = np.linalg.matrix_rank(BtB)
        if target_edf <= rank + tol:
            warnings.warn(
                f"target edf {target_edf} is at or above the lambda floor edf {edf_max:.6g}; "
                f"returning lambda = 1e{lo:g}",
                RuntimeWarning,
                stacklevel=2,
            )
            return 10.0**lo
        raise LambdaRangeError(
            f"target edf {target_edf} outside achievable range [{edf_min:.6g}, {edf_max:.6g}]",
            achievable=(edf_min, edf_max),
        )
    if target_edf < edf_min + tol:
        if target_edf > edf_min:
            return 10.0**hi
        if target_edf >= penalty.order - tol:
            warnings.warn(
                f"target edf {target_edf} is at or below the lambda ceiling edf {edf_min:.6g}; "
                f"returning lambda = 1e{hi:g}",
                RuntimeWarning,
                stacklevel=2,
            )
            return 10.0**hi
        raise LambdaRangeError(
            f"target edf {target_edf} outside achievable range [{edf_min:.6g}, {edf_max:.6g}]",
            achievable=(edf_min, edf_max),
        )

    mid = 0.5 * (lo + hi)
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        e = edf(mid)
        if abs(e - target_edf) <= tol:
            break
        if e > target_edf:
            lo = mid
        else:
            hi = mid
    return 10.0**mid


def gcv_score(B, y, penalty: PenaltyMatrix, lam: float) -> float:
    """``N * RSS / (N - edf)^2`` for the penalized fit at ``lam``."""
    fit = fit_penalized(B, y, penalty, lam)
    y = np.asarray(y, dtype=float).ravel()
    rss = float(np.sum((y - np.asarray(B) @ fit.coef) ** 2))
    n = y.size
    if n - fit.edf <= 0:
        return np.inf
    return n * rss / (n - fit.edf) ** 2


def gcv_lambda(B, y, penalty: PenaltyMatrix) -> float:
    """Lambda minimizing GCV over log10(lambda) in [-8, 12].

    A coarse half-decade grid locates the basin; a bounded Brent search
    then refines inside the neighbouring grid cells.
    """
    B = np.asarray(B, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    BtB, Bty, yty, n = B.T @ B, B.T @ y, float(y @ y), y.size
    spec = penalty_spectrum(BtB, penalty)

    def score(log_lam):
        lam = 10.0**log_lam
        fac = _factorize(BtB, penalty.G, lam)
        a = fac.solve(Bty)
        rss = yty - 2 * a @ Bty + a @ BtB @ a
        edf = _edf_from_spectrum(spec, lam) if spec is not None else float(np.trace(fac.solve(BtB)))
        if n - edf <= 0:
            return np.inf
        return n * max(rss, 0.0) / (n - edf) ** 2

    grid = np.arange(LOG10_LAMBDA_MIN, LOG10_LAMBDA_MAX + 0.25, 0.5)
    scores = np.array([score(g) for g in grid])
    if not np.any(np.isfinite(scores)):
        raise NumericalError("GCV score is infinite over the whole lambda range")
    best = int(np.nanargmin(scores))
    lo = grid[max(best - 1, 0)]
    hi = grid[min(best + 1, grid.size - 1)]
    res = minimize_scalar(score, bounds=(lo, hi), method="bounded", options={"xatol": 1e-6})
    log_lam = res.x if res.fun <= scores[best] else grid[best]
    return 10.0**log_lam
