"""Independent reference implementations used as test oracles.

Nothing here imports hedonic_gam. Each routine takes the slow, obvious
route (scalar recursion, explicit inverses, arbitrary-precision
quadrature) so that agreement with the package is meaningful.

Run ``python3 tests/oracles.py`` to regenerate the frozen tail-probability
table in ``tests/data/tail_oracle.json``.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import mpmath as mp
import numpy as np

DATA = Path(__file__).parent / "data"


# -- B-splines ---------------------------------------------------------------

def bspline_scalar(i: int, p: int, knots, x: float) -> float:
    """Textbook Cox-de Boor recursion for one basis function at one point."""
    if p == 0:
        return 1.0 if knots[i] <= x < knots[i + 1] else 0.0
    out = 0.0
    d1 = knots[i + p] - knots[i]
    if d1 > 0:
        out += (x - knots[i]) / d1 * bspline_scalar(i, p - 1, knots, x)
    d2 = knots[i + p + 1] - knots[i + 1]
    if d2 > 0:
        out += (knots[i + p + 1] - x) / d2 * bspline_scalar(i + 1, p - 1, knots, x)
    return out


def pspline_knots(x_min, x_max, n_segments, degree):
    h = (x_max - x_min) / n_segments
    return [x_min + (j - degree) * h for j in range(n_segments + 2 * degree + 1)]


def bspline_design(x, x_min, x_max, n_segments, degree):
    knots = pspline_knots(x_min, x_max, n_segments, degree)
    k = n_segments + degree
    return np.array([[bspline_scalar(i, degree, knots, xi) for i in range(k)] for xi in x])


def cardinal_cubic(u: float) -> float:
    """Closed-form uniform cubic B-spline on knots 0..4."""
    if 0 <= u < 1:
        return u**3 / 6
    if 1 <= u < 2:
        return (-3 * u**3 + 12 * u**2 - 12 * u + 4) / 6
    if 2 <= u < 3:
        return (3 * u**3 - 24 * u**2 + 60 * u - 44) / 6
    if 3 <= u < 4:
        return (4 - u) ** 3 / 6
    return 0.0


# -- linear algebra ----------------------------------------------------------

def gauss_jordan_inverse(A):
    """Dense inverse by Gauss-Jordan elimination with partial pivoting."""
    A = [list(map(float, row)) for row in np.asarray(A)]
    n = len(A)
    inv = [[float(i == j) for j in range(n)] for i in range(n)]
    for c in range(n):
        piv = max(range(c, n), key=lambda r: abs(A[r][c]))
        A[c], A[piv] = A[piv], A[c]
        inv[c], inv[piv] = inv[piv], inv[c]
        d = A[c][c]
        A[c] = [v / d for v in A[c]]
        inv[c] = [v / d for v in inv[c]]
        for r in range(n):
            if r != c and A[r][c] != 0.0:
                f = A[r][c]
                A[r] = [a - f * b for a, b in zip(A[r], A[c])]
                inv[r] = [a - f * b for a, b in zip(inv[r], inv[c])]
    return np.array(inv)


def second_difference(k, order=2):
    D = np.eye(k)
    for _ in range(order):
        D = D[1:] - D[:-1]
    return D


def penalized_normal_equations(B, y, lam, order=2):
    """coef = (B'B + lam D'D)^-1 B'y with hand-rolled products and inverse."""
    B = np.asarray(B, dtype=float)
    n, k = B.shape
    D = second_difference(k, order)
    A = np.zeros((k, k))
    for i in range(k):
        for j in range(k):
            A[i, j] = sum(B[r, i] * B[r, j] for r in range(n)) + lam * sum(D[r, i] * D[r, j] for r in range(D.shape[0]))
    rhs = np.array([sum(B[r, i] * y[r] for r in range(n)) for i in range(k)])
    return gauss_jordan_inverse(A) @ rhs


def edf_direct(B, lam, order=2):
    B = np.asarray(B, dtype=float)
    D = second_difference(B.shape[1], order)
    H = B @ np.linalg.inv(B.T @ B + lam * D.T @ D) @ B.T
    return float(np.trace(H))


def ols_bruteforce(X, y):
    """beta, se, t, p for OLS with intercept via explicit (X'X)^-1."""
    X = np.column_stack([np.ones(len(y)), np.asarray(X, dtype=float)])
    n, p = X.shape
    XtX_inv = gauss_jordan_inverse(X.T @ X)
    beta = XtX_inv @ (X.T @ y)
    resid = y - X @ beta
    sigma2 = float(resid @ resid) / (n - p)
    se = np.sqrt(sigma2 * np.diag(XtX_inv))
    t = beta / se
    pv = np.array([t_two_sided_quad(abs(ti), n - p) for ti in t])
    return beta, se, t, pv


def joint_gam_solve(X, y, lams, n_segments=10, degree=3, order=2):
    """All smooth terms at once: one augmented least-squares problem.

    Each term uses the centered B-spline design so that the intercept is
    mean(y); the penalized objective is the one backfitting minimizes.
    """
    n, m = X.shape
    blocks, pens = [], []
    for j in range(m):
        x = X[:, j]
        Bj = bspline_design(x, x.min(), x.max(), n_segments, degree)
        blocks.append(Bj - Bj.mean(axis=0))
        Dj = second_difference(Bj.shape[1], order)
        pens.append(math.sqrt(lams[j]) * Dj)
    A = np.hstack(blocks)
    P = np.zeros((sum(p.shape[0] for p in pens), A.shape[1]))
    r = c = 0
    for Bj, Pj in zip(blocks, pens):
        P[r:r + Pj.shape[0], c:c + Bj.shape[1]] = Pj
        r += Pj.shape[0]
        c += Bj.shape[1]
    yc = y - y.mean()
    coef = np.linalg.lstsq(np.vstack([A, P]), np.concatenate([yc, np.zeros(P.shape[0])]), rcond=None)[0]
    out, c = [], 0
    for Bj in blocks:
        out.append(Bj @ coef[c:c + Bj.shape[1]])
        c += Bj.shape[1]
    return y.mean(), out


# -- statistics --------------------------------------------------------------

def two_pass_corr(X):
    """Pearson matrix from an explicit mean pass then a covariance pass."""
    X = np.asarray(X, dtype=float)
    n, m = X.shape
    means = [sum(X[:, j]) / n for j in range(m)]
    C = np.zeros((m, m))
    for a in range(m):
        for b in range(m):
            C[a, b] = sum((X[i, a] - means[a]) * (X[i, b] - means[b]) for i in range(n)) / (n - 1)
    sd = np.sqrt(np.diag(C))
    return C / np.outer(sd, sd)


def t_two_sided_quad(t, df, dps=30):
    """P(|T_df| >= t) by adaptive quadrature of the Student t density."""
    with mp.workdps(dps):
        t, nu = mp.mpf(t), mp.mpf(df)
        if t == 0:
            return 1.0
        c = mp.gamma((nu + 1) / 2) / (mp.sqrt(nu * mp.pi) * mp.gamma(nu / 2))
        dens = lambda x: c * (1 + x * x / nu) ** (-(nu + 1) / 2)  # noqa: E731
        if t < 1:
            # 1 - 2 * integral over [0, t] avoids a long tail integral
            return float(1 - 2 * mp.quad(dens, [0, t]))
        return float(2 * mp.quad(dens, [t, 2 * t, 10 * t, mp.inf]))


def f_upper_quad(F, d1, d2, dps=30):
    """P(F_{d1,d2} >= F) by adaptive quadrature of the F density."""
    with mp.workdps(dps):
        F, a, b = mp.mpf(F), mp.mpf(d1), mp.mpf(d2)
        if F == 0:
            return 1.0
        logc = (a / 2) * mp.log(a / b) - mp.log(mp.beta(a / 2, b / 2))
        dens = lambda x: mp.exp(logc + (a / 2 - 1) * mp.log(x) - (a + b) / 2 * mp.log(1 + a * x / b))  # noqa: E731
        if F <= 1:
            # x = s**(2/d1) turns the x**(d1/2 - 1) endpoint singularity into a constant
            e = 2 / a
            smooth = lambda s: dens(s**e) * e * s ** (e - 1)  # noqa: E731
            return float(1 - mp.quad(smooth, [0, F ** (1 / e)]))
        return float(mp.quad(dens, [F, 2 * F, 10 * F, mp.inf]))


T_STATS = (0.0, 0.1, 0.5, 1.0, 1.96, 2.5, 3.0, 5.0, 10.0, 30.0)
T_DFS = (0.5, 1.0, 1.5, 2.0, 3.7, 5.0, 10.0, 30.0, 97.0, 1000.0)
F_STATS = (0.0, 0.2, 0.8, 1.0, 1.5, 3.2, 5.0, 10.0, 25.0, 100.0)
F_DFS = ((1.0, 1.0), (0.5, 3.0), (1.0, 10.0), (2.0, 7.5), (3.4, 120.0),
         (4.0, 20.0), (5.5, 2.5), (10.0, 50.0), (1.7, 1000.0), (25.0, 300.0))


def tail_grid():
    rows = []
    for df in T_DFS:
        for t in T_STATS:
            rows.append({"kind": "t", "stat": t, "df1": df, "df2": None, "p": t_two_sided_quad(t, df)})
    for d1, d2 in F_DFS:
        for F in F_STATS:
            rows.append({"kind": "F", "stat": F, "df1": d1, "df2": d2, "p": f_upper_quad(F, d1, d2)})
    return rows


if __name__ == "__main__":
    DATA.mkdir(exist_ok=True)
    (DATA / "tail_oracle.json").write_text(json.dumps(tail_grid(), indent=1) + "\n")
    print("wrote", DATA / "tail_oracle.json")
