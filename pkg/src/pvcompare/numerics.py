"""Small dense-matrix kernels, a central-difference Hessian and tail probabilities.

Everything here operates on matrices no larger than 8x8 and on scalar
distribution functions; there is deliberately no general linear-algebra layer.
"""

import math
from statistics import NormalDist

import numpy as np

from .exceptions import EvaluationFailure, InvalidDf, SingularMatrix

PIVOT_TOL = 1e-12
MAX_DIM = 8
HESSIAN_STEP = 1e-5
CF_MAX_ITER = 300
CF_EPS = 1e-15
_TINY = 1e-300

DISTRIBUTIONS = ("std_normal_two_sided", "chi2", "f_dist", "t_two_sided")


def invert(m):
    """Invert a square matrix by Gauss-Jordan elimination with partial pivoting.

    Parameters
    ----------
    m : array_like, shape (k, k)
        Matrix with ``k <= 8``.

    Returns
    -------
    ndarray, shape (k, k)

    Raises
    ------
    SingularMatrix
        If a pivot smaller than ``1e-12`` in magnitude remains after pivoting.
    """
    a = np.array(m, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    k = a.shape[0]
    if k == 0 or k > MAX_DIM:
        raise ValueError(f"matrix size must be in 1..{MAX_DIM}, got {k}")
    if not np.all(np.isfinite(a)):
        raise SingularMatrix("matrix has non-finite entries")
    aug = np.hstack([a, np.eye(k)])
    for col in range(k):
        piv = col + int(np.argmax(np.abs(aug[col:, col])))
        if abs(aug[piv, col]) < PIVOT_TOL:
            raise SingularMatrix(f"pivot {aug[piv, col]:.3e} in column {col}")
        if piv != col:
            aug[[col, piv]] = aug[[piv, col]]
        aug[col] /= aug[col, col]
        for row in range(k):
            if row != col and aug[row, col] != 0.0:
                aug[row] -= aug[row, col] * aug[col]
    return aug[:, k:]


def numeric_hessian(f, x0, h=HESSIAN_STEP, extrapolate=False):
    """Central-difference Hessian of a scalar function.

    The step along coordinate ``i`` is ``h * max(1, |x0[i]|)``; every entry
    (diagonal included) uses the four-point cross formula, and the result is
    symmetrised. With ``extrapolate`` the estimates at ``h`` and ``h/2`` are
    combined by Richardson extrapolation, which removes the O(h^2) error
    term; this matters when the curvature varies over scales close to ``h``.
    """
    x0 = np.asarray(x0, dtype=float)
    if h <= 0:
        raise ValueError("step must be positive")
    if extrapolate:
        coarse = numeric_hessian(f, x0, h)
        fine = numeric_hessian(f, x0, h / 2.0)
        return (4.0 * fine - coarse) / 3.0
    k = x0.size
    steps = h * np.maximum(1.0, np.abs(x0))
    cache = {}

    def ev(i, si, j, sj):
        key = (i, si, j, sj) if (i, si) <= (j, sj) else (j, sj, i, si)
        if key not in cache:
            x = x0.copy()
            x[i] += si * steps[i]
            x[j] += sj * steps[j]
            try:
                val = float(f(x))
            except (ArithmeticError, ValueError) as exc:
                raise EvaluationFailure(f"evaluation failed at {x!r}: {exc}") from exc
            if not math.isfinite(val):
                raise EvaluationFailure(f"non-finite value at {x!r}")
            cache[key] = val
        return cache[key]

    H = np.empty((k, k))
    for i in range(k):
        for j in range(i, k):
            num = ev(i, 1, j, 1) - ev(i, 1, j, -1) - ev(i, -1, j, 1) + ev(i, -1, j, -1)
            H[i, j] = H[j, i] = num / (4.0 * steps[i] * steps[j])
    return (H + H.T) / 2.0


# ---------------------------------------------------------------------------
# special functions
# ---------------------------------------------------------------------------

def _betacf(a, b, x, max_iter):
    """Continued fraction for the incomplete beta function (modified Lentz)."""
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _TINY:
        d = _TINY
    d = 1.0 / d
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < CF_EPS:
            return h
    raise ArithmeticError(f"incomplete beta continued fraction did not converge (a={a}, b={b}, x={x})")


def betainc(a, b, x, max_iter=None):
    """Regularised incomplete beta function ``I_x(a, b)``."""
    if a <= 0 or b <= 0:
        raise InvalidDf(f"beta parameters must be positive, got a={a}, b={b}")
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    if max_iter is None:
        # the fraction needs O(sqrt(max(a, b))) terms; 300 covers df up to ~1e4
        max_iter = max(CF_MAX_ITER, int(10 * math.sqrt(max(a, b))))
    lbt = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
           + a * math.log(x) + b * math.log1p(-x))
    if x < (a + 1.0) / (a + b + 2.0):
        return math.exp(lbt) * _betacf(a, b, x, max_iter) / a
    return 1.0 - math.exp(lbt) * _betacf(b, a, 1.0 - x, max_iter) / b


def gammaincc(a, x):
    """Regularised upper incomplete gamma function ``Q(a, x)``."""
    if a <= 0:
        raise InvalidDf(f"gamma shape must be positive, got {a}")
    if x <= 0:
        return 1.0
    lpre = -x + a * math.log(x) - math.lgamma(a)
    if x < a + 1.0:
        term = total = 1.0 / a
        ap = a
        for _ in range(10 * CF_MAX_ITER):
            ap += 1.0
            term *= x / ap
            total += term
            if abs(term) < abs(total) * CF_EPS:
                break
        return max(0.0, 1.0 - total * math.exp(lpre))
    b = x + 1.0 - a
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, 10 * CF_MAX_ITER):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < CF_EPS:
            break
    return math.exp(lpre) * h


def tail_prob(dist, x, df1=1.0, df2=1.0):
    """Upper-tail probability of a test statistic.

    Parameters
    ----------
    dist : {"std_normal_two_sided", "chi2", "f_dist", "t_two_sided"}
        Reference distribution. The normal and t references are two-sided,
        i.e. ``P(|Z| >= |x|)``.
    x : float
        Observed statistic.
    df1, df2 : float
        Degrees of freedom. ``chi2`` and ``t_two_sided`` use ``df1``; ``f_dist``
        uses both. Non-integer values are allowed and ``math.inf`` selects the
        limiting distribution.
    """
    if dist == "std_normal_two_sided":
        return math.erfc(abs(x) / math.sqrt(2.0))
    if dist == "t_two_sided":
        _check_df(df1)
        if math.isinf(df1):
            return math.erfc(abs(x) / math.sqrt(2.0))
        return betainc(df1 / 2.0, 0.5, df1 / (df1 + x * x))
    if x < 0:
        raise ValueError(f"{dist} statistic must be non-negative, got {x}")
    if dist == "chi2":
        _check_df(df1)
        if df1 == 2.0:
            return math.exp(-x / 2.0)
        return gammaincc(df1 / 2.0, x / 2.0)
    if dist == "f_dist":
        _check_df(df1)
        _check_df(df2)
        if math.isinf(df2):
            return tail_prob("chi2", df1 * x, df1)
        if x == 0.0:
            return 1.0
        if df1 == 2.0:
            # I_z(l/2, 1) = z^(l/2)
            return math.exp(-(df2 / 2.0) * math.log1p(2.0 * x / df2))
        return betainc(df2 / 2.0, df1 / 2.0, df2 / (df2 + df1 * x))
    raise ValueError(f"unknown distribution {dist!r}")


def _check_df(df):
    if not df > 0:
        raise InvalidDf(f"degrees of freedom must be positive, got {df}")


def normal_quantile(p):
    return NormalDist().inv_cdf(p)
