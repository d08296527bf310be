"""Multiple imputation of unverified disease status and pooled inference.

Imputation model: logistic regression of D on (T1, T2) over the verified
subjects; each imputation draws coefficients from the asymptotic normal
posterior and then the diseased count of every cell from a binomial.
"""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import paired
from .exceptions import (NonConvergence, SingularMatrix, SingularPooledCovariance,
                         NegativeRsWarning, Separation, ZeroCellForMi)
from .inference import CONTRAST, adjust, quadratic_form_test
from .model import CELLS, CompleteTable
from .numerics import invert, normal_quantile, tail_prob

DEFAULT_M = 20
DEFAULT_CYCLES = 100
IRLS_TOL = 1e-10
IRLS_MAX_ITER = 100
CONVENTIONS = ("paper", "standard")
INDIVIDUAL_METHODS = ("leisenring", "wang", "kosinski")

_DESIGN = np.array([[1.0, i, j] for i, j in CELLS])


def _expit(z):
    return 1.0 / (1.0 + np.exp(-z))


def fit_logistic(table):
    """Logistic regression of disease on both test results, verified subjects only.

    Returns
    -------
    beta_hat : ndarray, shape (3,)
        Intercept, T1 and T2 coefficients.
    beta_cov : ndarray, shape (3, 3)
        Inverse of the information matrix at ``beta_hat``.
    """
    a = np.asarray(table.a, dtype=float)
    b = np.asarray(table.b, dtype=float)
    if np.any(a <= 0) or np.any(b <= 0):
        raise ZeroCellForMi("multiple imputation needs every a_ij and b_ij > 0")
    m = a + b
    beta = np.zeros(3)
    for _ in range(IRLS_MAX_ITER):
        pi = _expit(_DESIGN @ beta)
        grad = _DESIGN.T @ (a - m * pi)
        w = m * pi * (1.0 - pi)
        info = _DESIGN.T @ (w[:, None] * _DESIGN)
        if np.max(np.abs(grad)) < IRLS_TOL:
            break
        try:
            beta = beta + invert(info) @ grad
        except SingularMatrix as exc:
            raise Separation(f"information matrix singular during IRLS: {exc}") from exc
        if not np.all(np.isfinite(beta)) or np.max(np.abs(beta)) > 50:
            raise Separation(f"IRLS diverged (beta={beta})")
    else:
        raise NonConvergence(f"IRLS did not converge in {IRLS_MAX_ITER} iterations")
    return beta, invert(info)


@dataclass
class TableAnalysis:
    """Complete-data quantities of one imputed table."""

    estimates: paired.PairedEstimates
    wald: float
    lrt: float
    leisenring: tuple
    wang: tuple
    kosinski: tuple


def analyze_table(t):
    est = paired.estimates(t)
    s = est.sigma
    d_ppv = est.ppv1 - est.ppv2
    d_npv = est.npv1 - est.npv2
    wang = ((d_ppv, s[0, 0] + s[2, 2] - 2 * s[0, 2]),
            (d_npv, s[1, 1] + s[3, 3] - 2 * s[1, 3]))
    wald, _ = quadratic_form_test(est.eta, est.sigma)
    return TableAnalysis(est, wald, paired.lrt_statistic(t), paired.leisenring_tests(t),
                         wang, paired.kosinski_parts(t))


@dataclass
class ImputationSet:
    tables: list
    m_count: int
    cycles: int
    seed: int
    beta_hat: np.ndarray
    beta_cov: np.ndarray
    per_table: list = field(default_factory=list)


def _substream(seed, m):
    return np.random.default_rng(np.random.SeedSequence([seed, m]))


def _resolve_seed(rng):
    if rng is None:
        return int(np.random.SeedSequence().entropy % (2 ** 63))
    if isinstance(rng, np.random.Generator):
        return int(rng.integers(2 ** 63))
    return int(rng)


def impute_m(table, M=DEFAULT_M, cycles=DEFAULT_CYCLES, rng=None, analyze=True):
    """Create ``M`` completed tables from a partially verified one.

    ``rng`` is an integer seed or a ``numpy.random.Generator``. Imputation
    ``m`` uses its own stream derived from (seed, m).

    With disease status the only incomplete variable, the imputation model is
    always fitted to the verified subjects, so every chained-equation cycle
    is an independent redraw of the same posterior predictive distribution;
    ``cycles`` is recorded but a single draw per imputation is made.
    """
    if M < 2:
        raise ValueError("need at least two imputations")
    if cycles < 1:
        raise ValueError("need at least one cycle")
    seed = _resolve_seed(rng)
    beta_hat, beta_cov = fit_logistic(table)
    chol = np.linalg.cholesky((beta_cov + beta_cov.T) / 2.0)
    c = np.asarray(table.c, dtype=np.int64)
    tables = []
    for m in range(M):
        gen = _substream(seed, m)
        beta_star = beta_hat + chol @ gen.standard_normal(3)
        pi = _expit(_DESIGN @ beta_star)
        drawn = gen.binomial(c, pi)
        tables.append(CompleteTable(
            tuple(int(a + k) for a, k in zip(table.a, drawn)),
            tuple(int(b + ci - k) for b, ci, k in zip(table.b, c, drawn)),
        ))
    out = ImputationSet(tables, M, cycles, seed, beta_hat, beta_cov)
    if analyze:
        out.per_table = [analyze_table(t) for t in tables]
    return out


# ---------------------------------------------------------------------------
# pooling
# ---------------------------------------------------------------------------

def _between(values):
    values = np.asarray(values, dtype=float)
    if np.all(values == values[0]):
        return 0.0 if values.ndim == 1 else np.zeros((values.shape[1],) * 2)
    if values.ndim == 1:
        return float(np.var(values, ddof=1))
    return np.cov(values, rowvar=False, ddof=1)


def total_variance(within, between, M, convention="paper"):
    """Within plus between-imputation variance.

    ``paper`` adds ``B / (M + 1)``; ``standard`` adds ``(1 + 1/M) B``.
    """
    if convention == "paper":
        return within + between / (M + 1)
    if convention == "standard":
        return within + (1.0 + 1.0 / M) * between
    raise ValueError(f"unknown convention {convention!r}")


def rubin_pool(diffs, variances, M=None, convention="paper"):
    """Pool an estimate and its variance over imputations.

    Returns
    -------
    estimate, variance, df : float
        ``df`` is ``inf`` when the between-imputation variance is zero, in
        which case the normal reference applies.
    """
    diffs = np.asarray(diffs, dtype=float)
    variances = np.asarray(variances, dtype=float)
    if M is None:
        M = diffs.size
    if M < 2:
        raise ValueError("need at least two imputations")
    est = float(np.mean(diffs))
    within = float(np.mean(variances))
    between = _between(diffs)
    total = total_variance(within, between, M, convention)
    if between == 0.0:
        return est, total, math.inf
    if convention == "paper":
        df = (M - 1) * (1.0 + (M / (M + 1.0)) * total / between)
    else:
        df = (M - 1) * (1.0 + within / ((1.0 + 1.0 / M) * between)) ** 2
    return est, total, df


def li_df(r, M):
    """Denominator degrees of freedom of the pooled Wald and LRT F statistics."""
    if r <= 0.0:
        return math.inf
    if 2 * (M - 1) > 4:
        return 4.0 + (2 * M - 6) * (1.0 + (M - 2) / ((M - 1) * r)) ** 2
    return 1.5 * (M - 1) * (1.0 + 1.0 / r) ** 2


def _f_pvalue(f, l):
    if f <= 0.0:
        return 1.0
    return tail_prob("f_dist", f, 2.0, l)


def _etas(set_):
    return np.array([a.estimates.eta for a in set_.per_table])


def wald_global(set_):
    """Pooled Wald statistic F1 with its (2, l) degrees of freedom and p-value.

    Returns ``(f1, l, pvalue, r1)``.
    """
    M = set_.m_count
    etas = _etas(set_)
    eta_bar = etas.mean(axis=0)
    sigma_bar = np.mean([a.estimates.sigma for a in set_.per_table], axis=0)
    B = _between(etas)
    try:
        sigma_inv = invert(sigma_bar)
        cinv = invert(CONTRAST @ sigma_bar @ CONTRAST.T)
    except SingularMatrix as exc:
        raise SingularPooledCovariance(str(exc)) from exc
    r1 = (1.0 + 1.0 / M) * float(np.trace(B @ sigma_inv)) / 2.0
    ge = CONTRAST @ eta_bar
    f1 = float(ge @ cinv @ ge) / (2.0 * (1.0 + r1))
    l = li_df(r1, M)
    return f1, l, _f_pvalue(f1, l), r1


def combine_pvalues(set_):
    """Combination of the per-imputation Wald statistics.

    Returns ``(f2, l, pvalue, r2)``. When the statistics do not vary, ``l``
    is infinite and the limiting chi-square/2 reference is used.
    """
    M = set_.m_count
    F = np.array([a.wald for a in set_.per_table])
    root = np.sqrt(F)
    r2 = (1.0 + 1.0 / M) * _between(root)
    f2 = (F.mean() / 2.0 - (M + 1.0) / (M - 1.0) * r2) / (1.0 + r2)
    l = math.inf if r2 == 0.0 else 2.0 ** (-3.0 / M) * (M - 1) * (1.0 + 1.0 / r2) ** 2
    return float(f2), l, _f_pvalue(f2, l), float(r2)


def combined_lrt(set_):
    """Combined likelihood-ratio statistic F3.

    Returns ``(f3, l, pvalue, r3)``. A negative ``r3`` is floored at zero with
    a :class:`NegativeRsWarning`.
    """
    M = set_.m_count
    f3_bar = float(np.mean([a.lrt for a in set_.per_table]))
    psi_bar = np.mean([paired.unrestricted_probs(t) for t in set_.tables], axis=0)
    psi0_bar = np.mean([paired.restricted_probs(t) for t in set_.tables], axis=0)
    f3_tilde = 2.0 / M * sum(
        paired.multinomial_loglik(t, psi_bar) - paired.multinomial_loglik(t, psi0_bar)
        for t in set_.tables
    )
    r3 = (M + 1.0) / (2.0 * (M - 1.0)) * (f3_bar - f3_tilde)
    if r3 < 0.0:
        # exact ties give ~1e-15 noise; only warn for a material negative value
        if r3 < -1e-9:
            warnings.warn(f"negative missing-information ratio r3={r3:.3g} set to 0",
                          NegativeRsWarning, stacklevel=2)
        r3 = 0.0
    f3 = f3_tilde / (2.0 * (1.0 + r3))
    l = li_df(r3, M)
    return float(f3), l, _f_pvalue(f3, l), float(r3)


def _t_or_normal(stat, df):
    if math.isinf(df):
        return tail_prob("std_normal_two_sided", stat)
    return tail_prob("t_two_sided", stat, df)


def individual_mi(set_, method, convention="paper"):
    """Pooled individual tests for PPV1 = PPV2 and NPV1 = NPV2.

    Returns ``(stat_ppv, stat_npv, p_ppv, p_npv, df_ppv, df_npv)``. Leisenring
    statistics are averaged and referred to the standard normal (the average
    of M correlated z statistics is treated as standard normal, which is only
    approximate); Wang and Kosinski are pooled with :func:`rubin_pool`.
    """
    per = set_.per_table
    M = set_.m_count
    if method == "leisenring":
        z = np.mean([a.leisenring for a in per], axis=0)
        return (float(z[0]), float(z[1]),
                tail_prob("std_normal_two_sided", z[0]),
                tail_prob("std_normal_two_sided", z[1]), math.inf, math.inf)
    if method not in ("wang", "kosinski"):
        raise ValueError(f"unknown method {method!r}")
    out = []
    for k in range(2):
        parts = [getattr(a, method)[k] for a in per]
        est, var, df = rubin_pool([p[0] for p in parts], [p[1] for p in parts], M, convention)
        stat = est / math.sqrt(var)
        out.append((stat, _t_or_normal(stat, df), df, est, var))
    (s0, p0, d0, _, _), (s1, p1, d1, _, _) = out
    return s0, s1, p0, p1, d0, d1


def pooled_difference(set_, method, convention="paper"):
    """Pooled (difference, variance) pairs for PPV and NPV under ``method``."""
    res = []
    for k in range(2):
        parts = [getattr(a, method)[k] for a in set_.per_table]
        est, var, _ = rubin_pool([p[0] for p in parts], [p[1] for p in parts],
                                 set_.m_count, convention)
        res.append((est, var))
    return tuple(res)


@dataclass
class PooledResult:
    eta_bar: np.ndarray
    sigma_bar: np.ndarray
    b_between: np.ndarray
    se: np.ndarray
    f1: tuple
    f2: tuple
    f3: tuple
    individual: dict
    decisions: dict
    cis: dict
    convention: str
    alpha: float
    level: float

    @property
    def r1(self):
        return self.f1[3]

    @property
    def r2(self):
        return self.f2[3]

    @property
    def r3(self):
        return self.f3[3]


def pool(set_, convention="paper", alpha=0.05, level=0.95, methods=INDIVIDUAL_METHODS):
    """All pooled estimates and tests for an analysed imputation set."""
    M = set_.m_count
    etas = _etas(set_)
    eta_bar = etas.mean(axis=0)
    sigma_bar = np.mean([a.estimates.sigma for a in set_.per_table], axis=0)
    B = _between(etas)
    # standard errors of the pooled estimates follow the conventional rule;
    # the convention switch governs the pooled test contrasts
    total = total_variance(sigma_bar, B, M, "standard")
    se = np.sqrt(np.clip(np.diag(total), 0.0, None))
    individual = {}
    decisions = {}
    cis = {}
    z = normal_quantile((1.0 + level) / 2.0)
    for method in methods:
        res = individual_mi(set_, method, convention)
        individual[method] = res
        decisions[method] = {m: adjust(res[2:4], m, alpha)
                             for m in ("raw", "bonferroni", "holm")}
        if method != "leisenring":
            (dp, vp), (dn, vn) = pooled_difference(set_, method, convention)
            cis[method] = ((dp - z * math.sqrt(vp), dp + z * math.sqrt(vp)),
                           (dn - z * math.sqrt(vn), dn + z * math.sqrt(vn)))
    return PooledResult(eta_bar, sigma_bar, B, se, wald_global(set_), combine_pvalues(set_),
                        combined_lrt(set_), individual, decisions, cis, convention, alpha, level)
