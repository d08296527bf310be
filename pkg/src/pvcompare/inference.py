"""Tests and intervals for the predictive-value vector (PPV1, NPV1, PPV2, NPV2).

Shared by the EM-SEM path, the fully verified (paired) path and the
per-imputation analyses.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import SingularContrastCovariance, SingularMatrix, ZeroVarianceContrast
from .numerics import invert, normal_quantile, tail_prob

# rows: PPV1 - PPV2, NPV1 - NPV2
CONTRAST = np.array([[1.0, 0.0, -1.0, 0.0],
                     [0.0, 1.0, 0.0, -1.0]])
ADJUST_METHODS = ("raw", "bonferroni", "holm")


@dataclass
class PvInference:
    eta: np.ndarray
    sigma_eta: np.ndarray
    n: float = 0.0

    def __post_init__(self):
        self.eta = np.asarray(self.eta, dtype=float).reshape(4)
        self.sigma_eta = np.asarray(self.sigma_eta, dtype=float).reshape(4, 4)

    def swap_tests(self):
        perm = [2, 3, 0, 1]
        return PvInference(self.eta[perm], self.sigma_eta[np.ix_(perm, perm)], self.n)


@dataclass
class TestReport:
    q2: float
    q2_pvalue: float
    z_ppv: float
    z_npv: float
    p_ppv: float
    p_npv: float
    alpha: float
    level: float
    decisions: dict = field(default_factory=dict)
    ci_ppv_diff: tuple = (math.nan, math.nan)
    ci_npv_diff: tuple = (math.nan, math.nan)

    def as_dict(self):
        return {
            "global": {"q2": self.q2, "pvalue": self.q2_pvalue,
                       "reject": self.q2_pvalue < self.alpha},
            "individual": {"z_ppv": self.z_ppv, "z_npv": self.z_npv,
                           "p_ppv": self.p_ppv, "p_npv": self.p_npv},
            "decisions": {m: {"ppv": bool(r[0]), "npv": bool(r[1])}
                          for m, r in self.decisions.items()},
            "ci": {"level": self.level, "ppv_diff": list(self.ci_ppv_diff),
                   "npv_diff": list(self.ci_npv_diff)},
            "alpha": self.alpha,
        }


def quadratic_form_test(eta, sigma):
    """Chi-square statistic of the two equality contrasts and its p-value."""
    ge = CONTRAST @ np.asarray(eta, dtype=float)
    cov = CONTRAST @ np.asarray(sigma, dtype=float) @ CONTRAST.T
    try:
        cinv = invert((cov + cov.T) / 2.0)
    except SingularMatrix as exc:
        raise SingularContrastCovariance(str(exc)) from exc
    q2 = float(max(ge @ cinv @ ge, 0.0))
    return q2, tail_prob("chi2", q2, 2.0)


def global_test(inf):
    """Global statistic for H0: PPV1 = PPV2 and NPV1 = NPV2.

    Returns
    -------
    q2 : float
    pvalue : float
        Upper tail of the chi-square distribution with 2 df.
    """
    return quadratic_form_test(inf.eta, inf.sigma_eta)


def _contrast_se(sigma, i, j, allow_zero=False):
    var = sigma[i, i] + sigma[j, j] - 2.0 * sigma[i, j]
    if allow_zero and var == 0.0:
        return 0.0
    if not var > 0.0:
        raise ZeroVarianceContrast(f"contrast variance {var} is not positive")
    return math.sqrt(var)


def individual_tests(inf):
    """z statistics for PPV1 = PPV2 and NPV1 = NPV2 with two-sided p-values."""
    s = inf.sigma_eta
    z_ppv = (inf.eta[0] - inf.eta[2]) / _contrast_se(s, 0, 2)
    z_npv = (inf.eta[1] - inf.eta[3]) / _contrast_se(s, 1, 3)
    return (float(z_ppv), float(z_npv),
            tail_prob("std_normal_two_sided", z_ppv),
            tail_prob("std_normal_two_sided", z_npv))


def adjust(pvalues, method, alpha=0.05):
    """Rejection decisions for the two individual hypotheses.

    ``raw`` tests each at ``alpha``; ``bonferroni`` at ``alpha / 2``; ``holm``
    is the step-down version of Bonferroni.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must be in (0, 1), got {alpha}")
    k = len(pvalues)
    if method == "raw":
        return tuple(p < alpha for p in pvalues)
    if method == "bonferroni":
        return tuple(p < alpha / k for p in pvalues)
    if method == "holm":
        order = sorted(range(k), key=lambda i: pvalues[i])
        reject = [False] * k
        for rank, i in enumerate(order):
            if pvalues[i] < alpha / (k - rank):
                reject[i] = True
            else:
                break
        return tuple(reject)
    raise ValueError(f"unknown adjustment {method!r}")


def difference_cis(inf, level=0.95):
    """Wald intervals for PPV1 - PPV2 and NPV1 - NPV2."""
    if not 0.0 < level < 1.0:
        raise ValueError(f"confidence level must be in (0, 1), got {level}")
    z = normal_quantile((1.0 + level) / 2.0)
    s = inf.sigma_eta
    out = []
    for i, j in ((0, 2), (1, 3)):
        diff = float(inf.eta[i] - inf.eta[j])
        half = z * _contrast_se(s, i, j, allow_zero=True)
        out.append((diff - half, diff + half))
    return tuple(out)


def summarize(inf, alpha=0.05, level=0.95):
    """Run the global test, both individual tests, adjustments and intervals."""
    q2, pq = global_test(inf)
    z_ppv, z_npv, p_ppv, p_npv = individual_tests(inf)
    decisions = {m: adjust((p_ppv, p_npv), m, alpha) for m in ADJUST_METHODS}
    ci_ppv, ci_npv = difference_cis(inf, level)
    return TestReport(q2, pq, z_ppv, z_npv, p_ppv, p_npv, alpha, level,
                      decisions, ci_ppv, ci_npv)


# keep pytest from collecting the dataclass when imported into test modules
TestReport.__test__ = False
