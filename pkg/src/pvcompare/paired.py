"""Fully verified (paired design) estimators and statistics.

All functions take a :class:`~pvcompare.model.CompleteTable`; counts may be
fractional. Cell order is (1,1), (1,0), (0,1), (0,0) for (T1, T2).
"""

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import EmptyMargin, ZeroVarianceContrast
from .inference import PvInference, global_test, individual_tests


@dataclass
class PairedEstimates:
    ppv1: float
    npv1: float
    ppv2: float
    npv2: float
    sigma: np.ndarray
    n: float

    @property
    def eta(self):
        return np.array([self.ppv1, self.npv1, self.ppv2, self.npv2])

    def inference(self):
        return PvInference(self.eta, self.sigma, self.n)


def _ratio(num, den, margin):
    if not den > 0:
        raise EmptyMargin(margin)
    return num / den


def estimates(t):
    """Predictive-value estimates and their delta-method covariance matrix.

    Covariances are expressed in counts; PPV_h and NPV_h of the same test use
    disjoint subjects, so that pair is uncorrelated.
    """
    x11, x10, x01, x00 = t.x
    y11, y10, y01, y00 = t.y
    m_p1 = x11 + x10 + y11 + y10
    m_p2 = x11 + x01 + y11 + y01
    m_n1 = x01 + x00 + y01 + y00
    m_n2 = x10 + x00 + y10 + y00
    ppv1 = _ratio(x11 + x10, m_p1, "T1 positive")
    ppv2 = _ratio(x11 + x01, m_p2, "T2 positive")
    npv1 = _ratio(y01 + y00, m_n1, "T1 negative")
    npv2 = _ratio(y10 + y00, m_n2, "T2 negative")

    var_ppv1 = (x10 + x11) * (y10 + y11) / m_p1 ** 3
    var_ppv2 = (x01 + x11) * (y01 + y11) / m_p2 ** 3
    var_npv1 = (x00 + x01) * (y00 + y01) / m_n1 ** 3
    var_npv2 = (x00 + x10) * (y00 + y10) / m_n2 ** 3
    cov_pp = ((x01 * x10 * y11 + x11 * (y01 * (y10 + y11) + y11 * (x01 + x10 + x11 + y10 + y11)))
              / (m_p2 ** 2 * m_p1 ** 2))
    cov_p1n2 = -((x00 * (x10 + x11) * y10 + x10 * y10 * (x10 + x11 + y00 + y10)
                  + x10 * (y00 + y10) * y11) / (m_n2 ** 2 * m_p1 ** 2))
    cov_p2n1 = -((x00 * (x01 + x11) * y01 + x01 * y01 * (x01 + x11 + y00 + y01)
                  + x01 * (y00 + y01) * y11) / (m_n1 ** 2 * m_p2 ** 2))
    # mirror image of cov_pp under diseased <-> healthy, (1,1) <-> (0,0)
    cov_nn = ((y01 * y10 * x00 + y00 * (x01 * (x10 + x00) + x00 * (y01 + y10 + y00 + x10 + x00)))
              / (m_n1 ** 2 * m_n2 ** 2))

    # order: PPV1, NPV1, PPV2, NPV2
    sigma = np.array([
        [var_ppv1, 0.0, cov_pp, cov_p1n2],
        [0.0, var_npv1, cov_p2n1, cov_nn],
        [cov_pp, cov_p2n1, var_ppv2, 0.0],
        [cov_p1n2, cov_nn, 0.0, var_npv2],
    ])
    return PairedEstimates(ppv1, npv1, ppv2, npv2, sigma, t.n)


def wang_tests(t):
    """Weighted-least-squares z statistics of the two differences."""
    z_ppv, z_npv, _, _ = individual_tests(estimates(t).inference())
    return z_ppv, z_npv


def leisenring_tests(t):
    """GEE score statistics for PPV1 = PPV2 and NPV1 = NPV2.

    The numerators are centred on the test-2 records, so a positive z_ppv
    points to PPV2 > PPV1 (and likewise for NPV).
    """
    x11, x10, x01, x00 = t.x
    y11, y10, y01, y00 = t.y

    den1 = 2 * x11 + x01 + x10 + 2 * y11 + y10 + y01
    if not den1 > 0:
        raise ZeroVarianceContrast("no positive results")
    z1 = (x11 + x01 + y11 + y01) / den1
    d1 = (2 * x11 + x01 + x10) / den1
    num_p = x11 * (1 - 2 * z1) + x01 * (1 - z1) - x10 * z1
    var_p = ((1 - d1) ** 2 * (x11 * (1 - 2 * z1) ** 2 + x01 * (1 - z1) ** 2 + x10 * z1 ** 2)
             + d1 ** 2 * (y11 * (1 - 2 * z1) ** 2 + y01 * (1 - z1) ** 2 + y10 * z1 ** 2))

    den2 = 2 * x00 + x01 + x10 + 2 * y00 + y01 + y10
    if not den2 > 0:
        raise ZeroVarianceContrast("no negative results")
    z2 = (x00 + x10 + y00 + y10) / den2
    d2 = (2 * y00 + y01 + y10) / den2
    num_n = y00 * (1 - 2 * z2) + y10 * (1 - z2) - y01 * z2
    var_n = ((1 - d2) ** 2 * (y00 * (1 - 2 * z2) ** 2 + y10 * (1 - z2) ** 2 + y01 * z2 ** 2)
             + d2 ** 2 * (x00 * (1 - 2 * z2) ** 2 + x10 * (1 - z2) ** 2 + x01 * z2 ** 2))

    if not (var_p > 0 and var_n > 0):
        raise ZeroVarianceContrast("score variance is zero")
    return num_p / math.sqrt(var_p), num_n / math.sqrt(var_n)


def leisenring_means(t):
    """The pooled record proportions (Z1, D1, Z2, D2) entering the score statistics."""
    x11, x10, x01, x00 = t.x
    y11, y10, y01, y00 = t.y
    den1 = 2 * x11 + x01 + x10 + 2 * y11 + y10 + y01
    den2 = 2 * x00 + x01 + x10 + 2 * y00 + y01 + y10
    return ((x11 + x01 + y11 + y01) / den1, (2 * x11 + x01 + x10) / den1,
            (x00 + x10 + y00 + y10) / den2, (2 * y00 + y01 + y10) / den2)


def kosinski_parts(t):
    """Differences and weighted generalized score variances.

    Returns ``((diff_ppv, var_ppv), (diff_npv, var_npv))``; the statistics are
    ``diff / sqrt(var)``.
    """
    x11, x10, x01, x00 = t.x
    y11, y10, y01, y00 = t.y
    n11, n10, n01, n00 = t.n_cells
    est = estimates(t)

    pool_p = 2 * n11 + n10 + n01
    pool_n = 2 * n00 + n01 + n10
    if not (pool_p > 0 and pool_n > 0):
        raise ZeroVarianceContrast("empty pooled margin")
    ppv_p = (2 * x11 + x10 + x01) / pool_p
    npv_p = (2 * y00 + y01 + y10) / pool_n
    c_ppv = (x11 * (1 - ppv_p) ** 2 + y11 * ppv_p ** 2) / pool_p
    c_npv = (x00 * npv_p ** 2 + y00 * (1 - npv_p) ** 2) / pool_n

    var_ppv = (ppv_p * (1 - ppv_p) - 2 * c_ppv) * (1 / (n10 + n11) + 1 / (n01 + n11))
    var_npv = (npv_p * (1 - npv_p) - 2 * c_npv) * (1 / (n00 + n01) + 1 / (n00 + n10))
    if not (var_ppv > 0 and var_npv > 0):
        raise ZeroVarianceContrast("Kosinski variance term is not positive")
    return (est.ppv1 - est.ppv2, var_ppv), (est.npv1 - est.npv2, var_npv)


def kosinski_pooled(t):
    """Pooled PPV and NPV under the null hypothesis."""
    x11, x10, x01, x00 = t.x
    y11, y10, y01, y00 = t.y
    n11, n10, n01, n00 = t.n_cells
    return ((2 * x11 + x10 + x01) / (2 * n11 + n10 + n01),
            (2 * y00 + y01 + y10) / (2 * n00 + n01 + n10))


def kosinski_tests(t):
    (dp, vp), (dn, vn) = kosinski_parts(t)
    return dp / math.sqrt(vp), dn / math.sqrt(vn)


def complete_global(t):
    """Global chi-square test on a fully verified table."""
    return global_test(estimates(t).inference())


def _xlog_ratio(w, other):
    if w == 0:
        return 0.0
    return w * math.log(2.0 * w / (w + other))


def lrt_statistic(t):
    """Likelihood-ratio statistic of symmetric discordant cells."""
    x11, x10, x01, x00 = t.x
    y11, y10, y01, y00 = t.y
    return 2.0 * (_xlog_ratio(x10, x01) + _xlog_ratio(x01, x10)
                  + _xlog_ratio(y10, y01) + _xlog_ratio(y01, y10))


def unrestricted_probs(t):
    """Cell proportions of the 2x4 table (x cells then y cells)."""
    return np.array(t.x + t.y) / t.n


def restricted_probs(t):
    """Cell probabilities maximising the likelihood when discordant cells are equal."""
    x11, x10, x01, x00 = t.x
    y11, y10, y01, y00 = t.y
    n = t.n
    dx = (x10 + x01) / (2 * n)
    dy = (y10 + y01) / (2 * n)
    return np.array([x11 / n, dx, dx, x00 / n, y11 / n, dy, dy, y00 / n])


def multinomial_loglik(t, probs):
    """sum(count * log(prob)) with 0 log 0 = 0."""
    counts = np.array(t.x + t.y)
    mask = counts > 0
    if np.any(np.asarray(probs)[mask] <= 0):
        return -math.inf
    return float(np.sum(counts[mask] * np.log(np.asarray(probs)[mask])))
