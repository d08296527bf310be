"""Estimator-style front ends to the EM-SEM and multiple-imputation comparisons.

Both follow the scikit-learn conventions: hyper-parameters are set in
``__init__`` and exposed by ``get_params``; ``fit`` takes the 12 observed
counts and stores results in attributes with a trailing underscore.
"""

from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from . import em, inference, mi, report, sem
from .validation import check_probability, check_table


class EMSEMComparison(BaseEstimator):
    """Maximum-likelihood comparison of predictive values with SEM covariance.

    Parameters
    ----------
    delta : float
        EM stops when the log-likelihood gain falls below ``delta``. The SEM
        rate matrix uses ``sqrt(delta)``.
    max_iter : int
        Maximum number of EM iterations.
    alpha : float
        Significance level of the tests.
    conf : float
        Confidence level of the difference intervals.
    d0 : sequence of 4 floats or None
        Starting split of the unverified counts; ``None`` means half of each.

    Attributes
    ----------
    theta_ : Theta
    covariance_ : ndarray of shape (4, 4)
        Covariance of (PPV1, NPV1, PPV2, NPV2).
    standard_errors_ : ndarray of shape (7,)
    n_iter_ : int
    test_report_ : TestReport
    report_ : dict
    """

    def __init__(self, delta=em.DEFAULT_DELTA, max_iter=em.DEFAULT_MAX_ITER,
                 alpha=0.05, conf=0.95, d0=None):
        self.delta = delta
        self.max_iter = max_iter
        self.alpha = alpha
        self.conf = conf
        self.d0 = d0

    def fit(self, X, y=None):
        table = check_table(X)
        alpha = check_probability(self.alpha, "alpha")
        conf = check_probability(self.conf, "conf")
        if not self.delta > 0:
            raise ValueError(f"delta must be positive, got {self.delta}")
        if int(self.max_iter) < 1:
            raise ValueError(f"max_iter must be at least 1, got {self.max_iter}")
        tol = sem.tol_for_delta(self.delta)
        self.em_ = em.run_em(table, self.d0, self.delta, int(self.max_iter))
        self.sem_ = sem.sem_covariance(table, self.em_, tol=tol)
        self.theta_ = self.em_.theta_hat
        self.covariance_ = self.sem_.sigma_eta
        self.standard_errors_ = self.sem_.standard_errors
        self.n_iter_ = self.em_.iterations
        inf = inference.PvInference(self.theta_.eta, self.covariance_, table.n)
        self.test_report_ = inference.summarize(inf, alpha, conf)
        settings = {"delta": self.delta, "sem_tol": tol, "max_iter": int(self.max_iter),
                    "d0": "c/2" if self.d0 is None else list(self.d0),
                    "alpha": alpha, "conf": conf}
        self.report_ = report.em_report(table, self.em_, self.sem_, self.test_report_, settings)
        return self

    @property
    def estimates_(self):
        check_is_fitted(self, "theta_")
        return self.theta_.eta


class MultipleImputationComparison(BaseEstimator):
    """Comparison of predictive values by multiple imputation of disease status.

    Parameters
    ----------
    m : int
        Number of imputed data sets.
    cycles : int
        Chained-equation cycles; with disease status the only incomplete
        variable a single draw per imputation is equivalent.
    random_state : int, numpy Generator or None
    rubin_convention : {"paper", "standard"}
        Between-imputation factor in the pooled test contrasts.
    alpha, conf : float

    Attributes
    ----------
    imputations_ : ImputationSet
    pooled_ : PooledResult
    estimates_ : ndarray of shape (4,)
    standard_errors_ : ndarray of shape (4,)
    covariance_ : ndarray of shape (4, 4)
        Within plus between-imputation covariance (conventional factor).
    seed_ : int
        Seed actually used, also when ``random_state`` was None.
    report_ : dict
    """

    def __init__(self, m=mi.DEFAULT_M, cycles=mi.DEFAULT_CYCLES, random_state=None,
                 rubin_convention="paper", alpha=0.05, conf=0.95):
        self.m = m
        self.cycles = cycles
        self.random_state = random_state
        self.rubin_convention = rubin_convention
        self.alpha = alpha
        self.conf = conf

    def fit(self, X, y=None):
        table = check_table(X, require_mi=True)
        alpha = check_probability(self.alpha, "alpha")
        conf = check_probability(self.conf, "conf")
        if self.rubin_convention not in mi.CONVENTIONS:
            raise ValueError(f"rubin_convention must be one of {mi.CONVENTIONS}")
        self.imputations_ = mi.impute_m(table, int(self.m), int(self.cycles),
                                        self.random_state)
        self.seed_ = self.imputations_.seed
        self.pooled_ = mi.pool(self.imputations_, self.rubin_convention, alpha, conf)
        self.estimates_ = self.pooled_.eta_bar
        self.standard_errors_ = self.pooled_.se
        self.covariance_ = mi.total_variance(self.pooled_.sigma_bar, self.pooled_.b_between,
                                             int(self.m), "standard")
        settings = {"m": int(self.m), "cycles": int(self.cycles), "seed": self.seed_,
                    "rubin_convention": self.rubin_convention,
                    "imputation": "logistic D ~ T1 + T2, normal posterior draw",
                    "alpha": alpha, "conf": conf}
        self.report_ = report.mi_report(table, self.imputations_, self.pooled_, settings)
        return self


__all__ = ["EMSEMComparison", "MultipleImputationComparison"]
