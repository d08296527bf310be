"""Supplemented EM: covariance of the EM estimate from the EM map's rates.

The covariance is ``inv(I_oc) @ inv(I - DM)`` where ``I_oc`` is the
complete-data information at the estimate (Richardson-extrapolated numeric
Hessian of the complete-data log-likelihood, counts held at the final E-step table) and
``DM`` is the Jacobian of the EM map, estimated component by component from
ratios of successive deviations.
"""

import math
from dataclasses import dataclass

import numpy as np

from .em import default_start, em_map, log_likelihood, m_step
from .exceptions import DmNotConverged, EvaluationFailure, InfeasibleAlpha, NumericalError
from .model import Theta, joint_probabilities
from .numerics import HESSIAN_STEP, invert, numeric_hessian

DEFAULT_TOL = 1e-6
FREEZE_TOL = 1e-13
MAX_SWEEPS = 5000
PROBE_SLACK = 1e-12


@dataclass
class SemResult:
    i_oc_inv: np.ndarray
    dm: np.ndarray
    sigma: np.ndarray
    delta_sigma: np.ndarray
    asymmetry: float
    dm_iterations: tuple

    @property
    def sigma_eta(self):
        """Covariance of the four predictive values."""
        return self.sigma[:4, :4]

    @property
    def standard_errors(self):
        return np.sqrt(np.clip(np.diag(self.sigma), 0.0, None))


def complete_info_inverse(table, em, h=HESSIAN_STEP):
    """Inverse complete-data information matrix at the EM estimate."""
    d = em.d_final

    def loglik(v):
        return log_likelihood(table, d, Theta.from_array(v))

    try:
        H = numeric_hessian(loglik, em.theta_hat.as_array(), h, extrapolate=True)
    except InfeasibleAlpha as exc:  # pragma: no cover - wrapped by numeric_hessian
        raise EvaluationFailure(str(exc)) from exc
    i_oc = -H
    return invert((i_oc + i_oc.T) / 2.0)


def dm_matrix(table, theta_hat, theta0=None, tol=DEFAULT_TOL,
              max_sweeps=MAX_SWEEPS, freeze_tol=FREEZE_TOL):
    """Rate matrix of the EM map, ``DM[i, j] = d M_j / d theta_i``.

    Row ``i`` is the difference quotient ``(M(probe) - M(hat)) / dev`` where
    the probe replaces component ``i`` of ``hat`` by the current EM iterate.
    Each row is iterated on its own and frozen once successive ratios agree
    to ``tol`` or once the driving sequence has reached ``theta_hat`` in that
    component. A row whose probe point is infeasible (typically in the first
    sweeps, far from the estimate) skips that sweep.

    Returns
    -------
    dm : ndarray, shape (7, 7)
    sweeps : tuple of int
        Number of sweeps after which each row was frozen.
    """
    if theta0 is None:
        theta0 = m_step(table, default_start(table))
    hat = theta_hat.as_array()
    # EM stops short of the exact fixed point; differencing against M(hat)
    # rather than hat removes that residual from every ratio
    m_hat = em_map(table, theta_hat).as_array()
    k = hat.size
    dm = np.zeros((k, k))
    prev = [None] * k
    done = [False] * k
    sweeps = [0] * k
    current = theta0.as_array()
    for sweep in range(1, max_sweeps + 1):
        for i in range(k):
            if done[i]:
                continue
            dev = current[i] - hat[i]
            if abs(dev) < freeze_tol:
                done[i] = True
                sweeps[i] = sweep
                continue
            probe = hat.copy()
            probe[i] = current[i]
            try:
                probe_theta = Theta.from_array(probe)
                phi, varphi = joint_probabilities(probe_theta, check=False, strict=False)
                if min(phi + varphi) < -PROBE_SLACK:
                    raise InfeasibleAlpha("probe has negative cell mass")
                mapped = em_map(table, probe_theta).as_array()
            except NumericalError:
                # probe outside the feasible region; wait for the sequence to get closer
                prev[i] = None
                continue
            row = (mapped - m_hat) / dev
            dm[i] = row
            if prev[i] is not None and np.max(np.abs(row - prev[i])) <= tol:
                done[i] = True
                sweeps[i] = sweep
            prev[i] = row
        if all(done):
            return dm, tuple(sweeps)
        current = em_map(table, Theta.from_array(current)).as_array()
    bad = done.index(False)
    raise DmNotConverged(bad, f"DM row {bad} not stable after {max_sweeps} sweeps")


def sem_covariance(table, em, tol=None):
    """Full SEM variance-covariance estimate of the 7 EM estimates.

    ``tol`` defaults to the square root of the EM tolerance actually used,
    which is not stored on ``em``; pass it explicitly if EM ran with a
    non-default delta.
    """
    if tol is None:
        tol = DEFAULT_TOL
    i_oc_inv = complete_info_inverse(table, em)
    dm, sweeps = dm_matrix(table, em.theta_hat, tol=tol)
    ident = np.eye(dm.shape[0])
    inv_step = invert(ident - dm)
    raw = i_oc_inv @ inv_step
    delta_sigma = i_oc_inv @ dm @ inv_step
    asym = float(np.max(np.abs(raw - raw.T)))
    sigma = (raw + raw.T) / 2.0
    return SemResult(i_oc_inv, dm, sigma, delta_sigma, asym, sweeps)


def tol_for_delta(delta):
    return math.sqrt(delta)
