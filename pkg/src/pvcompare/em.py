"""Maximum-likelihood estimation of Theta under MAR partial verification by EM.

The missing data are the disease statuses of the unverified subjects. The
E-step splits each unverified count ``c_ij`` into an expected number of
diseased subjects ``d_ij``; the M-step applies the closed-form complete-data
estimators to the resulting 2x4 table.
"""

import math
from dataclasses import dataclass, field

from .exceptions import (BoundaryEstimate, DegenerateCell, LogOfNonpositive,
                         NotConverged, NumericalError, ZeroMass)
from .model import Theta, joint_probabilities, theta_from_complete

DEFAULT_DELTA = 1e-12
DEFAULT_MAX_ITER = 10000
BOUNDARY_TOL = 1e-8


@dataclass
class EmResult:
    theta_hat: Theta
    d_final: tuple
    iterations: int
    loglik_trajectory: list = field(repr=False)
    converged: bool

    @property
    def loglik(self):
        return self.loglik_trajectory[-1]


def default_start(table):
    """Half of every unverified count, the conventional starting split."""
    return tuple(c / 2.0 for c in table.c)


def m_step(table, d):
    """Complete-data estimators of Theta given the split ``d`` of ``table.c``."""
    try:
        return theta_from_complete(table.complete(d))
    except ZeroDivisionError as exc:
        raise DegenerateCell(f"zero denominator in complete-data estimator (d={d})") from exc


def e_step(table, theta):
    """Expected number of diseased subjects among the unverified, per cell."""
    phi, varphi = joint_probabilities(theta, check=False, strict=False)
    d = []
    for c, f, g in zip(table.c, phi, varphi):
        if c == 0:
            d.append(0.0)
            continue
        mass = f + g
        if mass <= 0.0:
            raise ZeroMass(f"cell with {c} unverified subjects has zero probability")
        d.append(min(c, max(0.0, c * f / mass)))
    return tuple(d)


def _xlogy(w, p):
    if w == 0.0:
        return 0.0
    if p <= 0.0:
        raise LogOfNonpositive(f"log of {p} with weight {w}")
    return w * math.log(p)


def log_likelihood(table, d, theta):
    """Complete-data log-likelihood of the table completed with ``d``."""
    phi, varphi = joint_probabilities(theta, check=False, strict=False)
    t = table.complete(d)
    return (sum(_xlogy(w, p) for w, p in zip(t.x, phi))
            + sum(_xlogy(w, p) for w, p in zip(t.y, varphi)))


def observed_log_likelihood(table, theta):
    """Observed-data log-likelihood (verification probabilities dropped).

    Under MAR the verification mechanism factors out, leaving
    sum a log(phi) + b log(varphi) + c log(phi + varphi).
    """
    phi, varphi = joint_probabilities(theta, check=False, strict=False)
    return sum(_xlogy(a, f) + _xlogy(b, g) + _xlogy(c, f + g)
               for a, b, c, f, g in zip(table.a, table.b, table.c, phi, varphi))


def em_map(table, theta):
    """One EM iteration: E-step at ``theta`` followed by the M-step."""
    return m_step(table, e_step(table, theta))


def _near_boundary(theta, tol):
    return any(min(v, 1.0 - v) <= tol for v in theta.eta)


def run_em(table, d0=None, delta=DEFAULT_DELTA, max_iter=DEFAULT_MAX_ITER,
           raise_on_failure=True):
    """Run EM from the split ``d0`` until the log-likelihood gain drops below ``delta``.

    The monitored quantity is the log-likelihood of the current completed
    table at its own M-step estimate. ``iterations`` counts M-steps.

    Raises
    ------
    NotConverged
        After ``max_iter`` M-steps (only if ``raise_on_failure``).
    BoundaryEstimate
        When a predictive-value estimate is exactly 0 or 1.
    """
    if d0 is None:
        d0 = default_start(table)
    d = tuple(float(v) for v in d0)
    for k, (dk, ck) in enumerate(zip(d, table.c)):
        if not 0.0 <= dk <= ck:
            raise ValueError(f"d0[{k}]={dk} outside [0, {ck}]")
    trajectory = []
    converged = False
    theta = None
    for it in range(1, max_iter + 1):
        try:
            theta = m_step(table, d)
            ll = log_likelihood(table, d, theta)
        except NumericalError as exc:
            # sequences heading to a predictive value of 0 or 1 end in round-off
            if theta is not None and _near_boundary(theta, BOUNDARY_TOL):
                raise BoundaryEstimate(f"estimate tends to the boundary: {theta}") from exc
            raise
        trajectory.append(ll)
        if it > 1 and abs(ll - trajectory[-2]) < delta:
            converged = True
            break
        if not any(table.c):
            converged = True
            break
        d = e_step(table, theta)
    result = EmResult(theta, d, len(trajectory), trajectory, converged)
    if raise_on_failure:
        if not converged:
            raise NotConverged(f"EM did not converge in {max_iter} iterations")
        if _near_boundary(theta, 0.0):
            raise BoundaryEstimate(f"predictive value estimate on the boundary: {theta}")
    return result
