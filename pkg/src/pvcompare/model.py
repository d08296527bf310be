"""Tables, parameter vectors and the probability maps between them.

Cells are always ordered (1,1), (1,0), (0,1), (0,0), i.e. (T1, T2) with the
positive result first.
"""

from dataclasses import dataclass, fields

import numpy as np

from .exceptions import DegenerateTest, InfeasibleAlpha, InputError

CELLS = ((1, 1), (1, 0), (0, 1), (0, 0))
# +1 on the concordant cells, -1 on the discordant ones
CONCORDANCE = (1.0, -1.0, -1.0, 1.0)
NORMALIZATION_TOL = 1e-12


def _four(values, name):
    vals = tuple(values)
    if len(vals) != 4:
        raise InputError(f"{name} needs 4 values, got {len(vals)}")
    return vals


@dataclass(frozen=True)
class VerificationTable:
    """Observed 3x4 table: verified diseased ``a``, verified healthy ``b``,
    unverified ``c``."""

    a: tuple
    b: tuple
    c: tuple

    def __post_init__(self):
        for name in ("a", "b", "c"):
            vals = _four(getattr(self, name), name)
            for k, v in enumerate(vals):
                if v < 0:
                    raise InputError(f"{name}[{k}] is negative ({v})")
            object.__setattr__(self, name, vals)
        if self.n <= 0:
            raise InputError("table is empty")

    @classmethod
    def from_counts(cls, counts):
        """Build from 12 numbers ordered a11..a00, b11..b00, c11..c00."""
        counts = tuple(counts)
        if len(counts) != 12:
            raise InputError(f"expected 12 counts, got {len(counts)}")
        return cls(counts[0:4], counts[4:8], counts[8:12])

    def counts(self):
        return self.a + self.b + self.c

    @property
    def n_cells(self):
        return tuple(a + b + c for a, b, c in zip(self.a, self.b, self.c))

    @property
    def n(self):
        return sum(self.a) + sum(self.b) + sum(self.c)

    def complete(self, d):
        """Complete table obtained by declaring ``d[k]`` of the unverified
        subjects in cell ``k`` diseased."""
        return CompleteTable(
            tuple(a + dk for a, dk in zip(self.a, d)),
            tuple(b + c - dk for b, c, dk in zip(self.b, self.c, d)),
        )

    def verified(self):
        return CompleteTable(self.a, self.b)


@dataclass(frozen=True)
class CompleteTable:
    """2x4 table of diseased (``x``) and non-diseased (``y``) counts.

    Counts may be fractional (E-step tables)."""

    x: tuple
    y: tuple

    def __post_init__(self):
        for name in ("x", "y"):
            vals = tuple(float(v) for v in _four(getattr(self, name), name))
            if any(v < 0 for v in vals):
                raise InputError(f"{name} has a negative count")
            object.__setattr__(self, name, vals)
        if self.n <= 0:
            raise InputError("table is empty")

    @property
    def n(self):
        return sum(self.x) + sum(self.y)

    @property
    def n_cells(self):
        return tuple(x + y for x, y in zip(self.x, self.y))

    def as_array(self):
        return np.array(self.x + self.y)

    def swap_tests(self):
        """Relabel test 1 as test 2 and vice versa."""
        x11, x10, x01, x00 = self.x
        y11, y10, y01, y00 = self.y
        return CompleteTable((x11, x01, x10, x00), (y11, y01, y10, y00))

    def scaled(self, factor):
        return CompleteTable(tuple(factor * v for v in self.x), tuple(factor * v for v in self.y))


@dataclass(frozen=True)
class Theta:
    """Parameter vector (PPV1, NPV1, PPV2, NPV2, p, alpha1, alpha0)."""

    ppv1: float
    npv1: float
    ppv2: float
    npv2: float
    p: float
    alpha1: float = 1.0
    alpha0: float = 1.0

    NAMES = ("ppv1", "npv1", "ppv2", "npv2", "p", "alpha1", "alpha0")

    @classmethod
    def from_array(cls, v):
        return cls(*(float(x) for x in v))

    def as_array(self):
        return np.array([getattr(self, f.name) for f in fields(self)])

    @property
    def eta(self):
        return np.array([self.ppv1, self.npv1, self.ppv2, self.npv2])

    @property
    def q(self):
        return 1.0 - self.p


@dataclass(frozen=True)
class Lambdas:
    """Verification probabilities P(V=1 | T1=i, T2=j) in cell order."""

    l11: float
    l10: float
    l01: float
    l00: float

    def __post_init__(self):
        for v in self.as_tuple():
            if not 0.0 < v <= 1.0:
                raise InputError(f"verification probability {v} not in (0, 1]")

    def as_tuple(self):
        return (self.l11, self.l10, self.l01, self.l00)


@dataclass(frozen=True)
class Accuracy:
    se1: float
    sp1: float
    se2: float
    sp2: float


def pv_from_accuracy(se, sp, p):
    """Predictive values (PPV, NPV) of a test with sensitivity ``se`` and
    specificity ``sp`` at prevalence ``p``."""
    q = 1.0 - p
    ppv = p * se / (p * se + q * (1.0 - sp))
    npv = q * sp / (q * sp + p * (1.0 - se))
    return ppv, npv


def _accuracy_one(ppv, npv, p, strict):
    q = 1.0 - p
    y = ppv + npv - 1.0
    if strict:
        if not (y > 0 and ppv > p and npv > q):
            raise DegenerateTest(f"PPV={ppv}, NPV={npv} incompatible with prevalence {p}")
    elif y == 0.0:
        raise DegenerateTest(f"uninformative test (PPV + NPV = 1, PPV={ppv})")
    se = ppv * (npv - q) / (p * y)
    sp = npv * (ppv - p) / (q * y)
    return se, sp


def accuracy_from_theta(theta, strict=True):
    """Sensitivities and specificities implied by predictive values and prevalence.

    With ``strict=False`` only an uninformative test (PPV + NPV = 1) is
    rejected; estimates from small samples can have a negatively associated
    test, for which the conversion is still exact.
    """
    if not 0.0 < theta.p < 1.0:
        raise DegenerateTest(f"prevalence {theta.p} not in (0, 1)")
    se1, sp1 = _accuracy_one(theta.ppv1, theta.npv1, theta.p, strict)
    se2, sp2 = _accuracy_one(theta.ppv2, theta.npv2, theta.p, strict)
    return Accuracy(se1, sp1, se2, sp2)


def alpha_bounds(ppv1, npv1, ppv2, npv2, p):
    """Upper limits of alpha1 and alpha0 keeping every cell probability >= 0."""
    acc = accuracy_from_theta(Theta(ppv1, npv1, ppv2, npv2, p))
    return 1.0 / max(acc.se1, acc.se2), 1.0 / max(1.0 - acc.sp1, 1.0 - acc.sp2)


def joint_probabilities(theta, check=True, strict=True):
    """Cell probabilities P(T1=i, T2=j, D=1) and P(T1=i, T2=j, D=0).

    Returns
    -------
    phi, varphi : tuple of 4 floats each
        Diseased and non-diseased cell probabilities in cell order.
    """
    acc = accuracy_from_theta(theta, strict=strict)
    p, q = theta.p, 1.0 - theta.p
    eps1 = acc.se1 * acc.se2 * (theta.alpha1 - 1.0)
    eps0 = (1.0 - acc.sp1) * (1.0 - acc.sp2) * (theta.alpha0 - 1.0)
    pos1 = (acc.se1, 1.0 - acc.se1)
    pos2 = (acc.se2, 1.0 - acc.se2)
    neg1 = (1.0 - acc.sp1, acc.sp1)
    neg2 = (1.0 - acc.sp2, acc.sp2)
    phi = []
    varphi = []
    for (i, j), sgn in zip(CELLS, CONCORDANCE):
        phi.append(p * (pos1[1 - i] * pos2[1 - j] + sgn * eps1))
        varphi.append(q * (neg1[1 - i] * neg2[1 - j] + sgn * eps0))
    if check and (min(phi) < 0.0 or min(varphi) < 0.0):
        raise InfeasibleAlpha(
            f"alpha1={theta.alpha1}, alpha0={theta.alpha0} give negative cell mass"
        )
    return tuple(phi), tuple(varphi)


def cell_probabilities(theta, lam):
    """Probabilities of the 12 observable cells under MAR verification.

    Returns ``(xi, psi, zeta)``: verified diseased, verified non-diseased and
    unverified cell probabilities, each a 4-tuple in cell order.
    """
    phi, varphi = joint_probabilities(theta)
    lams = lam.as_tuple() if isinstance(lam, Lambdas) else tuple(lam)
    xi = tuple(l * f for l, f in zip(lams, phi))
    psi = tuple(l * g for l, g in zip(lams, varphi))
    zeta = tuple((1.0 - l) * (f + g) for l, f, g in zip(lams, phi, varphi))
    return xi, psi, zeta


def theta_from_complete(t):
    """Closed-form complete-data estimator of Theta from a 2x4 table."""
    x11, x10, x01, x00 = t.x
    y11, y10, y01, y00 = t.y
    n11, n10, n01, n00 = t.n_cells
    xs = x11 + x10 + x01 + x00
    ys = y11 + y10 + y01 + y00
    return Theta(
        ppv1=(x11 + x10) / (n11 + n10),
        npv1=(y01 + y00) / (n01 + n00),
        ppv2=(x11 + x01) / (n11 + n01),
        npv2=(y10 + y00) / (n10 + n00),
        p=xs / (xs + ys),
        alpha1=xs * x11 / ((x11 + x01) * (x11 + x10)),
        alpha0=ys * y11 / ((y11 + y01) * (y11 + y10)),
    )
