"""Projection index and its fixed-point gradients.

For a unit direction u and whitened data the index is

    g_alpha(u) = alpha * skew(u'x)^2 + (1 - alpha) * exkurt(u'x)^2,

where the cumulants are plain sample moments of the projected rows: the data
is already whitened, so the projection of a unit vector has zero mean and
unit variance and no further scaling is applied here.

The fixed-point vector

    t_alpha(u) = 3 alpha skew * mean[(u'x)^2 x] + 4 (1-alpha) exkurt * mean[(u'x)^3 x]

equals one half of the unconstrained gradient of the raw polynomial
objective alpha*m3(u)^2 + (1-alpha)*(m4(u)-3)^2 in u (m_r being the r-th raw
moment of the projection); the factor 2 is irrelevant for fixed points. The
stabilized variant replaces mean[(u'x)^3 x] by mean[(u'x)^3 x] - 3u, which
removes the Gaussian part of the fourth-moment term and gives a better
conditioned iteration.
"""

from dataclasses import dataclass

import numpy as np

from .errors import NormViolationError

UNIT_NORM_TOL = 1e-10


@dataclass(frozen=True)
class Weights:
    """Cumulant weighting; alpha in [0, 1] interpolates between pure
    fourth-cumulant (0) and pure third-cumulant (1) pursuit."""

    alpha: float

    def __post_init__(self):
        if not (0.0 <= self.alpha <= 1.0):
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")

    @property
    def alpha1(self):
        return 3.0 * self.alpha

    @property
    def alpha2(self):
        return 4.0 * (1.0 - self.alpha)


def _unit_projection(u, rows):
    u = np.asarray(u, dtype=float)
    nrm = np.linalg.norm(u)
    if abs(nrm - 1.0) > UNIT_NORM_TOL:
        raise NormViolationError(f"direction must be a unit vector, |u| = {nrm!r}")
    return rows @ u


def proj_cumulants(u, data):
    """Sample skewness and excess kurtosis of the projection u'x."""
    y = _unit_projection(u, data.rows)
    return float(np.mean(y**3)), float(np.mean(y**4) - 3.0)


def g_alpha(u, data, w):
    """Projection index value at unit direction u."""
    skew, exkurt = proj_cumulants(u, data)
    return w.alpha * skew**2 + (1.0 - w.alpha) * exkurt**2


def grad_t(u, data, w):
    """Fixed-point vector t_alpha(u); half the gradient of the raw
    polynomial objective."""
    rows = data.rows
    y = _unit_projection(u, rows)
    n = rows.shape[0]
    y2 = y * y
    skew = np.mean(y * y2)
    exkurt = np.mean(y2 * y2) - 3.0
    t3 = rows.T @ y2 / n
    t4 = rows.T @ (y * y2) / n
    return w.alpha1 * skew * t3 + w.alpha2 * exkurt * t4


def grad_t_star(u, data, w):
    """Stabilized fixed-point vector; the fourth-moment term uses
    mean[(u'x)^3 x] - 3u."""
    rows = data.rows
    y = _unit_projection(u, rows)
    n = rows.shape[0]
    y2 = y * y
    skew = np.mean(y * y2)
    exkurt = np.mean(y2 * y2) - 3.0
    t3 = rows.T @ y2 / n
    t4 = rows.T @ (y * y2) / n
    return w.alpha1 * skew * t3 + w.alpha2 * exkurt * (t4 - 3.0 * np.asarray(u, dtype=float))
