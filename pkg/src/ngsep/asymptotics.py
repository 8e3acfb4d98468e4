"""Cumulant profiles of source families and the closed-form asymptotic
variances of the unmixing estimates.

For a standardized marginal z the profile stores

    gamma = E z^3        beta = E z^4       kappa = beta - 3
    nu    = beta - 1     omega = E z^6 - gamma^2     eta = E z^5 - gamma

and the per-component variance building blocks are

    zeta3 = gamma^2 (nu - gamma^2)
    zeta4 = kappa^2 (omega - beta^2)
    zeta34 = gamma kappa (eta - gamma beta)

    A_k = (a1^2 zeta3 + 2 a1 a2 zeta34 + a2^2 zeta4) / (a1 gamma^2 + a2 kappa^2)^2
    B_kl = (a1^2 (zeta3_k + zeta3_l + gamma_l^4)
            + 2 a1 a2 (zeta34_k + zeta34_l + gamma_l^2 kappa_l^2)
            + a2^2 (zeta4_k + zeta4_l + kappa_l^4))
           / (a1 (gamma_k^2 + gamma_l^2) + a2 (kappa_k^2 + kappa_l^2))^2
    D_k = (kappa_k + 2) / 4

with a1 = 3 alpha and a2 = 4 (1 - alpha).  Entry layout of the limiting
variances of sqrt(n) * (W_hat - (I, 0)) under identity mixing:

* deflation: diagonal D_k, above-diagonal signal entries A_row,
  below-diagonal signal entries A_col + 1, noise block row k all A_k,
* symmetric: signal off-diagonals B_kl, diagonal D_k, noise block A_k.

Profiles come from exact closed forms where available; the gamma and
exponential-power shape families are integrated by adaptive Gauss-Kronrod
quadrature split at the mode, the exponential-power moments additionally
cross-checked against their Gamma-function closed form before
standardization.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.special import gammaln

from .errors import IdentifiabilityError, NumericFailureError
from .families import (
    SourceFamily,
    closed_standardized_moments,
    exppower_abs_moment,
    exppower_scale,
    parse_family,
)
from .objective import Weights

QUAD_ABS_TOL = 1e-12
QUAD_REL_TOL = 1e-10


@dataclass(frozen=True)
class CumulantProfile:
    """Moment bundle of one standardized marginal."""

    gamma: float
    beta: float
    kappa: float
    nu: float
    omega: float
    eta: float

    def __post_init__(self):
        if self.beta < 1.0 + self.gamma**2 - 1e-9:
            raise ValueError("moment inequality beta >= 1 + gamma^2 violated")
        if abs(self.kappa - (self.beta - 3.0)) > 1e-12 or abs(self.nu - (self.beta - 1.0)) > 1e-12:
            raise ValueError("kappa/nu inconsistent with beta")

    @classmethod
    def from_moments(cls, m3, m4, m5, m6):
        return cls(
            gamma=m3,
            beta=m4,
            kappa=m4 - 3.0,
            nu=m4 - 1.0,
            omega=m6 - m3 * m3,
            eta=m5 - m3,
        )

    def zetas(self):
        z3 = self.gamma**2 * (self.nu - self.gamma**2)
        z4 = self.kappa**2 * (self.omega - self.beta**2)
        z34 = self.gamma * self.kappa * (self.eta - self.gamma * self.beta)
        return z3, z4, z34


@dataclass
class AsvTable:
    """Asymptotic variance entries for d components plus scalar summaries."""

    A: np.ndarray
    B: np.ndarray  # off-diagonals meaningful; diagonal stored as NaN sentinel
    D: np.ndarray
    zeta3: np.ndarray
    zeta4: np.ndarray
    zeta34: np.ndarray
    trPhi1: float
    trPhi2: float | None
    method: str

    @property
    def d(self):
        return len(self.A)


def _quad_moment(pdf, r, pieces):
    """Integral of z^r * pdf over the union of intervals, adaptive
    Gauss-Kronrod per piece."""
    total = 0.0
    err = 0.0
    for a, b in pieces:
        val, e = quad(
            lambda z: (z**r) * pdf(z), a, b, epsabs=QUAD_ABS_TOL, epsrel=QUAD_ABS_TOL, limit=400
        )
        total += val
        err += e
    if err > QUAD_REL_TOL * max(1.0, abs(total)):
        raise NumericFailureError(
            f"quadrature for moment {r} achieved tolerance {err:.2e}, "
            f"needed {QUAD_REL_TOL:g} relative"
        )
    return total


def _gamma_profile(shape):
    """Standardized gamma(shape) moments by quadrature on the shifted,
    scaled density; support (-sqrt(shape), inf), split at the mode."""
    a = shape
    s = math.sqrt(a)

    def pdf(z):
        g = a + s * z
        if g <= 0.0:
            return 0.0
        return s * math.exp((a - 1.0) * math.log(g) - g - gammaln(a))

    lo = -s
    mode = (a - 1.0 - a) / s if a >= 1.0 else 0.0
    pieces = [(lo, mode), (mode, np.inf)]
    m = {r: _quad_moment(pdf, r, pieces) for r in range(0, 7)}
    _check_standardized(m, f"gamma({shape:g})")
    return CumulantProfile.from_moments(m[3], m[4], m[5], m[6])


def _exppower_profile(shape):
    """Standardized exponential-power moments by quadrature, cross-checked
    against the Gamma-function closed form for the absolute moments."""
    lam = shape
    tau = exppower_scale(lam)
    c = lam * tau ** (1.0 / lam) / (2.0 * math.exp(gammaln(1.0 / lam)))

    def pdf(z):
        return c * math.exp(-tau * abs(z) ** lam)

    pieces = [(-np.inf, 0.0), (0.0, np.inf)]
    m = {r: _quad_moment(pdf, r, pieces) for r in range(0, 7)}
    for r in (2, 4, 6):
        ref = exppower_abs_moment(r, lam, tau)
        if abs(m[r] - ref) > 1e-8 * max(1.0, abs(ref)):
            raise NumericFailureError(
                f"exppower({shape:g}) quadrature moment {r} = {m[r]!r} disagrees "
                f"with closed form {ref!r}"
            )
    _check_standardized(m, f"exppower({shape:g})")
    return CumulantProfile.from_moments(m[3], m[4], m[5], m[6])


def _check_standardized(m, label):
    if abs(m[0] - 1.0) > 1e-9 or abs(m[1]) > 1e-9 or abs(m[2] - 1.0) > 1e-9:
        raise NumericFailureError(
            f"{label} quadrature violates standardization: mass={m[0]!r}, "
            f"mean={m[1]!r}, var={m[2]!r}"
        )


def profile_from_family(family):
    """Cumulant profile of a standardized source family."""
    if isinstance(family, str):
        family = parse_family(family)
    closed = closed_standardized_moments(family)
    if closed is not None:
        return CumulantProfile.from_moments(*closed)
    if family.name == "gamma":
        return _gamma_profile(family.shape)
    if family.name == "exppower":
        return _exppower_profile(family.shape)
    raise ValueError(f"unknown family {family.name!r}")


def _strength(profile, w):
    return w.alpha * profile.gamma**2 + (1.0 - w.alpha) * profile.kappa**2


def _a_entry(profile, w, index):
    z3, z4, z34 = profile.zetas()
    a1, a2 = w.alpha1, w.alpha2
    den = a1 * profile.gamma**2 + a2 * profile.kappa**2
    if den <= 0.0:
        raise IdentifiabilityError(
            f"component {index + 1} has zero weighted cumulants at alpha={w.alpha:g}; "
            "its variance entries are undefined"
        )
    num = a1 * a1 * z3 + 2.0 * a1 * a2 * z34 + a2 * a2 * z4
    return num / den**2


def _b_entry(pk, pl, w):
    z3k, z4k, z34k = pk.zetas()
    z3l, z4l, z34l = pl.zetas()
    a1, a2 = w.alpha1, w.alpha2
    num = (
        a1 * a1 * (z3k + z3l + pl.gamma**4)
        + 2.0 * a1 * a2 * (z34k + z34l + pl.gamma**2 * pl.kappa**2)
        + a2 * a2 * (z4k + z4l + pl.kappa**4)
    )
    den = a1 * (pk.gamma**2 + pl.gamma**2) + a2 * (pk.kappa**2 + pl.kappa**2)
    return num / den**2


def asv_entries(profiles, w, p=None, method="symmetric"):
    """Full table of asymptotic variance entries for the given components.

    ``trPhi1`` is the total signal-block variance for the requested method;
    ``trPhi2`` needs the ambient dimension p and is None when p is omitted.
    For the deflation summaries the components are taken in decreasing order
    of their weighted squared cumulants, the order the algorithm extracts
    them in.
    """
    if method not in ("deflation", "symmetric"):
        raise ValueError(f"unknown method {method!r}")
    profiles = list(profiles)
    d = len(profiles)
    A = np.array([_a_entry(pk, w, k) for k, pk in enumerate(profiles)])
    D = np.array([(pk.kappa + 2.0) / 4.0 for pk in profiles])
    zeta = np.array([pk.zetas() for pk in profiles])
    B = np.full((d, d), np.nan)
    for k in range(d):
        for l in range(d):
            if k != l:
                B[k, l] = _b_entry(profiles[k], profiles[l], w)

    if method == "deflation":
        order = np.argsort(-np.array([_strength(pk, w) for pk in profiles]), kind="stable")
        A_sorted = A[order]
        off = sum(2.0 * A_sorted[k] + 1.0 for k in range(d) for _ in range(k + 1, d))
    else:
        off = float(np.nansum(B) - 0.0) if d > 1 else 0.0
    trphi1 = float(np.sum(D) + off)
    trphi2 = None if p is None else float((p - d) * np.sum(A))
    return AsvTable(
        A=A,
        B=B,
        D=D,
        zeta3=zeta[:, 0],
        zeta4=zeta[:, 1],
        zeta34=zeta[:, 2],
        trPhi1=trphi1,
        trPhi2=trphi2,
        method=method,
    )


def expected_ndd2(profiles, w, p, method):
    """Mean of the limiting law of n*d*D^2: the summed asymptotic variances
    of the off-diagonal entries of the unmixing estimate.

    For deflation the pair (k, l), k extracted before l, contributes
    (2 A_k + 1); components are sorted internally by decreasing weighted
    squared cumulants to reflect the extraction order.  The noise block
    contributes (p - d) * sum_k A_k for both methods.
    """
    if method not in ("deflation", "symmetric"):
        raise ValueError(f"unknown method {method!r}")
    profiles = list(profiles)
    d = len(profiles)
    if not (1 <= d <= p):
        raise ValueError(f"need 1 <= d <= p, got d={d}, p={p}")
    A = np.array([_a_entry(pk, w, k) for k, pk in enumerate(profiles)])
    noise = (p - d) * float(np.sum(A))
    if d == 1:
        return noise
    if method == "deflation":
        order = np.argsort(-np.array([_strength(pk, w) for pk in profiles]), kind="stable")
        A_sorted = A[order]
        signal = sum(2.0 * A_sorted[k] + 1.0 for k in range(d) for _ in range(k + 1, d))
    else:
        signal = sum(
            _b_entry(profiles[k], profiles[l], w)
            for k in range(d)
            for l in range(d)
            if k != l
        )
    return float(signal + noise)


def tr_phi2(profiles, w, p):
    """Noise-block variance sum (p - d) * sum_k A_k; identical for both
    methods."""
    profiles = list(profiles)
    A = np.array([_a_entry(pk, w, k) for k, pk in enumerate(profiles)])
    return float((p - len(profiles)) * np.sum(A))
