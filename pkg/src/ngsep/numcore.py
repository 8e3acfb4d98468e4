"""Dense matrix primitives: symmetric eigendecomposition, symmetric inverse
square root, whitening, sample cumulants and a linear-assignment solver.

Conventions used everywhere in the package:

* sample covariance uses the 1/n divisor (moment-functional convention),
* eigenvalues are returned in non-increasing order,
* each eigenvector is flipped so that its largest-magnitude entry is positive,
  which makes decompositions deterministic.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import (
    DegenerateSampleError,
    NumericFailureError,
    RankDeficiencyError,
    SymmetryViolationError,
)

# relative eigenvalue threshold below which a matrix counts as rank deficient
EPS_PD = 1e-12


@dataclass
class DataMatrix:
    """Raw n x p observation matrix, one observation per row."""

    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2:
            raise ValueError("observation matrix must be 2-dimensional")
        n, p = self.values.shape
        if p < 2:
            raise ValueError(f"need at least 2 variables, got p={p}")
        if n < p + 1:
            raise ValueError(f"need at least p+1={p + 1} observations, got n={n}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("observation matrix contains non-finite entries")

    @property
    def n(self):
        return self.values.shape[0]

    @property
    def p(self):
        return self.values.shape[1]


@dataclass
class SymPosDef:
    """Symmetric positive definite p x p matrix."""

    values: np.ndarray

    def __post_init__(self):
        S = np.asarray(self.values, dtype=float)
        _check_symmetric(S, tol=1e-12)
        vals = np.linalg.eigvalsh(S)
        if vals[0] <= 0:
            raise ValueError(f"matrix is not positive definite (min eigenvalue {vals[0]:.3e})")
        self.values = S


@dataclass
class WhitenedSample:
    """Centered, whitened data with the mean and whitener that produced it.

    ``rows`` has (up to the producer's tolerance) zero column means and
    identity sample covariance; ``whitener`` is the symmetric inverse square
    root of the original sample covariance.  Instances are produced by
    :func:`whiten`, which checks those properties; direct construction skips
    the checks (used by tests and internal callers).
    """

    rows: np.ndarray
    mean: np.ndarray
    whitener: np.ndarray

    def __post_init__(self):
        self.rows = np.asarray(self.rows, dtype=float)
        self.mean = np.asarray(self.mean, dtype=float)
        self.whitener = np.asarray(self.whitener, dtype=float)

    @property
    def n(self):
        return self.rows.shape[0]

    @property
    def p(self):
        return self.rows.shape[1]


def _check_symmetric(S, tol):
    scale = np.max(np.abs(S)) if S.size else 0.0
    if scale == 0.0:
        return
    dev = np.max(np.abs(S - S.T))
    if dev > tol * scale:
        raise SymmetryViolationError(
            f"matrix is not symmetric: max |S - S^T| = {dev:.3e} exceeds {tol:g} * scale"
        )


def sym_eig(S, sym_tol=1e-10):
    """Eigendecomposition of a symmetric matrix.

    Returns ``(eigenvalues, eigenvectors)`` with eigenvalues non-increasing
    and orthonormal eigenvectors in the columns, each flipped so its
    largest-magnitude entry is positive.
    """
    S = np.asarray(S, dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise ValueError("expected a square matrix")
    _check_symmetric(S, tol=sym_tol)
    try:
        vals, vecs = np.linalg.eigh(S)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure is rare
        raise NumericFailureError(f"eigendecomposition did not converge: {exc}") from exc
    order = np.argsort(vals, kind="stable")[::-1]
    vals = vals[order]
    vecs = vecs[:, order]
    for j in range(vecs.shape[1]):
        i = int(np.argmax(np.abs(vecs[:, j])))
        if vecs[i, j] < 0:
            vecs[:, j] = -vecs[:, j]
    return vals, vecs


def inv_sqrt_sym(S, rel_eps=EPS_PD):
    """Unique symmetric G with ``G S G^T = I`` for symmetric positive definite S.

    Raises :class:`RankDeficiencyError` when the smallest eigenvalue falls at
    or below ``rel_eps`` times the largest.
    """
    if isinstance(S, SymPosDef):
        S = S.values
    vals, vecs = sym_eig(S)
    lam_max = vals[0]
    lam_min = vals[-1]
    if lam_min <= rel_eps * lam_max or lam_min <= 0:
        raise RankDeficiencyError(
            f"matrix is numerically rank deficient: eigenvalue {lam_min:.6e} "
            f"below threshold {rel_eps:g} * {lam_max:.6e}"
        )
    G = (vecs / np.sqrt(vals)) @ vecs.T
    return (G + G.T) / 2.0


def whiten(X):
    """Center and whiten observations with the symmetric inverse square root
    of the 1/n sample covariance."""
    values = X.values if isinstance(X, DataMatrix) else np.asarray(X, dtype=float)
    if values.ndim != 2:
        raise ValueError("expected an n x p matrix")
    n, p = values.shape
    if n < p + 1:
        raise ValueError(f"need at least p+1={p + 1} observations to whiten, got n={n}")
    mean = values.mean(axis=0)
    centered = values - mean
    cov = centered.T @ centered / n
    whitener = inv_sqrt_sym(cov)
    return WhitenedSample(rows=centered @ whitener, mean=mean, whitener=whitener)


def standardized_cumulants(sample):
    """Third and fourth cumulants (skewness, excess kurtosis) of the
    empirically standardized sample.

    Standardization divides by the 1/n-based standard deviation.
    """
    x = np.asarray(sample, dtype=float).ravel()
    if x.size < 2:
        raise DegenerateSampleError("need at least 2 observations")
    m = x.mean()
    var = np.mean((x - m) ** 2)
    if var <= 0.0:
        raise DegenerateSampleError("sample variance is zero")
    z = (x - m) / np.sqrt(var)
    gamma = np.mean(z**3)
    kappa = np.mean(z**4) - 3.0
    return float(gamma), float(kappa)


def solve_assignment(cost):
    """Permutation assigning each row to a distinct column at minimum total cost.

    Returns an integer array ``perm`` with ``perm[k]`` the column assigned to
    row ``k``.  Backed by an O(d^3) augmenting-path solver.
    """
    cost = np.asarray(cost, dtype=float)
    if cost.ndim != 2 or cost.shape[0] != cost.shape[1]:
        raise ValueError("expected a square cost matrix")
    if not np.all(np.isfinite(cost)):
        raise ValueError("cost matrix contains non-finite entries")
    _, col_ind = linear_sum_assignment(cost)
    return col_ind


def random_orthonormal_rows(d, p, rng):
    """d x p matrix with orthonormal rows drawn from the Haar-invariant
    distribution (QR of a Gaussian matrix with sign-fixed diagonal)."""
    A = rng.standard_normal((p, d))
    Q, R = np.linalg.qr(A)
    Q = Q * np.sign(np.where(np.diag(R) == 0, 1.0, np.diag(R)))
    return Q.T[:d]
