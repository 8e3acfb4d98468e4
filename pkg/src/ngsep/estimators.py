"""Unmixing estimation: kurtosis-scatter (FOBI) initialization, the
deflation-based and the symmetric fixed-point algorithms, and signal scores.

Both algorithms operate on whitened data and estimate a d x p matrix U with
orthonormal rows; the unmixing estimate is W = U @ whitener.  Deflation
extracts one row at a time, each constrained to the orthocomplement of the
rows found so far (strict deflation: earlier rows stay fixed at their
converged values).  The symmetric method stacks the d fixed-point vectors
into a matrix T and updates U <- [T T']^{-1/2} T, which re-orthonormalizes
all rows in one step and fixes no row order.

Numeric hygiene not fixed by the update equations themselves:

* rows are re-orthogonalized every iteration (modified Gram-Schmidt for
  deflation, symmetric inverse square root for the symmetric method),
* output rows are flipped so each row's largest-magnitude entry is positive,
* non-convergence is reported through per-row flags instead of raising, so
  large simulation sweeps survive rare failures.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import RankDeficiencyError
from .numcore import (
    DataMatrix,
    WhitenedSample,
    inv_sqrt_sym,
    random_orthonormal_rows,
    sym_eig,
    whiten,
)
from .objective import Weights, g_alpha, grad_t, grad_t_star

MAX_RESTARTS = 10


@dataclass
class FitOptions:
    """Convergence controls shared by both algorithms."""

    tol: float = 1e-9
    max_iter: int = 1000
    gradient_variant: str = "stabilized"  # "plain" or "stabilized"
    seed: int | None = None

    def __post_init__(self):
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if self.gradient_variant not in ("plain", "stabilized"):
            raise ValueError(f"unknown gradient variant {self.gradient_variant!r}")

    def gradient(self):
        return grad_t if self.gradient_variant == "plain" else grad_t_star


@dataclass
class RotationEstimate:
    """Orthonormal-row rotation with per-row index values."""

    U: np.ndarray
    per_row_objective: np.ndarray

    def __post_init__(self):
        self.U = np.asarray(self.U, dtype=float)
        self.per_row_objective = np.asarray(self.per_row_objective, dtype=float)
        dev = np.max(np.abs(self.U @ self.U.T - np.eye(self.U.shape[0])))
        if dev > 1e-8:
            raise ValueError(f"rotation rows not orthonormal: max deviation {dev:.3e}")


@dataclass
class FitDiagnostics:
    iterations: list = field(default_factory=list)
    final_steps: list = field(default_factory=list)
    converged: list = field(default_factory=list)
    restarts: int = 0
    init_fallback: bool = False
    near_noise: list = field(default_factory=list)
    failed_rows: list = field(default_factory=list)

    def all_converged(self):
        return all(self.converged) and not self.failed_rows


@dataclass
class SeparationEstimate:
    """Final unmixing estimate W = U @ whitener with fit metadata."""

    W: np.ndarray
    U: RotationEstimate
    alpha: Weights
    diagnostics: FitDiagnostics
    whitener: np.ndarray
    mean: np.ndarray

    @property
    def d(self):
        return self.W.shape[0]

    @property
    def p(self):
        return self.W.shape[1]


def fobi_rotation(data):
    """Rows of the eigenbasis of the kurtosis-weighted scatter matrix
    (1/n) sum |x_i|^2 x_i x_i', eigenvalues in decreasing order."""
    rows = data.rows
    n = rows.shape[0]
    sq = np.einsum("ij,ij->i", rows, rows)
    M = (rows * sq[:, None]).T @ rows / n
    _, vecs = sym_eig(M)
    return vecs.T


def initial_rows(data, w, d, rotation=None):
    """First d FOBI rows after reordering by decreasing index value.

    Ties keep the original row order (stable sort).  ``rotation`` overrides
    the FOBI basis, which is how transported initializations are injected.
    """
    if rotation is None:
        rotation = fobi_rotation(data)
    vals = np.array([g_alpha(r, data, w) for r in rotation])
    order = np.argsort(-vals, kind="stable")
    return rotation[order[:d]]


def _normalize_rows(U):
    return U / np.linalg.norm(U, axis=1, keepdims=True)


def _sign_fix_rows(U):
    out = U.copy()
    for k in range(out.shape[0]):
        i = int(np.argmax(np.abs(out[k])))
        if out[k, i] < 0:
            out[k] = -out[k]
    return out


def _project_out(u, basis):
    """Modified Gram-Schmidt projection of u onto the orthocomplement of the
    given rows."""
    v = u.copy()
    for b in basis:
        v -= (v @ b) * b
    return v


def _near_noise_cutoff(n, w):
    # 3x the null mean of n*g_alpha under Gaussian data; a heuristic flag only
    return 3.0 * (6.0 * w.alpha + 24.0 * (1.0 - w.alpha)) / n


def _resolve_init(data, w, d, init, rng):
    """FOBI-ordered initialization with a seeded random fallback when the
    scatter eigendecomposition fails."""
    if init is not None:
        init = np.asarray(init, dtype=float)
        if init.shape != (d, data.p):
            raise ValueError(f"init must be {d} x {data.p}, got {init.shape}")
        return _normalize_rows(init), False
    try:
        return initial_rows(data, w, d), False
    except np.linalg.LinAlgError:
        return random_orthonormal_rows(d, data.p, rng), True


def _fit_deflation_rows(data, d, w, opts, init=None):
    rng = np.random.default_rng(opts.seed)
    grad = opts.gradient()
    U0, fallback = _resolve_init(data, w, d, init, rng)
    diag = FitDiagnostics(init_fallback=fallback)

    found = []
    for k in range(d):
        u = _project_out(U0[k], found)
        nrm = np.linalg.norm(u)
        if nrm < 1e-8:
            u = _fresh_direction(found, data.p, rng)
        else:
            u = u / nrm

        converged = False
        step = np.inf
        restarts = 0
        it = 0
        failed = False
        while it < opts.max_iter:
            it += 1
            t = grad(u, data, w)
            v = _project_out(t, found)
            nrm = np.linalg.norm(v)
            if nrm <= 1e-12 * max(1.0, np.linalg.norm(t)):
                restarts += 1
                diag.restarts += 1
                if restarts > MAX_RESTARTS:
                    failed = True
                    break
                u = _fresh_direction(found, data.p, rng)
                continue
            u_new = v / nrm
            # one more orthogonalization pass against the fixed rows
            u_new = _project_out(u_new, found)
            u_new /= np.linalg.norm(u_new)
            step = min(np.linalg.norm(u_new - u), np.linalg.norm(u_new + u))
            u = u_new
            if step <= opts.tol:
                converged = True
                break

        diag.iterations.append(it)
        diag.final_steps.append(float(step))
        diag.converged.append(converged)
        if failed:
            diag.failed_rows.append(k)
        found.append(u)

    U = np.array(found)
    return U, diag


def _fresh_direction(found, p, rng):
    for _ in range(100):
        u = _project_out(rng.standard_normal(p), found)
        nrm = np.linalg.norm(u)
        if nrm > 1e-8:
            return u / nrm
    raise RankDeficiencyError("could not draw a direction in the orthocomplement")


def _small_rotation(p, rng, magnitude=1e-3):
    A = rng.standard_normal((p, p)) * magnitude
    S = A - A.T
    # Cayley transform: orthogonal and close to the identity for small S
    return np.linalg.solve(np.eye(p) - S / 2, np.eye(p) + S / 2)


def _fit_symmetric_rows(data, d, w, opts, init=None):
    rng = np.random.default_rng(opts.seed)
    grad = opts.gradient()
    U, fallback = _resolve_init(data, w, d, init, rng)
    # make sure the starting rows are orthonormal even for a user-given init
    U = inv_sqrt_sym(U @ U.T) @ U
    diag = FitDiagnostics(init_fallback=fallback)

    converged = False
    step = np.inf
    perturbations = 0
    it = 0
    while it < opts.max_iter:
        it += 1
        T = np.array([grad(u, data, w) for u in U])
        try:
            G = inv_sqrt_sym(T @ T.T)
        except RankDeficiencyError:
            perturbations += 1
            diag.restarts += 1
            if perturbations > MAX_RESTARTS:
                diag.failed_rows.extend(range(d))
                break
            U = U @ _small_rotation(data.p, rng)
            U = inv_sqrt_sym(U @ U.T) @ U
            continue
        U_new = G @ T
        # row-wise best sign flip realizes the minimum over sign-change matrices
        diffs = np.minimum(
            np.linalg.norm(U_new - U, axis=1), np.linalg.norm(U_new + U, axis=1)
        )
        step = float(np.sqrt(np.sum(diffs**2)))
        U = U_new
        if step <= opts.tol:
            converged = True
            break

    diag.iterations = [it] * d
    diag.final_steps = [step] * d
    diag.converged = [converged] * d
    return U, diag


def _finalize(data, U, w, diag, sort_rows):
    vals = np.array([g_alpha(u, data, w) for u in U])
    if sort_rows:
        order = np.argsort(-vals, kind="stable")
        U = U[order]
        vals = vals[order]
        diag.iterations = [diag.iterations[i] for i in order]
        diag.final_steps = [diag.final_steps[i] for i in order]
        diag.converged = [diag.converged[i] for i in order]
        diag.failed_rows = sorted(int(np.where(order == r)[0][0]) for r in diag.failed_rows)
    U = _sign_fix_rows(U)
    cutoff = _near_noise_cutoff(data.n, w)
    diag.near_noise = [bool(v <= cutoff) for v in vals]
    rot = RotationEstimate(U=U, per_row_objective=vals)
    W = U @ data.whitener
    return SeparationEstimate(
        W=W, U=rot, alpha=w, diagnostics=diag, whitener=data.whitener, mean=data.mean
    )


def _as_whitened(X):
    if isinstance(X, WhitenedSample):
        return X
    return whiten(X)


def deflation_fit(X, d, w, opts=None, init=None):
    """Deflation-based fit: d rows extracted one by one, each maximizing the
    projection index in the orthocomplement of its predecessors.

    Rows are kept in extraction order, which by construction follows
    decreasing index values.
    """
    opts = opts or FitOptions()
    data = _as_whitened(X)
    _check_d(d, data.p)
    U, diag = _fit_deflation_rows(data, d, w, opts, init=init)
    return _finalize(data, U, w, diag, sort_rows=False)


def symmetric_fit(X, d, w, opts=None, init=None):
    """Symmetric fit: all d rows estimated simultaneously; rows are sorted by
    decreasing index value afterwards since the update fixes no order."""
    opts = opts or FitOptions()
    data = _as_whitened(X)
    _check_d(d, data.p)
    U, diag = _fit_symmetric_rows(data, d, w, opts, init=init)
    return _finalize(data, U, w, diag, sort_rows=True)


def _check_d(d, p):
    if not (1 <= d <= p):
        raise ValueError(f"d must satisfy 1 <= d <= p={p}, got {d}")


def signal_scores(est, X):
    """n x d matrix of estimated signals: row i equals W (x_i - mean)."""
    values = X.values if isinstance(X, DataMatrix) else np.asarray(X, dtype=float)
    if values.shape[1] != est.p:
        raise ValueError(
            f"estimate expects {est.p} variables, data has {values.shape[1]}"
        )
    mean = values.mean(axis=0)
    return (values - mean) @ est.W.T
