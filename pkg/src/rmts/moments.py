"""
Theoretical moments of an order-1 random-coefficient series.

Notation: ``R`` is the mean coefficient matrix, ``S2 = |Sigma|^2`` the matrix
of entry variances (``(f s)^2``, summed over real and imaginary parts for
complex entries), ``R2 = |R|^2`` entrywise, ``sb2`` the noise variances.

Recursions (law of iterated expectation / variance)::

    E(T+1)   = R E(T) + b
    Var(T+1) = sb2 + (S2 + R2) Var(T) + S2 |E(T)|^2

Fixed points exist when the spectral radius of ``R`` (mean) and of
``S2 + R2`` (variance) is below one::

    e    = (I - R)^-1 b
    Var* = (I - S2 - R2)^-1 (sb2 + S2 |e|^2)

The radius condition is used as the operational convergence gate.  It is
the necessary condition; nothing here claims it is sufficient for every law.

Off-diagonal covariances depend on the coefficient constraint:

* independent entries: ``C_ij(T+1) = sum_kl r_ik r_jl C_kl(T)`` (i != j)
* symmetric: ``C_ij(T+1) = s_ij^2 (e_i e_j + C_ij(T))``
* Hermitian: ``C_ij(T+1) = p_ij (conj(e_i) e_j + conj(C_ij(T)))`` with
  the pseudo-variance ``p_ij = Re(s_ij)^2 - Im(s_ij)^2``.

The symmetric and Hermitian forms hold exactly for zero mean matrices; with
``R != 0`` they keep only the coefficient-noise term.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DivergenceError, InsufficientDataError, UnsupportedEnsembleError
from .linalg import hadamard_modsq, solve_linear, spectral_radius

DEFAULT_BURN_IN = 1000


@dataclass
class MomentReport:
    """Fixed points and convergence diagnostics of an order-1 model.

    ``expectation_fp`` / ``variance_fp`` / ``covariance_fp`` are None when the
    matching recursion does not converge.  The variance fixed point also needs
    a convergent mean, so it is None whenever ``converges_mean`` is false.
    ``covariance_fp`` is the full k x k stationary covariance (variances on
    the diagonal).
    """

    expectation_fp: np.ndarray
    variance_fp: np.ndarray
    covariance_fp: np.ndarray
    covariance_mean: object
    rho_mean: float
    rho_var: float
    converges_mean: bool
    converges_var: bool
    constraint: str


def conditional_distribution(model, x):
    """Mean and per-component variance of X(T+1) given X(T) = x (real models)."""
    dist = model.dist
    if model.is_complex:
        raise ValueError("conditional_distribution is defined for real models only")
    x = np.asarray(x, dtype=np.float64)
    mean = dist.means @ x + model.noise.means
    var = dist.modsq_stds() @ (x * x) + model.noise.stds ** 2
    return mean, var


def expectation_step(R, b, m):
    return np.asarray(R) @ np.asarray(m) + np.asarray(b)


def expectation_fixed_point(R, b):
    """``(I - R)^-1 b``.

    Raises:
        DivergenceError: spectral radius of ``R`` is >= 1.
        SingularMatrixError: ``I - R`` is singular.
    """
    R = np.asarray(R)
    rho = spectral_radius(R)
    if rho >= 1.0:
        raise DivergenceError(f"expectation does not converge: spectral radius {rho:.6g} >= 1")
    return solve_linear(np.eye(R.shape[0]) - R, np.asarray(b))


def expectation_trajectory(R, b, m0, T):
    """E(X(T)) from E(X(0)) = m0 by T repeated steps."""
    m = np.asarray(m0)
    R = np.asarray(R)
    b = np.asarray(b)
    for _ in range(int(T)):
        m = R @ m + b
    return m


def variance_step(sig2, r2, sigb2, var, mean):
    """One application of the variance recursion.

    ``sig2`` and ``r2`` are the entrywise squared moduli of the std and mean
    matrices; ``mean`` may be complex (its modulus is used).
    """
    sig2 = np.asarray(sig2)
    return np.asarray(sigb2) + (sig2 + np.asarray(r2)) @ np.asarray(var) + sig2 @ hadamard_modsq(mean)


def variance_fixed_point(sig2, r2, sigb2, e):
    """Stationary variance ``(I - S2 - R2)^-1 (sb2 + S2 |e|^2)``.

    Raises:
        DivergenceError: spectral radius of ``S2 + R2`` is >= 1.
    """
    sig2 = np.asarray(sig2, dtype=np.float64)
    growth = sig2 + np.asarray(r2, dtype=np.float64)
    rho = spectral_radius(growth)
    if rho >= 1.0:
        raise DivergenceError(
            f"variance does not converge: spectral radius of S2 + R2 is {rho:.6g} >= 1"
        )
    rhs = np.asarray(sigb2, dtype=np.float64) + sig2 @ hadamard_modsq(e)
    return solve_linear(np.eye(growth.shape[0]) - growth, rhs)


def covariance_step_general(R, cov, constraint="none"):
    """Off-diagonal part of the next covariance for independent entries.

    Returns a matrix whose diagonal is zero; the diagonal is the variance
    recursion's job.

    Raises:
        UnsupportedEnsembleError: ``constraint`` is not ``"none"``.
    """
    if constraint != "none":
        raise UnsupportedEnsembleError(
            f"general covariance recursion assumes independent entries, got {constraint!r}; "
            "use covariance_step_goe / covariance_step_gue"
        )
    R = np.asarray(R)
    nxt = R @ np.asarray(cov) @ R.conj().T
    np.fill_diagonal(nxt, 0)
    return nxt


def covariance_fixed_point_general(R, variance):
    """Stationary covariance for independent entries, given the stationary variances.

    Solves ``C_ij = sum_kl r_ik conj(r_jl) C_kl`` (i != j) with ``C_kk`` fixed
    at ``variance``, as one linear system over the off-diagonal entries.
    """
    R = np.asarray(R)
    k = R.shape[0]
    variance = np.asarray(variance)
    cov = np.diag(variance).astype(np.result_type(R.dtype, variance.dtype))
    if k < 2:
        return cov
    kron = np.kron(R, R.conj())  # vec(R C R^H) = kron(R, conj R) vec(C), row-major vec
    off = ~np.eye(k, dtype=bool).reshape(-1)
    diag_vec = cov.reshape(-1)
    a = np.eye(int(off.sum())) - kron[np.ix_(off, off)]
    rhs = kron[off][:, ~off] @ diag_vec[~off]
    solved = solve_linear(a, rhs)
    flat = diag_vec.copy()
    flat[off] = solved
    return flat.reshape(k, k)


def covariance_step_goe(sigma_ij, b_i, b_j, cov):
    """``sigma_ij^2 (b_i b_j + cov)`` for symmetric coefficient matrices."""
    return sigma_ij ** 2 * (b_i * b_j + cov)


def covariance_fixed_point_goe(sigma_ij, b_i, b_j):
    """``sigma^2 b_i b_j / (1 - sigma^2)``; diverges unless ``sigma^2 < 1``."""
    s2 = sigma_ij ** 2
    if s2 >= 1.0:
        raise DivergenceError(f"covariance recursion diverges: sigma^2 = {s2:.6g} >= 1")
    return s2 * b_i * b_j / (1.0 - s2)


def covariance_step_gue(sigma_re, sigma_im, b_i, b_j, cov):
    """``(Re^2 - Im^2) (conj(b_i) b_j + conj(cov))`` for Hermitian coefficients."""
    p = sigma_re ** 2 - sigma_im ** 2
    return p * (np.conj(b_i) * b_j + np.conj(cov))


def covariance_fixed_point_gue(sigma_re, sigma_im, b_i, b_j):
    """Fixed point of :func:`covariance_step_gue`.

    With ``beta = conj(b_i) b_j`` the map is ``c -> p (beta + conj(c))``;
    applying it twice gives ``c = p beta + p^2 conj(beta) + p^2 c``.
    """
    p = sigma_re ** 2 - sigma_im ** 2
    if abs(p) >= 1.0:
        raise DivergenceError(f"covariance recursion diverges: |pseudo-variance| = {abs(p):.6g} >= 1")
    beta = np.conj(b_i) * b_j
    return p * (beta + p * np.conj(beta)) / (1.0 - p * p)


def _pairwise(k, fn, dtype):
    out = np.zeros((k, k), dtype=dtype)
    for i in range(k):
        for j in range(k):
            if i != j:
                out[i, j] = fn(i, j)
    return out


def convergence_report(model):
    """Fixed points and convergence flags for an order-1 model."""
    dist = model.dist
    R = dist.means
    b = model.noise.means
    sig2 = dist.modsq_stds()
    r2 = hadamard_modsq(R)
    sigb2 = model.noise.modsq_stds()
    rho_mean = spectral_radius(R)
    rho_var = spectral_radius(sig2 + r2)
    converges_mean = rho_mean < 1.0
    converges_var = rho_var < 1.0

    e = var = cov = cov_mean = None
    if converges_mean:
        e = expectation_fixed_point(R, b)
    # the variance fixed point is built on e, so it needs both gates
    if converges_mean and converges_var:
        var = variance_fixed_point(sig2, r2, sigb2, e)
        k = model.dim
        try:
            if dist.constraint == "none":
                cov = covariance_fixed_point_general(R, var)
            elif dist.constraint == "symmetric":
                sd = np.sqrt(sig2)
                cov = _pairwise(k, lambda i, j: covariance_fixed_point_goe(sd[i, j], e[i], e[j]),
                                np.result_type(e.dtype, np.float64))
                cov[np.diag_indices(k)] = var
            else:
                sre = dist.effective_stds
                sim = dist.effective_stds_imag
                cov = _pairwise(k, lambda i, j: covariance_fixed_point_gue(sre[i, j], sim[i, j], e[i], e[j]),
                                np.complex128)
                cov[np.diag_indices(k)] = var
        except DivergenceError:
            cov = None
        if cov is not None:
            iu = np.triu_indices(k, 1)
            cov_mean = cov[iu].mean() if iu[0].size else 0.0
    return MomentReport(
        expectation_fp=e,
        variance_fp=var,
        covariance_fp=cov,
        covariance_mean=cov_mean,
        rho_mean=rho_mean,
        rho_var=rho_var,
        converges_mean=bool(converges_mean),
        converges_var=bool(converges_var),
        constraint=dist.constraint,
    )


@dataclass
class SampleMoments:
    mean: np.ndarray
    variance: np.ndarray
    mean_offdiag_cov: object
    covariance: np.ndarray
    samples: int


def mc_moments(series, burn_in=DEFAULT_BURN_IN):
    """Sample moments of a trajectory after discarding ``burn_in`` rows.

    Variances and covariances use the unbiased (n - 1) normaliser and the
    complex convention ``Cov(X_i, X_j) = E[(X_i - m_i) conj(X_j - m_j)]``.
    ``mean_offdiag_cov`` averages ``Cov(X_i, X_j)`` over pairs i < j.

    Raises:
        InsufficientDataError: fewer than ``burn_in + 2`` rows.
    """
    values = series.values if hasattr(series, "values") else np.asarray(series)
    if values.shape[0] < burn_in + 2:
        raise InsufficientDataError(
            f"series of length {values.shape[0]} is too short for burn-in {burn_in}"
        )
    x = values[burn_in:]
    n = x.shape[0]
    mean = x.mean(axis=0)
    centred = x - mean
    cov = centred.T @ centred.conj() / (n - 1)
    variance = np.real(np.diag(cov)).copy()
    k = x.shape[1]
    iu = np.triu_indices(k, 1)
    off = cov[iu].mean() if iu[0].size else 0.0
    return SampleMoments(mean=mean, variance=variance, mean_offdiag_cov=off,
                         covariance=cov, samples=n)
