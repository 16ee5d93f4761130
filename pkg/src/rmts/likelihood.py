"""
Gaussian likelihood and maximum-likelihood fitting for real order-1 models.

Given ``X(T)``, each component of ``X(T+1)`` is normal with::

    mean_i = sum_j r_ij X_j(T) + b_i
    var_i  = sum_j s_ij^2 X_j(T)^2 + sb_i^2

so the exact negative log-likelihood of a trajectory is a sum over the
consecutive pairs ``(X(T), X(T+1))``, T = 0 .. len-2, and over components.
Several independent trajectories with the same parameters contribute the sum
of their individual values.

Free parameters are mapped to model parameters by a :class:`TyingScheme`.
Standard deviations enter only squared, so the optimiser works over
unconstrained signs and results report ``|s|``.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateLikelihoodError, InitializationError, NumericalError
from .optimize import nelder_mead, powell

LOG_2PI = float(np.log(2.0 * np.pi))
VARIANCE_FLOOR = 1e-12

OPTIMIZERS = {"nelder_mead": nelder_mead, "powell": powell}


@dataclass(frozen=True)
class Params:
    """Model parameters ``(R, Sigma, b, sigma_b)`` of a real order-1 model."""

    R: np.ndarray
    Sigma: np.ndarray
    b: np.ndarray
    sigma_b: np.ndarray

    @property
    def dim(self):
        return self.b.shape[0]


@dataclass(frozen=True, eq=False)
class TyingScheme:
    """Index map from model parameters to a free-parameter vector.

    Each of ``r_index``, ``s_index`` (k x k) and ``b_index``, ``sb_index`` (k)
    holds, for every model parameter, the position of the free parameter it
    takes its value from.
    """

    r_index: np.ndarray
    s_index: np.ndarray
    b_index: np.ndarray
    sb_index: np.ndarray
    variant: str = "custom"
    names: tuple = field(default=())

    def __post_init__(self):
        r = np.asarray(self.r_index, dtype=np.int64)
        s = np.asarray(self.s_index, dtype=np.int64)
        b = np.asarray(self.b_index, dtype=np.int64)
        sb = np.asarray(self.sb_index, dtype=np.int64)
        k = b.shape[0] if b.ndim == 1 else -1
        if r.shape != (k, k) or s.shape != (k, k) or sb.shape != (k,):
            raise ValueError("tying index arrays have inconsistent shapes")
        used = np.concatenate([r.ravel(), s.ravel(), b, sb])
        n_free = int(used.max()) + 1 if used.size else 0
        if used.size and used.min() < 0:
            raise ValueError("tying indices must be non-negative")
        if np.unique(used).size != n_free:
            raise ValueError("every free parameter must be used by at least one model parameter")
        names = tuple(self.names) or tuple(f"p{i}" for i in range(n_free))
        if len(names) != n_free:
            raise ValueError("names must list one label per free parameter")
        for name, arr in (("r_index", r), ("s_index", s), ("b_index", b), ("sb_index", sb)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "names", names)

    @property
    def dim(self):
        return self.b_index.shape[0]

    @property
    def n_free(self):
        return len(self.names)

    @classmethod
    def full(cls, k):
        """Every entry of R, Sigma, b, sigma_b is its own free parameter (2k^2 + 2k)."""
        kk = k * k
        r = np.arange(kk).reshape(k, k)
        s = kk + np.arange(kk).reshape(k, k)
        b = 2 * kk + np.arange(k)
        sb = 2 * kk + k + np.arange(k)
        names = ([f"r_{i}{j}" for i in range(k) for j in range(k)]
                 + [f"sigma_{i}{j}" for i in range(k) for j in range(k)]
                 + [f"b_{i}" for i in range(k)] + [f"sigma_b_{i}" for i in range(k)])
        return cls(r, s, b, sb, variant="full", names=tuple(names))

    @classmethod
    def diag_offdiag(cls, k):
        """Six free parameters: r_off, sigma_off, r_diag, sigma_diag, b, sigma_b."""
        r = np.zeros((k, k), dtype=np.int64)
        s = np.ones((k, k), dtype=np.int64)
        np.fill_diagonal(r, 2)
        np.fill_diagonal(s, 3)
        b = np.full(k, 4)
        sb = np.full(k, 5)
        if k == 1:
            # no off-diagonal entries: renumber so all indices are used
            r, s, b, sb = r - 2, s - 2, b - 2, sb - 2
            names = ("r_diag", "sigma_diag", "b", "sigma_b")
        else:
            names = ("r_off", "sigma_off", "r_diag", "sigma_diag", "b", "sigma_b")
        return cls(r, s, b, sb, variant="diag_offdiag", names=names)

    @classmethod
    def from_groups(cls, r_index, s_index, b_index, sb_index, names=()):
        return cls(r_index, s_index, b_index, sb_index, variant="custom", names=names)

    @classmethod
    def named(cls, variant, k):
        if variant == "full":
            return cls.full(k)
        if variant == "diag_offdiag":
            return cls.diag_offdiag(k)
        raise ValueError(f"unknown tying variant {variant!r}")

    def unpack(self, free):
        free = np.asarray(free, dtype=np.float64)
        if free.shape != (self.n_free,):
            raise ValueError(f"expected {self.n_free} free parameters, got shape {free.shape}")
        return Params(R=free[self.r_index], Sigma=free[self.s_index],
                      b=free[self.b_index], sigma_b=free[self.sb_index])

    def pack(self, params):
        """Inverse of :meth:`unpack`.

        Raises:
            ValueError: tied model parameters disagree.
        """
        free = np.full(self.n_free, np.nan)
        seen = np.zeros(self.n_free, dtype=bool)
        for idx, vals in ((self.r_index, params.R), (self.s_index, params.Sigma),
                          (self.b_index, params.b), (self.sb_index, params.sigma_b)):
            idx = idx.ravel()
            vals = np.asarray(vals, dtype=np.float64).ravel()
            if vals.shape != idx.shape:
                raise ValueError("parameter shapes do not match the tying scheme")
            for i, v in zip(idx, vals):
                if seen[i]:
                    if free[i] != v:
                        raise ValueError(f"tied parameter {self.names[i]} has conflicting values")
                else:
                    free[i] = v
                    seen[i] = True
        return free


@dataclass
class FitResult:
    """Outcome of :func:`fit`; ``Sigma`` and ``sigma_b`` are reported as |.|."""

    R: np.ndarray
    Sigma: np.ndarray
    b: np.ndarray
    sigma_b: np.ndarray
    free: np.ndarray
    names: tuple
    nll: float
    iterations: int
    evaluations: int
    converged: bool
    optimizer_name: str
    trace: list = field(default_factory=list)

    @property
    def params(self):
        return Params(self.R, self.Sigma, self.b, self.sigma_b)


class _Transitions:
    """Consecutive pairs of one series, stored component-major.

    Holds scratch buffers reused by every evaluation, so one instance must
    not be evaluated from two threads at once.
    """

    def __init__(self, values):
        prev = np.ascontiguousarray(values[:-1].T)
        self.prev = prev
        self.prev_sq = prev * prev
        self.nxt = np.ascontiguousarray(values[1:].T)
        self.dim = values.shape[1]
        self.count = values.shape[0] - 1
        self._mean = np.empty_like(prev)
        self._var = np.empty_like(prev)


def _prepare(series):
    if isinstance(series, _Transitions):
        return [series]
    if isinstance(series, (list, tuple)):
        if all(isinstance(s, _Transitions) for s in series):
            return list(series)
        items = series
    else:
        items = [series]
    out = []
    for s in items:
        v = s.values if hasattr(s, "values") else np.asarray(s)
        v = np.asarray(v)
        if np.iscomplexobj(v):
            raise ValueError("likelihood is defined for real series only")
        if v.ndim != 2 or v.shape[0] < 2:
            raise ValueError("each series needs at least two timestamps")
        out.append(_Transitions(v.astype(np.float64, copy=False)))
    return out


def _nll_one(R, S2, b, sb2, tr, floor):
    mean = np.matmul(R, tr.prev, out=tr._mean)
    mean += b[:, None]
    var = np.matmul(S2, tr.prev_sq, out=tr._var)
    var += sb2[:, None]
    if floor is None:
        if np.any(var <= 0.0):
            t = int(np.argmax(np.any(var <= 0.0, axis=0)))
            raise DegenerateLikelihoodError(f"zero conditional variance at transition {t}")
    else:
        np.maximum(var, floor, out=var)
    resid = np.subtract(tr.nxt, mean, out=mean)
    resid *= resid
    resid /= var
    quad = float(resid.sum())
    logdet = float(np.log(var, out=var).sum())
    return 0.5 * (tr.count * tr.dim * LOG_2PI + logdet + quad)


def nll(params, series, floor=None):
    """Negative log-likelihood of one series or a list of series.

    Args:
        params: :class:`Params`.
        series: SeriesData, a (length, k) array, or a list of either.
        floor: if given, conditional variances are clipped below at this
            value instead of raising.

    Raises:
        DegenerateLikelihoodError: some conditional variance is zero and no
            floor was given.
        NumericalError: the result is not finite.
    """
    R = np.asarray(params.R, dtype=np.float64)
    S = np.asarray(params.Sigma, dtype=np.float64)
    b = np.asarray(params.b, dtype=np.float64)
    sb = np.asarray(params.sigma_b, dtype=np.float64)
    total = 0.0
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        for tr in _prepare(series):
            if tr.dim != b.shape[0]:
                raise ValueError(f"series dimension {tr.dim} != model dimension {b.shape[0]}")
            total += _nll_one(R, S * S, b, sb * sb, tr, floor)
    if not np.isfinite(total):
        raise NumericalError("negative log-likelihood is not finite")
    return total


def make_objective(tying, series):
    """Objective over the free vector, with the variance floor applied."""
    data = _prepare(series)

    def objective(free):
        try:
            return nll(tying.unpack(free), data, floor=VARIANCE_FLOOR)
        except NumericalError:
            return np.inf

    return objective


def fit(series, tying, init=None, optimizer="nelder_mead", options=None):
    """Maximum-likelihood estimate of the tied parameters.

    Args:
        series: one series or a list of series (likelihoods multiply).
        tying: :class:`TyingScheme` with the series' dimension.
        init: starting free vector; defaults to all ones.
        optimizer: ``"nelder_mead"`` or ``"powell"``.
        options: keyword options passed to the optimiser.

    Returns:
        FitResult.  An exhausted budget gives ``converged=False``, not an error.

    Raises:
        InitializationError: the likelihood is degenerate or non-finite at
            ``init``.
    """
    data = _prepare(series)
    if any(tr.dim != tying.dim for tr in data):
        raise ValueError("series dimension does not match the tying scheme")
    if optimizer not in OPTIMIZERS:
        raise ValueError(f"unknown optimizer {optimizer!r}; choose from {sorted(OPTIMIZERS)}")
    x0 = np.ones(tying.n_free) if init is None else np.asarray(init, dtype=np.float64)
    if x0.shape != (tying.n_free,):
        raise InitializationError(f"init has shape {x0.shape}, expected ({tying.n_free},)")
    try:
        nll(tying.unpack(x0), data)
    except NumericalError as exc:
        raise InitializationError(f"likelihood is degenerate at the initial point: {exc}") from exc

    result = OPTIMIZERS[optimizer](make_objective(tying, data), x0, **(options or {}))
    p = tying.unpack(result.x_best)
    return FitResult(R=p.R, Sigma=np.abs(p.Sigma), b=p.b, sigma_b=np.abs(p.sigma_b),
                     free=result.x_best, names=tying.names, nll=result.f_best,
                     iterations=result.iterations, evaluations=result.evaluations,
                     converged=result.converged, optimizer_name=optimizer,
                     trace=result.trace)
