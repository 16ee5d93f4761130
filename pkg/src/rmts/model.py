"""
Vector time series driven by random coefficient matrices.

An order-n model with dimension k evolves as::

    X(T+1) = A_1(T) X(T) + A_2(T) X(T-1) + ... + A_n(T) X(T-n+1) + b(T)

with every ``A_l(T)`` and ``b(T)`` drawn afresh, independently, at each step
from time-invariant laws.  For n = 1 the trajectory can be written in closed
form with the running product ``V(T) = A(T) A(T-1) ... A(0)``::

    X(T+1) = V(T) (X(0) + sum_{i=0..T} V(i)^-1 b(i))

Order-n models reduce to order 1 on the stacked state
``[X(T); X(T-1); ...; X(T-n+1)]`` (see :func:`companion_form`).

Simulation draws coefficients in fixed-size chunks, so a run is
bit-reproducible for a given seed regardless of horizon bookkeeping.  Within
a chunk the normals for lag 1 come first, then lag 2, ..., then the noise.
"""

from dataclasses import dataclass

import numpy as np

from .ensembles import (MatrixDistribution, NoiseDistribution, RngStream,
                        sample_matrices, sample_noises)
from .errors import DivergenceError, ShapeError, SingularMatrixError
from .linalg import solve_linear

CHUNK = 4096


@dataclass(frozen=True, eq=False)
class RmtsModel:
    """Order-n random-coefficient autoregression.

    Attributes:
        lag_dists: one :class:`MatrixDistribution` per lag, lag 1 first.
        noise: law of the additive vector ``b(T)``.
    """

    lag_dists: tuple
    noise: NoiseDistribution

    def __post_init__(self):
        lags = tuple(self.lag_dists)
        if not lags:
            raise ValueError("a model needs at least one lag")
        k = self.noise.dim
        for i, dist in enumerate(lags):
            if dist.dim != k:
                raise ShapeError(f"lag {i + 1} has dimension {dist.dim}, noise has {k}")
        object.__setattr__(self, "lag_dists", lags)

    @classmethod
    def order1(cls, dist, noise):
        return cls((dist,), noise)

    @property
    def order(self):
        return len(self.lag_dists)

    @property
    def dim(self):
        return self.noise.dim

    @property
    def is_complex(self):
        return self.noise.is_complex or any(d.is_complex for d in self.lag_dists)

    @property
    def dtype(self):
        return np.complex128 if self.is_complex else np.float64

    @property
    def dist(self):
        """The single coefficient law of an order-1 model."""
        if self.order != 1:
            raise ValueError(f"model has order {self.order}, expected 1")
        return self.lag_dists[0]


@dataclass(frozen=True, eq=False)
class SeriesData:
    """Trajectory ``values[t] = X(t)``, shape (length, k)."""

    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values)
        if values.ndim != 2:
            raise ShapeError(f"series values must be 2-D (length, k), got {values.shape}")
        object.__setattr__(self, "values", values)

    @property
    def dim(self):
        return self.values.shape[1]

    def __len__(self):
        return self.values.shape[0]

    @property
    def is_complex(self):
        return np.iscomplexobj(self.values)


@dataclass(frozen=True, eq=False)
class DrawLog:
    """Realised coefficients of a simulation.

    Attributes:
        matrices: shape (steps, n, k, k); ``matrices[t, l]`` is the lag-(l+1)
            coefficient used to produce the (t+1)-th new value.
        noise: shape (steps, k).
    """

    matrices: np.ndarray
    noise: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrices)
        b = np.asarray(self.noise)
        if m.ndim != 4 or m.shape[2] != m.shape[3]:
            raise ShapeError(f"matrices must have shape (steps, n, k, k), got {m.shape}")
        if b.shape != (m.shape[0], m.shape[2]):
            raise ShapeError(f"noise shape {b.shape} inconsistent with matrices {m.shape}")
        object.__setattr__(self, "matrices", m)
        object.__setattr__(self, "noise", b)

    @property
    def steps(self):
        return self.matrices.shape[0]

    @property
    def order(self):
        return self.matrices.shape[1]

    @property
    def dim(self):
        return self.matrices.shape[2]

    def order1_matrices(self):
        if self.order != 1:
            raise ValueError(f"draw log has order {self.order}, expected 1")
        return self.matrices[:, 0]


def _draw_chunk(model, rng, count):
    mats = np.stack([sample_matrices(d, rng, count) for d in model.lag_dists], axis=1)
    noise = sample_noises(model.noise, rng, count)
    return mats, noise


def draw(model, horizon, rng):
    """Draw the coefficients a simulation of ``horizon`` steps would use."""
    mats, noise = [], []
    remaining = int(horizon)
    while remaining > 0:
        c = min(CHUNK, remaining)
        m, b = _draw_chunk(model, rng, c)
        mats.append(m)
        noise.append(b)
        remaining -= c
    dtype = model.dtype
    if not mats:
        k, n = model.dim, model.order
        return DrawLog(np.zeros((0, n, k, k), dtype=dtype), np.zeros((0, k), dtype=dtype))
    return DrawLog(np.concatenate(mats).astype(dtype, copy=False),
                   np.concatenate(noise).astype(dtype, copy=False))


def _initial_state(x0, order, k, dtype):
    x0 = np.asarray(x0)
    if x0.ndim == 1:
        x0 = x0[None, :]
    if x0.shape != (order, k):
        raise ShapeError(f"initial values must have shape ({order}, {k}), got {x0.shape}")
    return x0.astype(np.result_type(dtype, x0.dtype))


def _advance(mats, noise, state, k, out):
    # mats: (c, n, k, k); state: [X(T); X(T-1); ...] flattened, length n*k.
    # The lag blocks are laid side by side so each new value is the row sum
    # of one (k, n*k) elementwise product.  The companion form reuses the
    # identical rows, which keeps the two routes bit-identical.
    c, n = mats.shape[0], mats.shape[1]
    wide = mats.transpose(0, 2, 1, 3).reshape(c, k, n * k)
    for t in range(c):
        new = (wide[t] * state).sum(axis=1) + noise[t]
        state = np.concatenate((new, state[:-k])) if n > 1 else new
        out[t] = new
    return state


def _check_finite(block, offset):
    if not np.all(np.isfinite(block)):
        bad = int(np.argmax(~np.all(np.isfinite(block.reshape(block.shape[0], -1)), axis=1)))
        t = offset + bad
        raise DivergenceError(f"non-finite value at timestamp {t}", timestamp=t)


def replay(draws, x0):
    """Iterate the recursion on logged coefficients.

    Args:
        draws: a :class:`DrawLog` of order n.
        x0: initial values ``[X(0), ..., X(n-1)]`` in time order, shape (n, k)
            (a 1-D vector is accepted for n = 1).

    Returns:
        SeriesData with ``n + draws.steps`` rows.
    """
    n, k = draws.order, draws.dim
    dtype = np.result_type(draws.matrices.dtype, draws.noise.dtype)
    init = _initial_state(x0, n, k, dtype)
    values = np.empty((n + draws.steps, k), dtype=np.result_type(dtype, init.dtype))
    values[:n] = init
    state = init[::-1].reshape(-1)
    with np.errstate(over="ignore", invalid="ignore"):
        for start in range(0, draws.steps, CHUNK):
            stop = min(start + CHUNK, draws.steps)
            block = values[n + start:n + stop]
            state = _advance(draws.matrices[start:stop], draws.noise[start:stop], state, k, block)
            _check_finite(block, n + start)
    return SeriesData(values)


def simulate(model, x0, horizon, rng, keep_draws=False):
    """Simulate ``horizon`` steps of ``model`` from initial values ``x0``.

    Args:
        model: the :class:`RmtsModel`.
        x0: ``[X(0), ..., X(n-1)]``, shape (n, k); a vector for n = 1.
        horizon: number of new values to generate (>= 1).
        rng: :class:`RngStream` or an integer seed.
        keep_draws: also return the :class:`DrawLog`.

    Returns:
        ``(SeriesData, DrawLog or None)``; the series has ``horizon + n`` rows.

    Raises:
        DivergenceError: a non-finite value appeared; ``timestamp`` says where.
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    if not isinstance(rng, RngStream):
        rng = RngStream(rng)
    n, k = model.order, model.dim
    init = _initial_state(x0, n, k, model.dtype)
    values = np.empty((n + horizon, k), dtype=np.result_type(model.dtype, init.dtype))
    values[:n] = init
    state = init[::-1].reshape(-1)
    kept_m, kept_b = [], []
    with np.errstate(over="ignore", invalid="ignore"):
        for start in range(0, horizon, CHUNK):
            c = min(CHUNK, horizon - start)
            mats, noise = _draw_chunk(model, rng, c)
            if keep_draws:
                kept_m.append(mats)
                kept_b.append(noise)
            block = values[n + start:n + start + c]
            state = _advance(mats, noise, state, k, block)
            _check_finite(block, n + start)
    log = None
    if keep_draws:
        log = DrawLog(np.concatenate(kept_m).astype(model.dtype, copy=False),
                      np.concatenate(kept_b).astype(model.dtype, copy=False))
    return SeriesData(values), log


def product_V(draws, upto):
    """``V(upto) = A(upto) A(upto-1) ... A(0)`` for an order-1 draw log."""
    mats = draws.order1_matrices()
    if not 0 <= upto < mats.shape[0]:
        raise IndexError(f"upto={upto} outside draw log of {mats.shape[0]} steps")
    v = mats[0].copy()
    for t in range(1, upto + 1):
        v = mats[t] @ v
    return v


def _prefix_products(mats, upto):
    out = np.empty((upto + 1,) + mats.shape[1:], dtype=mats.dtype)
    v = mats[0].copy()
    out[0] = v
    for t in range(1, upto + 1):
        v = mats[t] @ v
        out[t] = v
    return out


def closed_form_solution(draws, x0, T):
    """Reconstruct ``X(T+1)`` from logged draws without iterating.

    Evaluates ``V(T) (X(0) + sum_{i=0..T} V(i)^-1 b(i))``, solving
    ``V(i) y = b(i)`` rather than forming the inverse.

    Raises:
        SingularMatrixError: some ``V(i)`` is singular; ``step`` holds ``i``.
    """
    mats = draws.order1_matrices()
    if not 0 <= T < mats.shape[0]:
        raise IndexError(f"T={T} outside draw log of {mats.shape[0]} steps")
    vs = _prefix_products(mats, T)
    acc = np.array(x0, dtype=np.result_type(mats.dtype, np.asarray(x0).dtype))
    for i in range(T + 1):
        try:
            acc = acc + solve_linear(vs[i], draws.noise[i])
        except SingularMatrixError as exc:
            raise SingularMatrixError(f"V({i}) is singular: {exc}", step=i) from exc
    return vs[T] @ acc


def closed_form_trajectory(draws, x0):
    """Closed-form ``X(1) .. X(steps)`` in one pass over the logged draws.

    Same formula as :func:`closed_form_solution`, with the running product
    and the sum of ``V(i)^-1 b(i)`` carried forward instead of rebuilt.

    Returns:
        Array of shape (steps, k); row ``T`` is ``X(T+1)``.
    """
    mats = draws.order1_matrices()
    acc = np.array(x0, dtype=np.result_type(mats.dtype, np.asarray(x0).dtype))
    out = np.empty((mats.shape[0], acc.shape[0]), dtype=np.result_type(acc.dtype, draws.noise.dtype))
    v = None
    for t in range(mats.shape[0]):
        v = mats[t].copy() if v is None else mats[t] @ v
        try:
            acc = acc + solve_linear(v, draws.noise[t])
        except SingularMatrixError as exc:
            raise SingularMatrixError(f"V({t}) is singular: {exc}", step=t) from exc
        out[t] = v @ acc
    return out


def companion_form(model):
    """Rewrite an order-n model as an order-1 model of dimension n*k.

    The coefficient law has the lag laws in its top block row, identity blocks
    on the block subdiagonal (std 0) and zeros elsewhere.  Scale factors are
    folded into the stds.  The noise is ``(b(T), 0, ..., 0)``.

    Sampling the block law directly does not preserve per-block symmetry
    constraints; use :func:`companion_draws` to drive it with the original
    model's draws.
    """
    n, k = model.order, model.dim
    if n < 2:
        raise ValueError("companion form needs order >= 2")
    nk = n * k
    dtype = model.dtype
    means = np.zeros((nk, nk), dtype=dtype)
    stds = np.zeros((nk, nk))
    any_imag = any(d.stds_imag is not None for d in model.lag_dists)
    stds_imag = np.zeros((nk, nk)) if any_imag else None
    for l, d in enumerate(model.lag_dists):
        cols = slice(l * k, (l + 1) * k)
        means[:k, cols] = d.means
        stds[:k, cols] = d.effective_stds
        if any_imag:
            stds_imag[:k, cols] = d.effective_stds_imag
    means[k:, :-k] += np.eye(nk - k)
    noise_means = np.zeros(nk, dtype=model.noise.means.dtype)
    noise_means[:k] = model.noise.means
    noise_stds = np.zeros(nk)
    noise_stds[:k] = model.noise.stds
    noise_imag = None
    if model.noise.stds_imag is not None:
        noise_imag = np.zeros(nk)
        noise_imag[:k] = model.noise.stds_imag
    dist = MatrixDistribution(means, stds, stds_imag)
    return RmtsModel.order1(dist, NoiseDistribution(noise_means, noise_stds, noise_imag))


def companion_draws(draws):
    """Map an order-n draw log to the equivalent order-1 companion draw log."""
    steps, n, k = draws.steps, draws.order, draws.dim
    nk = n * k
    mats = np.zeros((steps, 1, nk, nk), dtype=draws.matrices.dtype)
    mats[:, 0, :k, :] = draws.matrices.transpose(0, 2, 1, 3).reshape(steps, k, nk)
    mats[:, 0, k:, :-k] = np.eye(nk - k)
    noise = np.zeros((steps, nk), dtype=draws.noise.dtype)
    noise[:, :k] = draws.noise
    return DrawLog(mats, noise)


def companion_initial(x0):
    """Stack ``[X(0), ..., X(n-1)]`` into the companion state ``[X(n-1); ...; X(0)]``."""
    x0 = np.asarray(x0)
    return x0[::-1].reshape(-1)
