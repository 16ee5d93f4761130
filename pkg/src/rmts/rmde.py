"""
Monte Carlo for the first-order random matrix differential equation.

``dX/dt = A(t) X + b(t)`` is discretised on ``n`` equal steps of ``dt = T/n``.
Each step multiplies by an independent factor and adds an increment::

    X_{i+1} = F_i X_i + c_i
    RMEXP(A, T) = lim F_{n-1} ... F_1 F_0

Two factor scalings are available:

``"diffusive"`` (default)
    ``F_i = I + dt R + (T / sqrt(n)) (A_i - R)``, likewise
    ``c_i = dt b + (T / sqrt(n)) (b_i - b)``.  The mean drifts over ``dt``
    while the fluctuation of each draw is scaled by ``T / sqrt(n)``, so the
    product has a non-degenerate limit.  For a 1 x 1 standard-normal entry
    ``ln Y`` tends to ``N(-T^2/2, T^2)``.
``"literal"``
    ``F_i = I + dt A_i`` and ``c_i = dt b_i``.  With zero-mean entries the
    fluctuations average out and the product tends to the identity.

Both scalings agree when the laws are deterministic, where the product is
``(I + T R / n)^n -> exp(T R)``.

Products are accumulated newest-leftmost, as in :func:`rmts.model.product_V`.
"""

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .ensembles import RngStream, sample_matrices, sample_noises
from .errors import DivergenceError, SingularMatrixError
from .linalg import solve_linear

SCALINGS = ("diffusive", "literal")
PATH_BLOCK = 10_000
STEP_CHUNK = 64


@dataclass(frozen=True, eq=False)
class RmexpConfig:
    """Law of A(t) plus discretisation and Monte Carlo settings."""

    dist: object
    horizon: float = 1.0
    steps: int = 1000
    paths: int = 1
    seed: int = 0
    scaling: str = "diffusive"

    def __post_init__(self):
        if not self.horizon > 0:
            raise ValueError("horizon must be positive")
        if int(self.steps) < 1 or int(self.paths) < 1:
            raise ValueError("steps and paths must be at least 1")
        if self.scaling not in SCALINGS:
            raise ValueError(f"scaling must be one of {SCALINGS}")
        object.__setattr__(self, "steps", int(self.steps))
        object.__setattr__(self, "paths", int(self.paths))

    @property
    def dt(self):
        return self.horizon / self.steps

    @property
    def kick(self):
        """Multiplier of a draw's deviation from its mean."""
        if self.scaling == "literal":
            return self.dt
        return self.horizon / np.sqrt(self.steps)


@dataclass(frozen=True, eq=False)
class RmdeDraws:
    """Step factors ``F_i`` (n, k, k) and increments ``c_i`` (n, k) or None."""

    factors: np.ndarray
    increments: np.ndarray = None


def _factors_from(cfg, mats):
    k = cfg.dist.dim
    means = cfg.dist.means
    f = (cfg.dt * means + np.eye(k)) + cfg.kick * (mats - means)
    return f


def rmde_draws(cfg, rng, noise=None):
    """Draw every step factor first, then (optionally) every noise increment."""
    if not isinstance(rng, RngStream):
        rng = RngStream(rng)
    mats = sample_matrices(cfg.dist, rng, cfg.steps)
    factors = _factors_from(cfg, mats)
    increments = None
    if noise is not None:
        b = sample_noises(noise, rng, cfg.steps)
        increments = cfg.dt * noise.means + cfg.kick * (b - noise.means)
    return RmdeDraws(factors, increments)


def _prefix_products(factors):
    out = np.empty_like(factors)
    v = factors[0].copy()
    out[0] = v
    with np.errstate(over="ignore", invalid="ignore"):
        for i in range(1, factors.shape[0]):
            v = factors[i] @ v
            out[i] = v
    if not np.all(np.isfinite(out[-1])):
        bad = int(np.argmax(~np.all(np.isfinite(out.reshape(out.shape[0], -1)), axis=1)))
        raise DivergenceError(f"matrix product overflowed at step {bad}", timestamp=bad)
    return out


def rmexp_from_draws(draws):
    return _prefix_products(draws.factors)[-1]


def rmexp_sample(cfg, rng=None):
    """One realisation of ``F_{n-1} ... F_0``.

    Raises:
        DivergenceError: the running product overflowed.
    """
    return rmexp_from_draws(rmde_draws(cfg, cfg.seed if rng is None else rng))


def inhomogeneous_from_draws(draws, x0):
    """``V_{n-1} (x0 + sum_i V_i^-1 c_i)`` with ``V_i = F_i ... F_0``."""
    vs = _prefix_products(draws.factors)
    acc = np.array(x0, dtype=np.result_type(vs.dtype, np.asarray(x0).dtype))
    if draws.increments is not None:
        for i in range(vs.shape[0]):
            try:
                acc = acc + solve_linear(vs[i], draws.increments[i])
            except SingularMatrixError as exc:
                raise SingularMatrixError(f"partial product V_{i} is singular: {exc}", step=i) from exc
    return vs[-1] @ acc


def inhomogeneous_solution_mc(cfg, noise, x0, rng=None):
    """One path of the inhomogeneous solution at time ``cfg.horizon``.

    Uses the same draw order as :func:`rmexp_sample`, so with the same seed
    the homogeneous factors coincide.
    """
    draws = rmde_draws(cfg, cfg.seed if rng is None else rng, noise)
    return inhomogeneous_from_draws(draws, x0)


def rmexp_scalar_density(y, T):
    """Limit density of the 1 x 1 product with a standard-normal entry.

    Lognormal with log-mean ``-T^2/2`` and log-sd ``T``.

    Raises:
        ValueError: any ``y <= 0`` or ``T <= 0``.
    """
    y = np.asarray(y, dtype=np.float64)
    if T <= 0:
        raise ValueError("T must be positive")
    if np.any(y <= 0):
        raise ValueError("density is supported on y > 0 only")
    z = (np.log(y) + 0.5 * T * T) / T
    out = np.exp(-0.5 * z * z) / (y * np.sqrt(2.0 * np.pi) * T)
    return out if out.ndim else float(out)


def _scalar_log_block(cfg, rng, paths):
    # ln|Y| and sign of Y for `paths` independent 1 x 1 products
    r = complex(cfg.dist.means[0, 0]).real
    sd = float(cfg.dist.effective_stds[0, 0])
    base = 1.0 + cfg.dt * r
    logabs = np.zeros(paths)
    negative = np.zeros(paths, dtype=bool)
    for start in range(0, cfg.steps, STEP_CHUNK):
        c = min(STEP_CHUNK, cfg.steps - start)
        f = base + cfg.kick * sd * rng.normal((c, paths))
        negative ^= (np.count_nonzero(f < 0, axis=0) % 2).astype(bool)
        with np.errstate(divide="ignore"):
            logabs += np.log(np.abs(f)).sum(axis=0)
    return logabs, negative


def _worker_count(workers):
    if workers is None:
        env = os.environ.get("RMTS_THREADS", "0")
        try:
            workers = int(env)
        except ValueError:
            workers = 0
    if workers <= 0:
        workers = os.cpu_count() or 1
    return workers


def scalar_log_samples(cfg, workers=None):
    """ln Y over ``cfg.paths`` paths of a real 1 x 1 product.

    Paths are generated in blocks of 10 000, block ``j`` using the stream
    seeded ``cfg.seed + j``, so results do not depend on ``workers``.

    Returns:
        ``(log_y, positive)``: ``log_y`` is ``ln|Y|`` for every path and
        ``positive`` flags the paths with ``Y > 0``.
    """
    if cfg.dist.dim != 1 or cfg.dist.is_complex:
        raise ValueError("scalar_log_samples needs a real 1 x 1 law")
    root = RngStream(cfg.seed)
    blocks = [(j, min(PATH_BLOCK, cfg.paths - start))
              for j, start in enumerate(range(0, cfg.paths, PATH_BLOCK))]

    def run(block):
        j, size = block
        return _scalar_log_block(cfg, root.split(j), size)

    n_workers = min(_worker_count(workers), len(blocks))
    if n_workers > 1:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            parts = list(pool.map(run, blocks))
    else:
        parts = [run(b) for b in blocks]
    logabs = np.concatenate([p[0] for p in parts])
    negative = np.concatenate([p[1] for p in parts])
    positive = ~negative & np.isfinite(logabs)
    return logabs, positive


@dataclass
class RmexpMomentCheck:
    mean_log: float
    std_log: float
    target_mean: float
    target_std: float
    ks_distance: float
    nonpositive: int
    paths: int


def rmexp_moment_check(cfg, workers=None):
    """Compare ln Y against the lognormal limit ``N(-T^2/2, T^2)``.

    Paths with ``Y <= 0`` (possible at finite n) are counted and left out of
    the log statistics.
    """
    logs, positive = scalar_log_samples(cfg, workers=workers)
    good = logs[positive]
    T = cfg.horizon
    target_mean, target_std = -0.5 * T * T, T
    if good.size:
        ks = float(stats.kstest(good, "norm", args=(target_mean, target_std)).statistic)
        mean_log = float(good.mean())
        std_log = float(good.std(ddof=1)) if good.size > 1 else 0.0
    else:
        ks, mean_log, std_log = 1.0, float("nan"), float("nan")
    return RmexpMomentCheck(mean_log=mean_log, std_log=std_log, target_mean=target_mean,
                            target_std=target_std, ks_distance=ks,
                            nonpositive=int((~positive).sum()), paths=cfg.paths)


def rmexp_samples(cfg, workers=None):
    """``cfg.paths`` independent k x k products, shape (paths, k, k).

    Blocked and seeded like :func:`scalar_log_samples`.
    """
    k = cfg.dist.dim
    root = RngStream(cfg.seed)
    blocks = [(j, min(PATH_BLOCK, cfg.paths - start))
              for j, start in enumerate(range(0, cfg.paths, PATH_BLOCK))]
    dtype = np.complex128 if cfg.dist.is_complex else np.float64

    def run(block):
        j, size = block
        rng = root.split(j)
        v = np.broadcast_to(np.eye(k, dtype=dtype), (size, k, k)).copy()
        with np.errstate(over="ignore", invalid="ignore"):
            for start in range(0, cfg.steps, STEP_CHUNK):
                c = min(STEP_CHUNK, cfg.steps - start)
                mats = sample_matrices(cfg.dist, rng, c * size).reshape(c, size, k, k)
                f = _factors_from(cfg, mats)
                for i in range(c):
                    v = f[i] @ v
        return v

    n_workers = min(_worker_count(workers), len(blocks))
    if n_workers > 1:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            parts = list(pool.map(run, blocks))
    else:
        parts = [run(b) for b in blocks]
    out = np.concatenate(parts)
    if not np.all(np.isfinite(out)):
        raise DivergenceError("matrix product overflowed in at least one path")
    return out
