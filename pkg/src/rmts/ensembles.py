"""
Seedable sampling of random coefficient matrices and noise vectors.

Every entry of a coefficient matrix is Gaussian, ``a_ij ~ N(r_ij, (f*s_ij)^2)``,
where ``r`` are the means, ``s`` the entrywise standard deviations and ``f`` a
scale factor.  Complex entries carry independent real and imaginary parts
with their own standard deviations.  Two symmetry constraints are supported:

* ``symmetric``: draw the upper triangle and diagonal, mirror ``a_ji = a_ij``.
* ``hermitian``: real diagonal, complex upper triangle, ``a_ji = conj(a_ij)``.

Standard deviations are always stored, never variances.

Random numbers
--------------
:class:`RngStream` wraps numpy's PCG64 bit generator for the uniform stream
and turns uniforms into normals with the Box-Muller transform::

    u1 = 1 - U, u2 = U'           (two consecutive uniform blocks, u1 in (0, 1])
    z[2i]   = sqrt(-2 ln u1_i) * cos(2 pi u2_i)
    z[2i+1] = sqrt(-2 ln u1_i) * sin(2 pi u2_i)

A request for ``n`` normals consumes ``2 * ceil(n / 2)`` uniforms (the first
``ceil(n/2)`` feed ``u1``, the next ``ceil(n/2)`` feed ``u2``), and an odd
leftover variate is discarded.  Any port that reproduces PCG64's
``random()`` doubles reproduces these normals.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ShapeError

CONSTRAINTS = ("none", "symmetric", "hermitian")


class RngStream:
    """Deterministic source of uniform and standard-normal variates.

    Single-owner mutable state: do not share one stream between threads.
    Use :meth:`split` to derive independent streams for parallel work.
    """

    def __init__(self, seed=0):
        seed = int(seed)
        if seed < 0 or seed >= 2 ** 64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
        self.seed = seed
        self._gen = np.random.Generator(np.random.PCG64(seed))

    def __repr__(self):
        return f"RngStream(seed={self.seed})"

    def split(self, index):
        """Independent stream for worker ``index`` (seed + index, wrapped to 64 bits)."""
        return RngStream((self.seed + int(index)) % 2 ** 64)

    def uniform(self, size):
        return self._gen.random(size)

    def normal(self, size):
        """Standard normals of the given shape via Box-Muller."""
        shape = (size,) if np.isscalar(size) else tuple(size)
        n = int(np.prod(shape, dtype=np.int64))
        if n == 0:
            return np.zeros(shape)
        m = (n + 1) // 2
        u = self._gen.random(2 * m)
        u1 = 1.0 - u[:m]
        u2 = u[m:]
        radius = np.sqrt(-2.0 * np.log(u1))
        angle = 2.0 * np.pi * u2
        z = np.empty(2 * m)
        z[0::2] = radius * np.cos(angle)
        z[1::2] = radius * np.sin(angle)
        return z[:n].reshape(shape)


def _frozen(a):
    a = np.array(a)
    a.setflags(write=False)
    return a


def _real_nonneg(a, name):
    a = np.asarray(a)
    if np.iscomplexobj(a):
        raise ValueError(f"{name} must be real")
    a = a.astype(np.float64)
    if np.any(a < 0) or not np.all(np.isfinite(a)):
        raise ValueError(f"{name} must be finite and non-negative")
    return a


@dataclass(frozen=True, eq=False)
class MatrixDistribution:
    """Elementwise Gaussian law of a k x k random matrix.

    Attributes:
        means: k x k mean matrix R (real or complex).
        stds: k x k standard deviations of the real parts.
        stds_imag: k x k standard deviations of the imaginary parts, or
            None for a real-valued law.
        constraint: ``"none"``, ``"symmetric"`` or ``"hermitian"``.
        scale: factor f applied to both std matrices when sampling.
    """

    means: np.ndarray
    stds: np.ndarray
    stds_imag: np.ndarray = None
    constraint: str = "none"
    scale: float = 1.0

    def __post_init__(self):
        means = np.asarray(self.means)
        means = means.astype(np.complex128 if np.iscomplexobj(means) else np.float64)
        if means.ndim != 2 or means.shape[0] != means.shape[1]:
            raise ShapeError(f"means must be square, got {means.shape}")
        stds = _real_nonneg(self.stds, "stds")
        if stds.shape != means.shape:
            raise ShapeError(f"stds shape {stds.shape} != means shape {means.shape}")
        stds_imag = self.stds_imag
        if stds_imag is not None:
            stds_imag = _real_nonneg(stds_imag, "stds_imag")
            if stds_imag.shape != means.shape:
                raise ShapeError("stds_imag shape does not match means")
        if self.constraint not in CONSTRAINTS:
            raise ValueError(f"unknown constraint {self.constraint!r}")
        scale = float(self.scale)
        if not np.isfinite(scale) or scale < 0:
            raise ValueError("scale must be finite and non-negative")
        if self.constraint == "symmetric":
            if not np.array_equal(means, means.T) or not np.array_equal(stds, stds.T):
                raise ValueError("symmetric constraint needs symmetric means and stds")
            if stds_imag is not None and not np.array_equal(stds_imag, stds_imag.T):
                raise ValueError("symmetric constraint needs symmetric stds_imag")
        elif self.constraint == "hermitian":
            if not np.array_equal(means, means.conj().T):
                raise ValueError("hermitian constraint needs Hermitian means")
            if not np.array_equal(stds, stds.T):
                raise ValueError("hermitian constraint needs symmetric stds")
            if stds_imag is not None and not np.array_equal(stds_imag, stds_imag.T):
                raise ValueError("hermitian constraint needs symmetric stds_imag")
            if stds_imag is None:
                stds_imag = np.zeros_like(stds)
        if stds_imag is not None or self.constraint == "hermitian":
            means = means.astype(np.complex128)
        object.__setattr__(self, "means", _frozen(means))
        object.__setattr__(self, "stds", _frozen(stds))
        object.__setattr__(self, "stds_imag", None if stds_imag is None else _frozen(stds_imag))
        object.__setattr__(self, "scale", scale)

    @classmethod
    def deterministic(cls, means):
        """Point mass at ``means`` (all stds zero)."""
        means = np.asarray(means)
        return cls(means=means, stds=np.zeros(means.shape))

    @property
    def dim(self):
        return self.means.shape[0]

    @property
    def is_complex(self):
        return np.iscomplexobj(self.means)

    @property
    def effective_stds(self):
        """Real-part stds after applying the scale factor."""
        return self.scale * self.stds

    @property
    def effective_stds_imag(self):
        if self.stds_imag is None:
            return np.zeros_like(self.stds)
        out = self.scale * self.stds_imag
        if self.constraint == "hermitian":
            out = out.copy()
            np.fill_diagonal(out, 0.0)
        return out

    def with_scale(self, scale):
        return MatrixDistribution(self.means, self.stds, self.stds_imag, self.constraint, scale)

    def modsq_stds(self):
        """|sigma_ij|^2 = (f s_re)^2 + (f s_im)^2, the entry variances."""
        return self.effective_stds ** 2 + self.effective_stds_imag ** 2

    def pseudo_variances(self):
        """Re(sigma)^2 - Im(sigma)^2 per entry, i.e. E[(a - r)^2]."""
        return self.effective_stds ** 2 - self.effective_stds_imag ** 2


@dataclass(frozen=True, eq=False)
class NoiseDistribution:
    """Independent Gaussian components ``b_i(T) ~ N(b_i, s_i^2)``.

    ``stds_imag`` gives the imaginary-part stds for a complex noise law.
    The matrix scale factor never applies here.
    """

    means: np.ndarray
    stds: np.ndarray
    stds_imag: np.ndarray = field(default=None)

    def __post_init__(self):
        means = np.asarray(self.means)
        means = means.astype(np.complex128 if np.iscomplexobj(means) else np.float64)
        if means.ndim != 1:
            raise ShapeError(f"noise means must be 1-D, got {means.shape}")
        stds = _real_nonneg(self.stds, "stds")
        if stds.shape != means.shape:
            raise ShapeError("noise stds shape does not match means")
        stds_imag = self.stds_imag
        if stds_imag is not None:
            stds_imag = _real_nonneg(stds_imag, "stds_imag")
            if stds_imag.shape != means.shape:
                raise ShapeError("noise stds_imag shape does not match means")
            means = means.astype(np.complex128)
        object.__setattr__(self, "means", _frozen(means))
        object.__setattr__(self, "stds", _frozen(stds))
        object.__setattr__(self, "stds_imag", None if stds_imag is None else _frozen(stds_imag))

    @classmethod
    def deterministic(cls, means):
        means = np.asarray(means)
        return cls(means=means, stds=np.zeros(means.shape))

    @property
    def dim(self):
        return self.means.shape[0]

    @property
    def is_complex(self):
        return np.iscomplexobj(self.means)

    def modsq_stds(self):
        out = self.stds ** 2
        if self.stds_imag is not None:
            out = out + self.stds_imag ** 2
        return out


def sample_matrices(dist, rng, count):
    """Draw ``count`` independent matrices, returned with shape (count, k, k).

    Normals are consumed in one block per call: real parts first, then
    imaginary parts (complex laws only).
    """
    k = dist.dim
    count = int(count)
    sd = dist.effective_stds
    if dist.constraint == "none":
        out = dist.means + sd * rng.normal((count, k, k))
        if dist.stds_imag is not None:
            out = out + 1j * (dist.effective_stds_imag * rng.normal((count, k, k)))
        return out

    rows, cols = np.triu_indices(k)
    upper = dist.means[rows, cols] + sd[rows, cols] * rng.normal((count, rows.size))
    if dist.constraint == "hermitian":
        strict = rows != cols
        # diagonal stays real; only strict-upper entries get imaginary noise
        upper = upper.astype(np.complex128)
        upper[:, ~strict] = upper[:, ~strict].real
        sd_im = dist.effective_stds_imag[rows[strict], cols[strict]]
        upper[:, strict] += 1j * (sd_im * rng.normal((count, int(strict.sum()))))
        out = np.empty((count, k, k), dtype=np.complex128)
        out[:, rows, cols] = upper
        out[:, cols, rows] = upper.conj()
        return out

    if dist.stds_imag is not None:
        upper = upper + 1j * (dist.effective_stds_imag[rows, cols]
                              * rng.normal((count, rows.size)))
    out = np.empty((count, k, k), dtype=upper.dtype)
    out[:, rows, cols] = upper
    out[:, cols, rows] = upper
    return out


def sample_matrix(dist, rng):
    """One k x k draw from ``dist``."""
    return sample_matrices(dist, rng, 1)[0]


def sample_noises(dist, rng, count):
    """Draw ``count`` noise vectors, shape (count, k)."""
    count = int(count)
    out = dist.means + dist.stds * rng.normal((count, dist.dim))
    if dist.stds_imag is not None:
        out = out + 1j * (dist.stds_imag * rng.normal((count, dist.dim)))
    return out


def sample_noise(dist, rng):
    return sample_noises(dist, rng, 1)[0]


def preset_goe(k, scale=1.0):
    """Real symmetric ensemble: diagonal variance 2, off-diagonal variance 1."""
    if k < 1:
        raise ValueError("k must be at least 1")
    stds = np.ones((k, k))
    np.fill_diagonal(stds, np.sqrt(2.0))
    return MatrixDistribution(np.zeros((k, k)), stds, constraint="symmetric", scale=scale)


def preset_gue(k, scale=1.0):
    """Complex Hermitian ensemble.

    Real diagonal with variance 1; off-diagonal real and imaginary parts
    each with variance 0.5.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    half = np.sqrt(0.5)
    stds = np.full((k, k), half)
    np.fill_diagonal(stds, 1.0)
    stds_imag = np.full((k, k), half)
    np.fill_diagonal(stds_imag, 0.0)
    return MatrixDistribution(np.zeros((k, k), dtype=np.complex128), stds, stds_imag,
                              constraint="hermitian", scale=scale)


def tied_matrix(k, diag, offdiag):
    """k x k matrix with one value on the diagonal and another elsewhere."""
    dtype = np.complex128 if (np.iscomplexobj(diag) or np.iscomplexobj(offdiag)) else np.float64
    out = np.full((k, k), offdiag, dtype=dtype)
    np.fill_diagonal(out, diag)
    return out
