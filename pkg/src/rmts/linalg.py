"""
Small dense linear algebra over the real or complex field.

Matrices and vectors are plain numpy arrays; the field is carried by the
dtype (float64 or complex128).  Everything here is a pure function of its
inputs.

Inversion and linear solves use Gaussian elimination with partial pivoting.
The matrices in this package are small (k up to a few dozen), so the plain
row-reduction loop is fast enough and gives reproducible results for a given
input.
"""

import numpy as np

from .errors import NumericalError, ShapeError, SingularMatrixError

PIVOT_THRESHOLD = 1e-12


def as_field_array(a):
    """Coerce to float64, or complex128 if any entry is complex."""
    a = np.asarray(a)
    if np.iscomplexobj(a):
        return a.astype(np.complex128, copy=False)
    return a.astype(np.float64, copy=False)


def is_complex(a):
    return np.iscomplexobj(a)


def _require_square(a, name="matrix"):
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ShapeError(f"{name} must be square, got shape {a.shape}")


def mat_mul(a, b):
    """Matrix product ``a @ b`` with an explicit shape contract.

    Mixing a real and a complex operand promotes to complex.
    """
    a = as_field_array(a)
    b = as_field_array(b)
    if a.ndim != 2 or b.ndim != 2:
        raise ShapeError(f"mat_mul expects 2-D operands, got {a.shape} and {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"cannot multiply {a.shape} by {b.shape}")
    return a @ b


def _eliminate(a, rhs):
    # Forward elimination with partial pivoting, then back substitution.
    # `rhs` is 2-D (n, m); both arrays are modified in place.
    n = a.shape[0]
    for col in range(n):
        pivot_row = col + int(np.argmax(np.abs(a[col:, col])))
        pivot = a[pivot_row, col]
        if abs(pivot) < PIVOT_THRESHOLD:
            raise SingularMatrixError(
                f"pivot {abs(pivot):.3e} in column {col} is below {PIVOT_THRESHOLD:g}"
            )
        if pivot_row != col:
            a[[col, pivot_row]] = a[[pivot_row, col]]
            rhs[[col, pivot_row]] = rhs[[pivot_row, col]]
        if col + 1 < n:
            factors = a[col + 1:, col] / pivot
            a[col + 1:, col:] -= np.outer(factors, a[col, col:])
            rhs[col + 1:] -= np.outer(factors, rhs[col])
    x = np.empty_like(rhs)
    for row in range(n - 1, -1, -1):
        acc = rhs[row] - a[row, row + 1:] @ x[row + 1:]
        x[row] = acc / a[row, row]
    return x


def _result_dtype(*arrays):
    return np.complex128 if any(np.iscomplexobj(x) for x in arrays) else np.float64


def solve_linear(a, rhs):
    """Solve ``a @ x = rhs`` for a square ``a``.

    Raises:
        ShapeError: ``a`` is not square or ``rhs`` has the wrong length.
        SingularMatrixError: a pivot magnitude drops below 1e-12.
    """
    a = np.asarray(a)
    rhs = np.asarray(rhs)
    _require_square(a)
    if rhs.ndim != 1 or rhs.shape[0] != a.shape[0]:
        raise ShapeError(f"rhs of shape {rhs.shape} does not match matrix {a.shape}")
    dtype = _result_dtype(a, rhs)
    if a.shape[0] == 0:
        return np.zeros(0, dtype=dtype)
    work = np.array(a, dtype=dtype)
    b = np.array(rhs, dtype=dtype).reshape(-1, 1)
    return _eliminate(work, b)[:, 0]


def mat_inverse(a):
    """Inverse of a square matrix by partial-pivot elimination."""
    a = np.asarray(a)
    _require_square(a)
    dtype = _result_dtype(a)
    n = a.shape[0]
    return _eliminate(np.array(a, dtype=dtype), np.eye(n, dtype=dtype))


def hadamard_modsq(a):
    """Entrywise modulus squared; always returns a real array."""
    a = np.asarray(a)
    if np.iscomplexobj(a):
        return a.real ** 2 + a.imag ** 2
    return np.asarray(a, dtype=np.float64) ** 2


def spectral_radius(a):
    """Largest eigenvalue modulus of a square matrix.

    Eigenvalues come from LAPACK's QR iteration via ``numpy.linalg.eigvals``.

    Raises:
        NumericalError: the eigenvalue iteration did not converge.
    """
    a = as_field_array(a)
    _require_square(a)
    if a.shape[0] == 0:
        return 0.0
    if not np.all(np.isfinite(a)):
        raise NumericalError("spectral radius of a non-finite matrix")
    try:
        eig = np.linalg.eigvals(a)
    except np.linalg.LinAlgError as exc:
        # Row-sum norm bounds the spectral radius from above.
        bound = float(np.max(np.abs(a).sum(axis=1)))
        raise NumericalError(f"eigenvalue iteration failed: {exc}", estimate=bound) from exc
    return float(np.max(np.abs(eig)))
