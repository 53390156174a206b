"""Small dense linear algebra: vector norms, induced norms and logarithmic norms.

Three vector norms on R^n are supported, selected with :class:`NormKind`:

=========  ==========================  ======================================
NormKind   vector norm                 logarithmic norm
=========  ==========================  ======================================
L1         sum |x_i|                   max_j (a_jj + sum_{i != j} |a_ij|)
MAX        max |x_i|                   max_i (a_ii + sum_{j != i} |a_ij|)
EUCLID     sqrt(sum x_i^2)             lambda_max((A + A^T) / 2)
=========  ==========================  ======================================

In the classical literature on Volterra stability these are often numbered
1, 2 and 3 in the order above, so that "norm 2" is the *max* norm, not the
Euclidean one. The names here avoid that trap.

All functions accept a single matrix of shape ``(n, n)`` or a stack of
shape ``(..., n, n)``; results broadcast over the leading axes.
"""
from enum import Enum

import numpy as np

__all__ = [
    "NormKind",
    "NumericalFailure",
    "vector_norm",
    "matrix_operator_norm",
    "log_norm",
    "log_norm_limit_estimate",
    "symmetric_eigen_max",
    "jacobi_eigenvalues",
]

JACOBI_TOL = 1e-12
JACOBI_MAX_SWEEPS = 100
SYMMETRY_TOL = 1e-12


class NumericalFailure(ArithmeticError):
    """An iterative routine did not converge within its iteration cap."""


class NormKind(str, Enum):
    L1 = "l1"
    MAX = "max"
    EUCLID = "l2"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower()
        aliases = {"l1": cls.L1, "max": cls.MAX, "inf": cls.MAX, "linf": cls.MAX,
                   "l2": cls.EUCLID, "euclid": cls.EUCLID}
        try:
            return aliases[key]
        except KeyError:
            raise ValueError(f"unknown norm kind {value!r}; expected l1, max or l2") from None


def _as_square(m):
    m = np.asarray(m, dtype=float)
    if m.ndim < 2 or m.shape[-1] != m.shape[-2]:
        raise ValueError(f"expected square matrix (or stack), got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    return m


def vector_norm(v, kind=NormKind.MAX):
    """Norm of a vector (or of each row of a stack, along the last axis)."""
    kind = NormKind.parse(kind)
    v = np.asarray(v, dtype=float)
    if kind is NormKind.L1:
        return np.sum(np.abs(v), axis=-1)
    if kind is NormKind.MAX:
        return np.max(np.abs(v), axis=-1)
    return np.sqrt(np.sum(v * v, axis=-1))


def matrix_operator_norm(m, kind=NormKind.MAX):
    """Matrix norm induced by the vector norm ``kind``.

    L1 is the maximal column abs-sum, MAX the maximal row abs-sum, and EUCLID
    the largest singular value, obtained as the square root of the largest
    eigenvalue of ``m.T @ m``.
    """
    kind = NormKind.parse(kind)
    m = _as_square(m)
    if kind is NormKind.L1:
        return np.max(np.sum(np.abs(m), axis=-2), axis=-1)
    if kind is NormKind.MAX:
        return np.max(np.sum(np.abs(m), axis=-1), axis=-1)
    gram = np.swapaxes(m, -1, -2) @ m
    # roundoff can leave a tiny negative value for singular matrices
    return np.sqrt(np.maximum(symmetric_eigen_max(gram), 0.0))


def log_norm(m, kind=NormKind.MAX):
    """Logarithmic norm (matrix measure) of ``m``; may be negative."""
    kind = NormKind.parse(kind)
    m = _as_square(m)
    if kind is NormKind.EUCLID:
        return symmetric_eigen_max(0.5 * (m + np.swapaxes(m, -1, -2)))
    diag = np.diagonal(m, axis1=-2, axis2=-1)
    absm = np.abs(m)
    if kind is NormKind.L1:
        off = np.sum(absm, axis=-2) - np.abs(diag)
    else:
        off = np.sum(absm, axis=-1) - np.abs(diag)
    return np.max(diag + off, axis=-1)


def log_norm_limit_estimate(m, kind=NormKind.MAX, h=1e-7):
    """Finite-``h`` value of ``(||I + h m|| - 1) / h``.

    Converges to :func:`log_norm` as ``h -> 0`` with an O(h ||m||^2) bias;
    it is meant as an independent cross-check, not as a replacement.
    """
    if not h > 0:
        raise ValueError("h must be positive")
    m = _as_square(m)
    n = m.shape[-1]
    return (matrix_operator_norm(np.eye(n) + h * m, kind) - 1.0) / h


def _check_symmetric(m):
    scale = np.sqrt(np.sum(m * m, axis=(-2, -1)))
    asym = np.sqrt(np.sum((m - np.swapaxes(m, -1, -2)) ** 2, axis=(-2, -1)))
    if np.any(asym > SYMMETRY_TOL * np.maximum(scale, np.finfo(float).tiny)):
        raise ValueError("matrix is not symmetric")


def jacobi_eigenvalues(m, tol=JACOBI_TOL, max_sweeps=JACOBI_MAX_SWEEPS):
    """Eigenvalues of a symmetric matrix (or stack) by cyclic Jacobi rotations.

    Sweeps over all off-diagonal pairs until the off-diagonal Frobenius norm
    drops below ``tol * ||m||_F`` for every matrix in the stack. Returns the
    diagonal of the rotated matrix, unsorted.

    Raises
    ------
    ValueError
        If ``m`` is not symmetric to relative tolerance 1e-12.
    NumericalFailure
        If ``max_sweeps`` sweeps do not reach the tolerance.
    """
    m = _as_square(m)
    _check_symmetric(m)
    a = 0.5 * (m + np.swapaxes(m, -1, -2))
    batch_shape = a.shape[:-2]
    n = a.shape[-1]
    a = a.reshape((-1, n, n)).copy()
    if n == 1:
        return a[:, 0, :].reshape(batch_shape + (1,))

    threshold = tol * np.sqrt(np.sum(a * a, axis=(1, 2)))
    iu = np.triu_indices(n, 1)
    for _ in range(max_sweeps + 1):
        off = np.sqrt(2.0 * np.sum(a[:, iu[0], iu[1]] ** 2, axis=1))
        active = off > threshold
        if not np.any(active):
            return np.diagonal(a, axis1=1, axis2=2).reshape(batch_shape + (n,)).copy()
        sub = a[active]
        for p in range(n - 1):
            for q in range(p + 1, n):
                _rotate(sub, p, q)
        a[active] = sub
    raise NumericalFailure(f"Jacobi eigenvalue iteration did not converge in {max_sweeps} sweeps")


def _rotate(a, p, q):
    # annihilate a[:, p, q] in place for every matrix of the stack
    apq = a[:, p, q]
    nonzero = apq != 0.0
    safe = np.where(nonzero, apq, 1.0)
    theta = (a[:, q, q] - a[:, p, p]) / (2.0 * safe)
    t = np.where(theta >= 0.0, 1.0, -1.0) / (np.abs(theta) + np.hypot(theta, 1.0))
    t = np.where(nonzero, t, 0.0)
    c = 1.0 / np.sqrt(t * t + 1.0)
    s = t * c

    col_p = a[:, :, p].copy()
    col_q = a[:, :, q]
    a[:, :, p] = c[:, None] * col_p - s[:, None] * col_q
    a[:, :, q] = s[:, None] * col_p + c[:, None] * col_q
    row_p = a[:, p, :].copy()
    row_q = a[:, q, :]
    a[:, p, :] = c[:, None] * row_p - s[:, None] * row_q
    a[:, q, :] = s[:, None] * row_p + c[:, None] * row_q
    a[:, p, q] = 0.0
    a[:, q, p] = 0.0


def symmetric_eigen_max(m):
    """Largest eigenvalue of a symmetric matrix (or of each matrix in a stack)."""
    return np.max(jacobi_eigenvalues(m), axis=-1)
