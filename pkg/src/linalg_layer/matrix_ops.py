"""
Matrix Operations
SVD and SVD-based Moore-Penrose pseudoinverse on dense float64 matrices
"""

from typing import Optional

import numpy as np
from numpy.typing import NDArray
import scipy.linalg
from loguru import logger


Matrix = NDArray[np.float64]


class SvdConvergenceError(RuntimeError):
    """Raised when LAPACK fails to converge on a decomposition"""


class SvdResult:
    """Thin SVD factors: m = u @ diag(singular_values) @ vt"""

    def __init__(self, u: Matrix, singular_values: NDArray[np.float64], vt: Matrix):
        self.u = u
        self.singular_values = singular_values
        self.vt = vt

    def reconstruct(self) -> Matrix:
        """Multiply the factors back together"""
        return (self.u * self.singular_values) @ self.vt

    def __repr__(self) -> str:
        return f"<SvdResult(shape={self.u.shape[0]}x{self.vt.shape[1]}, rank<={len(self.singular_values)})>"


def as_matrix(m) -> Matrix:
    """
    Validate and convert input to a finite, non-empty 2-D float64 array

    Args:
        m: Array-like input

    Returns:
        float64 ndarray
    """
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2:
        raise ValueError(f"Expected a 2-D matrix, got array with shape {m.shape}")
    if m.size == 0:
        raise ValueError(f"Matrix is empty (shape {m.shape})")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"Matrix of shape {m.shape} contains NaN or Inf")
    return m


def svd(m) -> SvdResult:
    """
    Thin singular value decomposition

    Args:
        m: Non-empty finite matrix

    Returns:
        SvdResult with non-increasing non-negative singular values

    Raises:
        SvdConvergenceError: If neither LAPACK driver converges
    """
    m = as_matrix(m)

    # gesdd is faster but occasionally fails where gesvd succeeds
    for driver in ('gesdd', 'gesvd'):
        try:
            u, s, vt = scipy.linalg.svd(
                m,
                full_matrices=False,
                check_finite=False,
                lapack_driver=driver
            )
            return SvdResult(u, s, vt)
        except np.linalg.LinAlgError as e:
            logger.warning(f"SVD driver {driver} failed on {m.shape[0]}x{m.shape[1]} matrix: {e}")

    raise SvdConvergenceError(
        f"SVD did not converge for matrix of shape {m.shape[0]}x{m.shape[1]}"
    )


def default_rel_tol(m: Matrix) -> float:
    """Rank-revealing cutoff max(shape) * machine epsilon"""
    return max(m.shape) * np.finfo(np.float64).eps


def is_symmetric(m: Matrix) -> bool:
    """Square and equal to its transpose up to rounding"""
    if m.shape[0] != m.shape[1]:
        return False
    scale = np.max(np.abs(m))
    return bool(np.allclose(m, m.T, rtol=0.0, atol=1e-12 * max(scale, 1.0)))


def _retained(values: NDArray[np.float64], rel_tol: float, max_rank: Optional[int]) -> NDArray[np.bool_]:
    """Mask of magnitudes strictly above rel_tol * max, capped at the max_rank largest"""
    magnitudes = np.abs(values)
    top = magnitudes.max(initial=0.0)
    keep = magnitudes > rel_tol * top
    if top == 0.0:
        keep[:] = False

    if max_rank is not None and np.count_nonzero(keep) > max_rank:
        # stable order keeps the lowest index among equal magnitudes
        order = np.argsort(-magnitudes, kind='stable')
        keep[order[max_rank:]] = False

    return keep


def pseudoinverse(
    m,
    rel_tol: Optional[float] = None,
    max_rank: Optional[int] = None,
    assume_symmetric: Optional[bool] = None
) -> Matrix:
    """
    Moore-Penrose pseudoinverse

    Singular values sigma_i <= rel_tol * sigma_max are treated as zero.
    Symmetric input goes through the symmetric eigen-decomposition, anything
    else through the general SVD.

    Args:
        m: Finite matrix (as used: square symmetric PSD scatter matrices)
        rel_tol: Relative cutoff; defaults to max(shape) * eps
        max_rank: Optional cap on the number of retained singular values
        assume_symmetric: Force (True) or forbid (False) the symmetric path;
            auto-detected when None

    Returns:
        Pseudoinverse with the transposed shape of m
    """
    m = as_matrix(m)
    if rel_tol is None:
        rel_tol = default_rel_tol(m)
    if rel_tol <= 0:
        raise ValueError(f"rel_tol must be positive, got {rel_tol}")
    if max_rank is not None and max_rank < 0:
        raise ValueError(f"max_rank must be non-negative, got {max_rank}")

    symmetric = is_symmetric(m) if assume_symmetric is None else assume_symmetric

    if symmetric:
        try:
            eigenvalues, eigenvectors = scipy.linalg.eigh(m, check_finite=False)
        except np.linalg.LinAlgError as e:
            logger.warning(f"Symmetric eigen-decomposition failed ({e}), falling back to SVD")
        else:
            keep = _retained(eigenvalues, rel_tol, max_rank)
            basis = eigenvectors[:, keep]
            return (basis / eigenvalues[keep]) @ basis.T

    factors = svd(m)
    keep = _retained(factors.singular_values, rel_tol, max_rank)
    left = factors.u[:, keep]
    right = factors.vt[keep, :]
    return (right.T / factors.singular_values[keep]) @ left.T
