"""
Dense symmetric-matrix helpers and the cyclic Jacobi eigensolver that turns a
covariance matrix into principal directions.

Matrices are plain float64 numpy arrays. `sym_matrix` is the only way the
package builds a SymMatrix, so every covariance it hands out is exactly
symmetric.
"""

import logging
import math
from typing import NamedTuple

import numpy as np

from dynamic_pca import config
from dynamic_pca.exceptions import NoConvergence, NonFinite

logger = logging.getLogger(__name__)

# Two entries of an eigenvector whose magnitudes differ by less than this
# count as a tie for the sign convention.
SIGN_TIE_TOLERANCE = 1e-12


class Spectrum(NamedTuple):
    """Eigenvalues sorted non-increasing; eigenvectors[:, i] pairs with
    eigenvalues[i]."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


class Frame(NamedTuple):
    """Orthonormal axes (one per row) in significance order."""

    axes: np.ndarray

    @property
    def dim(self):
        return self.axes.shape[0]

    def project(self, points):
        """
        Coordinates of the given (n, d) points along every axis. Each row is
        reduced on its own, so a point projects to the same bits whatever
        other points it is projected with.
        """
        points = np.asarray(points, dtype=float)
        return (points[:, None, :] * self.axes[None, :, :]).sum(axis=2)


def check_finite(values, what='input'):
    values = np.asarray(values, dtype=float)
    if not np.isfinite(values).all():
        raise NonFinite('%s contains NaN or Inf' % what)
    return values


def sym_matrix(entries):
    """
    Returns an exactly symmetric float64 copy of a square matrix, averaging
    the upper and lower triangles.
    """
    matrix = check_finite(entries, 'matrix')
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ValueError('Expected a square matrix, got %r' % (matrix.shape,))
    if matrix.shape[0] < 1:
        raise ValueError('Matrix dimension must be at least 1')
    return 0.5 * (matrix + matrix.T)


def inf_norm(matrix):
    """Maximum absolute row sum."""
    matrix = np.asarray(matrix, dtype=float)
    if matrix.size == 0:
        return 0.0
    return float(np.abs(matrix).sum(axis=1).max())


def off_diagonal_norm(matrix):
    off = matrix - np.diag(np.diag(matrix))
    return math.sqrt(float((off * off).sum()))


def relative_error(actual, expected):
    """
    Frobenius norm of (actual - expected) relative to the norm of expected.
    Zero when both are zero; falls back to the absolute error when only
    expected is zero.
    """
    actual = np.asarray(actual, dtype=float)
    expected = np.asarray(expected, dtype=float)
    diff = float(np.linalg.norm(actual - expected))
    scale = float(np.linalg.norm(expected))
    if scale == 0.0:
        return diff
    return diff / scale


def _rotate(a, v, p, q):
    """One Jacobi rotation zeroing a[p, q] (in place on a and v)."""
    apq = a[p, q]
    theta = (a[q, q] - a[p, p]) / (2.0 * apq)
    if abs(theta) > 1e150:
        t = 0.5 / theta
    else:
        t = 1.0 / (abs(theta) + math.sqrt(theta * theta + 1.0))
        if theta < 0.0:
            t = -t
    c = 1.0 / math.sqrt(t * t + 1.0)
    s = t * c

    col_p = a[:, p].copy()
    col_q = a[:, q].copy()
    a[:, p] = c * col_p - s * col_q
    a[:, q] = s * col_p + c * col_q

    row_p = a[p, :].copy()
    row_q = a[q, :].copy()
    a[p, :] = c * row_p - s * row_q
    a[q, :] = s * row_p + c * row_q
    a[p, q] = a[q, p] = 0.0

    col_p = v[:, p].copy()
    col_q = v[:, q].copy()
    v[:, p] = c * col_p - s * col_q
    v[:, q] = s * col_p + c * col_q


def jacobi_eigendecompose(
    matrix,
    max_sweeps=config.JACOBI_MAX_SWEEPS,
    tolerance=config.JACOBI_TOLERANCE,
):
    """
    Cyclic Jacobi eigendecomposition of a symmetric matrix.

    Sweeps over every off-diagonal pair until the off-diagonal Frobenius norm
    drops below tolerance * ||S||_inf. Returns a Spectrum with eigenvalues
    sorted non-increasing (ties keep their diagonal order) and unit
    eigenvectors as columns, e.g. [[2, 1], [1, 2]] gives eigenvalues (3, 1)
    with (1, 1)/sqrt(2) as the first eigenvector.
    """
    a = sym_matrix(matrix)
    dim = a.shape[0]
    v = np.eye(dim)

    threshold = tolerance * inf_norm(a)
    sweeps = 0
    while off_diagonal_norm(a) > threshold:
        if sweeps >= max_sweeps:
            raise NoConvergence(
                'Jacobi did not converge after %d sweeps (off-diagonal norm '
                '%g, threshold %g)'
                % (max_sweeps, off_diagonal_norm(a), threshold)
            )
        for p in range(dim - 1):
            for q in range(p + 1, dim):
                if a[p, q] != 0.0:
                    _rotate(a, v, p, q)
        sweeps += 1

    logger.debug('Jacobi converged in %d sweeps (dim=%d)', sweeps, dim)

    eigenvalues = np.diag(a).copy()
    order = np.argsort(-eigenvalues, kind='stable')
    eigenvectors = v[:, order]
    # Renormalize to wash out the rounding accumulated over the rotations.
    eigenvectors = eigenvectors / np.linalg.norm(eigenvectors, axis=0)
    return Spectrum(eigenvalues[order], eigenvectors)


def canonical_sign(vector):
    """
    Flips a direction so its largest-magnitude coordinate is positive. Ties
    (within SIGN_TIE_TOLERANCE) go to the lowest coordinate index.
    """
    vector = np.asarray(vector, dtype=float)
    magnitudes = np.abs(vector)
    k = int(np.argmax(magnitudes >= magnitudes.max() - SIGN_TIE_TOLERANCE))
    if vector[k] < 0.0:
        return -vector
    return vector.copy()


def principal_frame(spectrum):
    """Principal axes of a spectrum with the deterministic sign convention."""
    axes = np.array([canonical_sign(v) for v in spectrum.eigenvectors.T])
    return Frame(axes)


def random_rotation(rng, dim=3):
    """A uniformly random proper rotation matrix (determinant +1)."""
    q, r = np.linalg.qr(rng.standard_normal((dim, dim)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q
