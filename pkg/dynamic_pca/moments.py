"""
Discrete mean/covariance summaries and their closed-form dynamic updates.

A MomentSummary is the constant-size sufficient statistic (n, mean,
population covariance) of a multiset of points. Adding or deleting a batch
that has been summarized already costs O(d^2) no matter how many points
either side holds:

    sigma'_ij = (n sigma_ij + m sigma^m_ij) / (n + m)
                + n m / (n + m)^2 (mu_i - mu^m_i)(mu_j - mu^m_j)

for a merge, and for a deletion

    sigma'_ij = (n sigma_ij - m sigma^m_ij) / (n - m)
                - n m / (n - m)^2 (mu_i - mu^m_i)(mu_j - mu^m_j).

Summaries are immutable; every update returns a new one.
"""

import functools
import logging

import numpy as np

from dynamic_pca import config
from dynamic_pca.exceptions import (
    DimensionMismatch,
    EmptyInput,
    EmptyResult,
    NonFinite,
    NotUnit,
)
from dynamic_pca.linalg import (
    check_finite,
    inf_norm,
    jacobi_eigendecompose,
    sym_matrix,
)

logger = logging.getLogger(__name__)


def _frozen(array):
    array.setflags(write=False)
    return array


class MomentSummary(object):
    """
    Count, mean and population covariance (1/n normalization) of a point
    multiset. An empty summary has an all-zero mean and covariance.
    """

    __slots__ = ('count', 'mean', 'cov')

    def __init__(self, count, mean, cov):
        if count < 0:
            raise ValueError('count must be non-negative, got %r' % count)
        mean = check_finite(mean, 'mean').copy()
        cov = sym_matrix(cov)
        if mean.shape != (cov.shape[0],):
            raise DimensionMismatch(
                'mean has shape %r but cov has shape %r'
                % (mean.shape, cov.shape)
            )
        self.count = int(count)
        self.mean = _frozen(mean)
        self.cov = _frozen(cov)

    @classmethod
    def empty(cls, dim):
        return cls(0, np.zeros(dim), np.zeros((dim, dim)))

    @property
    def dim(self):
        return self.mean.shape[0]

    def __repr__(self):
        return '<MomentSummary n=%d mean=%s>' % (
            self.count,
            np.array2string(self.mean, precision=6),
        )


def _check_dims(base, other):
    if base.dim != other.dim:
        raise DimensionMismatch(
            'Cannot combine a %d-d summary with a %d-d one'
            % (base.dim, other.dim)
        )


def _as_points(points, dim=None):
    points = np.asarray(points, dtype=float)
    if points.size == 0:
        if points.ndim == 2:
            dim = points.shape[1] or dim
        if dim is None:
            raise EmptyInput('Cannot infer the dimension of an empty point set')
        return np.zeros((0, dim))
    if points.ndim == 1:
        points = points.reshape(1, -1)
    if points.ndim != 2:
        raise ValueError('Expected an (n, d) array, got %r' % (points.shape,))
    if dim is not None and points.shape[1] != dim:
        raise DimensionMismatch(
            'Expected %d-d points, got %d-d' % (dim, points.shape[1])
        )
    return check_finite(points, 'points')


def summarize(points, dim=None):
    """
    Summarizes an (n, d) point array from scratch in O(n d^2).

    >>> summarize([(0, 0), (2, 0), (0, 2), (2, 2)]).cov
    array([[1., 0.],
           [0., 1.]])

    An empty input needs `dim` (or a (0, d) array) and yields the zero
    summary.
    """
    points = _as_points(points, dim)
    count, dim = points.shape
    if count == 0:
        return MomentSummary.empty(dim)
    mean = points.mean(axis=0)
    centered = points - mean
    cov = centered.T @ centered / count
    return MomentSummary(count, mean, cov)


def _result(count, mean, cov):
    if not (np.isfinite(mean).all() and np.isfinite(cov).all()):
        raise NonFinite('update produced NaN or Inf')
    if count == 1:
        cov = np.zeros_like(cov)
    return MomentSummary(count, mean, cov)


def apply_add(base, batch):
    """Merges an already summarized batch into base in O(d^2)."""
    _check_dims(base, batch)
    if batch.count == 0:
        return base
    if base.count == 0:
        return batch

    n, m = base.count, batch.count
    total = n + m
    delta = base.mean - batch.mean
    mean = (n * base.mean + m * batch.mean) / total
    cov = (n * base.cov + m * batch.cov) / total + (
        n * m / float(total * total)
    ) * np.outer(delta, delta)
    return _result(total, mean, cov)


def apply_delete(base, batch):
    """
    Removes an already summarized batch from base in O(d^2).

    The batch must describe a sub-multiset of base's points. That is not
    (and can't be) verified here; see drift_estimate.
    """
    _check_dims(base, batch)
    if batch.count == 0:
        return base
    if batch.count >= base.count:
        raise EmptyResult(
            'Cannot delete %d points from a summary of %d'
            % (batch.count, base.count)
        )

    n, m = base.count, batch.count
    remaining = n - m
    delta = base.mean - batch.mean
    mean = (n * base.mean - m * batch.mean) / remaining
    cov = (n * base.cov - m * batch.cov) / remaining - (
        n * m / float(remaining * remaining)
    ) * np.outer(delta, delta)
    return _result(remaining, mean, cov)


def _as_point(base, point):
    point = check_finite(point, 'point').reshape(-1)
    if point.shape[0] != base.dim:
        raise DimensionMismatch(
            'Expected a %d-d point, got %d-d' % (base.dim, point.shape[0])
        )
    return point


def add_one(base, point):
    """Adds a single point in O(d^2)."""
    point = _as_point(base, point)
    n = base.count
    if n == 0:
        return MomentSummary(1, point, np.zeros((base.dim, base.dim)))

    total = n + 1
    delta = point - base.mean
    mean = base.mean + delta / total
    cov = (n / float(total)) * base.cov + (
        n / float(total * total)
    ) * np.outer(delta, delta)
    return _result(total, mean, cov)


def delete_one(base, point):
    """
    Deletes a single point (which must belong to the summarized multiset)
    in O(d^2), using the pre-deletion count n:

        sigma'_ij = n/(n-1) sigma_ij - n/(n-1)^2 (p_i - mu_i)(p_j - mu_j)
    """
    point = _as_point(base, point)
    n = base.count
    if n <= 1:
        raise EmptyResult('Cannot delete a point from a summary of %d' % n)

    remaining = n - 1
    delta = point - base.mean
    mean = (n * base.mean - point) / remaining
    cov = (n / float(remaining)) * base.cov - (
        n / float(remaining * remaining)
    ) * np.outer(delta, delta)
    return _result(remaining, mean, cov)


def variance_along(summary, direction, tolerance=config.UNIT_TOLERANCE):
    """Variance of the summarized points along a unit direction: v^T Sigma v."""
    direction = check_finite(direction, 'direction').reshape(-1)
    if direction.shape[0] != summary.dim:
        raise DimensionMismatch(
            'Expected a %d-d direction, got %d-d'
            % (summary.dim, direction.shape[0])
        )
    norm = float(np.linalg.norm(direction))
    if abs(norm - 1.0) > tolerance:
        raise NotUnit('Direction has norm %r' % norm)
    return float(direction @ summary.cov @ direction)


def merge_summaries(summaries):
    """
    Summary of the union of several objects, each given by its own summary,
    in time independent of their point counts.
    """
    summaries = list(summaries)
    if not summaries:
        raise EmptyInput('Nothing to merge')
    return functools.reduce(apply_add, summaries)


def drift_estimate(summary):
    """
    Smallest eigenvalue of the covariance. Anything below
    -1e-9 * max(1, ||cov||_inf) means the summary is no longer positive
    semidefinite: deletions were applied for points that weren't there, or
    cancellation has built up and the summary should be rebuilt.
    """
    return float(jacobi_eigendecompose(summary.cov).eigenvalues[-1])


def is_drifted(summary, tolerance=1e-9):
    return drift_estimate(summary) < -tolerance * max(
        1.0, inf_norm(summary.cov)
    )


class MomentTracker(object):
    """
    Keeps a running summary of a point multiset that changes over time and
    counts how many points the closed-form updates have absorbed since the
    last rebuild. It never rebuilds by itself; callers poll needs_rebuild
    and hand the current points to rebuild().
    """

    def __init__(self, summary, rebuild_threshold=config.REBUILD_THRESHOLD):
        self.summary = summary
        self.rebuild_threshold = rebuild_threshold
        self.updates = 0

    @classmethod
    def from_points(cls, points, **kwargs):
        return cls(summarize(points), **kwargs)

    @property
    def needs_rebuild(self):
        return self.updates >= self.rebuild_threshold

    def add(self, batch):
        self.summary = apply_add(self.summary, batch)
        self.updates += batch.count
        return self.summary

    def delete(self, batch):
        self.summary = apply_delete(self.summary, batch)
        self.updates += batch.count
        return self.summary

    def add_one(self, point):
        self.summary = add_one(self.summary, point)
        self.updates += 1
        return self.summary

    def delete_one(self, point):
        self.summary = delete_one(self.summary, point)
        self.updates += 1
        return self.summary

    def rebuild(self, points):
        if is_drifted(self.summary):
            logger.warning(
                'Summary drifted (min eigenvalue %g) after %d updates',
                drift_estimate(self.summary),
                self.updates,
            )
        logger.info('Rebuilding summary after %d updates', self.updates)
        self.summary = summarize(points, dim=self.summary.dim)
        self.updates = 0
        return self.summary
