import numpy as np

from dynamic_pca.linalg import relative_error


def matrix_close(actual, expected, tolerance=1e-9, exception_class=None):
    """
    Raises unless `actual` is within `tolerance` relative Frobenius error of
    `expected` (absolute error when `expected` is zero).
    """
    if exception_class is None:
        exception_class = AssertionError

    error = relative_error(actual, expected)
    if not error <= tolerance:
        raise exception_class(
            'Relative error %g exceeds %g:\nactual=%r\nexpected=%r'
            % (error, tolerance, np.asarray(actual), np.asarray(expected))
        )


def summary_close(actual, expected, tolerance=1e-9):
    """
    Compares two MomentSummary or two ContinuousSummary objects: equal
    counts (or measures within tolerance), then means and covariances.
    """
    if hasattr(expected, 'count'):
        assert actual.count == expected.count, (
            'Count should be %d but is %d' % (expected.count, actual.count)
        )
        means = actual.mean, expected.mean
    else:
        measure_error = relative_error(actual.measure, expected.measure)
        assert measure_error <= tolerance, (
            'Measure should be %r but is %r'
            % (expected.measure, actual.measure)
        )
        means = actual.centroid, expected.centroid
    matrix_close(means[0], means[1], tolerance)
    matrix_close(actual.cov, expected.cov, tolerance)


def box_contains(box, points, slack=1e-12):
    projected = box.frame.project(np.atleast_2d(points))
    below = projected < box.extents.lo - slack
    above = projected > box.extents.hi + slack
    outside = np.flatnonzero((below | above).any(axis=1))
    assert not len(outside), '%d points outside the box, first: %r' % (
        len(outside),
        np.atleast_2d(points)[outside[0]] if len(outside) else None,
    )
