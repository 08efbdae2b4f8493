"""
Regular epsilon-cell occupancy grid.

Cells are indexed by integer tuples, index_i = floor((p_i - origin_i) / eps),
and stored sparsely (index -> point count), so tiny cells on a unit-diameter
model cost only as much memory as there are occupied cells. Points exactly on
a cell boundary fall in the higher-index cell.

The grid supplies the candidate extremal points of the grid-based PCA boxes:
every corner of every non-empty cell, or per vertical (last-axis) column only
the bottom corners of the lowest and the top corners of the highest
non-empty cell.

Reads may run concurrently; update() needs exclusive access.
"""

import collections
import itertools
import logging
import math

import numpy as np

from dynamic_pca.exceptions import EmptyGrid, NotPresent
from dynamic_pca.linalg import check_finite

logger = logging.getLogger(__name__)


def cell_of(point, eps, origin):
    """Integer index tuple of the cell holding a point."""
    return tuple(
        int(math.floor((float(p) - float(o)) / eps))
        for p, o in zip(point, origin)
    )


def snapped_origin(points, eps):
    """
    Component-wise floor of the points' minimum to a multiple of eps, so
    that grids of sizes eps, 2 eps, 4 eps share the lattice and nest.
    """
    points = np.asarray(points, dtype=float)
    return np.floor(points.min(axis=0) / eps) * eps


class OccupancyGrid(object):
    """
    Sparse occupancy grid. With track_points=True every cell also keeps the
    multiplicities of the exact points inside it (needed for tight
    refinement).
    """

    def __init__(self, eps, origin, track_points=False):
        if not eps > 0:
            raise ValueError('Cell size must be positive, got %r' % eps)
        self.eps = float(eps)
        self.origin = check_finite(origin, 'origin').reshape(-1).copy()
        self.track_points = track_points
        self.cells = {}
        # (column index without the last axis) -> Counter of last-axis levels
        self._columns = collections.defaultdict(collections.Counter)
        self._members = collections.defaultdict(collections.Counter)

    @property
    def dim(self):
        return self.origin.shape[0]

    def __len__(self):
        return len(self.cells)

    def __contains__(self, index):
        return tuple(index) in self.cells

    def cell_of(self, point):
        return cell_of(point, self.eps, self.origin)

    def count(self):
        """Number of points in the grid."""
        return sum(self.cells.values())

    def copy(self):
        other = OccupancyGrid(self.eps, self.origin, self.track_points)
        other.cells = dict(self.cells)
        for key, levels in self._columns.items():
            other._columns[key] = collections.Counter(levels)
        for key, members in self._members.items():
            other._members[key] = collections.Counter(members)
        return other

    def _insert(self, point):
        index = self.cell_of(point)
        if index not in self.cells:
            self._columns[index[:-1]][index[-1]] += 1
            self.cells[index] = 0
        self.cells[index] += 1
        if self.track_points:
            self._members[index][tuple(point)] += 1

    def _remove(self, point):
        index = self.cell_of(point)
        count = self.cells.get(index, 0)
        if count <= 0:
            raise NotPresent('No point recorded in cell %r' % (index,))
        if self.track_points:
            key = tuple(point)
            members = self._members[index]
            if members[key] <= 0:
                raise NotPresent('Point %r is not in the grid' % (key,))
            members[key] -= 1
            if not members[key]:
                del members[key]
            if not members:
                del self._members[index]

        if count == 1:
            del self.cells[index]
            column = self._columns[index[:-1]]
            column[index[-1]] -= 1
            if not column[index[-1]]:
                del column[index[-1]]
            if not column:
                del self._columns[index[:-1]]
        else:
            self.cells[index] = count - 1

    def update(self, added=(), removed=()):
        """
        Inserts and removes points (each an iterable of d-tuples) in time
        proportional to their number. Returns the grid itself. Removing a
        point that was never inserted raises NotPresent.
        """
        for point in _rows(added):
            self._insert(point)
        for point in _rows(removed):
            self._remove(point)
        return self

    def members(self, index):
        """Exact points recorded in a cell, one row per occurrence."""
        if not self.track_points:
            raise ValueError('This grid does not track its points')
        members = self._members.get(tuple(index))
        if not members:
            return np.zeros((0, self.dim))
        return np.array(list(members.elements()), dtype=float)

    def indices(self):
        """(k, d) integer array of occupied cell indices, sorted."""
        if not self.cells:
            return np.zeros((0, self.dim), dtype=np.int64)
        return np.array(sorted(self.cells), dtype=np.int64)

    def columns(self):
        """{column index: (lowest level, highest level)} of occupied cells."""
        return {
            key: (min(levels), max(levels))
            for key, levels in self._columns.items()
        }

    def corner_coordinates(self, corner_indices):
        corner_indices = np.asarray(corner_indices, dtype=float)
        return self.origin[None, :] + corner_indices * self.eps


def _rows(points):
    points = np.asarray(points, dtype=float)
    if points.size == 0:
        return []
    if points.ndim == 1:
        points = points.reshape(1, -1)
    return [tuple(row) for row in check_finite(points, 'points').tolist()]


def build_grid(points, eps, origin=None, track_points=False):
    """
    Grid of the given points. The origin defaults to the AABB minimum
    snapped down to a multiple of eps.
    """
    points = check_finite(points, 'points')
    if origin is None:
        origin = snapped_origin(points, eps)
    grid = OccupancyGrid(eps, origin, track_points=track_points)
    grid.update(added=points)
    logger.debug(
        'Built grid: %d points in %d cells (eps=%g)',
        len(points),
        len(grid),
        eps,
    )
    return grid


def _offsets(dim):
    return np.array(list(itertools.product((0, 1), repeat=dim)), dtype=np.int64)


def candidate_corners(grid):
    """All 2^d corners of every non-empty cell, deduplicated and sorted."""
    if not grid.cells:
        raise EmptyGrid('The grid is empty')
    corners = (grid.indices()[:, None, :] + _offsets(grid.dim)[None]).reshape(
        -1, grid.dim
    )
    return grid.corner_coordinates(np.unique(corners, axis=0))


def column_extremal_corners(grid):
    """
    For every occupied column along the last axis, the bottom corners of the
    lowest non-empty cell and the top corners of the highest one,
    deduplicated and sorted.
    """
    if not grid.cells:
        raise EmptyGrid('The grid is empty')
    base = _offsets(grid.dim - 1)
    corners = []
    for key, (low, high) in grid.columns().items():
        key = np.array(key, dtype=np.int64)
        for offset in base:
            corners.append(tuple(key + offset) + (low,))
            corners.append(tuple(key + offset) + (high + 1,))
    return grid.corner_coordinates(np.unique(np.array(corners), axis=0))


def cell_centers(grid):
    """Centers of the non-empty cells."""
    if not grid.cells:
        raise EmptyGrid('The grid is empty')
    return grid.corner_coordinates(grid.indices() + 0.5)
