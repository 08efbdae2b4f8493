"""
PCA bounding boxes.

The box axes are the principal directions of a summary's covariance; the
extents are the extreme projections of some candidate point set onto them:

    ap       every input point (exact)
    agp      every corner of every non-empty grid cell
    egp      per grid column, only the corners of the lowest and highest
             non-empty cell (same extents as agp, far fewer candidates)
    centers  non-empty cell centers, then grown by sqrt(d) eps / 2

Grid extents can be tightened back to the exact ones with refine_tight,
which only scans points in the cells near each extreme.
"""

import logging
import math
from typing import NamedTuple

import numpy as np

from dynamic_pca import config
from dynamic_pca.enum import Enum
from dynamic_pca.exceptions import EmptyInput
from dynamic_pca.grid import (
    OccupancyGrid,
    build_grid,
    candidate_corners,
    cell_centers,
    column_extremal_corners,
)
from dynamic_pca.linalg import (
    check_finite,
    jacobi_eigendecompose,
    principal_frame,
)
from dynamic_pca.moments import merge_summaries, summarize

logger = logging.getLogger(__name__)


class Method(Enum):
    AP = 'ap'
    AGP = 'agp'
    EGP = 'egp'
    CENTERS = 'centers'


class CandidateSource(Enum):
    CORNERS = 'corners'
    COLUMNS = 'columns'
    CENTERS = 'centers'


GRID_SOURCES = {
    Method.AGP: CandidateSource.CORNERS,
    Method.EGP: CandidateSource.COLUMNS,
    Method.CENTERS: CandidateSource.CENTERS,
}


class Extents(NamedTuple):
    """Per-axis projection intervals [lo_i, hi_i] onto a frame's axes."""

    lo: np.ndarray
    hi: np.ndarray
    # Number of points the extents were computed from.
    candidates: int = 0

    @property
    def sizes(self):
        return self.hi - self.lo

    @property
    def volume(self):
        return float(np.prod(self.sizes))


class OrientedBox(NamedTuple):
    frame: object
    extents: Extents

    @property
    def dim(self):
        return self.frame.dim

    @property
    def volume(self):
        return self.extents.volume

    @property
    def center(self):
        return 0.5 * (self.extents.lo + self.extents.hi) @ self.frame.axes

    def corners(self):
        """The 2^d corners in model coordinates."""
        lo, hi = self.extents.lo, self.extents.hi
        picks = np.array(
            [
                [(mask >> i) & 1 for i in range(self.dim)]
                for mask in range(2 ** self.dim)
            ],
            dtype=bool,
        )
        coordinates = np.where(picks, hi[None, :], lo[None, :])
        return coordinates @ self.frame.axes

    def contains(self, points, slack=1e-12):
        """True if every point projects inside [lo - slack, hi + slack]."""
        projected = self.frame.project(np.atleast_2d(points))
        return bool(
            (projected >= self.extents.lo - slack).all()
            and (projected <= self.extents.hi + slack).all()
        )


def extreme_scan(points, frame):
    """Exact extents: min and max projection of every point on every axis."""
    points = check_finite(points, 'points')
    if points.size == 0:
        raise EmptyInput('Cannot compute the extents of no points')
    points = np.atleast_2d(points)
    projected = frame.project(points)
    return Extents(
        projected.min(axis=0), projected.max(axis=0), candidates=len(points)
    )


def expand_extents(extents, delta):
    if delta < 0:
        raise ValueError('Expansion must be non-negative, got %r' % delta)
    return Extents(extents.lo - delta, extents.hi + delta, extents.candidates)


def extreme_grid(grid, frame, variant=CandidateSource.CORNERS):
    """
    Extents over a grid's candidate points. The `centers` variant is grown
    by half a cell diagonal so it still contains every point.
    """
    CandidateSource.from_string(variant)
    if variant == CandidateSource.CORNERS:
        candidates = candidate_corners(grid)
    elif variant == CandidateSource.COLUMNS:
        candidates = column_extremal_corners(grid)
    else:
        candidates = cell_centers(grid)

    extents = extreme_scan(candidates, frame)
    logger.debug(
        'Grid extents (%s) from %d candidates', variant, len(candidates)
    )
    if variant == CandidateSource.CENTERS:
        extents = expand_extents(extents, math.sqrt(grid.dim) * grid.eps / 2)
    return extents


def _cell_intervals(indices, grid, axis):
    """Projection interval [lo, hi] of every given cell onto an axis."""
    base = (grid.origin + indices * grid.eps) @ axis
    low = grid.eps * np.minimum(axis, 0).sum()
    high = grid.eps * np.maximum(axis, 0).sum()
    return base + low, base + high


def _slab_width(grid, axis, variant):
    spread = grid.eps * np.abs(axis).sum()
    if variant == CandidateSource.CENTERS:
        spread = spread / 2 + math.sqrt(grid.dim) * grid.eps / 2
    return spread + config.INSIDE_TOLERANCE


def refine_tight(grid, points, frame, coarse, variant=CandidateSource.CORNERS):
    """
    Exact extents computed from coarse grid extents (made by `variant`) by
    scanning only the points in cells that reach into a slab behind each
    coarse extreme.

    The cell holding the coarse extreme corner is non-empty and any of its
    points projects at most eps * ||w||_1 below that corner, so for corner
    candidates a slab of that width always holds the true extreme. (The half
    cell diagonal, sqrt(d) eps / 2, is not enough: on the diagonal axis the
    corner and the point can lie a full diagonal apart.) A cell center lies
    within eps * ||w||_1 / 2 of its points and the `centers` extents are
    grown by sqrt(d) eps / 2 on top, so their slab is that much wider.

    Uses the grid's per-cell point lists when it tracks them; otherwise the
    given points are bucketed into cells.
    """
    CandidateSource.from_string(variant)
    if not grid.cells:
        raise EmptyInput('Cannot refine the extents of an empty grid')

    if grid.track_points:
        indices = grid.indices()
        point_indices = None
    else:
        points = check_finite(points, 'points')
        if points.size == 0:
            raise EmptyInput('Cannot refine the extents of no points')
        points = np.atleast_2d(points)
        point_indices = np.floor((points - grid.origin) / grid.eps)

    lo = np.empty(frame.dim)
    hi = np.empty(frame.dim)
    examined = 0
    for i, axis in enumerate(frame.axes):
        width = _slab_width(grid, axis, variant)
        sides = (
            (hi, np.max, coarse.hi[i] - width, True),
            (lo, np.min, coarse.lo[i] + width, False),
        )
        for target, pick, bound, upper in sides:
            cells = indices if point_indices is None else point_indices
            cell_lo, cell_hi = _cell_intervals(cells, grid, axis)
            near = cell_hi >= bound if upper else cell_lo <= bound
            if not near.any():
                raise EmptyInput('No points near the extreme of axis %d' % i)
            if point_indices is None:
                candidates = np.concatenate(
                    [grid.members(index) for index in indices[near]]
                )
            else:
                candidates = points[near]
            target[i] = pick(frame.project(candidates)[:, i])
            examined += len(candidates)

    logger.debug('Tight refinement examined %d points', examined)
    return Extents(lo, hi, candidates=examined)


def build_box(summary, source, variant=CandidateSource.CORNERS):
    """
    Oriented box with the principal frame of a MomentSummary or
    ContinuousSummary. `source` gives the extents: an (n, d) point array is
    scanned, an OccupancyGrid is scanned via the `variant` candidates, and a
    callable gets the frame and must return Extents.
    """
    frame = principal_frame(jacobi_eigendecompose(summary.cov))
    if isinstance(source, OccupancyGrid):
        extents = extreme_grid(source, frame, variant)
    elif callable(source):
        extents = source(frame)
    else:
        extents = extreme_scan(source, frame)
    return OrientedBox(frame, extents)


def common_box(summaries, clouds):
    """
    Common PCA box of several objects: the frame of their merged summary,
    extents over all their points.
    """
    summary = merge_summaries(summaries)
    points = np.concatenate([np.atleast_2d(cloud) for cloud in clouds])
    return build_box(summary, points)


def pca_box(
    points,
    mode=Method.AP,
    epsilon=None,
    tight=False,
    summary=None,
    grid=None,
):
    """
    The static pipeline: summary (unless given), principal frame, extents by
    `mode`. Grid modes need `epsilon` or a prebuilt `grid`. Returns the box
    and the number of candidates examined.
    """
    Method.from_string(mode)
    points = check_finite(points, 'points')
    if summary is None:
        summary = summarize(points)

    if mode == Method.AP:
        box = build_box(summary, points)
        return box, box.extents.candidates

    if grid is None:
        if epsilon is None:
            raise ValueError('Mode %r needs a cell size' % mode)
        grid = build_grid(points, epsilon, track_points=tight)
    box = build_box(summary, grid, GRID_SOURCES[mode])
    if tight:
        extents = refine_tight(
            grid, points, box.frame, box.extents, GRID_SOURCES[mode]
        )
        box = OrientedBox(box.frame, extents)
    return box, box.extents.candidates


def volume_ratio(box, reference):
    """Volume of a box relative to a reference box (1.0 is optimal)."""
    if reference.volume <= config.DEGENERACY_TOLERANCE:
        raise EmptyInput('Reference box has zero volume')
    return box.volume / reference.volume
