"""
Continuous PCA: moments of a uniform unit-density measure over a body made
of simplices (segments, triangles or tetrahedra), and their dynamic update
when some simplices are removed and others added.

For a simplex with k vertices x_1..x_k the second moment about any point mu
is

    C(mu) = 1/(k(k+1)) * (sum_j sum_h (x_j - mu)(x_h - mu)^T
                          + sum_j (x_j - mu)(x_j - mu)^T)

which gives the 1/6, 1/12 and 1/20 factors for segments, triangles and
tetrahedra. A body's summary is (measure v, centroid mu, covariance Sigma)
with Sigma = sum_k (v_k / v) C_k(mu).

Updating a summary with n_a added and n_d removed simplices runs in
O(n_a + n_d). Writing s_a = sum over added v_k mu_k (s_d likewise):

    v'     = v + sum_a v_k - sum_d v_k
    mu'    = (v mu + s_a - s_d) / v'
    Sigma' = (v (Sigma + (mu - mu')(mu - mu')^T)
              + sum_a v_k C_k(mu') - sum_d v_k C_k(mu')) / v'

The first term re-centers the old body's covariance on the new centroid
(parallel axis theorem), so the old simplices never need to be revisited.
"""

import contextlib
import logging
import threading
from typing import NamedTuple

import numpy as np

from dynamic_pca import config
from dynamic_pca.enum import Enum
from dynamic_pca.exceptions import (
    ApexOutside,
    Degenerate,
    EmptyResult,
    KindMismatch,
)
from dynamic_pca.geometry import (
    Polygon,
    TriMesh,
    fan_triangulate,
    select_interior_point,
    star_tetrahedralize,
    triangle_areas,
)
from dynamic_pca.linalg import check_finite, sym_matrix

logger = logging.getLogger(__name__)


class PrimitiveKind(Enum):
    SEGMENT2D = 'segment2d'
    TRIANGLE2D = 'triangle2d'
    TRIANGLE3D = 'triangle3d'
    TETRA3D = 'tetra3d'


class Mode(Enum):
    POLYGON_AREA = 'polygon_area'
    POLYGON_BOUNDARY = 'polygon_boundary'
    POLYHEDRON_VOLUME = 'polyhedron_volume'
    POLYHEDRON_BOUNDARY = 'polyhedron_boundary'


# kind -> (vertex count, coordinate dimension)
PRIMITIVE_SHAPES = {
    PrimitiveKind.SEGMENT2D: (2, 2),
    PrimitiveKind.TRIANGLE2D: (3, 2),
    PrimitiveKind.TRIANGLE3D: (3, 3),
    PrimitiveKind.TETRA3D: (4, 3),
}

MODE_KINDS = {
    Mode.POLYGON_AREA: PrimitiveKind.TRIANGLE2D,
    Mode.POLYGON_BOUNDARY: PrimitiveKind.SEGMENT2D,
    Mode.POLYHEDRON_VOLUME: PrimitiveKind.TETRA3D,
    Mode.POLYHEDRON_BOUNDARY: PrimitiveKind.TRIANGLE3D,
}

# Modes whose decomposition cones the boundary to an interior apex.
APEX_MODES = (Mode.POLYGON_AREA, Mode.POLYHEDRON_VOLUME)


def moment_divisor(kind):
    """k (k + 1) for a simplex with k vertices: 6, 12 or 20."""
    count = PRIMITIVE_SHAPES[kind][0]
    return count * (count + 1)


class Primitive(object):
    def __init__(self, kind, vertices):
        kind = PrimitiveKind.from_string(kind)
        vertices = check_finite(vertices, 'primitive vertices')
        if vertices.shape != PRIMITIVE_SHAPES[kind]:
            raise ValueError(
                '%s needs vertices of shape %r, got %r'
                % (kind, PRIMITIVE_SHAPES[kind], vertices.shape)
            )
        self.kind = kind
        self.vertices = vertices

    def __repr__(self):
        return '<Primitive %s %s>' % (self.kind, self.vertices.tolist())


class ContinuousSummary(object):
    """Measure (length/area/volume), centroid and covariance of a body."""

    __slots__ = ('measure', 'centroid', 'cov', 'mode')

    def __init__(self, measure, centroid, cov, mode):
        self.measure = float(measure)
        self.centroid = check_finite(centroid, 'centroid').copy()
        self.cov = sym_matrix(cov)
        self.mode = Mode.from_string(mode)
        self.centroid.setflags(write=False)
        self.cov.setflags(write=False)

    @property
    def kind(self):
        return MODE_KINDS[self.mode]

    @property
    def dim(self):
        return self.centroid.shape[0]

    def __repr__(self):
        return '<ContinuousSummary %s measure=%g>' % (self.mode, self.measure)


class DeltaResult(NamedTuple):
    summary: ContinuousSummary
    apex: np.ndarray
    rebuilt: bool


_counters = threading.local()


@contextlib.contextmanager
def primitive_counter():
    """
    Counts primitive evaluations inside the block (per thread):

        with primitive_counter() as counter:
            cpca_apply_delta(summary, added, removed)
        counter.count  # == len(added) + len(removed)
    """
    counter = _PrimitiveCount()
    stack = getattr(_counters, 'stack', None)
    if stack is None:
        stack = _counters.stack = []
    stack.append(counter)
    try:
        yield counter
    finally:
        stack.remove(counter)


class _PrimitiveCount(object):
    def __init__(self):
        self.count = 0


def _record(count):
    for counter in getattr(_counters, 'stack', ()):
        counter.count += count


def _stack(kind, primitives):
    """(k, nv, d) vertex array for a list of Primitives or raw arrays."""
    count, dim = PRIMITIVE_SHAPES[kind]
    if isinstance(primitives, np.ndarray):
        stacked = np.asarray(primitives, dtype=float)
    else:
        primitives = list(primitives)
        if not primitives:
            return np.zeros((0, count, dim))
        arrays = []
        for primitive in primitives:
            if isinstance(primitive, Primitive):
                if primitive.kind != kind:
                    raise KindMismatch(
                        'Expected %s primitives, got %s'
                        % (kind, primitive.kind)
                    )
                arrays.append(primitive.vertices)
            else:
                arrays.append(np.asarray(primitive, dtype=float))
        stacked = np.stack(arrays)
    if stacked.size == 0:
        return np.zeros((0, count, dim))
    if stacked.shape == (count, dim):
        stacked = stacked[None]
    if stacked.shape[1:] != (count, dim):
        raise KindMismatch(
            '%s primitives need vertices of shape %r, got %r'
            % (kind, (count, dim), stacked.shape[1:])
        )
    return check_finite(stacked, 'primitive vertices')


def _measures(kind, stacked):
    if kind == PrimitiveKind.SEGMENT2D:
        return np.linalg.norm(stacked[:, 1] - stacked[:, 0], axis=1)
    if kind in (PrimitiveKind.TRIANGLE2D, PrimitiveKind.TRIANGLE3D):
        return triangle_areas(stacked)
    edges = stacked[:, :3] - stacked[:, 3:4]
    return np.abs(np.linalg.det(edges)) / 6.0


def _centroids_measures(kind, stacked, tolerance=config.DEGENERACY_TOLERANCE):
    _record(len(stacked))
    measures = _measures(kind, stacked)
    if measures.size and measures.min() <= tolerance:
        raise Degenerate(
            '%s primitive %d is degenerate (measure %g)'
            % (kind, int(measures.argmin()), measures.min())
        )
    return stacked.mean(axis=1), measures


def _second_moments(kind, stacked, mu):
    """(k, d, d) second moments of every primitive about mu."""
    centered = stacked - mu[None, None, :]
    sums = centered.sum(axis=1)
    moments = np.einsum('ki,kj->kij', sums, sums) + np.einsum(
        'kli,klj->kij', centered, centered
    )
    return moments / moment_divisor(kind)


def primitive_centroid_measure(primitive):
    """(centroid, measure) of one primitive; Degenerate if measure <= 1e-14."""
    stacked = _stack(primitive.kind, [primitive])
    centroids, measures = _centroids_measures(primitive.kind, stacked)
    return centroids[0], float(measures[0])


def primitive_covariance(primitive, mu):
    """Second moment of a primitive about mu (its covariance when mu is its
    own centroid)."""
    mu = check_finite(mu, 'mu').reshape(-1)
    stacked = _stack(primitive.kind, [primitive])
    return sym_matrix(_second_moments(primitive.kind, stacked, mu)[0])


def decompose(body, mode, apex=None):
    """
    Simplices of a body for a mode, as an (n, k, d) vertex array: polygon
    edges, fan triangles from an interior apex, boundary triangles, or star
    tetrahedra. Apex modes pick the boundary's center of gravity unless an
    apex is given.
    """
    mode = Mode.from_string(mode)
    if mode in (Mode.POLYGON_AREA, Mode.POLYGON_BOUNDARY):
        if not isinstance(body, Polygon):
            raise KindMismatch('%s needs a Polygon' % mode)
        if mode == Mode.POLYGON_BOUNDARY:
            return body.segments()
        if apex is None:
            apex = select_interior_point(body)
        triangles = fan_triangulate(body, apex)
        kind = PrimitiveKind.TRIANGLE2D
        orientation = _body_orientation(body)
        if not apex_sees(kind, triangles, orientation=orientation):
            raise ApexOutside(
                'Apex %s does not see every polygon edge from inside'
                % np.asarray(apex).tolist(),
                apex=np.asarray(apex),
            )
        return triangles

    if not isinstance(body, TriMesh):
        raise KindMismatch('%s needs a TriMesh' % mode)
    if mode == Mode.POLYHEDRON_BOUNDARY:
        return body.corners()
    if apex is None:
        apex = select_interior_point(body)
    return star_tetrahedralize(body, apex).tets


def summarize_primitives(primitives, mode):
    """Static summary of a body given directly by its simplices."""
    mode = Mode.from_string(mode)
    kind = MODE_KINDS[mode]
    stacked = _stack(kind, primitives)
    centroids, measures = _centroids_measures(kind, stacked)
    total = float(measures.sum())
    if total <= config.DEGENERACY_TOLERANCE:
        raise Degenerate('Body has zero total measure')

    weights = measures / total
    mu = weights @ centroids
    moments = _second_moments(kind, stacked, mu)
    cov = np.einsum('k,kij->ij', weights, moments)
    return ContinuousSummary(total, mu, cov, mode)


def cpca_static(body, mode, apex=None):
    """
    Continuous PCA summary of a polygon (area or boundary) or a polyhedron
    (volume or boundary) computed from scratch.
    """
    return summarize_primitives(decompose(body, mode, apex=apex), mode)


def cpca_apply_delta(base, added=(), removed=()):
    """
    Updates a continuous summary with simplices added to and removed from
    the body, in time proportional to their number only. Removed simplices
    must belong to the current decomposition.
    """
    kind = base.kind
    added = _stack(kind, added)
    removed = _stack(kind, removed)
    if not len(added) and not len(removed):
        return base

    added_centroids, added_measures = _centroids_measures(kind, added)
    removed_centroids, removed_measures = _centroids_measures(kind, removed)

    measure = (
        base.measure
        + float(added_measures.sum())
        - float(removed_measures.sum())
    )
    if measure <= config.DEGENERACY_TOLERANCE:
        raise EmptyResult('Delta leaves a body of measure %g' % measure)

    mu = (
        base.measure * base.centroid
        + added_measures @ added_centroids
        - removed_measures @ removed_centroids
    ) / measure

    shift = base.centroid - mu
    cov = base.measure * (base.cov + np.outer(shift, shift))
    cov += np.einsum(
        'k,kij->ij', added_measures, _second_moments(kind, added, mu)
    )
    cov -= np.einsum(
        'k,kij->ij', removed_measures, _second_moments(kind, removed, mu)
    )
    return ContinuousSummary(measure, mu, cov / measure, base.mode)


def facet_delta(removed, added, mode, apex=None):
    """
    Turns a boundary edit (triangles in 3D, segments in 2D, as vertex
    arrays) into the (added, removed) simplices of a mode. Volume and area
    modes cone the facets to the apex.
    """
    mode = Mode.from_string(mode)
    count, dim = PRIMITIVE_SHAPES[MODE_KINDS[mode]]
    if mode in APEX_MODES:
        count -= 1

    def facets(values):
        values = np.asarray(values, dtype=float)
        if values.size == 0:
            return np.zeros((0, count, dim))
        return values.reshape(-1, count, dim)

    removed, added = facets(removed), facets(added)
    if mode not in APEX_MODES:
        return added, removed
    if apex is None:
        raise ValueError('%s needs the apex of the decomposition' % mode)

    apex = check_finite(apex, 'apex').reshape(dim)

    def cone(values):
        apexes = np.broadcast_to(apex, (len(values), 1, dim))
        if mode == Mode.POLYHEDRON_VOLUME:
            return np.concatenate([values, apexes], axis=1)
        return np.concatenate([apexes, values], axis=1)

    return cone(added), cone(removed)


def _oriented_measures(kind, stacked):
    """
    Signed measures of coned simplices: tetrahedra (x1, x2, x3, apex) or fan
    triangles (apex, v1, v2). Positive for a facet of an outward (counter-
    clockwise) boundary seen from an apex on its inner side.
    """
    if kind == PrimitiveKind.TETRA3D:
        return np.linalg.det(stacked[:, :3] - stacked[:, 3:4]) / 6.0
    edges = stacked[:, 1:] - stacked[:, :1]
    return 0.5 * (
        edges[:, 0, 0] * edges[:, 1, 1] - edges[:, 0, 1] * edges[:, 1, 0]
    )


def _body_orientation(body):
    if isinstance(body, Polygon):
        return 1.0 if body.signed_area() >= 0.0 else -1.0
    return 1.0 if body.signed_volume() >= 0.0 else -1.0


def apex_sees(
    kind,
    added,
    removed=(),
    orientation=None,
    body=None,
    tolerance=config.DEGENERACY_TOLERANCE,
):
    """
    True iff every added coned simplex has a positive oriented measure, the
    condition star_tetrahedralize puts on the whole decomposition. Simplices
    that stay were positive before the edit, so after an edit the apex still
    sees the whole edited body.

    The boundary orientation (+1 outward, -1 inward) is taken from
    `orientation`, else from the first removed simplex (which passed the
    check when it was added), else from `body` in O(n).
    """
    added = _stack(kind, added)
    if not len(added):
        return True
    if orientation is None:
        removed = _stack(kind, removed)
        if len(removed):
            first = _oriented_measures(kind, removed[:1])[0]
            orientation = 1.0 if first > 0.0 else -1.0
        elif body is not None:
            orientation = _body_orientation(body)
        else:
            raise ValueError('Pass an orientation or the edited body')
    signed = orientation * _oriented_measures(kind, added)
    return bool(signed.min() > tolerance)


def cpca_delete_with_rebuild(
    base, body, apex, added=(), removed=(), pinned=False, orientation=None
):
    """
    Applies a delta to the summary of an apex-mode body (polyhedron volume
    or polygon area). `body` is the edited body and `added`/`removed` the
    simplices of the edit coned to `apex`.

    While the apex still sees every added simplex from inside (see
    apex_sees; O(n_a + n_d)) or is pinned, e.g. to a point that is never
    deleted, this is cpca_apply_delta. Otherwise a new apex is chosen on the
    edited body and the summary is recomputed from scratch, O(n).
    """
    apex = check_finite(apex, 'apex').reshape(-1)
    if pinned or apex_sees(
        base.kind, added, removed, orientation=orientation, body=body
    ):
        summary = cpca_apply_delta(base, added=added, removed=removed)
        return DeltaResult(summary, apex, False)

    new_apex = select_interior_point(body)
    logger.info(
        'Apex %s left the body, rebuilding around %s',
        apex.tolist(),
        new_apex.tolist(),
    )
    summary = cpca_static(body, base.mode, apex=new_apex)
    return DeltaResult(summary, new_apex, True)
