"""
Point clouds, triangle meshes and polygons, plus the geometric plumbing the
continuous PCA needs: diameter normalization, interior-point selection, star
tetrahedralization and strict inside tests.

All containers are immutable once built. Meshes are assumed closed and
consistently oriented (outward or inward; the orientation is detected from
the sign of the enclosed volume).
"""

import collections
import itertools
import logging
import math

import numpy as np

from dynamic_pca import config
from dynamic_pca.exceptions import (
    ApexOutside,
    Degenerate,
    IndexOutOfRange,
)
from dynamic_pca.linalg import check_finite
from dynamic_pca.utils import grouper

logger = logging.getLogger(__name__)

DIAMETER_CHUNK = 64


def _frozen(array):
    array.setflags(write=False)
    return array


class PointCloud(object):
    """An (n, d) array of finite points, d in {2, 3}."""

    def __init__(self, points):
        points = check_finite(points, 'points')
        if points.ndim != 2 or points.shape[1] not in (2, 3):
            raise ValueError(
                'Expected an (n, 2) or (n, 3) array, got %r' % (points.shape,)
            )
        self.points = _frozen(points.copy())

    @property
    def dim(self):
        return self.points.shape[1]

    def __len__(self):
        return self.points.shape[0]

    def scaled(self, factor):
        return PointCloud(self.points * factor)


class TriMesh(object):
    """
    Vertices (n, 3) and triangles (m, 3) of vertex indices. Every triangle
    must have an area above 1e-12 squared model units.
    """

    MIN_TRIANGLE_AREA = 1e-12

    def __init__(self, vertices, triangles):
        vertices = check_finite(vertices, 'vertices')
        if vertices.ndim != 2 or vertices.shape[1] != 3:
            raise ValueError(
                'Expected (n, 3) vertices, got %r' % (vertices.shape,)
            )
        triangles = np.asarray(triangles, dtype=np.int64).reshape(-1, 3)
        if triangles.size and (
            triangles.min() < 0 or triangles.max() >= len(vertices)
        ):
            raise IndexOutOfRange(
                'Triangle index out of range for %d vertices' % len(vertices)
            )
        self.vertices = _frozen(vertices.copy())
        self.triangles = _frozen(triangles.copy())

        areas = triangle_areas(self.corners())
        if areas.size and areas.min() <= self.MIN_TRIANGLE_AREA:
            raise Degenerate(
                'Triangle %d is degenerate (area %g)'
                % (int(areas.argmin()), areas.min())
            )

    @property
    def dim(self):
        return 3

    def corners(self):
        """(m, 3, 3) array: the three corner coordinates of every triangle."""
        return self.vertices[self.triangles]

    def signed_volume(self):
        corners = self.corners()
        return float(np.linalg.det(corners).sum() / 6.0)

    def volume(self):
        return abs(self.signed_volume())

    def area(self):
        return float(triangle_areas(self.corners()).sum())

    def outward_normals(self):
        """Unit normals of every triangle, flipped if the mesh is inward."""
        corners = self.corners()
        normals = np.cross(
            corners[:, 1] - corners[:, 0], corners[:, 2] - corners[:, 0]
        )
        normals /= np.linalg.norm(normals, axis=1)[:, None]
        if self.signed_volume() < 0.0:
            normals = -normals
        return normals

    def scaled(self, factor):
        return TriMesh(self.vertices * factor, self.triangles)


class Polygon(object):
    """Vertices (n, 2) in boundary order, either orientation."""

    def __init__(self, vertices):
        vertices = check_finite(vertices, 'vertices')
        if vertices.ndim != 2 or vertices.shape[1] != 2:
            raise ValueError(
                'Expected (n, 2) vertices, got %r' % (vertices.shape,)
            )
        if len(vertices) < 3:
            raise Degenerate('A polygon needs at least 3 vertices')
        self.vertices = _frozen(vertices.copy())

    @property
    def dim(self):
        return 2

    def segments(self):
        """(n, 2, 2) array of boundary segments (v_k, v_k+1)."""
        return np.stack(
            [self.vertices, np.roll(self.vertices, -1, axis=0)], axis=1
        )

    def signed_area(self):
        x, y = self.vertices[:, 0], self.vertices[:, 1]
        return float(0.5 * (x * np.roll(y, -1) - np.roll(x, -1) * y).sum())

    def area(self):
        return abs(self.signed_area())

    def perimeter(self):
        segments = self.segments()
        return float(
            np.linalg.norm(segments[:, 1] - segments[:, 0], axis=1).sum()
        )

    def is_simple(self):
        """O(n^2) check that no two non-adjacent edges intersect."""
        segments = self.segments()
        count = len(segments)
        for i, j in itertools.combinations(range(count), 2):
            if j == i + 1 or (i == 0 and j == count - 1):
                continue
            if _segments_intersect(segments[i], segments[j]):
                return False
        return True

    def scaled(self, factor):
        return Polygon(self.vertices * factor)


class StarTetra(object):
    """Tetrahedra (x1, x2, x3, apex), one per boundary triangle."""

    def __init__(self, apex, tets, volumes):
        self.apex = _frozen(np.array(apex, dtype=float))
        self.tets = _frozen(tets)
        self.volumes = _frozen(volumes)

    def __len__(self):
        return len(self.tets)

    @property
    def volume(self):
        return float(self.volumes.sum())


def _cross2(a, b):
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


def _segments_intersect(first, second):
    p, r = first[0], first[1] - first[0]
    q, s = second[0], second[1] - second[0]
    denominator = _cross2(r, s)
    if denominator == 0.0:
        if _cross2(q - p, r) != 0.0:
            return False
        # Collinear: overlap of the projections onto r.
        rr = float(r @ r)
        t0 = float((q - p) @ r) / rr
        t1 = t0 + float(s @ r) / rr
        return max(t0, t1) >= 0.0 and min(t0, t1) <= 1.0
    t = _cross2(q - p, s) / denominator
    u = _cross2(q - p, r) / denominator
    return 0.0 <= t <= 1.0 and 0.0 <= u <= 1.0


def triangle_areas(corners):
    """Areas of an (m, 3, d) stack of triangles, d in {2, 3}."""
    corners = np.asarray(corners, dtype=float)
    if len(corners) == 0:
        return np.zeros(0)
    edge1 = corners[:, 1] - corners[:, 0]
    edge2 = corners[:, 2] - corners[:, 0]
    if corners.shape[2] == 2:
        return 0.5 * np.abs(_cross2(edge1, edge2))
    return 0.5 * np.linalg.norm(np.cross(edge1, edge2), axis=1)


def _body_points(body):
    if isinstance(body, PointCloud):
        return body.points
    if isinstance(body, (TriMesh, Polygon)):
        return body.vertices
    return check_finite(body, 'points')


def diameter(points, exact_limit=config.EXACT_DIAMETER_LIMIT):
    """
    Largest pairwise distance, computed exactly (in chunks) for up to
    `exact_limit` points. Above that, the diagonal of the axis-aligned
    bounding box is returned instead; it overestimates by at most sqrt(d).
    """
    points = np.asarray(_body_points(points), dtype=float)
    if len(points) < 2:
        return 0.0
    if len(points) > exact_limit:
        return float(np.linalg.norm(points.max(axis=0) - points.min(axis=0)))

    best = 0.0
    for chunk in grouper(DIAMETER_CHUNK, points):
        diff = chunk[:, None, :] - points[None, :, :]
        best = max(best, float((diff * diff).sum(axis=2).max()))
    return math.sqrt(best)


def normalize_to_unit_diameter(body, exact_limit=config.EXACT_DIAMETER_LIMIT):
    """
    Scales a cloud, mesh or polygon (or a bare point array) about the origin
    so that its diameter is 1. Returns (scaled body, scale factor). A body
    whose diameter is already 1 within 1e-12 comes back unchanged with
    scale 1.
    """
    size = diameter(body, exact_limit=exact_limit)
    if size == 0.0:
        raise Degenerate('All points coincide; the diameter is zero')
    if abs(size - 1.0) <= 1e-12:
        return body, 1.0
    scale = 1.0 / size
    if isinstance(body, (PointCloud, TriMesh, Polygon)):
        return body.scaled(scale), scale
    return np.asarray(body, dtype=float) * scale, scale


def select_interior_point(body):
    """
    Center of gravity of the boundary: the area-weighted centroid of a
    mesh's triangles, or the length-weighted centroid of a polygon's edges.
    Strictly inside for convex bodies.
    """
    if isinstance(body, Polygon):
        segments = body.segments()
        weights = np.linalg.norm(segments[:, 1] - segments[:, 0], axis=1)
        centroids = segments.mean(axis=1)
    else:
        corners = body.corners()
        weights = triangle_areas(corners)
        centroids = corners.mean(axis=1)

    total = float(weights.sum())
    if total <= config.DEGENERACY_TOLERANCE:
        raise Degenerate('Boundary has zero total measure')
    return (weights[:, None] * centroids).sum(axis=0) / total


def _oriented_tet_volumes(corners, apex):
    # det of rows x_l - o, divided by 3!
    return np.linalg.det(corners - apex[None, None, :]) / 6.0


def star_tetrahedralize(mesh, apex, tolerance=config.DEGENERACY_TOLERANCE):
    """
    Cones every boundary triangle to the apex. The apex must see every
    triangle from inside: a tetrahedron whose oriented volume is not
    positive (after accounting for the mesh orientation) raises ApexOutside.
    """
    apex = check_finite(apex, 'apex').reshape(3)
    corners = mesh.corners()
    signed = _oriented_tet_volumes(corners, apex)
    if mesh.signed_volume() < 0.0:
        signed = -signed

    if signed.size and signed.min() <= tolerance:
        k = int(signed.argmin())
        raise ApexOutside(
            'Apex %s is not strictly inside: tetrahedron %d has oriented '
            'volume %g' % (apex.tolist(), k, signed[k]),
            apex=apex,
        )

    apexes = np.broadcast_to(apex, (len(corners), 1, 3))
    tets = np.concatenate([corners, apexes], axis=1)
    return StarTetra(apex, tets, signed)


def fan_triangulate(polygon, apex):
    """(n, 3, 2) triangles (o, v_k, v_k+1) fanning the polygon from apex."""
    apex = check_finite(apex, 'apex').reshape(2)
    segments = polygon.segments()
    apexes = np.broadcast_to(apex, (len(segments), 1, 2))
    return np.concatenate([apexes, segments], axis=1)


def is_inside(body, point, tolerance=config.INSIDE_TOLERANCE):
    """
    True iff the point is strictly on the inner side of every face plane (or
    edge line, for polygons) by more than `tolerance` model units. Points on
    the boundary count as outside. Assumes a convex body.
    """
    point = check_finite(point, 'point').reshape(-1)
    if isinstance(body, Polygon):
        segments = body.segments()
        edges = segments[:, 1] - segments[:, 0]
        offsets = point[None, :] - segments[:, 0]
        # Signed distance to the left of every edge.
        distances = _cross2(edges, offsets) / np.linalg.norm(edges, axis=1)
        if body.signed_area() < 0.0:
            distances = -distances
        return bool((distances > tolerance).all())

    normals = body.outward_normals()
    anchors = body.corners()[:, 0]
    distances = ((point[None, :] - anchors) * normals).sum(axis=1)
    return bool((distances < -tolerance).all())


def euler_characteristic(mesh):
    edges = _edge_counts(mesh)
    used = np.unique(mesh.triangles)
    return len(used) - len(edges) + len(mesh.triangles)


def _edge_counts(mesh):
    counts = collections.Counter()
    for a, b, c in mesh.triangles.tolist():
        for u, v in ((a, b), (b, c), (c, a)):
            counts[(min(u, v), max(u, v))] += 1
    return counts


def is_closed(mesh):
    """Best-effort closedness: every edge is shared by exactly two triangles."""
    return all(count == 2 for count in _edge_counts(mesh).values())


def push_facet(mesh, face, height):
    """
    Replaces boundary triangle `face` by three triangles meeting at a new
    vertex raised `height` along the outward normal above its centroid.
    Returns (new mesh, removed triangle corners, added triangle corners)
    with corners as (k, 3, 3) arrays.
    """
    corners = mesh.corners()
    a, b, c = mesh.triangles[face]
    peak = corners[face].mean(axis=0) + height * mesh.outward_normals()[face]

    p = len(mesh.vertices)
    vertices = np.vstack([mesh.vertices, peak])
    added = np.array([(a, b, p), (b, c, p), (c, a, p)])
    triangles = np.vstack(
        [np.delete(mesh.triangles, face, axis=0), added]
    )
    edited = TriMesh(vertices, triangles)
    return edited, corners[face : face + 1], vertices[added]


def pull_facet(mesh, peak):
    """
    Inverse of push_facet: removes vertex `peak` (shared by exactly three
    triangles) and closes the hole with one triangle. Returns (new mesh,
    removed triangle corners, added triangle corners).
    """
    mask = (mesh.triangles == peak).any(axis=1)
    fan = mesh.triangles[mask]
    if len(fan) != 3:
        raise Degenerate(
            'Vertex %d is shared by %d triangles, expected 3' % (peak, len(fan))
        )

    # Each fan triangle, rotated so the peak comes last, contributes the
    # directed rim edge (u, v); chaining them recovers the closing triangle.
    rim = {}
    for tri in fan.tolist():
        k = tri.index(peak)
        u, v = tri[(k + 1) % 3], tri[(k + 2) % 3]
        rim[u] = v
    first = next(iter(rim))
    second = rim[first]
    closing = [first, second, rim[second]]

    triangles = np.vstack([mesh.triangles[~mask], [closing]])
    keep = np.ones(len(mesh.vertices), dtype=bool)
    keep[peak] = False
    remap = np.cumsum(keep) - 1
    edited = TriMesh(mesh.vertices[keep], remap[triangles])
    return edited, mesh.vertices[fan], mesh.vertices[np.array([closing])]


def push_edge(polygon, edge, height):
    """
    Replaces boundary segment `edge` by a two-segment roof whose peak sits
    `height` outside the edge midpoint. Returns (new polygon, removed
    segments, added segments) with segments as (k, 2, 2) arrays.
    """
    segments = polygon.segments()
    start, end = segments[edge]
    direction = end - start
    normal = np.array([direction[1], -direction[0]]) / np.linalg.norm(
        direction
    )
    if polygon.signed_area() < 0.0:
        normal = -normal
    peak = 0.5 * (start + end) + height * normal

    vertices = np.insert(polygon.vertices, edge + 1, peak, axis=0)
    added = np.array([[start, peak], [peak, end]])
    return Polygon(vertices), segments[edge : edge + 1], added
