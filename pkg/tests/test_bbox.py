import math
import unittest

import numpy as np
import pytest

from dynamic_pca.asserts import box_contains
from dynamic_pca.bbox import (
    CandidateSource,
    Extents,
    Method,
    OrientedBox,
    build_box,
    common_box,
    expand_extents,
    extreme_grid,
    extreme_scan,
    pca_box,
    refine_tight,
    volume_ratio,
)
from dynamic_pca.exceptions import EmptyInput
from dynamic_pca.grid import build_grid, snapped_origin
from dynamic_pca.linalg import Frame, jacobi_eigendecompose, principal_frame
from dynamic_pca.moments import summarize
from dynamic_pca.test_helpers import random_rotation, unit_cube_vertices

UNIT_SQUARE = [(0, 0), (1, 0), (1, 1), (0, 1)]


def _cloud(rng, count=500):
    """Anisotropic gaussian cloud in a random orientation."""
    points = rng.standard_normal((count, 3)) * (3.0, 1.5, 0.5)
    return points @ random_rotation(rng).T + rng.uniform(-10, 10, size=3)


def _lattice_rectangle(width, height, angle=0.0, shift=(0.0, 0.0)):
    xs, ys = np.meshgrid(
        np.linspace(0, width, 41), np.linspace(0, height, 11)
    )
    points = np.column_stack([xs.ravel(), ys.ravel()])
    c, s = math.cos(angle), math.sin(angle)
    return points @ np.array([(c, s), (-s, c)]) + shift


class ExtentsTestCase(unittest.TestCase):
    def test_unit_square(self):
        extents = extreme_scan(UNIT_SQUARE, Frame(np.eye(2)))
        np.testing.assert_array_equal(extents.lo, [0, 0])
        np.testing.assert_array_equal(extents.hi, [1, 1])
        self.assertEqual(extents.candidates, 4)
        self.assertEqual(extents.volume, 1.0)

    def test_principal_axes(self):
        points = np.array([(2, 0), (-2, 0), (0, 1), (0, -1)], dtype=float)
        summary = summarize(points)
        np.testing.assert_array_equal(summary.cov, np.diag([2.0, 0.5]))
        box = build_box(summary, points)
        np.testing.assert_array_equal(box.frame.axes, np.eye(2))
        np.testing.assert_array_equal(box.extents.lo, [-2, -1])
        np.testing.assert_array_equal(box.extents.hi, [2, 1])
        self.assertEqual(box.volume, 8.0)

    def test_single_point(self):
        extents = extreme_scan([(3.0, 4.0)], Frame(np.eye(2)))
        np.testing.assert_array_equal(extents.lo, extents.hi)
        self.assertEqual(extents.volume, 0.0)

    def test_no_points(self):
        with self.assertRaises(EmptyInput):
            extreme_scan(np.zeros((0, 2)), Frame(np.eye(2)))

    def test_expand(self):
        extents = Extents(np.zeros(3), np.ones(3))
        same = expand_extents(extents, 0.0)
        np.testing.assert_array_equal(same.lo, extents.lo)
        np.testing.assert_array_equal(same.hi, extents.hi)
        grown = expand_extents(extents, math.sqrt(3) * 0.1 / 2)
        np.testing.assert_allclose(grown.sizes, 1 + math.sqrt(3) * 0.1)
        with self.assertRaises(ValueError):
            expand_extents(extents, -1.0)


class GridExtentsTestCase(unittest.TestCase):
    def test_cell_boundaries(self):
        grid = build_grid([(0.5, 0.5), (1.5, 0.5)], 1.0, (0.0, 0.0))
        extents = extreme_grid(grid, Frame(np.eye(2)))
        np.testing.assert_array_equal(extents.lo, [0, 0])
        np.testing.assert_array_equal(extents.hi, [2, 1])

    def test_cell_larger_than_cloud(self):
        points = [(0, 0), (2, 0), (0, 2), (2, 2)]
        grid = build_grid(points, 4.0, (0.0, 0.0))
        extents = extreme_grid(grid, Frame(np.eye(2)))
        np.testing.assert_array_equal(extents.lo, [0, 0])
        np.testing.assert_array_equal(extents.hi, [4, 4])
        self.assertEqual(extents.candidates, 4)

    def test_columns_match_corners(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            points = _cloud(rng)
            frame = principal_frame(
                jacobi_eigendecompose(summarize(points).cov)
            )
            grid = build_grid(points, float(rng.choice([0.05, 0.2, 1.0])))
            corners = extreme_grid(grid, frame, CandidateSource.CORNERS)
            columns = extreme_grid(grid, frame, CandidateSource.COLUMNS)
            np.testing.assert_array_equal(columns.lo, corners.lo)
            np.testing.assert_array_equal(columns.hi, corners.hi)
            assert columns.candidates <= corners.candidates

    def test_grid_boxes_contain_points(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            points = _cloud(rng, count=200)
            eps = float(rng.uniform(0.05, 1.0))
            exact, _ = pca_box(points, Method.AP)
            box_contains(exact, points)
            for mode in (Method.AGP, Method.EGP, Method.CENTERS):
                box, _ = pca_box(points, mode, epsilon=eps)
                box_contains(box, points)
                assert box.volume >= exact.volume
                np.testing.assert_array_equal(box.frame.axes, exact.frame.axes)

    def test_cell_centers_grow_by_half_diagonal(self):
        grid = build_grid([(0.5, 0.5, 0.5)], 1.0, (0.0, 0.0, 0.0))
        extents = extreme_grid(
            grid, Frame(np.eye(3)), CandidateSource.CENTERS
        )
        np.testing.assert_allclose(extents.lo, 0.5 - math.sqrt(3) / 2)
        np.testing.assert_allclose(extents.hi, 0.5 + math.sqrt(3) / 2)

    def test_dyadic_grids_are_monotone(self):
        rng = np.random.default_rng(2)
        for _ in range(50):
            points = _cloud(rng, count=300)
            frame = principal_frame(
                jacobi_eigendecompose(summarize(points).cov)
            )
            origin = snapped_origin(points, 0.5)
            previous = None
            for eps in (0.125, 0.25, 0.5):
                extents = extreme_grid(build_grid(points, eps, origin), frame)
                if previous is not None:
                    assert (extents.lo <= previous.lo + 1e-12).all()
                    assert (extents.hi >= previous.hi - 1e-12).all()
                previous = extents


class RefineTestCase(unittest.TestCase):
    def test_matches_exact_scan(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            points = _cloud(rng, count=400)
            eps = float(rng.uniform(0.05, 1.0))
            exact, _ = pca_box(points, Method.AP)

            box, _ = pca_box(points, Method.AGP, epsilon=eps, tight=True)
            np.testing.assert_array_equal(box.extents.lo, exact.extents.lo)
            np.testing.assert_array_equal(box.extents.hi, exact.extents.hi)

            # Same result bucketing the points on a grid that keeps counts only.
            grid = build_grid(points, eps)
            coarse = extreme_grid(grid, exact.frame, CandidateSource.COLUMNS)
            extents = refine_tight(grid, points, exact.frame, coarse)
            np.testing.assert_array_equal(extents.lo, exact.extents.lo)
            np.testing.assert_array_equal(extents.hi, exact.extents.hi)

    def test_cell_centers_refine_to_exact_scan(self):
        rng = np.random.default_rng(9)
        for _ in range(200):
            points = _cloud(rng, count=150)
            eps = float(rng.choice([0.05, 0.1, 0.3, 0.7]))
            exact, _ = pca_box(points, Method.AP)

            box, _ = pca_box(points, Method.CENTERS, epsilon=eps, tight=True)
            np.testing.assert_array_equal(box.extents.lo, exact.extents.lo)
            np.testing.assert_array_equal(box.extents.hi, exact.extents.hi)
            box_contains(box, points)

            grid = build_grid(points, eps)
            coarse = extreme_grid(grid, exact.frame, CandidateSource.CENTERS)
            extents = refine_tight(
                grid, points, exact.frame, coarse, CandidateSource.CENTERS
            )
            np.testing.assert_array_equal(extents.lo, exact.extents.lo)
            np.testing.assert_array_equal(extents.hi, exact.extents.hi)

    def test_cell_centers_far_from_their_points(self):
        # The highest center belongs to a cell whose point sits low along
        # the axis; the extreme point is at the top of the next cell down.
        b = math.sqrt(1 - 0.2 ** 2)
        frame = Frame(np.array([(0.2, b, 0.0), (-b, 0.2, 0.0), (0, 0, 1.0)]))
        points = np.array([(0.99, 0.99, 0.5), (0.01, 1.01, 0.5)])
        grid = build_grid(points, 1.0, (0.0, 0.0, 0.0))
        coarse = extreme_grid(grid, frame, CandidateSource.CENTERS)
        extents = refine_tight(
            grid, points, frame, coarse, CandidateSource.CENTERS
        )
        exact = extreme_scan(points, frame)
        self.assertEqual(extents.hi[0], frame.project(points[:1])[0, 0])
        np.testing.assert_array_equal(extents.lo, exact.lo)
        np.testing.assert_array_equal(extents.hi, exact.hi)

    def test_outlier_examines_few_points(self):
        rng = np.random.default_rng(4)
        points = np.vstack([rng.uniform(0, 1, size=(2000, 3)), [(50, 50, 50)]])
        box, examined = pca_box(points, Method.EGP, epsilon=0.05, tight=True)
        exact, _ = pca_box(points, Method.AP)
        np.testing.assert_array_equal(box.extents.hi, exact.extents.hi)
        assert examined < len(points) / 4

    def test_one_big_cell_scans_everything(self):
        points = np.random.default_rng(5).uniform(0, 1, size=(100, 3))
        box, examined = pca_box(points, Method.AGP, epsilon=2.0, tight=True)
        exact, _ = pca_box(points, Method.AP)
        np.testing.assert_array_equal(box.extents.lo, exact.extents.lo)
        assert examined >= len(points)

    def test_empty_grid(self):
        grid = build_grid(np.zeros((0, 3)), 1.0, (0.0, 0.0, 0.0))
        with self.assertRaises(EmptyInput):
            refine_tight(
                grid,
                np.zeros((0, 3)),
                Frame(np.eye(3)),
                Extents(np.zeros(3), np.ones(3)),
            )


class BuildBoxTestCase(unittest.TestCase):
    def test_axis_aligned_rectangle(self):
        points = _lattice_rectangle(4.0, 1.0)
        box, _ = pca_box(points)
        aabb = extreme_scan(points, Frame(np.eye(2)))
        self.assertAlmostEqual(box.volume, aabb.volume, 12)
        self.assertAlmostEqual(
            volume_ratio(box, OrientedBox(Frame(np.eye(2)), aabb)), 1.0, 12
        )

    def test_rotated_rectangle(self):
        points = _lattice_rectangle(4.0, 1.0, angle=0.5, shift=(3.0, -2.0))
        box, _ = pca_box(points)
        assert box.volume == pytest.approx(4.0, rel=1e-9)
        box_contains(box, points)
        np.testing.assert_allclose(
            box.center, points.mean(axis=0), atol=1e-12
        )
        assert box.corners().shape == (4, 2)
        assert box.contains(box.corners())

    def test_unit_cube_corners(self):
        points = unit_cube_vertices()
        box = build_box(summarize(points), points)
        assert box.volume == pytest.approx(1.0)

    def test_common_box(self):
        rng = np.random.default_rng(6)
        first = rng.standard_normal((100, 3)) * (4, 1, 1)
        second = rng.standard_normal((50, 3)) + (0, 10, 0)
        box = common_box([summarize(first), summarize(second)], [first, second])
        box_contains(box, first)
        box_contains(box, second)
        self.assertEqual(box.extents.candidates, 150)

    def test_extents_callable(self):
        extents = Extents(np.zeros(2), np.ones(2))
        box = build_box(summarize(UNIT_SQUARE), lambda frame: extents)
        self.assertIs(box.extents, extents)

    def test_volume_is_invariant_under_rigid_motion(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            points = _cloud(rng)
            box, _ = pca_box(points)
            moved = points @ random_rotation(rng).T + rng.normal(size=3)
            moved_box, _ = pca_box(moved)
            assert moved_box.volume == pytest.approx(box.volume, rel=1e-9)

    def test_grid_mode_needs_a_cell_size(self):
        with self.assertRaises(ValueError):
            pca_box(unit_cube_vertices(), Method.AGP)
        with self.assertRaises(ValueError):
            pca_box(unit_cube_vertices(), 'bogus')

    def test_prebuilt_grid_and_summary(self):
        points = _cloud(np.random.default_rng(8))
        summary = summarize(points)
        grid = build_grid(points, 0.25, track_points=True)
        box, _ = pca_box(
            points, Method.EGP, tight=True, summary=summary, grid=grid
        )
        exact, _ = pca_box(points, Method.AP, summary=summary)
        np.testing.assert_array_equal(box.extents.hi, exact.extents.hi)

    def test_volume_ratio_of_flat_reference(self):
        flat = OrientedBox(Frame(np.eye(2)), Extents(np.zeros(2), np.zeros(2)))
        with self.assertRaises(EmptyInput):
            volume_ratio(flat, flat)
