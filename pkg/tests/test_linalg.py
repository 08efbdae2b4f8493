import math
import unittest

import numpy as np
import pytest

from dynamic_pca.exceptions import NoConvergence, NonFinite
from dynamic_pca.linalg import (
    Frame,
    canonical_sign,
    inf_norm,
    jacobi_eigendecompose,
    principal_frame,
    random_rotation,
    relative_error,
    sym_matrix,
)

SQRT_HALF = 1 / math.sqrt(2)


class JacobiTestCase(unittest.TestCase):
    def test_diagonal(self):
        spectrum = jacobi_eigendecompose(np.diag([2.0, 1.0]))
        np.testing.assert_array_equal(spectrum.eigenvalues, [2.0, 1.0])
        frame = principal_frame(spectrum)
        np.testing.assert_array_equal(frame.axes, np.eye(2))

    def test_unsorted_diagonal(self):
        spectrum = jacobi_eigendecompose(np.diag([1.0, 3.0, 2.0]))
        np.testing.assert_array_equal(spectrum.eigenvalues, [3.0, 2.0, 1.0])
        frame = principal_frame(spectrum)
        np.testing.assert_array_equal(
            frame.axes, [(0, 1, 0), (0, 0, 1), (1, 0, 0)]
        )

    def test_rank_one(self):
        spectrum = jacobi_eigendecompose([[1.0, 1.0], [1.0, 1.0]])
        np.testing.assert_allclose(spectrum.eigenvalues, [2.0, 0.0], atol=1e-12)
        frame = principal_frame(spectrum)
        np.testing.assert_allclose(frame.axes[0], [SQRT_HALF, SQRT_HALF])

    def test_two_by_two(self):
        spectrum = jacobi_eigendecompose([[2.0, 1.0], [1.0, 2.0]])
        np.testing.assert_allclose(spectrum.eigenvalues, [3.0, 1.0])
        frame = principal_frame(spectrum)
        np.testing.assert_allclose(frame.axes[0], [SQRT_HALF, SQRT_HALF])
        np.testing.assert_allclose(frame.axes[1], [SQRT_HALF, -SQRT_HALF])

    def test_one_by_one(self):
        spectrum = jacobi_eigendecompose([[4.0]])
        np.testing.assert_array_equal(spectrum.eigenvalues, [4.0])
        np.testing.assert_array_equal(spectrum.eigenvectors, [[1.0]])

    def test_zero_matrix(self):
        spectrum = jacobi_eigendecompose(np.zeros((3, 3)))
        np.testing.assert_array_equal(spectrum.eigenvalues, [0, 0, 0])
        np.testing.assert_array_equal(spectrum.eigenvectors, np.eye(3))

    def test_non_finite(self):
        with self.assertRaises(NonFinite):
            jacobi_eigendecompose([[1.0, np.nan], [np.nan, 1.0]])
        with self.assertRaises(NonFinite):
            jacobi_eigendecompose([[np.inf, 0.0], [0.0, 1.0]])

    def test_no_convergence(self):
        with self.assertRaises(NoConvergence):
            jacobi_eigendecompose([[2.0, 1.0], [1.0, 2.0]], max_sweeps=0)

    def test_random_psd_quality(self):
        rng = np.random.default_rng(3)
        for _ in range(1000):
            b = rng.standard_normal((3, 3))
            matrix = b @ b.T
            spectrum = jacobi_eigendecompose(matrix)
            values, vectors = spectrum

            scale = max(1.0, inf_norm(matrix))
            residual = matrix @ vectors - vectors * values[None, :]
            assert np.abs(residual).max() <= 1e-10 * scale
            assert np.abs(vectors.T @ vectors - np.eye(3)).max() <= 1e-10
            assert (np.diff(values) <= 0).all()
            assert values.min() >= -1e-10 * scale

            reference = np.sort(np.linalg.eigh(matrix)[0])[::-1]
            np.testing.assert_allclose(values, reference, atol=1e-9 * scale)

            rotation = random_rotation(rng)
            rotated = jacobi_eigendecompose(rotation @ matrix @ rotation.T)
            np.testing.assert_allclose(
                rotated.eigenvalues, values, atol=1e-9 * scale
            )

    def test_reconstruction_and_trace(self):
        rng = np.random.default_rng(11)
        for dim in (2, 3, 5, 8):
            b = rng.standard_normal((dim, dim))
            matrix = b @ b.T
            values, vectors = jacobi_eigendecompose(matrix)
            rebuilt = (vectors * values[None, :]) @ vectors.T
            scale = inf_norm(matrix)
            assert np.abs(rebuilt - matrix).max() <= 1e-9 * scale
            assert abs(values.sum() - np.trace(matrix)) <= 1e-10 * max(
                1.0, abs(np.trace(matrix))
            )


def test_canonical_sign():
    np.testing.assert_array_equal(canonical_sign([-1.0, 0.0]), [1.0, 0.0])
    np.testing.assert_array_equal(
        canonical_sign([SQRT_HALF, SQRT_HALF]), [SQRT_HALF, SQRT_HALF]
    )
    # Magnitude tie: the lowest index decides.
    np.testing.assert_array_equal(
        canonical_sign([-SQRT_HALF, SQRT_HALF]), [SQRT_HALF, -SQRT_HALF]
    )
    np.testing.assert_array_equal(
        canonical_sign([0.6, -0.8]), [-0.6, 0.8]
    )


def test_principal_frame_is_deterministic():
    matrix = [[3.0, 1.0, 0.5], [1.0, 2.0, 0.2], [0.5, 0.2, 1.0]]
    first = principal_frame(jacobi_eigendecompose(matrix))
    second = principal_frame(jacobi_eigendecompose(matrix))
    np.testing.assert_array_equal(first.axes, second.axes)

    for axis in first.axes:
        k = int(np.argmax(np.abs(axis)))
        assert axis[k] > 0


def test_frame_project():
    frame = Frame(np.array([(0.0, 1.0), (1.0, 0.0)]))
    np.testing.assert_array_equal(
        frame.project([(1.0, 2.0), (3.0, 4.0)]), [(2.0, 1.0), (4.0, 3.0)]
    )
    assert frame.dim == 2


def test_sym_matrix():
    matrix = sym_matrix([[1.0, 2.0], [0.0, 1.0]])
    np.testing.assert_array_equal(matrix, [[1.0, 1.0], [1.0, 1.0]])
    with pytest.raises(ValueError):
        sym_matrix([[1.0, 2.0, 3.0]])
    with pytest.raises(NonFinite):
        sym_matrix([[np.nan]])


def test_relative_error():
    assert relative_error([1.0, 1.0], [1.0, 1.0]) == 0.0
    assert relative_error(0.0, 0.0) == 0.0
    assert relative_error([0.5], [0.0]) == 0.5
    assert relative_error(np.diag([2.0, 0.0]), np.diag([1.0, 0.0])) == 1.0


def test_random_rotation():
    rng = np.random.default_rng(0)
    for dim in (2, 3, 5):
        rotation = random_rotation(rng, dim)
        np.testing.assert_allclose(
            rotation @ rotation.T, np.eye(dim), atol=1e-12
        )
        assert np.linalg.det(rotation) > 0
