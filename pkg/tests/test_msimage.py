import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cspattern.errors import ShapeError, ValidationError
from cspattern.msimage import (
    ORIGIN,
    GridDims,
    Mask,
    MultispectralImage,
    PixelShift,
    apply_qp,
    devec,
    pixel_coords,
    shift_band,
    shift_image,
    shift_index,
    vec,
    vecc_index,
)


def qp_dense(p, dims):
    """Permutation matrix of Q_p built entry by entry from its definition."""
    n = dims.n_pixels
    Q = np.zeros((n, n))
    for q in range(n):
        r, c = pixel_coords(q, dims)
        src = vecc_index((r - p[0]) % dims.n_rows, (c - p[1]) % dims.n_cols, dims)
        Q[q, src] = 1.0
    return Q


def test_vec_is_column_major():
    I = np.array([[1, 2, 3], [4, 5, 6], [7, 8, 9]])
    np.testing.assert_array_equal(vec(I), [1, 4, 7, 2, 5, 8, 3, 6, 9])
    np.testing.assert_array_equal(devec(vec(I), GridDims(3, 3)), I)


def test_index_roundtrip():
    dims = GridDims(4, 7)
    for q in range(dims.n_pixels):
        assert vecc_index(*pixel_coords(q, dims), dims) == q


def test_grid_dims_rejects_nonpositive():
    with pytest.raises(ValueError):
        GridDims(0, 3)


def test_image_validation():
    dims = GridDims(2, 2)
    with pytest.raises(ShapeError):
        MultispectralImage(dims, np.zeros((3, 1)))
    with pytest.raises(ValidationError):
        MultispectralImage(dims, np.array([[0.0], [np.nan], [1.0], [2.0]]))
    X = MultispectralImage(dims, np.arange(8.0).reshape(4, 2))
    assert X.n_bands == 2 and not X.data.flags.writeable


def test_cube_roundtrip():
    cube = np.random.default_rng(0).standard_normal((3, 5, 2))
    X = MultispectralImage.from_cube(cube)
    np.testing.assert_array_equal(X.cube(), cube)
    np.testing.assert_array_equal(X.band(1), cube[:, :, 1])


def test_shift_band_definition():
    band = np.arange(12).reshape(3, 4)
    out = shift_band(band, (1, 2))
    for a in range(3):
        for b in range(4):
            assert out[a, b] == band[(a - 1) % 3, (b - 2) % 4]


def test_qp_matches_dense_permutation():
    dims = GridDims(3, 4)
    v = np.arange(12.0)
    for p in [(0, 0), (1, 0), (0, 1), (2, 3), (-1, 5)]:
        np.testing.assert_array_equal(apply_qp(v, p, dims), qp_dense(p, dims) @ v)


def test_qp_is_vec_of_shifted_band():
    dims = GridDims(3, 4)
    band = np.arange(12.0).reshape(3, 4)
    np.testing.assert_array_equal(apply_qp(vec(band), (1, -1), dims), vec(shift_band(band, (1, -1))))


def test_shift_image_applies_to_every_band():
    dims = GridDims(2, 3)
    X = MultispectralImage(dims, np.arange(12.0).reshape(6, 2))
    Y = shift_image(X, (1, 1))
    for b in range(2):
        np.testing.assert_array_equal(Y.band(b), shift_band(X.band(b), (1, 1)))


def test_pixel_shift_arithmetic():
    p, q = PixelShift(1, -2), PixelShift(3, 4)
    assert p + q == (4, 2) and p - q == (-2, -6) and -p == (-1, 2)
    assert p + ORIGIN == p


def test_mask_equality_and_count():
    dims = GridDims(2, 2)
    a = Mask(dims, [True, False, False, True])
    assert a == Mask(dims, np.array([1, 0, 0, 1]))
    assert a.count == 2
    np.testing.assert_array_equal(a.grid(), [[True, False], [False, True]])


shifts = st.tuples(st.integers(-20, 20), st.integers(-20, 20))


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 6), st.integers(1, 6), shifts, shifts)
def test_shift_group_law(rows, cols, p, q):
    dims = GridDims(rows, cols)
    v = np.random.default_rng(rows * 7 + cols).standard_normal(dims.n_pixels)
    pq = PixelShift.of(p) + PixelShift.of(q)
    np.testing.assert_array_equal(apply_qp(apply_qp(v, q, dims), p, dims), apply_qp(v, pq, dims))
    np.testing.assert_array_equal(apply_qp(apply_qp(v, p, dims), -PixelShift.of(p), dims), v)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 5), st.integers(1, 5), shifts)
def test_shift_orthogonality_and_adjoint(rows, cols, p):
    dims = GridDims(rows, cols)
    Q = qp_dense(p, dims)
    np.testing.assert_allclose(Q.T @ Q, np.eye(dims.n_pixels), atol=1e-12)
    np.testing.assert_array_equal(Q.T, qp_dense(-PixelShift.of(p), dims))
    rng = np.random.default_rng(rows + 10 * cols)
    u, w = rng.standard_normal((2, dims.n_pixels))
    lhs = apply_qp(u, p, dims) @ w
    rhs = u @ apply_qp(w, -PixelShift.of(p), dims)
    assert abs(lhs - rhs) <= 1e-10 * (1 + abs(lhs))


def test_shift_index_is_periodic():
    dims = GridDims(3, 5)
    np.testing.assert_array_equal(shift_index((1, 2), dims), shift_index((4, -3), dims))
