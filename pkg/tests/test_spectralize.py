import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cspattern.errors import FormatError, ShapeError, ValidationError
from cspattern.msimage import GridDims, MultispectralImage, PixelShift, apply_qp, shift_band, shift_image, vec, vecc_index
from cspattern.spectralize import (
    CHECKERED,
    HOOK,
    Pattern,
    load_pattern,
    rectangle,
    spectralize,
    spectralized_signature,
)

# the 3x3 grayscale example along the hook; row 3 is (2, 5, 6)
WORKED = np.array([
    [1, 4, 5],
    [4, 7, 8],
    [7, 1, 2],
    [2, 5, 6],
    [5, 8, 9],
    [8, 2, 3],
    [3, 6, 4],
    [6, 9, 7],
    [9, 3, 1],
])


def gather_oracle(X, P):
    """Row q = concatenated spectra of the pixels at pixel(q) + p_j."""
    rows, cols = X.dims.shape
    out = np.zeros((X.n_pixels, X.n_bands * len(P)))
    for c in range(cols):
        for r in range(rows):
            q = vecc_index(r, c, X.dims)
            parts = [X.data[vecc_index((r + p.dr) % rows, (c + p.dc) % cols, X.dims)] for p in P]
            out[q] = np.concatenate(parts)
    return out


def test_worked_example_exact():
    I = np.array([[1, 2, 3], [4, 5, 6], [7, 8, 9]], dtype=float)
    S = spectralize(MultispectralImage(GridDims(3, 3), vec(I)), HOOK)
    np.testing.assert_array_equal(S.data, WORKED)
    np.testing.assert_array_equal(S.data[3], [2, 5, 6])


def test_single_offset_is_identity():
    X = MultispectralImage(GridDims(3, 4), np.random.default_rng(0).standard_normal((12, 2)))
    np.testing.assert_array_equal(spectralize(X, Pattern(((0, 0),))).data, X.data)


def test_gather_oracle_random_image():
    rng = np.random.default_rng(1)
    X = MultispectralImage(GridDims(5, 4), rng.standard_normal((20, 3)))
    P = Pattern(((0, 0), (2, 1), (-1, 3), (0, -2)))
    np.testing.assert_array_equal(spectralize(X, P).data, gather_oracle(X, P))


def test_band_blocks_are_shifted_bands():
    rng = np.random.default_rng(2)
    X = MultispectralImage(GridDims(4, 6), rng.standard_normal((24, 2)))
    S = spectralize(X, HOOK)
    for j, p in enumerate(HOOK):
        for b in range(2):
            np.testing.assert_array_equal(S.band(2 * j + b), shift_band(X.band(b), -p))


def test_signature_concatenation():
    assert spectralized_signature([[2], [5], [6]]).values.tolist() == [2, 5, 6]
    assert spectralized_signature([[1, 2], [3, 4]]).values.tolist() == [1, 2, 3, 4]
    assert spectralized_signature([[7, 8]]).values.tolist() == [7, 8]
    with pytest.raises(ShapeError):
        spectralized_signature([[1, 2], [3]])


def test_pattern_validation():
    with pytest.raises(ValidationError):
        Pattern(((1, 0), (0, 0)))
    with pytest.raises(ValidationError):
        Pattern(((0, 0), (1, 1), (1, 1)))
    with pytest.raises(ValidationError):
        Pattern(())


def test_normalize_reports_translation():
    P, t = Pattern.normalize([(3, 5), (2, 7), (4, 4)])
    assert t == PixelShift(-2, -7)
    assert P.offsets == ((0, 0), (1, -2), (2, -3))


def test_bounding_boxes():
    assert HOOK.bounding_box() == (2, 2)
    assert CHECKERED.bounding_box() == (7, 7)
    assert len(CHECKERED) == 9
    assert rectangle(6, 10).bounding_box() == (6, 10)


def test_load_pattern(tmp_path):
    path = tmp_path / "p.json"
    path.write_text(json.dumps([[1, 1], [2, 1], [2, 2]]))
    assert load_pattern(path) == HOOK
    path.write_text("{not json")
    with pytest.raises(FormatError):
        load_pattern(path)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 6), st.integers(2, 6), st.integers(0, 10_000),
       st.lists(st.tuples(st.integers(-3, 3), st.integers(-3, 3)), min_size=1, max_size=4, unique=True))
def test_planted_pattern_row_is_signature(rows, cols, seed, raw):
    P, _ = Pattern.normalize(raw)
    dims = GridDims(rows, cols)
    rng = np.random.default_rng(seed)
    data = rng.standard_normal((dims.n_pixels, 2))
    sigs = rng.standard_normal((len(P), 2))
    r0, c0 = int(rng.integers(rows)), int(rng.integers(cols))
    targets = [vecc_index((r0 + p.dr) % rows, (c0 + p.dc) % cols, dims) for p in P]
    if len(set(targets)) < len(P):
        return  # the pattern overlaps itself after wrapping on this small grid
    data[targets] = sigs
    S = spectralize(MultispectralImage(dims, data), P)
    np.testing.assert_array_equal(S.data[vecc_index(r0, c0, dims)], spectralized_signature(sigs).values)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 5), st.integers(1, 5), st.tuples(st.integers(-6, 6), st.integers(-6, 6)))
def test_spectralize_commutes_with_shifts(rows, cols, e):
    dims = GridDims(rows, cols)
    X = MultispectralImage(dims, np.random.default_rng(rows * cols).standard_normal((dims.n_pixels, 2)))
    lhs = spectralize(shift_image(X, e), HOOK).data
    rhs = apply_qp(spectralize(X, HOOK).data, e, dims)
    np.testing.assert_array_equal(lhs, rhs)
