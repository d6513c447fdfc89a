"""Multispectral image container and the circular shift algebra.

Images are stored as an ``n_P x n_B`` matrix whose row ``q`` is the spectrum
of pixel ``q`` and whose column ``b`` is band ``b`` vectorized in column-major
order (``q = col * n_rows + row``).

A shift ``p = (dr, dc)`` moves the entry at ``(r, c)`` to
``((r + dr) mod n_rows, (c + dc) mod n_cols)``.  On vectorized bands the same
shift is a permutation ``Q_p``; it is never materialized, only applied as a
gather index.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from .errors import BoundsError, ShapeError, ValidationError


@dataclass(frozen=True)
class GridDims:
    n_rows: int
    n_cols: int

    def __post_init__(self):
        if int(self.n_rows) < 1 or int(self.n_cols) < 1:
            raise ValidationError(f"grid dimensions must be positive, got {self.n_rows}x{self.n_cols}")
        object.__setattr__(self, "n_rows", int(self.n_rows))
        object.__setattr__(self, "n_cols", int(self.n_cols))

    @property
    def n_pixels(self) -> int:
        return self.n_rows * self.n_cols

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_rows, self.n_cols)


class PixelShift(NamedTuple):
    """Integer 2-D offset ``(dr, dc)``; arithmetic is componentwise."""

    dr: int
    dc: int

    def __add__(self, other):  # type: ignore[override]
        return PixelShift(self.dr + other[0], self.dc + other[1])

    def __sub__(self, other):
        return PixelShift(self.dr - other[0], self.dc - other[1])

    def __neg__(self):
        return PixelShift(-self.dr, -self.dc)

    @classmethod
    def of(cls, p) -> "PixelShift":
        dr, dc = p
        return cls(int(dr), int(dc))


ORIGIN = PixelShift(0, 0)


@dataclass(frozen=True, eq=False)
class MultispectralImage:
    dims: GridDims
    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=float)
        if data.ndim == 1:
            data = data[:, None]
        if data.ndim != 2 or data.shape[0] != self.dims.n_pixels:
            raise ShapeError(
                f"data must have {self.dims.n_pixels} rows, got shape {data.shape}"
            )
        if data.shape[1] < 1:
            raise ShapeError("image needs at least one band")
        if not np.all(np.isfinite(data)):
            raise ValidationError("image contains non-finite values")
        data = data.copy()
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @property
    def n_pixels(self) -> int:
        return self.dims.n_pixels

    @property
    def n_bands(self) -> int:
        return self.data.shape[1]

    def band(self, b: int) -> np.ndarray:
        """Band ``b`` as an ``n_rows x n_cols`` array."""
        return devec(self.data[:, b], self.dims)

    def cube(self) -> np.ndarray:
        """The image as an ``n_rows x n_cols x n_B`` array."""
        return self.data.reshape(self.dims.n_rows, self.dims.n_cols, self.n_bands, order="F")

    @classmethod
    def from_cube(cls, cube) -> "MultispectralImage":
        cube = np.asarray(cube, dtype=float)
        if cube.ndim == 2:
            cube = cube[:, :, None]
        dims = GridDims(cube.shape[0], cube.shape[1])
        return cls(dims, cube.reshape(dims.n_pixels, cube.shape[2], order="F"))


@dataclass(frozen=True, eq=False)
class Mask:
    dims: GridDims
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values).astype(bool).ravel()
        if values.size != self.dims.n_pixels:
            raise ShapeError(f"mask needs {self.dims.n_pixels} entries, got {values.size}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def count(self) -> int:
        return int(self.values.sum())

    def grid(self) -> np.ndarray:
        return devec(self.values, self.dims)

    def __eq__(self, other):
        if not isinstance(other, Mask):
            return NotImplemented
        return self.dims == other.dims and bool(np.array_equal(self.values, other.values))


@dataclass(frozen=True, eq=False)
class SpectralSignature:
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float).ravel()
        if not np.all(np.isfinite(values)):
            raise ValidationError("signature contains non-finite values")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def __len__(self):
        return self.values.size


def vecc_index(row: int, col: int, dims: GridDims) -> int:
    if not (0 <= row < dims.n_rows and 0 <= col < dims.n_cols):
        raise BoundsError(f"pixel ({row}, {col}) outside {dims.n_rows}x{dims.n_cols} grid")
    return col * dims.n_rows + row


def pixel_coords(q: int, dims: GridDims) -> tuple[int, int]:
    """Inverse of :func:`vecc_index`."""
    if not 0 <= q < dims.n_pixels:
        raise BoundsError(f"pixel index {q} outside grid of {dims.n_pixels} pixels")
    return q % dims.n_rows, q // dims.n_rows


def vec(band: np.ndarray) -> np.ndarray:
    return np.asarray(band).ravel(order="F")


def devec(v: np.ndarray, dims: GridDims) -> np.ndarray:
    v = np.asarray(v)
    if v.shape[0] != dims.n_pixels:
        raise ShapeError(f"vector of length {v.shape[0]} does not match {dims.n_pixels} pixels")
    return v.reshape((dims.n_rows, dims.n_cols) + v.shape[1:], order="F")


def shift_band(band: np.ndarray, p) -> np.ndarray:
    """Circularly shift a 2-D band so ``out[a, b] = band[a - dr, b - dc]``."""
    band = np.asarray(band)
    if band.ndim != 2:
        raise ShapeError(f"band must be 2-D, got shape {band.shape}")
    dr, dc = p
    return np.roll(band, (int(dr), int(dc)), axis=(0, 1))


@lru_cache(maxsize=4096)
def _shift_index_cached(dr: int, dc: int, n_rows: int, n_cols: int) -> np.ndarray:
    rows = (np.arange(n_rows) - dr) % n_rows
    cols = (np.arange(n_cols) - dc) % n_cols
    idx = (cols[None, :] * n_rows + rows[:, None]).ravel(order="F")
    idx.setflags(write=False)
    return idx


def shift_index(p, dims: GridDims) -> np.ndarray:
    """Gather index ``g`` with ``(Q_p v)[q] = v[g[q]]``."""
    dr, dc = p
    return _shift_index_cached(int(dr) % dims.n_rows, int(dc) % dims.n_cols, dims.n_rows, dims.n_cols)


def apply_qp(v: np.ndarray, p, dims: GridDims) -> np.ndarray:
    """Apply ``Q_p`` to a vectorized band (or to every column of a matrix)."""
    v = np.asarray(v)
    if v.shape[0] != dims.n_pixels:
        raise ShapeError(f"expected length {dims.n_pixels} along axis 0, got {v.shape[0]}")
    return v[shift_index(p, dims)]


def shift_image(X: MultispectralImage, p) -> MultispectralImage:
    return MultispectralImage(X.dims, apply_qp(X.data, p, X.dims))
