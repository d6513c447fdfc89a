"""Synthetic planted-target scenes with ground-truth masks.

Backgrounds are a random per-pixel mixture of a few dim materials plus a
little Gaussian texture; targets use brighter signatures so the scenes stay
in the regime where signature detection is meaningful.
"""
from __future__ import annotations

import numpy as np

from .errors import DomainError
from .msimage import GridDims, Mask, MultispectralImage
from .spectralize import Pattern

BACKGROUND_RANGE = (0.05, 0.35)
# pattern scenes sit on a darker field: with a single band each virtual
# measurement carries only |P| equations and bright clutter drowns them
PATTERN_BACKGROUND_RANGE = (0.0, 0.1)
TARGET_RANGE = (0.6, 1.0)


def _rng(seed: int, stream: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, stream]))


def _background(dims: GridDims, bands: int, rng, n_materials: int, noise: float,
                background=BACKGROUND_RANGE) -> np.ndarray:
    mats = rng.uniform(*background, size=(n_materials, bands))
    labels = rng.integers(0, n_materials, dims.n_pixels)
    return mats[labels] + noise * rng.standard_normal((dims.n_pixels, bands))


def planted_template_scene(rows: int = 16, cols: int = 16, bands: int = 4, n_targets: int = 5,
                           target_size: int = 2, seed: int = 0, scale: float = 10.0,
                           noise: float = 0.02, n_materials: int = 4):
    """Scene with ``n_targets`` square targets of side ``target_size``.

    Targets do not touch each other (a one-pixel gap is kept) and every
    target pixel carries exactly the target signature.  Returns
    ``(X, s, reference_mask)``.
    """
    dims = GridDims(rows, cols)
    if target_size > min(rows, cols):
        raise DomainError("targets do not fit in the grid")
    rng = _rng(seed, 0)
    X = _background(dims, bands, rng, n_materials, noise)
    s = rng.uniform(*TARGET_RANGE, size=bands)
    grid = np.zeros(dims.shape, bool)
    placed = 0
    for _ in range(100 * max(n_targets, 1)):
        if placed == n_targets:
            break
        r = int(rng.integers(0, rows - target_size + 1))
        c = int(rng.integers(0, cols - target_size + 1))
        if grid[max(r - 1, 0):r + target_size + 1, max(c - 1, 0):c + target_size + 1].any():
            continue
        grid[r:r + target_size, c:c + target_size] = True
        placed += 1
    if placed < n_targets:
        raise DomainError(f"could only place {placed} of {n_targets} targets")
    ref = grid.ravel(order="F")
    X[ref] = s
    return MultispectralImage(dims, scale * X), scale * s, Mask(dims, ref)


def planted_pattern_scene(pattern: Pattern, rows: int = 16, cols: int = 16, bands: int = 1,
                          n_targets: int = 1, seed: int = 0, scale: float = 10.0,
                          noise: float = 0.02, n_materials: int = 4, signatures=None,
                          background=PATTERN_BACKGROUND_RANGE):
    """Scene with ``n_targets`` exact, non-wrapping copies of ``pattern``.

    Each pattern offset gets its own bright signature unless ``signatures``
    (one per offset) is given.  Copies never share a pixel.  Returns
    ``(X, signatures, reference_anchor_mask)`` where ``signatures`` is a
    list of arrays in pattern order.  ``background`` is the range of the
    clutter materials before scaling.
    """
    dims = GridDims(rows, cols)
    rng = _rng(seed, 1)
    X = _background(dims, bands, rng, n_materials, noise, background)
    if signatures is None:
        sigs = rng.uniform(*TARGET_RANGE, size=(len(pattern), bands))
    else:
        sigs = np.asarray(signatures, dtype=float).reshape(len(pattern), bands) / scale
    dr = np.array([p.dr for p in pattern])
    dc = np.array([p.dc for p in pattern])
    r_lo, r_hi = -dr.min(), rows - dr.max()
    c_lo, c_hi = -dc.min(), cols - dc.max()
    if r_hi <= r_lo or c_hi <= c_lo:
        raise DomainError("pattern does not fit in the grid")
    used = np.zeros(dims.shape, bool)
    anchors = np.zeros(dims.shape, bool)
    placed = 0
    for _ in range(200 * max(n_targets, 1)):
        if placed == n_targets:
            break
        r = int(rng.integers(r_lo, r_hi))
        c = int(rng.integers(c_lo, c_hi))
        if used[r + dr, c + dc].any():
            continue
        used[r + dr, c + dc] = True
        anchors[r, c] = True
        q = (c + dc) * rows + (r + dr)
        X[q] = sigs
        placed += 1
    if placed < n_targets:
        raise DomainError(f"could only place {placed} of {n_targets} pattern copies")
    X_img = MultispectralImage(dims, scale * X)
    return X_img, [scale * s for s in sigs], Mask(dims, anchors.ravel(order="F"))


def checkerboard_scene(rows: int = 16, cols: int = 16, bands: int = 1, seed: int = 0,
                       scale: float = 10.0, noise: float = 0.02):
    """One planted checkered pattern (3-pixel pitch) with two alternating materials."""
    from .spectralize import CHECKERED

    rng = _rng(seed, 2)
    light, dark = rng.uniform(*TARGET_RANGE, size=(2, bands))
    dark = 0.5 * dark
    sigs = [light if ((p.dr + p.dc) // 3) % 2 == 0 else dark for p in CHECKERED]
    return planted_pattern_scene(CHECKERED, rows, cols, bands, 1, seed, scale, noise,
                                 signatures=scale * np.array(sigs))
