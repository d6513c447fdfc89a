"""Patterns and the spectralization transform.

Spectralizing an image ``X`` along a pattern ``P = (p_1 = (0,0), ..., p_k)``
stacks ``Q_{-p_j} X`` band-wise, so that row ``q`` of the result holds the
spectra of pixels ``q + p_1, ..., q + p_k``.  A spatial pattern in ``X`` thus
becomes a single spectral signature in the spectralized image.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import FormatError, ShapeError, ValidationError
from .msimage import ORIGIN, MultispectralImage, PixelShift, SpectralSignature, apply_qp


@dataclass(frozen=True)
class Pattern:
    offsets: tuple[PixelShift, ...]

    def __post_init__(self):
        offsets = tuple(PixelShift.of(p) for p in self.offsets)
        if not offsets:
            raise ValidationError("a pattern needs at least one offset")
        if offsets[0] != ORIGIN:
            raise ValidationError(f"first pattern offset must be (0, 0), got {tuple(offsets[0])}")
        if len(set(offsets)) != len(offsets):
            raise ValidationError("pattern offsets must be pairwise distinct")
        object.__setattr__(self, "offsets", offsets)

    def __len__(self):
        return len(self.offsets)

    def __iter__(self):
        return iter(self.offsets)

    @classmethod
    def normalize(cls, raw) -> tuple["Pattern", PixelShift]:
        """Build a pattern from arbitrary distinct offsets.

        The lexicographically smallest offset is translated to ``(0, 0)`` and
        moved to the front; the relative order of the others is kept.  Returns
        the pattern and the translation that was added to every offset.
        """
        pts = [PixelShift.of(p) for p in raw]
        if not pts:
            raise ValidationError("a pattern needs at least one offset")
        t = -min(pts)
        moved = [p + t for p in pts]
        rest = [p for p in moved if p != ORIGIN]
        return cls((ORIGIN, *rest)), t

    def bounding_box(self) -> tuple[int, int]:
        """Height and width of the smallest rectangle holding every offset."""
        dr = [p.dr for p in self.offsets]
        dc = [p.dc for p in self.offsets]
        return max(dr) - min(dr) + 1, max(dc) - min(dc) + 1

    def to_json(self) -> str:
        return json.dumps([list(p) for p in self.offsets])


HOOK = Pattern(((0, 0), (1, 0), (1, 1)))

CHECKERED = Pattern(tuple((i, j) for i in (0, 3, 6) for j in (0, 3, 6)))


def rectangle(a: int, b: int) -> Pattern:
    """Full ``a x b`` rectangle in row-major order."""
    return Pattern(tuple((i, j) for i in range(a) for j in range(b)))


def load_pattern(path) -> Pattern:
    """Read a JSON array of ``[dr, dc]`` pairs.

    Offsets are normalized (see :meth:`Pattern.normalize`) so shapes may be
    given in any coordinates.
    """
    try:
        raw = json.loads(Path(path).read_text())
        pts = [(int(a), int(b)) for a, b in raw]
    except (ValueError, TypeError) as exc:
        raise FormatError(f"{path}: pattern must be a JSON array of [dr, dc] pairs") from exc
    return Pattern.normalize(pts)[0]


def spectralize(X: MultispectralImage, P: Pattern) -> MultispectralImage:
    blocks = [X.data if p == ORIGIN else apply_qp(X.data, -p, X.dims) for p in P.offsets]
    return MultispectralImage(X.dims, np.hstack(blocks))


def spectralized_signature(sigs) -> SpectralSignature:
    """Concatenate one signature per pattern offset, in pattern order."""
    arrs = [np.asarray(getattr(s, "values", s), dtype=float).ravel() for s in sigs]
    if not arrs:
        raise ShapeError("need at least one signature")
    if len({a.size for a in arrs}) != 1:
        raise ShapeError(f"signatures differ in length: {[a.size for a in arrs]}")
    return SpectralSignature(np.concatenate(arrs))
