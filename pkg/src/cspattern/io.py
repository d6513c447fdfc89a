"""File formats: raster pairs, pattern and signature JSON, PGM masks, CSV curves.

A raster is a JSON header next to a raw payload of little-endian float64
values, band-major with column-major pixels inside each band, so that the
value of pixel ``q`` in band ``b`` sits at byte ``8 * (b * n_P + q)``.
"""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .errors import FormatError, ValidationError
from .msimage import GridDims, Mask, MultispectralImage, SpectralSignature

DTYPE_TOKEN = "f64le"
LAYOUT_TOKEN = "band-major-colmajor"


def raster_paths(stem) -> tuple[Path, Path]:
    """Header and payload paths for a raster stem (``x`` -> ``x.json``, ``x.raw``)."""
    stem = Path(stem)
    if stem.suffix in (".json", ".raw"):
        stem = stem.with_suffix("")
    return stem.with_suffix(".json"), stem.with_suffix(".raw")


def _read_json(path):
    try:
        return json.loads(Path(path).read_text())
    except OSError as exc:
        raise FormatError(f"{path}: cannot read file: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON: {exc.msg}") from exc


def _positive_int(header: dict, key: str, path) -> int:
    v = header.get(key)
    if isinstance(v, bool) or not isinstance(v, int) or v < 1:
        raise FormatError(f"{path}: header field {key!r} must be a positive integer, got {v!r}")
    return v


def read_header(path) -> dict:
    header = _read_json(path)
    if not isinstance(header, dict):
        raise FormatError(f"{path}: header must be a JSON object")
    for key in ("height", "width", "bands"):
        _positive_int(header, key, path)
    if header.get("dtype") != DTYPE_TOKEN:
        raise FormatError(f"{path}: dtype must be {DTYPE_TOKEN!r}, got {header.get('dtype')!r}")
    if header.get("layout") != LAYOUT_TOKEN:
        raise FormatError(f"{path}: layout must be {LAYOUT_TOKEN!r}, got {header.get('layout')!r}")
    return header


def load_raster(header_path, raw_path=None) -> MultispectralImage:
    if raw_path is None:
        header_path, raw_path = raster_paths(header_path)
    header = read_header(header_path)
    dims = GridDims(header["height"], header["width"])
    bands = header["bands"]
    try:
        payload = Path(raw_path).read_bytes()
    except OSError as exc:
        raise FormatError(f"{raw_path}: cannot read payload: {exc.strerror}") from exc
    expected = 8 * dims.n_pixels * bands
    if len(payload) != expected:
        raise FormatError(f"{raw_path}: payload has {len(payload)} bytes, header implies {expected}")
    flat = np.frombuffer(payload, dtype="<f8").astype(float)
    if not np.isfinite(flat).all():
        raise ValidationError(f"{raw_path}: raster contains non-finite values")
    return MultispectralImage(dims, flat.reshape(bands, dims.n_pixels).T)


def save_raster(X: MultispectralImage, header_path, raw_path=None):
    if raw_path is None:
        header_path, raw_path = raster_paths(header_path)
    header = {
        "height": X.dims.n_rows,
        "width": X.dims.n_cols,
        "bands": X.n_bands,
        "dtype": DTYPE_TOKEN,
        "layout": LAYOUT_TOKEN,
    }
    Path(header_path).write_text(json.dumps(header, indent=2) + "\n")
    Path(raw_path).write_bytes(np.ascontiguousarray(X.data.T, dtype="<f8").tobytes())


def load_signature(path) -> SpectralSignature:
    """A JSON array of numbers, or an object with a ``"signature"`` array."""
    raw = _read_json(path)
    if isinstance(raw, dict):
        raw = raw.get("signature")
    try:
        vals = np.asarray(raw, dtype=float)
    except (TypeError, ValueError) as exc:
        raise FormatError(f"{path}: signature must be an array of numbers") from exc
    if vals.ndim != 1 or vals.size == 0:
        raise FormatError(f"{path}: signature must be a nonempty flat array")
    return SpectralSignature(vals)


def load_signatures(path) -> list[np.ndarray]:
    """One signature per pattern offset: a JSON array of arrays (or ``{"signatures": ...}``)."""
    raw = _read_json(path)
    if isinstance(raw, dict):
        raw = raw.get("signatures")
    if not isinstance(raw, list) or not raw:
        raise FormatError(f"{path}: expected a nonempty array of signatures")
    out = []
    for k, s in enumerate(raw):
        try:
            v = np.asarray(s, dtype=float).ravel()
        except (TypeError, ValueError) as exc:
            raise FormatError(f"{path}: signature {k} is not numeric") from exc
        if not np.isfinite(v).all() or v.size == 0:
            raise ValidationError(f"{path}: signature {k} is empty or non-finite")
        out.append(v)
    return out


def save_json(obj, path):
    Path(path).write_text(json.dumps(obj, indent=2, default=_json_default) + "\n")


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def save_mask(mask: Mask, path):
    """Binary PGM (P5), 0 for negative and 255 for positive pixels."""
    grid = np.where(mask.grid(), 255, 0).astype(np.uint8)
    rows, cols = grid.shape
    Path(path).write_bytes(f"P5\n{cols} {rows}\n255\n".encode("ascii") + grid.tobytes())


def load_mask(path) -> Mask:
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise FormatError(f"{path}: cannot read mask: {exc.strerror}") from exc
    # header: magic, width, height, maxval separated by whitespace, comments allowed
    tokens, pos = [], 0
    while len(tokens) < 4:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise FormatError(f"{path}: truncated PGM header")
        tokens.append(data[start:pos])
    pos += 1
    if tokens[0] != b"P5":
        raise FormatError(f"{path}: not a binary PGM (magic {tokens[0]!r})")
    try:
        cols, rows, maxval = (int(t) for t in tokens[1:])
    except ValueError as exc:
        raise FormatError(f"{path}: malformed PGM header") from exc
    if maxval != 255 or cols < 1 or rows < 1:
        raise FormatError(f"{path}: expected an 8-bit PGM with positive size")
    pix = np.frombuffer(data[pos:], dtype=np.uint8)
    if pix.size != rows * cols:
        raise FormatError(f"{path}: PGM has {pix.size} pixels, header implies {rows * cols}")
    grid = pix.reshape(rows, cols)
    if not np.isin(grid, (0, 255)).all():
        raise ValidationError(f"{path}: mask pixels must be 0 or 255")
    return Mask(GridDims(rows, cols), (grid == 255).ravel(order="F"))


def write_curve(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def read_curve(path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise FormatError(f"{path}: empty CSV")
    return rows[0], rows[1:]
