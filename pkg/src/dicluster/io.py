"""Point CSV and binary PPM readers and writers."""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import ValidationError


class RasterFormatError(ValueError):
    """Malformed or unsupported raster file."""


@dataclass
class RasterImage:
    """8-bit RGB image, row-major, ``pixels.shape == (height, width, 3)``."""

    pixels: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim != 3 or px.shape[2] != 3 or px.shape[0] < 1 or px.shape[1] < 1:
            raise ValidationError(f"expected an H x W x 3 array, got shape {px.shape}")
        if px.dtype != np.uint8:
            if np.any(px < 0) or np.any(px > 255):
                raise ValidationError("channel values must lie in [0, 255]")
            px = px.astype(np.uint8)
        self.pixels = px

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    def __eq__(self, other):
        return isinstance(other, RasterImage) and np.array_equal(self.pixels, other.pixels)


def read_points_csv(source) -> np.ndarray:
    """Read numeric rows from a path or text stream.

    A non-numeric first line is taken as a header.
    """
    if isinstance(source, (str, os.PathLike)):
        with open(source, newline="") as fh:
            return read_points_csv(fh)
    rows = []
    width = None
    for lineno, row in enumerate(csv.reader(source), start=1):
        if not row or all(not cell.strip() for cell in row):
            continue
        try:
            values = [float(cell) for cell in row]
        except ValueError:
            if lineno == 1:
                continue
            raise ValidationError(f"row {lineno}: non-numeric value in {row!r}") from None
        if width is None:
            width = len(values)
        elif len(values) != width:
            raise ValidationError(f"row {lineno}: expected {width} columns, got {len(values)}")
        if not all(np.isfinite(values)):
            raise ValidationError(f"row {lineno}: non-finite value in {row!r}")
        rows.append(values)
    if not rows:
        raise ValidationError("no data rows")
    return np.array(rows, dtype=np.float64)


def write_labels_csv(path, labels) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["row_index", "label"])
        for i, lab in enumerate(np.asarray(labels)):
            w.writerow([i, int(lab)])


def _ppm_tokens(data: bytes, count: int):
    # header tokens separated by whitespace; '#' starts a comment
    tokens = []
    pos = 0
    while len(tokens) < count:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace() and data[pos : pos + 1] != b"#":
            pos += 1
        if start == pos:
            raise RasterFormatError("truncated PPM header")
        tokens.append(data[start:pos])
    # exactly one whitespace byte separates header and raster
    return tokens, pos + 1


def decode_ppm(data: bytes) -> RasterImage:
    tokens, offset = _ppm_tokens(data, 4)
    if tokens[0] != b"P6":
        raise RasterFormatError(f"not a binary PPM (magic {tokens[0]!r})")
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError:
        raise RasterFormatError("non-integer PPM header field") from None
    if width < 1 or height < 1:
        raise RasterFormatError("PPM dimensions must be positive")
    if maxval != 255:
        raise RasterFormatError(f"only maxval 255 is supported, got {maxval}")
    need = width * height * 3
    body = data[offset : offset + need]
    if len(body) != need:
        raise RasterFormatError(f"PPM raster truncated: expected {need} bytes, got {len(body)}")
    return RasterImage(np.frombuffer(body, dtype=np.uint8).reshape(height, width, 3).copy())


def encode_ppm(image: RasterImage) -> bytes:
    header = f"P6\n{image.width} {image.height}\n255\n".encode("ascii")
    return header + np.ascontiguousarray(image.pixels, dtype=np.uint8).tobytes()


def read_image(path) -> RasterImage:
    """Read a P6 file; other formats go through Pillow when it is installed."""
    path = Path(path)
    data = path.read_bytes()
    if data[:2] == b"P6" or path.suffix.lower() in (".ppm", ".pnm"):
        return decode_ppm(data)
    try:
        from PIL import Image
    except ImportError:
        raise RasterFormatError(f"{path}: only P6 PPM is supported without Pillow") from None
    try:
        with Image.open(path) as im:
            return RasterImage(np.asarray(im.convert("RGB")))
    except OSError as exc:
        raise RasterFormatError(f"{path}: {exc}") from None


def write_image(path, image: RasterImage) -> None:
    Path(path).write_bytes(encode_ppm(image))
