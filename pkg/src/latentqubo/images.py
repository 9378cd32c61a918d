"""Image set serialization: packed text grids and plain (P2) PGM files."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .qubo import FLOAT_FORMAT

__all__ = ["save_images", "load_images", "save_pgm", "load_pgm"]


def _check_images(images) -> np.ndarray:
    arr = np.asarray(images, dtype=np.float64)
    if arr.ndim == 2:
        arr = arr[None]
    if arr.ndim != 3 or arr.shape[1] != arr.shape[2]:
        raise ValueError(f"expected (count, m, m) square images, got shape {arr.shape}")
    if arr.size and (arr.min() < 0.0 or arr.max() > 1.0):
        raise ValueError("pixel values must lie in [0, 1]")
    return arr


def save_images(images, path) -> None:
    """Write a packed grid file: header line, then one image per line (m*m values)."""
    arr = _check_images(images)
    count, m = arr.shape[0], arr.shape[1]
    lines = [f"IMG v1 m={m} count={count}"]
    for img in arr:
        lines.append(" ".join(FLOAT_FORMAT % v for v in img.ravel()))
    Path(path).write_text("\n".join(lines) + "\n")


def load_images(path) -> np.ndarray:
    lines = [ln for ln in Path(path).read_text().splitlines() if ln.strip()]
    if not lines:
        raise ValueError(f"empty image file: {path}")
    head = lines[0].split()
    if (
        len(head) != 4
        or head[:2] != ["IMG", "v1"]
        or not head[2].startswith("m=")
        or not head[3].startswith("count=")
    ):
        raise ValueError(f"expected header 'IMG v1 m=<m> count=<c>', got {lines[0]!r}")
    m = int(head[2].removeprefix("m="))
    count = int(head[3].removeprefix("count="))
    rows = lines[1:]
    if len(rows) != count:
        raise ValueError(f"image file declares {count} images but has {len(rows)} rows")
    out = np.zeros((count, m, m))
    for r, ln in enumerate(rows):
        values = np.array(ln.split(), dtype=np.float64)
        if values.size != m * m:
            raise ValueError(f"image row {r} has {values.size} values, expected {m * m}")
        out[r] = values.reshape(m, m)
    return _check_images(out)


def save_pgm(image, path) -> None:
    """Write one [0,1] grayscale image as plain-text PGM with maxval 255."""
    arr = _check_images(image)[0]
    m = arr.shape[0]
    levels = np.rint(arr * 255).astype(int)
    lines = ["P2", f"{m} {m}", "255"]
    for row in levels:
        lines.append(" ".join(str(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def load_pgm(path) -> np.ndarray:
    tokens = []
    for ln in Path(path).read_text().splitlines():
        ln = ln.split("#", 1)[0]
        tokens.extend(ln.split())
    if not tokens or tokens[0] != "P2":
        raise ValueError(f"expected a plain PGM (P2) file: {path}")
    width, height, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    pixels = np.array(tokens[4:], dtype=np.float64)
    if pixels.size != width * height:
        raise ValueError(
            f"PGM declares {width}x{height} pixels but file has {pixels.size} values"
        )
    return (pixels / maxval).reshape(height, width)
