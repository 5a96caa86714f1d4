"""Binary PGM (P5) reading and writing."""

from __future__ import annotations

import os

import numpy as np


class PGMError(ValueError):
    pass


def _token(data: bytes, pos: int):
    """Next whitespace-delimited header token, skipping ``#`` comments."""
    n = len(data)
    while pos < n:
        c = data[pos:pos + 1]
        if c == b"#":
            while pos < n and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
        elif c.isspace():
            pos += 1
        else:
            break
    start = pos
    while pos < n and not data[pos:pos + 1].isspace() and data[pos:pos + 1] != b"#":
        pos += 1
    if start == pos:
        raise PGMError(f"unexpected end of header at byte {start}")
    return data[start:pos], start, pos


def parse_pgm(data: bytes) -> np.ndarray:
    magic, off, pos = _token(data, 0)
    if magic != b"P5":
        raise PGMError(f"expected magic 'P5' at byte {off}, got {magic[:8]!r}")
    fields = []
    for name in ("width", "height", "maxval"):
        tok, off, pos = _token(data, pos)
        if not tok.isdigit():
            raise PGMError(f"invalid {name} {tok[:16]!r} at byte {off}")
        fields.append(int(tok))
    width, height, maxval = fields
    if width < 1 or height < 1:
        raise PGMError(f"image dimensions must be positive (header ends at byte {pos})")
    if maxval not in (255, 65535):
        raise PGMError(f"unsupported maxval {maxval} at byte {off}")
    if pos >= len(data) or not data[pos:pos + 1].isspace():
        raise PGMError(f"missing whitespace after maxval at byte {pos}")
    pos += 1
    depth = 1 if maxval == 255 else 2
    expected = width * height * depth
    payload = data[pos:pos + expected]
    if len(payload) != expected:
        raise PGMError(f"truncated pixel data at byte {pos}: expected {expected} bytes, "
                       f"got {len(payload)}")
    dtype = np.uint8 if depth == 1 else np.dtype(">u2")
    pixels = np.frombuffer(payload, dtype=dtype).reshape(height, width)
    return pixels.astype(float) / maxval


def pgm_read(path) -> np.ndarray:
    """Read a P5 file into a float image of shape ``(height, width)`` in ``[0, 1]``."""
    with open(path, "rb") as fh:
        return parse_pgm(fh.read())


def encode_pgm(image: np.ndarray) -> bytes:
    u = np.asarray(image, dtype=float)
    if u.ndim != 2:
        raise ValueError("image must be 2-D")
    if not np.all(np.isfinite(u)):
        raise ValueError("image has non-finite pixels")
    q = np.rint(np.clip(u, 0.0, 1.0) * 255).astype(np.uint8)
    header = f"P5\n{u.shape[1]} {u.shape[0]}\n255\n".encode("ascii")
    return header + q.tobytes()


def pgm_write(path, image: np.ndarray) -> None:
    """Write ``image`` as 8-bit P5, clipping to ``[0, 1]`` and rounding to nearest."""
    data = encode_pgm(image)
    with open(os.fspath(path), "wb") as fh:
        fh.write(data)
