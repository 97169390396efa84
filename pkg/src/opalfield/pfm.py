"""Single-channel PFM reading and writing.

Rows in a PFM payload run bottom-to-top; in memory they are top-to-bottom.
A negative scale marks a little-endian payload.
"""

from __future__ import annotations

import re
from pathlib import Path

import numpy as np

from .lightfield import DisparityMap, LightFieldError


class PFMError(LightFieldError):
    pass


def _readline(f) -> str:
    line = f.readline()
    if not line:
        raise PFMError("malformed PFM header: unexpected end of file")
    return line.decode("latin-1").strip()


def read_pfm(path: str | Path) -> DisparityMap:
    with open(path, "rb") as f:
        kind = _readline(f)
        if kind == "PF":
            raise PFMError("PFM has 3 channels; expected single-channel 'Pf'")
        if kind != "Pf":
            raise PFMError(f"malformed PFM header: bad magic {kind!r}")
        dims = _readline(f)
        m = re.fullmatch(r"(\d+)\s+(\d+)", dims)
        if not m:
            raise PFMError(f"malformed PFM header: bad dimensions {dims!r}")
        width, height = int(m.group(1)), int(m.group(2))
        try:
            scale = float(_readline(f))
        except ValueError:
            raise PFMError("malformed PFM header: bad scale") from None
        if scale == 0:
            raise PFMError("malformed PFM header: zero scale")
        dtype = np.dtype("<f4") if scale < 0 else np.dtype(">f4")
        payload = f.read()
    expected = width * height * 4
    if len(payload) < expected:
        raise PFMError(f"PFM payload truncated: {len(payload)} < {expected} bytes")
    data = np.frombuffer(payload[:expected], dtype=dtype).reshape(height, width)
    return DisparityMap(np.flipud(data).astype(np.float64))


def write_pfm(disp: DisparityMap | np.ndarray, path: str | Path) -> None:
    values = disp.values if isinstance(disp, DisparityMap) else np.asarray(disp)
    if values.ndim != 2:
        raise PFMError("only single-channel maps can be written")
    h, w = values.shape
    data = np.ascontiguousarray(np.flipud(values).astype("<f4"))
    with open(path, "wb") as f:
        f.write(b"Pf\n")
        f.write(f"{w} {h}\n".encode("latin-1"))
        f.write(b"-1.0\n")
        f.write(data.tobytes())
