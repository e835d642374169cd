"""Binary PGM (P5) rasters with reproducible metadata comments."""

from typing import Dict, Tuple

import numpy as np

from .errors import InputError

__all__ = ["render_pgm", "parse_pgm"]


def render_pgm(bits: np.ndarray, metadata: Dict[str, str]) -> bytes:
    """P5 bytes: 255 for cells answering 1, 0 for everything else.

    bits is indexed [i, j] with i the x grid index and j the y grid
    index, so rows are emitted top down starting from the highest j.
    Metadata becomes '# key: value' comments after the magic, in sorted
    key order so identical inputs give byte-identical files.
    """
    if bits.ndim != 2:
        raise InputError("raster must be 2-d")
    arr = (bits.T[::-1] == 1).astype(np.uint8) * 255
    head = ["P5"]
    for key in sorted(metadata):
        value = str(metadata[key])
        if "\n" in key or "\n" in value:
            raise InputError("metadata entries must be single lines")
        head.append(f"# {key}: {value}")
    head.append(f"{arr.shape[1]} {arr.shape[0]}")
    head.append("255")
    return ("\n".join(head) + "\n").encode("ascii") + arr.tobytes()


def parse_pgm(data: bytes) -> Tuple[np.ndarray, Dict[str, str]]:
    """Invert render_pgm, returning the 0/1 bit grid and the comments."""
    if not data.startswith(b"P5"):
        raise InputError("not a binary PGM")
    metadata: Dict[str, str] = {}
    fields = []
    pos = 2
    while len(fields) < 3:
        end = data.find(b"\n", pos)
        if end < 0:
            raise InputError("truncated PGM header")
        line = data[pos:end].decode("ascii").strip()
        pos = end + 1
        if line.startswith("#"):
            body = line[1:].strip()
            key, sep, value = body.partition(":")
            if sep:
                metadata[key.strip()] = value.strip()
            continue
        fields.extend(line.split())
    if len(fields) != 3:
        raise InputError("malformed PGM header")
    width, height, maxval = (int(f) for f in fields)
    if maxval != 255:
        raise InputError("expected maxval 255")
    raster = np.frombuffer(data[pos:pos + width * height], dtype=np.uint8)
    if raster.size != width * height:
        raise InputError("truncated PGM raster")
    rows = raster.reshape(height, width)
    return (rows[::-1].T == 255).astype(np.int8), metadata
