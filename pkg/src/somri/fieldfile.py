"""Self-describing on-disk container for fields, masks, features, and probes.

Layout: one ASCII header line, then the raw payload.

    #somri-field v1 kind=<kind> channels=<C> height=<H> width=<W> nbytes=<N>\\n
    <N payload bytes>

Payload kinds
-------------
complex64   little-endian interleaved (real, imag) float32 pairs
float32     little-endian float32
bool        bits packed little-endian, 8 per byte (numpy ``bitorder="little"``)

Arrays of shape (H, W) are stored with channels=1 and read back as 2-D;
(C, H, W) arrays round-trip as 3-D.  Row-major order throughout.  The
round trip is bit-exact for the three canonical dtypes; complex128/float64
inputs are narrowed to the on-disk precision at write time.
"""

import numpy as np

from .errors import FormatError, ConfigError

MAGIC = "#somri-field"
VERSION = 1

_KINDS = {
    "complex64": np.dtype("<c8"),
    "float32": np.dtype("<f4"),
    "bool": np.dtype(bool),
}


def write_field(path, array):
    """Write a 2-D or 3-D array to ``path`` in the field container format."""
    arr = np.asarray(array)
    if arr.ndim == 2:
        channels, (height, width) = 1, arr.shape
    elif arr.ndim == 3:
        channels, height, width = arr.shape
    else:
        raise ConfigError(f"only 2-D or 3-D arrays are supported, got {arr.shape}")

    if arr.dtype == bool:
        kind = "bool"
        payload = np.packbits(arr.ravel(), bitorder="little").tobytes()
    elif np.issubdtype(arr.dtype, np.complexfloating):
        kind = "complex64"
        payload = arr.astype("<c8").tobytes()
    elif np.issubdtype(arr.dtype, np.floating):
        kind = "float32"
        payload = arr.astype("<f4").tobytes()
    else:
        raise ConfigError(f"unsupported dtype {arr.dtype}")

    header = (
        f"{MAGIC} v{VERSION} kind={kind} channels={channels} "
        f"height={height} width={width} nbytes={len(payload)}\n"
    )
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        fh.write(payload)


def read_field(path):
    """Read a field container; returns (H, W) or (C, H, W) per the header."""
    with open(path, "rb") as fh:
        header = fh.readline().decode("ascii", errors="replace").rstrip("\n")
        payload = fh.read()

    fields = _parse_header(header)
    kind = fields["kind"]
    channels = _int_field(fields, "channels")
    height = _int_field(fields, "height")
    width = _int_field(fields, "width")
    nbytes = _int_field(fields, "nbytes")

    if kind not in _KINDS:
        raise FormatError(f"unsupported payload kind {kind!r}")
    count = channels * height * width
    expected = _expected_bytes(kind, count)
    if nbytes != expected:
        raise FormatError(
            f"nbytes={nbytes} inconsistent with dims "
            f"({channels}x{height}x{width}, kind={kind}): expected {expected}"
        )
    if len(payload) < nbytes:
        raise FormatError(
            f"payload truncated: declared nbytes={nbytes}, found {len(payload)}"
        )
    if len(payload) > nbytes:
        raise FormatError(
            f"trailing bytes after payload: declared nbytes={nbytes}, "
            f"found {len(payload)}"
        )

    if kind == "bool":
        bits = np.unpackbits(
            np.frombuffer(payload, dtype=np.uint8), count=count, bitorder="little"
        )
        arr = bits.astype(bool)
    else:
        arr = np.frombuffer(payload, dtype=_KINDS[kind]).copy()

    shape = (height, width) if channels == 1 else (channels, height, width)
    return arr.reshape(shape)


def _parse_header(header):
    parts = header.split()
    if not parts or parts[0] != MAGIC:
        raise FormatError(f"bad magic: expected {MAGIC!r}")
    if len(parts) < 2 or not parts[1].startswith("v"):
        raise FormatError("missing version field")
    try:
        version = int(parts[1][1:])
    except ValueError:
        raise FormatError(f"unparseable version {parts[1]!r}") from None
    if version != VERSION:
        raise FormatError(f"unsupported version {version}, this build reads v{VERSION}")

    fields = {}
    for part in parts[2:]:
        if "=" not in part:
            raise FormatError(f"malformed header field {part!r}")
        key, value = part.split("=", 1)
        fields[key] = value
    for key in ("kind", "channels", "height", "width", "nbytes"):
        if key not in fields:
            raise FormatError(f"header missing field {key!r}")
    return fields


def _int_field(fields, key):
    try:
        value = int(fields[key])
    except ValueError:
        raise FormatError(f"header field {key!r} is not an integer: {fields[key]!r}") from None
    if value < 0:
        raise FormatError(f"header field {key!r} must be non-negative, got {value}")
    return value


def _expected_bytes(kind, count):
    if kind == "bool":
        return (count + 7) // 8
    return count * _KINDS[kind].itemsize
