"""Image containers plus readers/writers for Radiance RGBE, PFM and 8-bit PNG.

HDR data is held as float64 ``(height, width, 3)`` arrays of linear,
relative radiance. LDR data is display-encoded, in ``[0, 1]``.
"""

import io
import os
import re
import struct
import zlib
from dataclasses import dataclass

import numpy as np
from PIL import Image

from .errors import ArgumentError, FormatError

HDR_FORMATS = ("radiance-rgbe", "pfm")
LDR_FORMATS = ("png",)

_PNG_SIGNATURE = b"\x89PNG\r\n\x1a\n"


def _check_shape(data):
    if data.ndim != 3 or data.shape[2] != 3:
        raise ArgumentError(f"expected (height, width, 3) array, got shape {data.shape}")
    if data.shape[0] <= 0 or data.shape[1] <= 0:
        raise ArgumentError(f"image dimensions must be positive, got {data.shape[1]}x{data.shape[0]}")


@dataclass(frozen=True, eq=False)
class HdrImage:
    """Linear relative radiance, three channels, finite and nonnegative."""

    data: np.ndarray

    def __post_init__(self):
        data = np.array(self.data, dtype=np.float64)
        _check_shape(data)
        if not np.all(np.isfinite(data)):
            raise ArgumentError("HDR image contains non-finite values")
        if np.any(data < 0):
            raise ArgumentError("HDR image contains negative values")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @property
    def height(self):
        return self.data.shape[0]

    @property
    def width(self):
        return self.data.shape[1]

    @property
    def shape(self):
        return self.data.shape

    def scaled(self, factor):
        return HdrImage(self.data * factor)


@dataclass(frozen=True, eq=False)
class LdrImage:
    """Display-encoded image with every channel value in ``[0, 1]``."""

    data: np.ndarray

    def __post_init__(self):
        data = np.array(self.data, dtype=np.float64)
        _check_shape(data)
        if not np.all(np.isfinite(data)) or data.min() < 0.0 or data.max() > 1.0:
            raise ArgumentError("LDR image values must lie in [0, 1]")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @property
    def height(self):
        return self.data.shape[0]

    @property
    def width(self):
        return self.data.shape[1]

    @property
    def shape(self):
        return self.data.shape


# ---------------------------------------------------------------------------
# format detection


def detect_format(path):
    """Guess the on-disk format from magic bytes, falling back to the extension."""
    with open(path, "rb") as f:
        head = f.read(16)
    if head.startswith(_PNG_SIGNATURE):
        return "png"
    if head.startswith(b"#?"):
        return "radiance-rgbe"
    if head[:2] in (b"PF", b"Pf") and head[2:3] in (b"\n", b"\r", b" ", b"\t"):
        return "pfm"
    ext = os.path.splitext(str(path))[1].lower()
    by_ext = {".hdr": "radiance-rgbe", ".rgbe": "radiance-rgbe", ".pic": "radiance-rgbe",
              ".pfm": "pfm", ".png": "png"}
    if ext in by_ext:
        return by_ext[ext]
    raise FormatError("unrecognized image format", offset=0, path=path)


def normalize_format(name):
    aliases = {"hdr": "radiance-rgbe", "rgbe": "radiance-rgbe", "radiance": "radiance-rgbe",
               "radiance-rgbe": "radiance-rgbe", "pfm": "pfm", "png": "png", "ldr": "png"}
    try:
        return aliases[name.lower()]
    except KeyError:
        raise ArgumentError(f"unknown image format {name!r}") from None


def read_image(path, fmt=None):
    """Read either kind of image; returns an HdrImage or an LdrImage."""
    fmt = detect_format(path) if fmt is None else normalize_format(fmt)
    if fmt == "png":
        return read_ldr(path)
    return read_hdr(path, fmt)


# ---------------------------------------------------------------------------
# HDR


def read_hdr(path, format=None):
    """Read a Radiance RGBE or PFM file into an :class:`HdrImage`."""
    fmt = detect_format(path) if format is None else normalize_format(format)
    with open(path, "rb") as f:
        buf = f.read()
    if fmt == "pfm":
        data = _decode_pfm(buf, path)
    elif fmt == "radiance-rgbe":
        data = _decode_rgbe(buf, path)
    else:
        raise FormatError(f"{fmt} is not an HDR format", offset=0, path=path)
    return HdrImage(data)


def write_hdr(image, path, format="pfm"):
    fmt = normalize_format(format)
    data = image.data if isinstance(image, HdrImage) else HdrImage(image).data
    if fmt == "pfm":
        payload = _encode_pfm(data)
    elif fmt == "radiance-rgbe":
        payload = _encode_rgbe(data)
    else:
        raise ArgumentError(f"{fmt} is not an HDR format")
    with open(path, "wb") as f:
        f.write(payload)


def _read_token(buf, pos, path):
    """Return the next whitespace-delimited header token and the position after it."""
    n = len(buf)
    while pos < n and buf[pos:pos + 1].isspace():
        pos += 1
    start = pos
    while pos < n and not buf[pos:pos + 1].isspace():
        pos += 1
    if start == pos:
        raise FormatError("truncated header", offset=start, path=path)
    return buf[start:pos], start, pos


def _decode_pfm(buf, path=None):
    magic, _, pos = _read_token(buf, 0, path)
    if magic == b"PF":
        channels = 3
    elif magic == b"Pf":
        channels = 1
    else:
        raise FormatError("missing PF/Pf magic", offset=0, path=path)

    values = []
    for what in ("width", "height", "scale"):
        tok, start, pos = _read_token(buf, pos, path)
        try:
            values.append(int(tok) if what != "scale" else float(tok))
        except ValueError:
            raise FormatError(f"bad {what} {tok!r}", offset=start, path=path) from None
    width, height, scale = values
    if width <= 0 or height <= 0:
        raise FormatError(f"nonpositive dimensions {width}x{height}", offset=start, path=path)
    if scale == 0 or not np.isfinite(scale):
        raise FormatError("scale must be finite and nonzero", offset=start, path=path)
    # exactly one whitespace byte separates the header from the raster
    pos += 1

    count = width * height * channels
    need = pos + 4 * count
    if len(buf) < need:
        raise FormatError(f"truncated payload: need {4 * count} bytes, have {len(buf) - pos}",
                          offset=len(buf), path=path)
    dtype = "<f4" if scale < 0 else ">f4"
    raster = np.frombuffer(buf, dtype=dtype, count=count, offset=pos)
    _reject_bad_pixels(raster, pos, path)
    raster = raster.reshape(height, width, channels)[::-1]
    if channels == 1:
        raster = np.repeat(raster, 3, axis=2)
    return raster.astype(np.float64)


def _reject_bad_pixels(raster, payload_offset, path):
    bad = ~np.isfinite(raster) | (raster < 0)
    if bad.any():
        idx = int(np.flatnonzero(bad)[0])
        kind = "non-finite" if not np.isfinite(raster[idx]) else "negative"
        raise FormatError(f"{kind} pixel value {raster[idx]!r}",
                          offset=payload_offset + 4 * idx, path=path)


def _encode_pfm(data):
    height, width, _ = data.shape
    header = f"PF\n{width} {height}\n-1.0\n".encode("ascii")
    raster = np.ascontiguousarray(data[::-1], dtype="<f4")
    return header + raster.tobytes()


_RES_RE = re.compile(rb"^([-+])Y\s+(\d+)\s+\+X\s+(\d+)$")


def _decode_rgbe(buf, path=None):
    if not buf.startswith(b"#?"):
        raise FormatError("missing #? magic", offset=0, path=path)
    pos = 0
    # header: lines up to the first empty one
    while True:
        end = buf.find(b"\n", pos)
        if end < 0:
            raise FormatError("unterminated header", offset=len(buf), path=path)
        line = buf[pos:end].rstrip(b"\r")
        if line.startswith(b"FORMAT="):
            value = line[len(b"FORMAT="):].strip()
            if value != b"32-bit_rle_rgbe":
                raise FormatError(f"unsupported pixel format {value.decode(errors='replace')}",
                                  offset=pos, path=path)
        pos = end + 1
        if not line:
            break

    end = buf.find(b"\n", pos)
    if end < 0:
        raise FormatError("missing resolution line", offset=pos, path=path)
    m = _RES_RE.match(buf[pos:end].strip())
    if m is None:
        raise FormatError("unsupported resolution line "
                          f"{buf[pos:end].decode(errors='replace')!r}", offset=pos, path=path)
    bottom_up = m.group(1) == b"+"
    height, width = int(m.group(2)), int(m.group(3))
    if width <= 0 or height <= 0:
        raise FormatError(f"nonpositive dimensions {width}x{height}", offset=pos, path=path)
    pos = end + 1

    rgbe = np.empty((height, width, 4), dtype=np.uint8)
    for y in range(height):
        pos = _read_scanline(buf, pos, width, rgbe[y], path)
    if bottom_up:
        rgbe = rgbe[::-1]
    return rgbe_to_float(rgbe)


def _read_scanline(buf, pos, width, out, path):
    n = len(buf)
    rle = (8 <= width < 32768 and pos + 4 <= n and buf[pos] == 2 and buf[pos + 1] == 2
           and not buf[pos + 2] & 0x80)
    if not rle:
        need = 4 * width
        if pos + need > n:
            raise FormatError("truncated scanline", offset=n, path=path)
        out[:] = np.frombuffer(buf, np.uint8, need, pos).reshape(width, 4)
        return pos + need

    if (buf[pos + 2] << 8 | buf[pos + 3]) != width:
        raise FormatError("scanline width mismatch", offset=pos, path=path)
    pos += 4
    for c in range(4):
        x = 0
        while x < width:
            if pos >= n:
                raise FormatError("truncated run-length data", offset=pos, path=path)
            count = buf[pos]
            if count > 128:
                count -= 128
                if x + count > width or pos + 1 >= n:
                    raise FormatError("bad run length", offset=pos, path=path)
                out[x:x + count, c] = buf[pos + 1]
                pos += 2
            else:
                if count == 0 or x + count > width:
                    raise FormatError("bad literal length", offset=pos, path=path)
                if pos + 1 + count > n:
                    raise FormatError("truncated run-length data", offset=n, path=path)
                out[x:x + count, c] = np.frombuffer(buf, np.uint8, count, pos + 1)
                pos += 1 + count
            x += count
    return pos


def rgbe_to_float(rgbe):
    """Decode shared-exponent pixels: channel = mantissa / 256 * 2**(e - 128)."""
    rgbe = np.asarray(rgbe)
    exponent = rgbe[..., 3].astype(np.int32)
    scale = np.where(exponent > 0, np.ldexp(1.0, exponent - 136), 0.0)
    return rgbe[..., :3].astype(np.float64) * scale[..., None]


def float_to_rgbe(data):
    data = np.asarray(data, dtype=np.float64)
    peak = data.max(axis=-1)
    mant, exp = np.frexp(peak)
    if np.any((exp > 127) & (peak > 0)):
        raise ArgumentError("radiance value too large for RGBE")
    out = np.zeros(data.shape[:-1] + (4,), dtype=np.uint8)
    ok = (peak > 0) & (exp > -128)
    scale = np.ldexp(1.0, 8 - exp[ok])
    out[ok, :3] = np.clip(np.floor(data[ok] * scale[:, None]), 0, 255).astype(np.uint8)
    out[ok, 3] = (exp[ok] + 128).astype(np.uint8)
    return out


def _encode_rgbe(data):
    height, width, _ = data.shape
    rgbe = float_to_rgbe(data)
    out = io.BytesIO()
    out.write(b"#?RADIANCE\nFORMAT=32-bit_rle_rgbe\n\n")
    out.write(f"-Y {height} +X {width}\n".encode("ascii"))
    for y in range(height):
        if 8 <= width < 32768:
            out.write(bytes((2, 2, width >> 8, width & 0xFF)))
            for c in range(4):
                out.write(_rle_channel(rgbe[y, :, c].tobytes()))
        else:
            out.write(rgbe[y].tobytes())
    return out.getvalue()


def _rle_channel(row, min_run=4):
    out = bytearray()
    n = len(row)
    i = 0
    while i < n:
        # find the next run of at least min_run equal bytes
        j = i
        while j < n:
            k = j
            while k < n and row[k] == row[j] and k - j < 127:
                k += 1
            if k - j >= min_run:
                break
            j += 1
        run_start = j
        # literals before the run
        while i < run_start:
            count = min(128, run_start - i)
            out.append(count)
            out += row[i:i + count]
            i += count
        if run_start < n:
            length = k - run_start
            out += bytes((128 + length, row[run_start]))
            i = run_start + length
    return bytes(out)


# ---------------------------------------------------------------------------
# LDR


def _png_header(buf, path):
    if not buf.startswith(_PNG_SIGNATURE):
        raise FormatError("missing PNG signature", offset=0, path=path)
    if len(buf) < 33 or buf[12:16] != b"IHDR":
        raise FormatError("missing IHDR chunk", offset=8, path=path)
    width, height, depth, color_type = struct.unpack(">IIBB", buf[16:26])
    return width, height, depth, color_type


def read_ldr(path):
    """Read an 8-bit RGB PNG; byte ``p`` becomes ``p / 255`` (no gamma handling)."""
    with open(path, "rb") as f:
        buf = f.read()
    width, height, depth, color_type = _png_header(buf, path)
    if depth != 8:
        raise FormatError(f"expected 8-bit PNG, got {depth}-bit", offset=24, path=path)
    if color_type != 2:
        raise FormatError(f"expected RGB PNG (color type 2), got color type {color_type}",
                          offset=25, path=path)
    if width == 0 or height == 0:
        raise FormatError("nonpositive dimensions", offset=16, path=path)
    try:
        with Image.open(io.BytesIO(buf)) as im:
            pixels = np.asarray(im.convert("RGB"), dtype=np.uint8)
    except (OSError, zlib.error, SyntaxError) as exc:
        raise FormatError(f"corrupt PNG data ({exc})", offset=33, path=path) from None
    return LdrImage(pixels / 255.0)


def to_bytes(image):
    """Quantize to uint8 with round-half-up."""
    data = image.data if isinstance(image, LdrImage) else LdrImage(image).data
    return np.floor(data * 255.0 + 0.5).astype(np.uint8)


def write_ldr(image, path):
    Image.fromarray(to_bytes(image)).save(path, format="PNG")
