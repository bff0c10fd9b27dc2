"""Raster types and HDR/LDR file loading.

HDR images come from Radiance RGBE (``.hdr``) or PFM (``.pfm``) files and
hold linear radiance. LDR images come from 8-bit PNG files and hold display
codes normalized to [0, 1]. Both are stored as ``(height, width, 3)``
float64 arrays that are marked read-only after validation.
"""
from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np
from PIL import Image

from .errors import (
    AllZeroPlane,
    InvalidImage,
    MalformedHeader,
    TruncatedPayload,
    UnsupportedBitDepth,
    UnsupportedFormat,
)

MIN_SIDE = 8

PathLike = Union[str, Path]


class Channel(enum.Enum):
    R = 0
    G = 1
    B = 2

    @classmethod
    def parse(cls, name: Union[str, "Channel"]) -> "Channel":
        if isinstance(name, Channel):
            return name
        try:
            return cls[str(name).strip().upper()]
        except KeyError:
            raise ValueError(f"unknown channel {name!r}; expected one of R, G, B") from None


def check_plane(samples, name: str = "plane") -> np.ndarray:
    """Validate a 2D raster and return it as a read-only float64 array."""
    arr = np.array(samples, dtype=np.float64)
    if arr.ndim != 2:
        raise InvalidImage(f"{name}: expected a 2D array, got shape {arr.shape}")
    h, w = arr.shape
    if h < MIN_SIDE or w < MIN_SIDE:
        raise InvalidImage(f"{name}: {w}x{h} is smaller than the {MIN_SIDE}x{MIN_SIDE} minimum")
    if not np.all(np.isfinite(arr)):
        raise InvalidImage(f"{name}: contains NaN or Inf samples")
    arr.setflags(write=False)
    return arr


def _check_rgb(data, kind: str) -> np.ndarray:
    arr = np.array(data, dtype=np.float64)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise InvalidImage(f"{kind}: expected (height, width, 3) data, got shape {arr.shape}")
    for c in Channel:
        check_plane(arr[:, :, c.value], name=f"{kind} channel {c.name}")
    arr.setflags(write=False)
    return arr


class _RgbImage:
    data: np.ndarray

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def shape(self) -> tuple:
        return self.data.shape[:2]

    @property
    def r(self) -> np.ndarray:
        return self.data[:, :, 0]

    @property
    def g(self) -> np.ndarray:
        return self.data[:, :, 1]

    @property
    def b(self) -> np.ndarray:
        return self.data[:, :, 2]

    def channel(self, c) -> np.ndarray:
        return self.data[:, :, Channel.parse(c).value]


@dataclass(frozen=True, eq=False)
class HdrImage(_RgbImage):
    """Three-channel HDR raster.

    ``domain`` is ``"linear"`` for scene radiance (all samples >= 0) or
    ``"log"`` for the output of :func:`log_compress`, where negative samples
    are allowed.
    """

    data: np.ndarray
    source_path: str | None = None
    domain: str = "linear"

    def __post_init__(self):
        if self.domain not in ("linear", "log"):
            raise ValueError(f"unknown HDR domain {self.domain!r}")
        arr = _check_rgb(self.data, "HdrImage")
        if self.domain == "linear" and np.any(arr < 0):
            raise InvalidImage("HdrImage: linear radiance must be non-negative")
        object.__setattr__(self, "data", arr)

    @classmethod
    def from_planes(cls, r, g, b, source_path=None, domain="linear") -> "HdrImage":
        return cls(_stack(r, g, b), source_path=source_path, domain=domain)


@dataclass(frozen=True, eq=False)
class LdrImage(_RgbImage):
    """Three-channel display-referred raster with samples in [0, 1]."""

    data: np.ndarray
    source_path: str | None = None

    def __post_init__(self):
        arr = _check_rgb(self.data, "LdrImage")
        if np.any(arr < 0) or np.any(arr > 1):
            raise InvalidImage("LdrImage: samples must lie in [0, 1]")
        object.__setattr__(self, "data", arr)

    @classmethod
    def from_planes(cls, r, g, b, source_path=None) -> "LdrImage":
        return cls(_stack(r, g, b), source_path=source_path)


def _stack(r, g, b) -> np.ndarray:
    planes = [np.asarray(p, dtype=np.float64) for p in (r, g, b)]
    if not (planes[0].shape == planes[1].shape == planes[2].shape):
        raise InvalidImage(
            "channel planes differ in size: " + ", ".join(str(p.shape) for p in planes)
        )
    return np.stack(planes, axis=-1)


def extract_channel(img: HdrImage | LdrImage, c) -> np.ndarray:
    return img.channel(c)


def log_compress(h: HdrImage) -> HdrImage:
    """Return ``ln(x + eps)`` per plane, ``eps`` being the plane's smallest positive sample.

    Raises :class:`AllZeroPlane` when a plane has no positive sample.
    """
    if h.domain != "linear":
        raise ValueError("log_compress expects a linear-radiance HdrImage")
    out = np.empty_like(h.data)
    for c in Channel:
        plane = h.data[:, :, c.value]
        positive = plane[plane > 0]
        if positive.size == 0:
            raise AllZeroPlane(f"channel {c.name} has no positive sample")
        out[:, :, c.value] = np.log(plane + positive.min())
    return HdrImage(out, source_path=h.source_path, domain="log")


# --------------------------------------------------------------------------
# Radiance RGBE

_RGBE_MAGIC = b"#?"
_RES_RE = re.compile(rb"^([-+])Y\s+(\d+)\s+([-+])X\s+(\d+)\s*$")


def decode_rgbe(rgbe) -> np.ndarray:
    """Convert ``(..., 4)`` RGBE bytes to ``(..., 3)`` float64 radiance.

    A zero exponent byte encodes black; otherwise each component is
    ``(mantissa + 0.5) / 256 * 2**(exponent - 128)``.
    """
    rgbe = np.asarray(rgbe, dtype=np.uint8)
    mant = rgbe[..., :3].astype(np.float64)
    exp = rgbe[..., 3].astype(np.int64)
    scale = np.ldexp(1.0, exp - 136)
    out = (mant + 0.5) * scale[..., None]
    out[exp == 0] = 0.0
    return out


def encode_rgbe(rgb) -> np.ndarray:
    rgb = np.asarray(rgb, dtype=np.float64)
    if np.any(rgb < 0) or not np.all(np.isfinite(rgb)):
        raise ValueError("RGBE can only encode finite non-negative values")
    peak = rgb.max(axis=-1)
    mant, exp = np.frexp(peak)
    out = np.zeros(rgb.shape[:-1] + (4,), dtype=np.uint8)
    ok = peak >= 1e-32
    scale = np.zeros_like(peak)
    scale[ok] = mant[ok] * 256.0 / peak[ok]
    codes = np.floor(rgb * scale[..., None])
    out[..., :3] = np.clip(codes, 0, 255).astype(np.uint8)
    out[..., 3] = np.where(ok, exp + 128, 0).astype(np.uint8)
    out[~ok] = 0
    return out


def _read_rgbe_header(buf: bytes) -> tuple[int, int, bool, bool, int]:
    if not buf.startswith(_RGBE_MAGIC):
        raise MalformedHeader("missing Radiance '#?' signature")
    pos = 0
    fmt = None
    while True:
        nl = buf.find(b"\n", pos)
        if nl < 0:
            raise MalformedHeader("header is not terminated by a blank line")
        line = buf[pos:nl].rstrip(b"\r")
        pos = nl + 1
        if not line:
            break
        if line.startswith(b"FORMAT="):
            fmt = line[len(b"FORMAT="):].strip()
    if fmt is not None and fmt != b"32-bit_rle_rgbe":
        raise UnsupportedFormat(f"unsupported Radiance pixel format {fmt.decode(errors='replace')}")
    nl = buf.find(b"\n", pos)
    if nl < 0:
        raise MalformedHeader("missing resolution line")
    m = _RES_RE.match(buf[pos:nl])
    if m is None:
        raise UnsupportedFormat(f"unsupported resolution line {buf[pos:nl][:40]!r}")
    flip_y = m.group(1) == b"+"
    flip_x = m.group(3) == b"-"
    height, width = int(m.group(2)), int(m.group(4))
    return width, height, flip_y, flip_x, nl + 1


def _read_scanline(buf: memoryview, pos: int, width: int) -> tuple[np.ndarray, int]:
    n = len(buf)
    if 8 <= width <= 0x7FFF and pos + 4 <= n:
        head = buf[pos:pos + 4]
        if head[0] == 2 and head[1] == 2 and not head[2] & 0x80:
            if (head[2] << 8 | head[3]) != width:
                raise MalformedHeader("RLE scanline width does not match the image width")
            pos += 4
            line = np.empty((4, width), dtype=np.uint8)
            for c in range(4):
                i = 0
                while i < width:
                    if pos >= n:
                        raise TruncatedPayload("RLE data ends mid-scanline")
                    count = buf[pos]
                    pos += 1
                    if count > 128:
                        count -= 128
                        if i + count > width or pos >= n:
                            raise TruncatedPayload("bad RLE run")
                        line[c, i:i + count] = buf[pos]
                        pos += 1
                    else:
                        if count == 0 or i + count > width:
                            raise MalformedHeader("bad RLE literal count")
                        if pos + count > n:
                            raise TruncatedPayload("RLE literal runs past end of file")
                        line[c, i:i + count] = np.frombuffer(buf[pos:pos + count], dtype=np.uint8)
                        pos += count
                    i += count
            return line.T, pos
    end = pos + 4 * width
    if end > n:
        raise TruncatedPayload(f"expected {4 * width} bytes of flat scanline data")
    return np.frombuffer(buf[pos:end], dtype=np.uint8).reshape(width, 4), end


def read_rgbe(path: PathLike) -> np.ndarray:
    """Read a Radiance ``.hdr`` file into a ``(height, width, 3)`` float64 array."""
    buf = Path(path).read_bytes()
    width, height, flip_y, flip_x, pos = _read_rgbe_header(buf)
    view = memoryview(buf)
    pixels = np.empty((height, width, 4), dtype=np.uint8)
    for y in range(height):
        pixels[y], pos = _read_scanline(view, pos, width)
    rgb = decode_rgbe(pixels)
    if flip_y:
        rgb = rgb[::-1]
    if flip_x:
        rgb = rgb[:, ::-1]
    return np.ascontiguousarray(rgb)


def _rle_encode_channel(values: np.ndarray) -> bytes:
    out = bytearray()
    n = len(values)
    i = 0
    while i < n:
        # find the next run of at least 4 equal bytes
        run_start = i
        run_len = 0
        while run_start < n:
            run_len = 1
            while (run_start + run_len < n and run_len < 127
                   and values[run_start + run_len] == values[run_start]):
                run_len += 1
            if run_len >= 4:
                break
            run_start += run_len
        while i < run_start:
            count = min(128, run_start - i)
            out.append(count)
            out.extend(values[i:i + count].tobytes())
            i += count
        if run_start < n and run_len >= 4:
            out.append(128 + run_len)
            out.append(int(values[run_start]))
            i = run_start + run_len
    return bytes(out)


def write_rgbe(path: PathLike, rgb, rle: bool = True) -> None:
    """Write a ``(height, width, 3)`` array as a Radiance ``.hdr`` file."""
    rgb = np.asarray(rgb, dtype=np.float64)
    height, width = rgb.shape[:2]
    pixels = encode_rgbe(rgb)
    chunks = [
        b"#?RADIANCE\nFORMAT=32-bit_rle_rgbe\n\n",
        f"-Y {height} +X {width}\n".encode("ascii"),
    ]
    use_rle = rle and 8 <= width <= 0x7FFF
    for y in range(height):
        if use_rle:
            chunks.append(bytes([2, 2, width >> 8, width & 0xFF]))
            for c in range(4):
                chunks.append(_rle_encode_channel(pixels[y, :, c]))
        else:
            chunks.append(pixels[y].tobytes())
    Path(path).write_bytes(b"".join(chunks))


# --------------------------------------------------------------------------
# PFM


def _pfm_token(buf: bytes, pos: int) -> tuple[bytes, int]:
    while pos < len(buf) and buf[pos:pos + 1].isspace():
        pos += 1
    start = pos
    while pos < len(buf) and not buf[pos:pos + 1].isspace():
        pos += 1
    if start == pos:
        raise MalformedHeader("PFM header ends early")
    return buf[start:pos], pos


def read_pfm(path: PathLike) -> np.ndarray:
    """Read a PFM file into a top-to-bottom ``(height, width, channels)`` float32 array.

    A negative scale field marks little-endian sample data.
    """
    buf = Path(path).read_bytes()
    magic, pos = _pfm_token(buf, 0)
    if magic == b"PF":
        channels = 3
    elif magic == b"Pf":
        channels = 1
    else:
        raise MalformedHeader(f"bad PFM signature {magic[:8]!r}")
    try:
        w_tok, pos = _pfm_token(buf, pos)
        h_tok, pos = _pfm_token(buf, pos)
        s_tok, pos = _pfm_token(buf, pos)
        width, height, scale = int(w_tok), int(h_tok), float(s_tok)
    except ValueError as exc:
        raise MalformedHeader(f"unparseable PFM header: {exc}") from None
    if width <= 0 or height <= 0 or scale == 0:
        raise MalformedHeader("PFM dimensions must be positive and scale non-zero")
    pos += 1  # single whitespace byte ends the header
    dtype = np.dtype("<f4") if scale < 0 else np.dtype(">f4")
    count = width * height * channels
    if len(buf) - pos < count * 4:
        raise TruncatedPayload(f"PFM promises {count} samples, file holds {(len(buf) - pos) // 4}")
    data = np.frombuffer(buf, dtype=dtype, count=count, offset=pos)
    data = data.reshape(height, width, channels)[::-1]
    return data.astype(np.float32)


def write_pfm(path: PathLike, data, little_endian: bool = True) -> None:
    """Write a 2D (``Pf``) or ``(h, w, 3)`` (``PF``) array as PFM, rows bottom-to-top."""
    arr = np.asarray(data, dtype=np.float32)
    if arr.ndim == 2:
        magic = b"Pf"
        arr = arr[:, :, None]
    elif arr.ndim == 3 and arr.shape[2] == 3:
        magic = b"PF"
    else:
        raise ValueError(f"PFM needs a 2D or (h, w, 3) array, got shape {arr.shape}")
    height, width = arr.shape[:2]
    dtype = np.dtype("<f4") if little_endian else np.dtype(">f4")
    scale = -1.0 if little_endian else 1.0
    header = magic + f"\n{width} {height}\n{scale}\n".encode("ascii")
    Path(path).write_bytes(header + np.ascontiguousarray(arr[::-1], dtype=dtype).tobytes())


# --------------------------------------------------------------------------
# Loaders


def load_hdr(path: PathLike) -> HdrImage:
    """Load a Radiance ``.hdr`` or ``.pfm`` file as linear radiance."""
    path = Path(path)
    with open(path, "rb") as fh:
        head = fh.read(2)
    if head == _RGBE_MAGIC:
        rgb = read_rgbe(path)
    elif head in (b"PF", b"Pf"):
        rgb = read_pfm(path).astype(np.float64)
        if rgb.shape[2] == 1:
            rgb = np.repeat(rgb, 3, axis=2)
    elif path.suffix.lower() in (".hdr", ".pic", ".rgbe", ".pfm"):
        raise MalformedHeader(f"{path}: signature does not match its {path.suffix} extension")
    else:
        raise UnsupportedFormat(f"{path}: not a Radiance RGBE or PFM file")
    return HdrImage(rgb, source_path=str(path))


_PNG_SIGNATURE = b"\x89PNG\r\n\x1a\n"


def load_ldr(path: PathLike) -> LdrImage:
    """Load an 8-bit PNG; code ``v`` maps to ``v / 255``.

    Grayscale is promoted to three identical channels and alpha is dropped.
    16-bit (and sub-byte grayscale) PNGs are rejected.
    """
    path = Path(path)
    with open(path, "rb") as fh:
        head = fh.read(33)
    if not head.startswith(_PNG_SIGNATURE):
        raise MalformedHeader(f"{path}: not a PNG file")
    if len(head) < 33 or head[12:16] != b"IHDR":
        raise MalformedHeader(f"{path}: missing IHDR chunk")
    bit_depth, color_type = head[24], head[25]
    if color_type == 3:
        pass  # palette entries are always 8-bit
    elif bit_depth != 8:
        raise UnsupportedBitDepth(f"{path}: {bit_depth}-bit PNG, only 8-bit is supported")
    try:
        with Image.open(path) as im:
            im.load()
            if im.mode in ("RGBA", "P", "PA", "LA", "CMYK", "YCbCr"):
                im = im.convert("RGB")
            if im.mode not in ("L", "RGB"):
                raise UnsupportedFormat(f"{path}: unsupported PNG mode {im.mode}")
            codes = np.asarray(im, dtype=np.uint8)
    except (OSError, SyntaxError) as exc:
        raise TruncatedPayload(f"{path}: {exc}") from None
    if codes.ndim == 2:
        codes = np.repeat(codes[:, :, None], 3, axis=2)
    return LdrImage(codes.astype(np.float64) / 255.0, source_path=str(path))


def save_ldr(path: PathLike, img: LdrImage | np.ndarray) -> None:
    """Write an LDR image (or ``[0, 1]`` array) as an 8-bit RGB PNG."""
    data = img.data if isinstance(img, LdrImage) else np.asarray(img, dtype=np.float64)
    codes = np.clip(np.round(data * 255.0), 0, 255).astype(np.uint8)
    Image.fromarray(codes).save(path, format="PNG")


def save_hdr(path: PathLike, img: HdrImage | np.ndarray) -> None:
    """Write HDR data as ``.hdr`` (RGBE) or ``.pfm`` depending on the suffix."""
    data = img.data if isinstance(img, HdrImage) else np.asarray(img, dtype=np.float64)
    suffix = Path(path).suffix.lower()
    if suffix == ".pfm":
        write_pfm(path, data)
    elif suffix in (".hdr", ".pic", ".rgbe"):
        write_rgbe(path, data)
    else:
        raise UnsupportedFormat(f"cannot infer HDR format from suffix {suffix!r}")
