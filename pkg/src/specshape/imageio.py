"""8-bit image container plus PPM/PGM (binary) and PNG codecs."""
import io
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import CorruptHeaderError, EmptyImageError, UnsupportedFormatError


@dataclass
class Image:
    """Row-major 8-bit samples, shape (height, width) or (height, width, 3)."""

    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data)
        if data.dtype != np.uint8:
            raise TypeError(f"image data must be uint8, got {data.dtype}")
        if data.ndim not in (2, 3) or (data.ndim == 3 and data.shape[2] != 3):
            raise ValueError(f"image must be HxW or HxWx3, got shape {data.shape}")
        self.data = data

    @property
    def height(self):
        return self.data.shape[0]

    @property
    def width(self):
        return self.data.shape[1]

    @property
    def channels(self):
        return 1 if self.data.ndim == 2 else 3

    def as_float(self):
        return self.data.astype(np.float64) / 255.0

    @classmethod
    def from_float(cls, values):
        """Quantize unit-interval samples to 8 bits, rounding half up."""
        q = np.floor(np.clip(values, 0.0, 1.0) * 255.0 + 0.5)
        return cls(q.astype(np.uint8))

    def to_rgb(self):
        if self.channels == 3:
            return Image(self.data.copy())
        return Image(np.repeat(self.data[:, :, None], 3, axis=2))


_PNM_HEADER = re.compile(rb"\A(P[56])(?:\s+|#[^\n]*\n)+?(\d+)(?:\s+|#[^\n]*\n)+?(\d+)"
                         rb"(?:\s+|#[^\n]*\n)+?(\d+)\s")


def decode_image(raw):
    """Decode binary PGM (P5), PPM (P6) or 8-bit PNG bytes."""
    raw = bytes(raw)
    if raw.startswith(b"\x89PNG"):
        return _decode_png(raw)
    if raw[:2] not in (b"P5", b"P6"):
        raise UnsupportedFormatError("not a binary PGM/PPM or PNG file")
    m = _PNM_HEADER.match(raw)
    if m is None:
        raise CorruptHeaderError("malformed PNM header")
    magic, width, height, maxval = m.group(1), int(m.group(2)), int(m.group(3)), int(m.group(4))
    if maxval != 255:
        raise UnsupportedFormatError(f"only maxval 255 is supported, got {maxval}")
    if width <= 0 or height <= 0:
        raise EmptyImageError("image has no pixels")
    channels = 3 if magic == b"P6" else 1
    need = width * height * channels
    payload = raw[m.end():]
    if len(payload) < need:
        raise CorruptHeaderError(f"payload truncated: expected {need} bytes, got {len(payload)}")
    data = np.frombuffer(payload[:need], dtype=np.uint8)
    shape = (height, width, 3) if channels == 3 else (height, width)
    return Image(data.reshape(shape).copy())


def _decode_png(raw):
    from PIL import Image as PILImage

    try:
        pil = PILImage.open(io.BytesIO(raw))
        pil.load()
    except Exception as exc:
        raise CorruptHeaderError(f"cannot decode PNG: {exc}") from exc
    if pil.mode in ("L", "RGB"):
        arr = np.asarray(pil)
    elif pil.mode in ("LA", "RGBA", "P"):
        # alpha carries no meaning here; drop it
        arr = np.asarray(pil.convert("RGB" if pil.mode != "LA" else "L"))
    else:
        raise UnsupportedFormatError(f"unsupported PNG mode {pil.mode}")
    return Image(np.ascontiguousarray(arr, dtype=np.uint8))


def encode_image(img):
    """Encode as binary PGM (grey) or PPM (RGB) with a canonical header."""
    magic = b"P6" if img.channels == 3 else b"P5"
    header = b"%s\n%d %d\n255\n" % (magic, img.width, img.height)
    return header + np.ascontiguousarray(img.data).tobytes()


def read_image(path):
    return decode_image(Path(path).read_bytes())


def write_image(path, img):
    Path(path).write_bytes(encode_image(img))
