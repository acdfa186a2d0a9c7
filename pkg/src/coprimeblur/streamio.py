"""Directory-of-frames streams: ``manifest.json`` plus ``frame_%06d.{pfm,pgm,ppm}``.

Float streams are PFM (little-endian float32, rows stored bottom-up as the
format requires). Quantized streams are binary PGM/PPM with maxval 255 or
65535; 16-bit samples are big-endian.
"""
import json
import os
import re
from dataclasses import asdict, dataclass, fields
from typing import Optional

import numpy as np

from .errors import CorruptManifest, DimMismatch, FormatViolation, IoFailure, MissingFrame, PairMismatch
from .frames import BIT_DEPTHS, LEVELS, BlurredPair, Frame

MANIFEST = "manifest.json"
MANIFEST_VERSION = 1
ROLES = ("latent", "public", "private")


@dataclass
class StreamManifest:
    role: str
    frame_count: int
    width: int
    height: int
    bit_depth: str
    pair_id: str = ""
    kernel_width_hint: Optional[int] = None
    seed: Optional[int] = None
    version: int = MANIFEST_VERSION

    def __post_init__(self):
        if self.role not in ROLES:
            raise CorruptManifest(f"unknown role {self.role!r}")
        if self.bit_depth not in BIT_DEPTHS:
            raise CorruptManifest(f"unknown bit depth {self.bit_depth!r}")
        if self.frame_count < 1 or self.width < 1 or self.height < 1:
            raise CorruptManifest("frame_count, width and height must be >= 1")

    def to_json(self):
        return json.dumps(asdict(self), sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_json(cls, text):
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise CorruptManifest(f"manifest is not valid JSON: {exc}") from None
        if not isinstance(raw, dict):
            raise CorruptManifest("manifest must be a JSON object")
        known = {f.name for f in fields(cls)}
        missing = {"role", "frame_count", "width", "height", "bit_depth"} - raw.keys()
        if missing:
            raise CorruptManifest(f"manifest lacks keys {sorted(missing)}")
        if raw.get("version", MANIFEST_VERSION) != MANIFEST_VERSION:
            raise CorruptManifest(f"unsupported manifest version {raw.get('version')!r}")
        try:
            return cls(**{k: v for k, v in raw.items() if k in known})
        except TypeError as exc:
            raise CorruptManifest(str(exc)) from None


def frame_extension(bit_depth, channels):
    if bit_depth == "float32":
        return "pfm"
    return "pgm" if channels == 1 else "ppm"


def frame_path(directory, index, bit_depth, channels):
    return os.path.join(directory, f"frame_{index:06d}.{frame_extension(bit_depth, channels)}")


# -- single-image codecs ----------------------------------------------------------

def encode_pfm(planes):
    c, h, w = planes.shape
    tag = b"Pf" if c == 1 else b"PF"
    pixels = np.flipud(np.moveaxis(planes, 0, -1)).astype("<f4")
    return tag + b"\n%d %d\n-1.0\n" % (w, h) + pixels.tobytes()


def encode_pnm(planes, bit_depth):
    c, h, w = planes.shape
    top = LEVELS[bit_depth]
    ints = np.rint(np.moveaxis(planes, 0, -1) * top)
    dtype = ">u2" if top > 255 else "u1"
    tag = b"P5" if c == 1 else b"P6"
    return tag + b"\n%d %d\n%d\n" % (w, h, top) + ints.astype(dtype).tobytes()


_TOKEN = re.compile(rb"\s*(?:#[^\n]*\n\s*)*(\S+)")


def _header(data, count, path):
    tokens, pos = [], 0
    for _ in range(count):
        m = _TOKEN.match(data, pos)
        if not m:
            raise FormatViolation(path, pos, "truncated header")
        tokens.append(m.group(1))
        pos = m.end()
    if pos >= len(data) or data[pos:pos + 1] not in (b" ", b"\n", b"\r", b"\t"):
        raise FormatViolation(path, pos, "header must end with a single whitespace byte")
    return tokens, pos + 1


def _int(token, path, offset, what):
    try:
        v = int(token)
    except ValueError:
        raise FormatViolation(path, offset, f"bad {what} {token!r}") from None
    if v < 1:
        raise FormatViolation(path, offset, f"{what} must be positive")
    return v


def decode_image(data, path="<bytes>"):
    """Parse PFM/PGM/PPM bytes into ``(planes, bit_depth)``."""
    magic = data[:2]
    if magic in (b"Pf", b"PF"):
        (_, w, h, scale), start = _header(data, 4, path)
        w, h = _int(w, path, 3, "width"), _int(h, path, 3, "height")
        try:
            scale = float(scale)
        except ValueError:
            raise FormatViolation(path, 3, f"bad scale {scale!r}") from None
        c = 1 if magic == b"Pf" else 3
        dtype = "<f4" if scale < 0 else ">f4"
        need = w * h * c * 4
        if len(data) - start != need:
            raise FormatViolation(path, start, f"expected {need} pixel bytes, found {len(data) - start}")
        pixels = np.frombuffer(data, dtype=dtype, offset=start).reshape(h, w, c)
        return np.moveaxis(np.flipud(pixels), -1, 0).astype(np.float64), "float32"
    if magic in (b"P5", b"P6"):
        (_, w, h, top), start = _header(data, 4, path)
        w, h, top = _int(w, path, 3, "width"), _int(h, path, 3, "height"), _int(top, path, 3, "maxval")
        depth = {255: "u8", 65535: "u16"}.get(top)
        if depth is None:
            raise FormatViolation(path, 3, f"maxval {top} unsupported (expected 255 or 65535)")
        c = 1 if magic == b"P5" else 3
        dtype = "u1" if top == 255 else ">u2"
        need = w * h * c * np.dtype(dtype).itemsize
        if len(data) - start != need:
            raise FormatViolation(path, start, f"expected {need} pixel bytes, found {len(data) - start}")
        ints = np.frombuffer(data, dtype=dtype, offset=start).reshape(h, w, c)
        return np.moveaxis(ints, -1, 0).astype(np.float64) / top, depth
    raise FormatViolation(path, 0, f"unknown magic {magic!r}")


def encode_image(frame):
    if frame.bit_depth == "float32":
        return encode_pfm(frame.planes)
    return encode_pnm(frame.planes, frame.bit_depth)


# -- streams ------------------------------------------------------------------------

def _write(path, data):
    try:
        with open(path, "wb") as fh:
            fh.write(data)
    except OSError as exc:
        raise IoFailure(path, exc.strerror or str(exc)) from exc


def _read(path):
    try:
        with open(path, "rb") as fh:
            return fh.read()
    except OSError as exc:
        raise IoFailure(path, exc.strerror or str(exc)) from exc


def write_stream(frames, manifest, directory):
    frames = list(frames)
    if len(frames) != manifest.frame_count:
        raise DimMismatch(f"manifest declares {manifest.frame_count} frames, got {len(frames)}")
    for i, f in enumerate(frames):
        if (f.height, f.width) != (manifest.height, manifest.width):
            raise DimMismatch(f"frame {i} is {f.height}x{f.width}, manifest says {manifest.height}x{manifest.width}")
        if f.bit_depth != manifest.bit_depth:
            raise DimMismatch(f"frame {i} has bit depth {f.bit_depth}, manifest says {manifest.bit_depth}")
    try:
        os.makedirs(directory, exist_ok=True)
    except OSError as exc:
        raise IoFailure(directory, exc.strerror or str(exc)) from exc
    for i, f in enumerate(frames):
        _write(frame_path(directory, i, f.bit_depth, f.channels), encode_image(f))
    _write(os.path.join(directory, MANIFEST), manifest.to_json().encode("utf-8"))


def read_manifest(directory):
    path = os.path.join(directory, MANIFEST)
    if not os.path.exists(path):
        raise CorruptManifest(f"{path} does not exist")
    try:
        return StreamManifest.from_json(_read(path).decode("utf-8"))
    except UnicodeDecodeError:
        raise CorruptManifest(f"{path} is not UTF-8") from None


def _find_frame(directory, index, bit_depth):
    for channels in (1, 3):
        path = frame_path(directory, index, bit_depth, channels)
        if os.path.exists(path):
            return path
    raise MissingFrame(index, frame_path(directory, index, bit_depth, 1))


def read_frames(directory, manifest):
    for i in range(manifest.frame_count):
        path = _find_frame(directory, i, manifest.bit_depth)
        planes, depth = decode_image(_read(path), path)
        if depth != manifest.bit_depth or planes.shape[1:] != (manifest.height, manifest.width):
            raise FormatViolation(path, 0, f"frame is {planes.shape[1]}x{planes.shape[2]} {depth}, "
                                  f"manifest says {manifest.height}x{manifest.width} {manifest.bit_depth}")
        yield Frame(planes, depth, i)


def read_stream(directory):
    manifest = read_manifest(directory)
    return list(read_frames(directory, manifest)), manifest


def merge_hints(a, b):
    """A width hint survives only when both manifests carry the same one."""
    return a if a is not None and a == b else None


def check_pairing(pub, priv):
    if pub.pair_id != priv.pair_id:
        raise PairMismatch(f"pair_id differs: {pub.pair_id!r} vs {priv.pair_id!r}")
    if (pub.width, pub.height) != (priv.width, priv.height):
        raise PairMismatch(f"dims differ: {pub.width}x{pub.height} vs {priv.width}x{priv.height}")
    if pub.frame_count != priv.frame_count:
        raise PairMismatch(f"frame counts differ: {pub.frame_count} vs {priv.frame_count}")


def pair_streams(public_dir, private_dir):
    """Check the two manifests match, then iterate BlurredPairs in frame order."""
    pub = read_manifest(public_dir)
    priv = read_manifest(private_dir)
    check_pairing(pub, priv)
    hint = merge_hints(pub.kernel_width_hint, priv.kernel_width_hint)
    return _iter_pairs(public_dir, private_dir, pub, priv, hint)


def _iter_pairs(public_dir, private_dir, pub, priv, hint):
    for f1, f2 in zip(read_frames(public_dir, pub), read_frames(private_dir, priv)):
        if f1.shape != f2.shape:
            raise PairMismatch(f"frame {f1.index}: shapes differ {f1.shape} vs {f2.shape}")
        yield BlurredPair(f1, f2, kernel_width_hint=hint, pair_id=pub.pair_id)
