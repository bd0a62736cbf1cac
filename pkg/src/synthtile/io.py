"""Raster persistence: 8-bit PNGs and raw little-endian float32 with JSON sidecars."""
from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np
from PIL import Image

from .render import CLASS_COLORS

NODATA = -1
_PNG_KW = {"compress_level": 6}


def sidecar_path(path) -> Path:
    return Path(path).with_suffix(".json")


def write_rgb(path, rgb):
    Image.fromarray(np.ascontiguousarray(rgb, dtype=np.uint8)).save(path, format="PNG", **_PNG_KW)


def write_label(path, label):
    """Single-channel palette PNG holding class ids 0..7."""
    a = np.ascontiguousarray(label, dtype=np.uint8)
    img = Image.frombytes("P", (a.shape[1], a.shape[0]), a.tobytes())
    pal = np.zeros((256, 3), dtype=np.uint8)
    pal[: len(CLASS_COLORS)] = CLASS_COLORS
    img.putpalette(pal.ravel().tolist())
    img.save(path, format="PNG", **_PNG_KW)


def write_mask(path, mask):
    """Binary mask stored as 0 / 255."""
    m = (np.asarray(mask) > 0).astype(np.uint8) * 255
    Image.fromarray(m).save(path, format="PNG", **_PNG_KW)


def read_png(path):
    with Image.open(path) as img:
        return np.array(img)


def read_mask(path):
    return (read_png(path) > 0).astype(np.uint8)


def write_f32(path, array, **meta):
    """Raw little-endian float32, row-major, plus a JSON sidecar with the shape."""
    a = np.ascontiguousarray(np.asarray(array, dtype="<f4"))
    Path(path).write_bytes(a.tobytes(order="C"))
    side = {"width": int(a.shape[1]), "height": int(a.shape[0])}
    if a.ndim == 3:
        side["channels"] = int(a.shape[2])
    side.update(meta)
    side.setdefault("nodata", NODATA)
    sidecar_path(path).write_text(json.dumps(side, sort_keys=True, indent=1) + "\n")


def read_f32(path):
    """Returns ``(array, sidecar)``; raises ``FileNotFoundError`` if the sidecar is missing."""
    side = json.loads(sidecar_path(path).read_text())
    raw = np.frombuffer(Path(path).read_bytes(), dtype="<f4")
    shape = (side["height"], side["width"]) + ((side["channels"],) if "channels" in side else ())
    if raw.size != int(np.prod(shape)):
        raise ValueError(f"{path}: {raw.size} values, sidecar says {shape}")
    return raw.reshape(shape).astype(np.float32), side


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def tree_digest(root) -> dict:
    """Relative path -> sha256 for every file under ``root``."""
    root = Path(root)
    return {str(p.relative_to(root)): sha256_file(p) for p in sorted(root.rglob("*")) if p.is_file()}
