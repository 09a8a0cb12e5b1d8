"""Dataset ingestion and patch sampling.

Two carriers: big-endian IDX for digit images (the standard MNIST container)
and binary PGM (P5) for grayscale natural images. All intensities are
normalized into [0, 1] at load time; patches are sampled at uniform-random
offsets with a blank-rejection threshold, since an all-zero patch produces
no spikes and therefore no learning events.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .encoding import StimulusPatch

IDX_IMAGE_MAGIC = 0x00000803


class DataFormatError(Exception):
    """Raised when an input file does not match its declared format."""


@dataclass(frozen=True)
class ImageStore:
    """Immutable bundle of normalized 2-d images with stable identifiers."""

    images: tuple
    ids: tuple

    def __post_init__(self):
        if len(self.images) != len(self.ids):
            raise ValueError("images and ids differ in length")
        for img in self.images:
            if img.ndim != 2:
                raise ValueError("images must be 2-d arrays")
            if img.size and (img.min() < 0 or img.max() > 1):
                raise ValueError("image intensities must lie in [0, 1]")

    def __len__(self) -> int:
        return len(self.images)


@dataclass(frozen=True)
class PatchDataset:
    patches: tuple
    p: int
    split: str
    source: str

    def __post_init__(self):
        for patch in self.patches:
            if patch.intensities.size != self.p * self.p:
                raise ValueError("patch size does not match dataset patch side")

    def __len__(self) -> int:
        return len(self.patches)

    def matrix(self) -> np.ndarray:
        """All patches stacked as rows, (M, p*p)."""
        return np.vstack([pt.intensities for pt in self.patches])


def load_mnist_idx(path, limit: int | None = None) -> ImageStore:
    """Parse a big-endian IDX image file into normalized images.

    Layout: uint32 magic 0x00000803, count, rows, cols, then count*rows*cols
    unsigned pixel bytes row-major. Pixels are divided by 255.
    """
    raw = Path(path).read_bytes()
    if len(raw) < 16:
        raise DataFormatError(f"{path}: truncated IDX header ({len(raw)} bytes)")
    magic, count, rows, cols = struct.unpack(">IIII", raw[:16])
    if magic != IDX_IMAGE_MAGIC:
        raise DataFormatError(
            f"{path}: bad magic 0x{magic:08x}, expected 0x{IDX_IMAGE_MAGIC:08x} "
            f"(is this a label file?)"
        )
    expected = 16 + count * rows * cols
    if len(raw) != expected:
        raise DataFormatError(
            f"{path}: payload holds {len(raw) - 16} pixel bytes, "
            f"header promises {count * rows * cols}"
        )
    if limit is not None:
        count = min(count, limit)
    pixels = np.frombuffer(raw, dtype=np.uint8, count=count * rows * cols, offset=16)
    images = pixels.reshape(count, rows, cols).astype(np.float64) / 255.0
    stem = Path(path).stem
    ids = tuple(f"{stem}:{k}" for k in range(count))
    return ImageStore(tuple(img for img in images), ids)


def write_idx(path, images: np.ndarray) -> None:
    """Write uint8 images (count, rows, cols) as an IDX image file."""
    images = np.asarray(images)
    if images.ndim != 3 or images.dtype != np.uint8:
        raise ValueError("expected a uint8 array of shape (count, rows, cols)")
    count, rows, cols = images.shape
    with open(path, "wb") as fh:
        fh.write(struct.pack(">IIII", IDX_IMAGE_MAGIC, count, rows, cols))
        fh.write(images.tobytes())


def _read_pgm_token(raw: bytes, pos: int) -> tuple[bytes, int]:
    # skip whitespace and '#' comment lines, then read one token
    n = len(raw)
    while pos < n:
        ch = raw[pos : pos + 1]
        if ch.isspace():
            pos += 1
        elif ch == b"#":
            while pos < n and raw[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
        else:
            break
    start = pos
    while pos < n and not raw[pos : pos + 1].isspace():
        pos += 1
    if start == pos:
        raise DataFormatError("unexpected end of PGM header")
    return raw[start:pos], pos


def load_pgm(path) -> np.ndarray:
    """Parse a binary (P5) PGM into a [0, 1] array.

    Pixels are divided by maxval, then min-max rescaled per image so the
    darkest pixel is 0 and the brightest 1; a constant image maps to 0.5.
    """
    raw = Path(path).read_bytes()
    try:
        magic, pos = _read_pgm_token(raw, 0)
        if magic != b"P5":
            raise DataFormatError(f"{path}: magic {magic!r}, only binary P5 supported")
        fields = []
        for _ in range(3):
            tok, pos = _read_pgm_token(raw, pos)
            fields.append(int(tok))
    except (ValueError, DataFormatError) as exc:
        raise DataFormatError(f"{path}: malformed PGM header: {exc}") from exc
    width, height, maxval = fields
    if not (0 < maxval <= 255):
        raise DataFormatError(f"{path}: maxval {maxval} outside (0, 255]")
    pos += 1  # single whitespace byte separates header from raster
    if len(raw) - pos < width * height:
        raise DataFormatError(
            f"{path}: raster holds {len(raw) - pos} bytes, needs {width * height}"
        )
    pixels = np.frombuffer(raw, dtype=np.uint8, count=width * height, offset=pos)
    img = pixels.reshape(height, width).astype(np.float64) / maxval
    lo, hi = img.min(), img.max()
    if hi == lo:
        return np.full_like(img, 0.5)
    return (img - lo) / (hi - lo)


def write_pgm(path, values: np.ndarray) -> None:
    """Write a [0, 1] float array (or uint8 array) as a binary P5 PGM."""
    values = np.asarray(values)
    if values.ndim != 2:
        raise ValueError("expected a 2-d array")
    if values.dtype != np.uint8:
        if values.size and (values.min() < 0 or values.max() > 1):
            raise ValueError("float images must lie in [0, 1]")
        values = np.round(values * 255.0).astype(np.uint8)
    height, width = values.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{width} {height}\n255\n".encode("ascii"))
        fh.write(values.tobytes())


def load_pgm_dir(path, limit: int | None = None) -> ImageStore:
    """Load every *.pgm in a directory, sorted by filename for determinism."""
    root = Path(path)
    if not root.is_dir():
        raise DataFormatError(f"{path} is not a directory")
    files = sorted(root.glob("*.pgm"))
    if limit is not None:
        files = files[:limit]
    if not files:
        raise DataFormatError(f"no .pgm files under {path}")
    return ImageStore(
        tuple(load_pgm(f) for f in files),
        tuple(f.stem for f in files),
    )


def sample_patches(
    store: ImageStore,
    p: int,
    per_image: int,
    min_mass: float = 0.5,
    rng: np.random.Generator | None = None,
    split: str = "train",
    source: str = "unknown",
) -> PatchDataset:
    """Draw up to per_image random p x p patches from each image.

    Patches with total intensity below min_mass are rejected as blank; after
    10 * per_image draws an image contributes however many survived.
    """
    if rng is None:
        raise ValueError("an explicit rng is required for reproducibility")
    if per_image < 1:
        raise ValueError("per_image must be >= 1")
    patches = []
    for img, img_id in zip(store.images, store.ids):
        h, w = img.shape
        if p > min(h, w):
            raise ValueError(f"patch side {p} exceeds image {img_id} of {h}x{w}")
        kept = 0
        for _ in range(10 * per_image):
            if kept == per_image:
                break
            r = int(rng.integers(0, h - p + 1))
            c = int(rng.integers(0, w - p + 1))
            window = img[r : r + p, c : c + p].ravel()
            if window.sum() < min_mass:
                continue
            patches.append(StimulusPatch(window.copy(), f"{img_id}@{r},{c}"))
            kept += 1
    return PatchDataset(tuple(patches), p, split, source)
