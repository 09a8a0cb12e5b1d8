"""Procedural image corpora.

Two generators, both fully seeded:

* handwritten-style digits: each 28x28 image renders a randomly deformed
  blocky digit skeleton (polyline strokes on a coarse orientation grid)
  with an anti-aliased pen, giving stroke widths and ink coverage in the
  same regime as scanned handwriting;
* natural-style textures: Gaussian random fields with a 1/f amplitude
  spectrum, the classic second-order statistics of photographs of natural
  scenes.

These exist so the full training and evaluation pipeline can run in a
self-contained environment; any real IDX or PGM corpus drops in through the
same loaders.
"""

from __future__ import annotations

import numpy as np

from .data import write_idx, write_pgm
from .rng import derive_rng

DIGIT_SIDE = 28
# skeleton coordinates live in a unit box, y pointing up, digit roughly centered

# pen-and-scanner model, shared by every rendered digit
PEN_RADIUS = 1.45
SPECKLE_SD = 0.06  # multiplicative pen-pressure noise on wet ink
GRAIN_SD = 0.04  # additive sensor grain on inked pixels
INK_FLOOR = 0.30
GRAIN_FLOOR = 0.05  # post-grain black point
SAT_CLIP = 0.97  # post-grain white point
GAIN_RANGE = (0.88, 1.06)  # ballpoint pressure variation
VERTEX_WOBBLE = 0.018
ROT_RANGE = 0.12
SHEAR_RANGE = 0.05
SX_RANGE = (0.82, 1.04)  # glyph width factor
SY_RANGE = (0.88, 1.04)
DRIFT_RANGE = 2.4  # continuous page-placement drift, in pixels
END_CONTRACT = 0.22
CAP_PROB = 0.75  # chance a free stroke end finishes in a pen-rest blob
CAP_RADIUS = (0.040, 0.070)  # blob ring radius, unit-box scale  # free stroke ends stop short by up to this fraction


def _line(x0, y0, x1, y1) -> np.ndarray:
    return np.array([[x0, y0], [x1, y1]], dtype=np.float64)


def _arc(cx, cy, rx, ry, a0, a1, n=26) -> np.ndarray:
    th = np.linspace(a0, a1, n)
    return np.column_stack([cx + rx * np.cos(th), cy + ry * np.sin(th)])


def _qbez(p0, pc, p1, n=16) -> np.ndarray:
    t = np.linspace(0.0, 1.0, n)[:, None]
    p0 = np.asarray(p0, dtype=np.float64)
    pc = np.asarray(pc, dtype=np.float64)
    p1 = np.asarray(p1, dtype=np.float64)
    return (1 - t) ** 2 * p0 + 2 * t * (1 - t) * pc + t**2 * p1


def _chain(*pieces) -> np.ndarray:
    return np.vstack(pieces)


def digit_skeleton(digit: int, rng: np.random.Generator) -> list:
    """Polylines tracing one digit, with small per-call style variation.

    The glyphs are rounded hand-written forms built from arcs and bezier
    sweeps, so a patch window anywhere on a stroke sees one fat, smoothly
    shaded curve fragment whose orientation varies continuously from
    sample to sample.  Per-vertex wobble and the affine jitter in the
    rasterizer supply the writer-to-writer variation.
    """
    pi = np.pi
    if digit == 0:
        parts = [_arc(0.50, 0.50, 0.29, 0.44, 0.5 * pi, 2.5 * pi, n=40)]
    elif digit == 1:
        parts = [_line(0.53, 0.95, 0.47, 0.05)]
        if rng.random() < 0.3:
            parts.append(_line(0.38, 0.78, 0.53, 0.95))
    elif digit == 2:
        parts = [
            _chain(
                _arc(0.50, 0.66, 0.26, 0.27, pi, 0.12 * pi, n=20),
                _qbez((0.755, 0.78), (0.62, 0.36), (0.27, 0.08), n=16),
                _line(0.30, 0.07, 0.77, 0.07),
            )
        ]
    elif digit == 3:
        parts = [
            _chain(
                _arc(0.47, 0.725, 0.26, 0.225, 0.80 * pi, -0.45 * pi, n=20),
                _arc(0.47, 0.275, 0.28, 0.235, 0.45 * pi, -0.80 * pi, n=20),
            )
        ]
    elif digit == 4:
        parts = [
            np.array([[0.68, 0.95], [0.26, 0.44], [0.80, 0.44]]),
            _line(0.64, 0.62, 0.64, 0.05),
        ]
    elif digit == 5:
        parts = [
            _chain(
                np.array([[0.72, 0.93], [0.33, 0.93], [0.315, 0.60]]),
                _arc(0.47, 0.34, 0.27, 0.25, 0.62 * pi, -0.70 * pi, n=20),
            )
        ]
    elif digit == 6:
        parts = [
            _chain(
                _qbez((0.64, 0.94), (0.42, 0.80), (0.335, 0.50), n=12),
                _arc(0.485, 0.27, 0.21, 0.225, 0.86 * pi, -1.14 * pi, n=30),
            )
        ]
    elif digit == 7:
        parts = [
            _chain(
                _line(0.26, 0.90, 0.77, 0.90),
                _qbez((0.77, 0.90), (0.55, 0.48), (0.40, 0.05), n=14),
            )
        ]
        if rng.random() < 0.4:
            parts.append(_line(0.36, 0.47, 0.66, 0.47))
    elif digit == 8:
        parts = [
            _arc(0.50, 0.695, 0.195, 0.205, 0.5 * pi, 2.5 * pi, n=30),
            _arc(0.50, 0.275, 0.225, 0.235, 0.5 * pi, 2.5 * pi, n=30),
        ]
    elif digit == 9:
        parts = [
            _arc(0.50, 0.70, 0.205, 0.215, 0.5 * pi, 2.5 * pi, n=30),
            _qbez((0.705, 0.70), (0.695, 0.35), (0.56, 0.05), n=14),
        ]
    else:
        raise ValueError(f"digit must be 0..9, got {digit}")
    parts = _contract_free_ends(parts, rng)
    # handwriting wobble: independent jitter on every vertex
    return [part + rng.normal(0.0, VERTEX_WOBBLE, size=part.shape) for part in parts]


def _contract_free_ends(parts: list, rng: np.random.Generator) -> list:
    """Shorten strokes whose ends touch nothing, as a quick hand does.

    A polyline endpoint is free when it sits away from every other stroke
    in the glyph; closed rings and joined corners are left alone.  Most
    surviving free ends get a small terminal blob where the pen rested,
    so strokes finish in a fat dot rather than a taper.
    """
    out = []
    caps = []
    for i, part in enumerate(parts):
        part = part.copy()
        if np.allclose(part[0], part[-1], atol=1e-6):
            out.append(part)
            continue
        for head in (True, False):
            pt = part[0] if head else part[-1]
            free = True
            for j, other in enumerate(parts):
                if j == i:
                    continue
                if np.min(np.hypot(*(other - pt).T)) <= 0.04:
                    free = False
                    break
            if not free:
                continue
            keep = part.shape[0] - max(
                1, int(rng.uniform(0.0, END_CONTRACT) * part.shape[0])
            )
            if keep >= 2:
                part = part[-keep:] if head else part[:keep]
            if rng.random() < CAP_PROB:
                ex, ey = part[0] if head else part[-1]
                r = rng.uniform(*CAP_RADIUS)
                caps.append(_arc(ex, ey, r, r, 0.0, 2.0 * np.pi, n=9))
        out.append(part)
    return out + caps


def _transform(parts: list, rng: np.random.Generator, side: int) -> np.ndarray:
    """Random affine deformation, then unit box -> pixel coordinates.

    Returns all strokes as one (S, 4) array of segments (x0, y0, x1, y1) in
    pixel space with y pointing down.
    """
    rot = rng.uniform(-ROT_RANGE, ROT_RANGE)
    shear = rng.uniform(-SHEAR_RANGE, SHEAR_RANGE)
    sx = rng.uniform(*SX_RANGE)
    sy = rng.uniform(*SY_RANGE)
    # glyphs drift continuously around the canvas center, as on a scanned
    # page; the drift range keeps the tallest glyph clear of the border
    tx = rng.uniform(-DRIFT_RANGE, DRIFT_RANGE)
    ty = rng.uniform(-DRIFT_RANGE, DRIFT_RANGE)
    cos, sin = np.cos(rot), np.sin(rot)
    # scale, then shear x by y, then rotate
    m = np.array([[cos, -sin], [sin, cos]]) @ np.array([[sx, shear * sy], [0, sy]])
    # ink concentrates in a compact core with empty margins, so most random
    # patch draws land on little or no ink, as in scanned handwriting
    box = 16.0
    mid = (side - 1) / 2.0
    segs = []
    for part in parts:
        uv = (part - 0.5) @ m.T
        px = mid + box * uv[:, 0] + tx
        py = mid - box * uv[:, 1] + ty
        segs.append(np.column_stack([px[:-1], py[:-1], px[1:], py[1:]]))
    return np.vstack(segs)


def _raster(segments: np.ndarray, side: int, pen: float, aa: float = 0.35) -> np.ndarray:
    """Distance-field rendering: ink ramps from 1 inside the pen to 0 outside."""
    rows, cols = np.mgrid[0:side, 0:side]
    P = np.column_stack([cols.ravel(), rows.ravel()]).astype(np.float64)
    A = segments[:, :2]
    AB = segments[:, 2:] - A
    denom = np.maximum((AB**2).sum(axis=1), 1e-12)
    AP = P[:, None, :] - A[None, :, :]
    t = np.clip((AP * AB).sum(axis=-1) / denom, 0.0, 1.0)
    d = np.linalg.norm(AP - t[..., None] * AB, axis=-1).min(axis=1)
    ink = np.clip((pen + aa - d) / (2.0 * aa), 0.0, 1.0)
    return ink.reshape(side, side)


def _blur3(img: np.ndarray) -> np.ndarray:
    # one pass of the separable [1 2 1]/4 kernel in each axis
    pad = np.pad(img, 1, mode="constant")
    horiz = (pad[:, :-2] + 2 * pad[:, 1:-1] + pad[:, 2:]) / 4.0
    return (horiz[:-2] + 2 * horiz[1:-1] + horiz[2:]) / 4.0


def render_digit(digit: int, rng: np.random.Generator, side: int = DIGIT_SIDE) -> np.ndarray:
    """One uint8 digit image."""
    parts = digit_skeleton(digit, rng)
    segments = _transform(parts, rng, side)
    ink = _raster(segments, side, PEN_RADIUS)
    # pen-pressure speckle on the wet ink, then blur: stroke borders keep a
    # grainy texture no small codebook can absorb, while saturated interiors
    # clip to uniform white and the background stays exactly black
    speckle = 1.0 + SPECKLE_SD * rng.standard_normal(ink.shape)
    ink = _blur3(ink * np.clip(speckle, 0.2, 1.8))
    gain = rng.uniform(*GAIN_RANGE)
    img = np.clip(ink * gain, 0.0, 1.0)
    # scanner-style binarized background: the blur skirt drops to hard black
    # before any grain lands, so no dust forms off the strokes
    img[img < INK_FLOOR] = 0.0
    # sensor grain rides on the ink after the optics, not under them, so it
    # survives the blur
    img += GRAIN_SD * rng.standard_normal(img.shape) * (img > 0.0)
    img = np.clip(img, 0.0, 1.0)
    img[img < GRAIN_FLOOR] = 0.0
    # saturated stroke interiors clip to uniform white
    img[img > SAT_CLIP] = 1.0
    return np.round(255.0 * img).astype(np.uint8)


def make_digit_corpus(count: int, seed: int, tag: str) -> np.ndarray:
    """(count, 28, 28) uint8 stack; digits cycle 0..9 for class balance."""
    rng = derive_rng(seed, "synth", "digits", tag)
    images = np.empty((count, DIGIT_SIDE, DIGIT_SIDE), dtype=np.uint8)
    for k in range(count):
        images[k] = render_digit(k % 10, rng)
    return images


def write_digit_corpus(path, count: int, seed: int, tag: str) -> None:
    write_idx(path, make_digit_corpus(count, seed, tag))


def make_natural_image(side: int, rng: np.random.Generator, alpha: float = 1.0) -> np.ndarray:
    """One uint8 texture with amplitude spectrum proportional to 1/f^alpha."""
    spec = rng.standard_normal((side, side)) + 1j * rng.standard_normal((side, side))
    fx = np.fft.fftfreq(side)[:, None]
    fy = np.fft.fftfreq(side)[None, :]
    f2 = fx**2 + fy**2
    f2[0, 0] = 1.0
    amp = f2 ** (-alpha / 2.0)
    amp[0, 0] = 0.0
    img = np.fft.ifft2(spec * amp).real
    lo, hi = img.min(), img.max()
    return np.round(255.0 * (img - lo) / (hi - lo)).astype(np.uint8)


def write_natural_corpus(dirpath, count: int, side: int, seed: int, tag: str) -> None:
    """count PGM files named <tag>-0000.pgm ... under dirpath."""
    rng = derive_rng(seed, "synth", "natural", tag)
    for k in range(count):
        write_pgm(f"{dirpath}/{tag}-{k:04d}.pgm", make_natural_image(side, rng))
