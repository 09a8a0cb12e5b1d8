"""Decoding output spike counts back into pixel space.

The decoder is linear in the learned weights: a response with counts c
reconstructs the stimulus as the count-weighted average of the weight rows,

    y_hat = sum_j c_j w_j / sum_j c_j

which is a convex combination, so reconstructions inherit the [0, 1] range
of the weights. A silent response (all counts zero) carries no information
and is flagged rather than guessed at.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ReconstructedPatch:
    intensities: np.ndarray
    silent: bool

    @property
    def side(self) -> int:
        return int(round(np.sqrt(self.intensities.size)))


def decode_response(weights: np.ndarray, counts: np.ndarray) -> ReconstructedPatch:
    """Convex combination of weight rows, weighted by output spike counts."""
    counts = np.asarray(counts, dtype=np.float64)
    if counts.shape != (weights.shape[0],):
        raise ValueError(f"counts shape {counts.shape} does not match D={weights.shape[0]}")
    if np.any(counts < 0):
        raise ValueError("counts must be nonnegative")
    total = counts.sum()
    if total == 0:
        return ReconstructedPatch(np.zeros(weights.shape[1]), silent=True)
    return ReconstructedPatch(counts @ weights / total, silent=False)


def decode_batch(weights: np.ndarray, counts: np.ndarray) -> list[ReconstructedPatch]:
    return [decode_response(weights, row) for row in counts]


def tile_positions(side: int, p: int, stride: int) -> list[tuple[int, int]]:
    """Top-left corners of all fully inside p x p tiles at the given stride.

    With stride == p this is a disjoint tiling; any remainder margin on the
    right/bottom is simply not covered.
    """
    if not (1 <= p <= side):
        raise ValueError(f"patch size {p} does not fit side {side}")
    if stride < 1:
        raise ValueError("stride must be >= 1")
    offsets = range(0, side - p + 1, stride)
    return [(r, c) for r in offsets for c in offsets]


def extract_patches(
    image: np.ndarray, p: int, stride: int
) -> tuple[np.ndarray, list[tuple[int, int]]]:
    """All tiles of an image as flat rows, plus where each came from."""
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 2 or image.shape[0] != image.shape[1]:
        raise ValueError(f"expected a square 2-d image, got shape {image.shape}")
    positions = tile_positions(image.shape[0], p, stride)
    patches = np.empty((len(positions), p * p))
    for k, (r, c) in enumerate(positions):
        patches[k] = image[r : r + p, c : c + p].ravel()
    return patches, positions


def assemble_image(
    shape: tuple[int, int],
    p: int,
    positions: list[tuple[int, int]],
    decoded: list[ReconstructedPatch],
) -> tuple[np.ndarray, np.ndarray]:
    """Overlap-average decoded tiles back into an image.

    Returns (reconstruction, mask). Silent tiles contribute nothing; pixels
    never covered by a non-silent tile are left at 0 with mask False, and
    callers must exclude them from error metrics.
    """
    if len(positions) != len(decoded):
        raise ValueError("positions and decoded patches differ in length")
    acc = np.zeros(shape)
    cover = np.zeros(shape, dtype=np.int64)
    for (r, c), patch in zip(positions, decoded):
        if patch.silent:
            continue
        acc[r : r + p, c : c + p] += patch.intensities.reshape(p, p)
        cover[r : r + p, c : c + p] += 1
    mask = cover > 0
    recon = np.zeros(shape)
    recon[mask] = acc[mask] / cover[mask]
    return recon, mask
