"""Intensity-to-spike-train encoding and the decaying input trace.

A pixel intensity x in [0, 1] becomes a deterministic rate code: spikes are
laid down wherever floor(x*t + phase) increments, with a fresh random phase
per train per presentation. This yields exactly floor(x*T) or ceil(x*T)
spikes, evenly spaced, and a per-step firing probability equal to x when the
phase is marginalized out. That last identity is what makes the weight rule's
expected update track the pixel intensity.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import EncoderConfig


@dataclass(frozen=True)
class SpikeTrain:
    """Ordered spike times in integer ms, all within [1, T]."""

    times: tuple[int, ...]

    def __post_init__(self) -> None:
        previous = 0
        for t in self.times:
            if t <= previous:
                raise ValueError("spike times must be strictly increasing and >= 1")
            previous = t

    def __len__(self) -> int:
        return len(self.times)


@dataclass(frozen=True)
class StimulusPatch:
    """Flattened p*p patch of intensities in [0, 1] with source provenance."""

    intensities: np.ndarray
    provenance: tuple[str, int, int] = ("", 0, 0)

    def __post_init__(self) -> None:
        arr = np.asarray(self.intensities, dtype=np.float64)
        if arr.ndim != 1:
            raise ValueError("intensities must be a flat vector")
        if arr.size == 0 or np.any(arr < 0) or np.any(arr > 1):
            raise ValueError("intensities must be nonempty and within [0, 1]")
        object.__setattr__(self, "intensities", arr)

    @property
    def side(self) -> int:
        side = int(round(np.sqrt(self.intensities.size)))
        if side * side != self.intensities.size:
            raise ValueError("patch is not square")
        return side


def spike_matrix(
    intensities: np.ndarray, cfg: EncoderConfig, rng: np.random.Generator
) -> np.ndarray:
    """Encode a vector of intensities into an (N, T) binary spike matrix.

    Column t-1 holds the spikes of step t. Phases are drawn from the given
    generator, one per train, in input order.
    """
    x = np.asarray(intensities, dtype=np.float64)
    phases = rng.random(x.size)
    steps = np.arange(cfg.T + 1, dtype=np.float64)
    # marks[i, t] = floor(x_i * t + phase_i); a spike where the floor increments
    marks = np.floor(x[:, None] * steps[None, :] + phases[:, None])
    return (np.diff(marks, axis=1) > 0).astype(np.uint8)


def encode_patch(
    patch: StimulusPatch, cfg: EncoderConfig, rng: np.random.Generator
) -> list[SpikeTrain]:
    """Encode a patch as one spike train per pixel."""
    mat = spike_matrix(patch.intensities, cfg, rng)
    return trains_from_matrix(mat)


def trains_from_matrix(mat: np.ndarray) -> list[SpikeTrain]:
    return [
        SpikeTrain(tuple(int(t) + 1 for t in np.flatnonzero(row))) for row in mat
    ]


def matrix_from_trains(trains: list[SpikeTrain], T: int) -> np.ndarray:
    mat = np.zeros((len(trains), T), dtype=np.uint8)
    for i, train in enumerate(trains):
        for t in train.times:
            if t > T:
                raise ValueError(f"spike time {t} exceeds window T={T}")
            mat[i, t - 1] = 1
    return mat


def trace_kernel(cfg: EncoderConfig) -> np.ndarray:
    """Decay weights for spike ages 0, 1, ... inside the recency window."""
    ages = np.arange(int(np.ceil(cfg.nu)), dtype=np.float64)
    ages = ages[ages < cfg.nu]
    return np.exp(-ages / cfg.tau)


def trace_matrix(spike_mat: np.ndarray, cfg: EncoderConfig) -> np.ndarray:
    """Per-step decaying trace of each train, shape (N, T).

    Entry [i, t-1] equals the sum of exp(-(t - tf)/tau) over spikes of train i
    with age t - tf inside [0, nu). Spikes older than the window are dropped
    outright; with the default tau they would contribute under 4e-4.
    """
    kernel = trace_kernel(cfg)
    spikes = spike_mat.astype(np.float64)
    out = np.zeros_like(spikes)
    for age, weight in enumerate(kernel):
        if age == 0:
            out += weight * spikes
        else:
            out[:, age:] += weight * spikes[:, :-age]
    return out


def epsp_trace(train: SpikeTrain, t: int, cfg: EncoderConfig) -> float:
    """Trace presented by one train at step t; a spike at t contributes 1."""
    if not (1 <= t <= cfg.T):
        raise ValueError(f"step must be in [1, T], got {t}")
    total = 0.0
    for tf in train.times:
        age = t - tf
        if 0 <= age < cfg.nu:
            total += float(np.exp(-age / cfg.tau))
    return total


def presyn_flag(train: SpikeTrain, t: int) -> int:
    """1 iff the train spiked at exactly step t (one-step coincidence window)."""
    if t < 1:
        raise ValueError(f"step must be >= 1, got {t}")
    return int(t in train.times)
