"""The representation layer: weights, shared threshold, WTA scoring, and the
per-presentation simulation that turns input spike trains into output spike
trains.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _engine, fileio
from .config import EncoderConfig, LearningParams
from .encoding import SpikeTrain, matrix_from_trains, trace_matrix, trains_from_matrix

THETA_MIN = 0.01
THETA_MAX = 0.99


@dataclass
class RepresentationNetwork:
    """D neurons, each with N incoming weights in [0, 1], one shared threshold."""

    weights: np.ndarray
    theta: float
    cfg: EncoderConfig = field(default_factory=EncoderConfig)

    @property
    def D(self) -> int:
        return self.weights.shape[0]

    @property
    def N(self) -> int:
        return self.weights.shape[1]

    def copy(self) -> "RepresentationNetwork":
        return RepresentationNetwork(self.weights.copy(), self.theta, self.cfg)


@dataclass(frozen=True)
class PresentationResponse:
    """What the layer did during one T-step stimulus presentation."""

    output_trains: list[SpikeTrain]
    counts: np.ndarray
    fired: np.ndarray
    m_z: int

    @classmethod
    def from_raster(cls, raster: np.ndarray) -> "PresentationResponse":
        counts = raster.sum(axis=1, dtype=np.int64)
        fired = counts > 0
        return cls(
            output_trains=trains_from_matrix(raster),
            counts=counts,
            fired=fired,
            m_z=int(fired.sum()),
        )


def init_network(
    D: int,
    N: int,
    theta_init: float,
    rng: np.random.Generator,
    cfg: EncoderConfig | None = None,
) -> RepresentationNetwork:
    """Fresh network with uniform random weights in [0, 1].

    The initial threshold must exceed 1/D (else every neuron clears a uniform
    softmax and the layer fires in lockstep) and stay well under 0.5 so that
    several neurons can be active while features are still forming.
    """
    if D < 2:
        raise ValueError(f"D must be >= 2, got {D}")
    if N < 1:
        raise ValueError(f"N must be >= 1, got {N}")
    if not (1.0 / D < theta_init < 0.5):
        raise ValueError(
            f"theta_init must lie in (1/D, 0.5) = ({1.0 / D:.4g}, 0.5), got {theta_init}"
        )
    weights = rng.random((D, N))
    return RepresentationNetwork(weights, float(theta_init), cfg or EncoderConfig())


def softmax_scores(drive: np.ndarray) -> np.ndarray:
    """Stable softmax; exact under the shift by the max (softmax invariance)."""
    e = np.exp(drive - drive.max())
    return e / e.sum()


def wta_scores(net: RepresentationNetwork, traces: np.ndarray) -> np.ndarray:
    """Competition score of each neuron given the current input traces."""
    traces = np.asarray(traces, dtype=np.float64)
    if np.any(traces < 0):
        raise ValueError("traces must be nonnegative")
    return softmax_scores(net.weights @ traces)


def present_stimulus(
    net: RepresentationNetwork,
    input_trains: list[SpikeTrain],
    learner: LearningParams | None = None,
) -> PresentationResponse:
    """Run one presentation of encoded input against the network.

    Per step: neurons whose WTA score clears the shared threshold emit a
    spike; on a silent input step (zero trace everywhere) nothing fires.
    With ``learner`` given, each emitted spike immediately applies the
    coincidence-gated weight update to that neuron's row, so later steps of
    the same presentation see the moved weights. The threshold is not touched
    here; it adapts once per presentation via ``plasticity.threshold_update``.
    """
    if len(input_trains) != net.N:
        raise ValueError(f"expected {net.N} input trains, got {len(input_trains)}")
    S = matrix_from_trains(input_trains, net.cfg.T)
    Z = trace_matrix(S, net.cfg)
    if learner is None:
        raster = _engine.run_presentation(net.weights, net.theta, Z, S)
    else:
        raster = _engine.run_presentation(
            net.weights, net.theta, Z, S, a=learner.a, lam=learner.lam, learn=True
        )
    return PresentationResponse.from_raster(raster)


def save_weights(net: RepresentationNetwork, path, lam: float = 0.0) -> None:
    fileio.write_matrix_file(path, fileio.WEIGHTS_TAG, net.weights, lam, net.theta)


def load_weights(path, cfg: EncoderConfig | None = None):
    """Load a weight snapshot; returns (network, lambda)."""
    weights, lam, theta = fileio.read_matrix_file(path, fileio.WEIGHTS_TAG)
    return RepresentationNetwork(weights, theta, cfg or EncoderConfig()), lam
