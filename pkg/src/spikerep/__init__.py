"""Event-driven spiking feature learning on image patches.

A layer of D spiking neurons watches rate-coded pixel intensities through
plastic synapses. A softmax winner-take-all score against a shared adaptive
threshold decides who fires; every output spike triggers a local,
coincidence-gated weight update whose fixed point is the conditional input
probability scaled by 1/(1+lambda). Reconstruction from output spike counts
measures what the learned code retains.
"""

from .config import (
    ConfigError,
    EncoderConfig,
    ExperimentConfig,
    LearningParams,
    build_config,
)
from .encoding import SpikeTrain, StimulusPatch, encode_patch, epsp_trace, spike_matrix
from .metrics import (
    MetricsReport,
    avg_sparsity,
    breadth_tuning,
    corr_recon_loss,
    rms_recon_loss,
)
from .network import (
    PresentationResponse,
    RepresentationNetwork,
    init_network,
    load_weights,
    present_stimulus,
    save_weights,
    wta_scores,
)
from .plasticity import expected_update, stdp_update, threshold_update
from .reconstruction import ReconstructedPatch, decode_response
from .rng import derive_rng, substream_seed

__version__ = "1.0.0"

__all__ = [
    "ConfigError",
    "EncoderConfig",
    "ExperimentConfig",
    "LearningParams",
    "MetricsReport",
    "PresentationResponse",
    "ReconstructedPatch",
    "RepresentationNetwork",
    "SpikeTrain",
    "StimulusPatch",
    "avg_sparsity",
    "breadth_tuning",
    "build_config",
    "corr_recon_loss",
    "decode_response",
    "derive_rng",
    "encode_patch",
    "epsp_trace",
    "expected_update",
    "init_network",
    "load_weights",
    "present_stimulus",
    "rms_recon_loss",
    "save_weights",
    "spike_matrix",
    "stdp_update",
    "substream_seed",
    "threshold_update",
    "wta_scores",
]
