"""Local learning rules.

Weight rule, applied to synapse i of neuron j at every output spike of j:

    dw = a * (1 - w * (1 + lam))   if input i also spiked this step
    dw = a * (-w * (1 + lam))      otherwise

so in expectation over the input statistics the weight settles at
P(input spike | output spike) / (1 + lam): a conditional-probability code,
shrunk toward zero by the sparsity pressure lam.

Threshold rule, applied once per presentation:

    dtheta = b * (m_z - q)

where m_z is the number of distinct neurons that fired, pushing the layer
toward q active feature(s) per stimulus.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import LearningParams
from .network import THETA_MAX, THETA_MIN, RepresentationNetwork

W_MIN = 0.0
W_MAX = 1.0


def stdp_update(w, s, params: LearningParams):
    """One coincidence-gated update; broadcasts over array-shaped w and s.

    ``s`` is 1 where the presynaptic input spiked in the same step as the
    postsynaptic spike that triggered the update, 0 elsewhere. The result is
    clamped to [0, 1].
    """
    w = np.asarray(w, dtype=np.float64)
    s = np.asarray(s, dtype=np.float64)
    dw = params.a * (s - w * (1.0 + params.lam))
    return np.clip(w + dw, W_MIN, W_MAX)


def expected_update(w, x, params: LearningParams):
    """Mean drift of stdp_update when the input fires with probability x.

    a * (x - w - lam*w); zero exactly at w = x / (1 + lam).
    """
    w = np.asarray(w, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    return params.a * (x - w * (1.0 + params.lam))


def equilibrium_weight(x, lam: float):
    """Fixed point of the expected update for input rate x."""
    return np.asarray(x, dtype=np.float64) / (1.0 + lam)


def threshold_update(theta: float, m_z: int, params: LearningParams) -> float:
    """Per-presentation homeostatic step; clamped to [0.01, 0.99]."""
    theta = theta + params.b * (float(m_z) - params.q)
    return float(min(max(theta, THETA_MIN), THETA_MAX))


def apply_threshold_update(
    net: RepresentationNetwork, m_z: int, params: LearningParams
) -> None:
    net.theta = threshold_update(net.theta, m_z, params)


def objective_value(w, x, lam: float):
    """Lyapunov-style potential for the expected weight dynamics.

    V(w) = (1+lam)/2 * (w - x/(1+lam))^2, decreasing along the expected
    update direction and minimized at the equilibrium weight.
    """
    w = np.asarray(w, dtype=np.float64)
    eq = equilibrium_weight(x, lam)
    return 0.5 * (1.0 + lam) * (w - eq) ** 2


@dataclass(frozen=True)
class DiagnosticReport:
    """Coarse health check of a weight matrix during or after training."""

    w_min: float
    w_max: float
    w_mean: float
    theta: float
    saturated_low: float
    saturated_high: float

    def describe(self) -> str:
        return (
            f"w in [{self.w_min:.4f}, {self.w_max:.4f}], mean {self.w_mean:.4f}; "
            f"theta={self.theta:.4f}; "
            f"{100 * self.saturated_low:.1f}% of weights < 0.02, "
            f"{100 * self.saturated_high:.1f}% > 0.98"
        )


def diagnose(net: RepresentationNetwork) -> DiagnosticReport:
    w = net.weights
    return DiagnosticReport(
        w_min=float(w.min()),
        w_max=float(w.max()),
        w_mean=float(w.mean()),
        theta=float(net.theta),
        saturated_low=float(np.mean(w < 0.02)),
        saturated_high=float(np.mean(w > 0.98)),
    )
