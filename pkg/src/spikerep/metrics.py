"""Evaluation measures for reconstruction quality and response sparseness.

Four numbers summarize a trained code:

* correlation loss: mean over patches of 1 - Pearson(y, y_hat), in [0, 2]
* RMS loss: mean over patches of per-patch root-mean-square error, in [0, 1]
  for intensities in [0, 1]
* sparsity: emitted output spikes / (D * T), averaged over responses
* breadth tuning: 1 / (C^2 + 1) with C the coefficient of variation of the
  per-neuron spike counts; 1 means uniform activity, small values mean
  activity concentrated on few neurons, < 0.5 counts as sparse
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class MetricsReport:
    corr_loss: float
    rms_loss: float
    sparsity: float
    breadth_tuning: float
    M: int
    skipped: int

    def __post_init__(self):
        if not np.isnan(self.rms_loss) and not 0.0 <= self.rms_loss:
            raise ValueError(f"rms_loss must be nonnegative, got {self.rms_loss}")
        if not np.isnan(self.sparsity) and not 0.0 <= self.sparsity <= 1.0:
            raise ValueError(f"sparsity must lie in [0,1], got {self.sparsity}")


def pearson(a: np.ndarray, b: np.ndarray) -> float:
    """Plain Pearson correlation; caller must rule out zero-variance inputs."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    da = a - a.mean()
    db = b - b.mean()
    return float((da @ db) / np.sqrt((da @ da) * (db @ db)))


def _as_pair_arrays(originals, recons) -> tuple[np.ndarray, np.ndarray]:
    Y = np.asarray(originals, dtype=np.float64)
    Yh = np.asarray(recons, dtype=np.float64)
    if Y.ndim != 2 or Y.shape != Yh.shape:
        raise ValueError(
            f"originals and recons must be matched (M, p*p) arrays, "
            f"got {Y.shape} and {Yh.shape}"
        )
    if Y.shape[0] == 0:
        raise ValueError("need at least one patch pair")
    return Y, Yh


def corr_recon_loss(originals, recons) -> float:
    """Mean 1 - Pearson over pairs where the original varies.

    Zero-variance originals say nothing about correlation and are skipped;
    a flat reconstruction of a varying original is a total miss and scores
    the chance-level loss of 1.
    """
    loss, _, valid = corr_loss_detail(originals, recons)
    if valid == 0:
        raise ValueError("all originals have zero variance; correlation undefined")
    return loss


def corr_loss_detail(originals, recons) -> tuple[float, int, int]:
    """(loss, skipped, valid); loss is nan when every pair was skipped."""
    Y, Yh = _as_pair_arrays(originals, recons)
    losses = []
    skipped = 0
    for y, yh in zip(Y, Yh):
        if np.ptp(y) == 0:
            skipped += 1
            continue
        if np.ptp(yh) == 0:
            losses.append(1.0)
        else:
            losses.append(1.0 - pearson(y, yh))
    if not losses:
        return float("nan"), skipped, 0
    return float(np.mean(losses)), skipped, len(losses)


def rms_recon_loss(originals, recons) -> float:
    """Mean over pairs of sqrt(mean squared pixel error)."""
    Y, Yh = _as_pair_arrays(originals, recons)
    return float(np.mean(np.sqrt(np.mean((Y - Yh) ** 2, axis=1))))


def _counts_matrix(responses) -> np.ndarray:
    """Accepts PresentationResponse-like objects or raw count rows."""
    rows = [np.asarray(getattr(r, "counts", r), dtype=np.float64) for r in responses]
    if not rows:
        raise ValueError("need at least one response")
    return np.vstack(rows)


def avg_sparsity(responses, D: int, T: int) -> float:
    """Total emitted spikes / (D * T), averaged over all responses.

    Silent responses count as 0, so a population full of blanks honestly
    reports a near-zero density.
    """
    C = _counts_matrix(responses)
    if C.shape[1] != D:
        raise ValueError(f"responses have {C.shape[1]} neurons, expected D={D}")
    return float(np.mean(C.sum(axis=1)) / (D * T))


def breadth_tuning(responses) -> float:
    """Mean per-stimulus 1/(C^2 + 1) over responses with at least one spike.

    mu and sigma are the population mean and standard deviation of the D
    spike counts for one stimulus; silent stimuli leave C undefined and are
    skipped.
    """
    C = _counts_matrix(responses)
    mu = C.mean(axis=1)
    active = mu > 0
    if not active.any():
        raise ValueError("all responses silent; breadth tuning undefined")
    sigma = C[active].std(axis=1)
    cv2 = (sigma / mu[active]) ** 2
    return float(np.mean(1.0 / (cv2 + 1.0)))


def compute_report(originals, recons, responses, D: int, T: int) -> MetricsReport:
    """Bundle all four measures for one evaluation population.

    ``originals[m]``, ``recons[m]``, and ``responses[m]`` describe the same
    patch; ``skipped`` counts patches excluded from at least one measure
    (zero-variance original, or silent response).
    """
    Y, _ = _as_pair_arrays(originals, recons)
    corr, _, _ = corr_loss_detail(originals, recons)
    counts = _counts_matrix(responses)
    if counts.shape[0] != Y.shape[0]:
        raise ValueError("responses must parallel the patch pairs")
    flat = np.ptp(Y, axis=1) == 0
    silent = counts.sum(axis=1) == 0
    try:
        bt = breadth_tuning(responses)
    except ValueError:
        bt = float("nan")
    return MetricsReport(
        corr_loss=corr,
        rms_loss=rms_recon_loss(originals, recons),
        sparsity=avg_sparsity(responses, D, T),
        breadth_tuning=bt,
        M=int(Y.shape[0]),
        skipped=int(np.sum(flat | silent)),
    )
