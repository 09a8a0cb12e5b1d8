"""Experiment runner: seeded training loops, periodic evaluation, sweeps,
and file exports.

One *iteration* is one training image: up to ``per_image_patches`` patches
are sampled from it, and each patch drives one T-step presentation with
learning on, followed by one threshold step. Evaluation freezes the weights
and scores disjoint stride-p tiles of the test images; every evaluation also
drops a weight snapshot so any record row can be recomputed later from disk.

All randomness flows from the single config seed through named substreams
(init, sampling, encoding, eval, kmeans, sweep), so runs are reproducible
and adding a consumer never perturbs the others.
"""

from __future__ import annotations

import math
import time
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _engine
from .baseline import assign, kmeans_train, save_codebook
from .config import ExperimentConfig
from .data import ImageStore, load_mnist_idx, load_pgm_dir, sample_patches, write_pgm
from .encoding import spike_matrix, trace_kernel, trace_matrix
from .fileio import format_decimal
from .metrics import (
    MetricsReport,
    avg_sparsity,
    breadth_tuning,
    corr_loss_detail,
    rms_recon_loss,
)
from .network import RepresentationNetwork, init_network, save_weights
from .plasticity import threshold_update
from .reconstruction import assemble_image, decode_batch, extract_patches
from .rng import derive_rng, substream_seed

CSV_COLUMNS = (
    "iteration",
    "corr_loss",
    "rms_loss",
    "sparsity",
    "breadth_tuning",
    "theta",
    "w_max",
    "w_min",
    "w_mean",
    "m_z_mean",
)


def fmt_number(x) -> str:
    """Deterministic, locale-free cell rendering; floats positional, never
    scientific."""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format_decimal(x)


@dataclass
class RunRecord:
    """Per-evaluation metric rows, in iteration order."""

    rows: list = field(default_factory=list)

    def append(self, iteration: int, values: dict) -> None:
        if self.rows and iteration <= self.rows[-1]["iteration"]:
            raise ValueError("iterations must be strictly increasing")
        row = {"iteration": iteration}
        row.update(values)
        missing = set(CSV_COLUMNS) - set(row)
        if missing:
            raise ValueError(f"row missing columns: {sorted(missing)}")
        self.rows.append(row)

    def column(self, name: str) -> list:
        return [row[name] for row in self.rows]

    @property
    def final(self) -> dict:
        return self.rows[-1]

    def write_csv(self, path) -> None:
        lines = [",".join(CSV_COLUMNS)]
        for row in self.rows:
            lines.append(",".join(fmt_number(row[c]) for c in CSV_COLUMNS))
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")

    @staticmethod
    def read_csv(path) -> "RunRecord":
        text = Path(path).read_text(encoding="utf-8").strip().splitlines()
        if not text or tuple(text[0].split(",")) != CSV_COLUMNS:
            raise ValueError(f"{path}: unexpected record header")
        record = RunRecord()
        for line in text[1:]:
            cells = line.split(",")
            record.append(
                int(cells[0]),
                {c: float(v) for c, v in zip(CSV_COLUMNS[1:], cells[1:])},
            )
        return record


def load_store(dataset: str, path: str, limit: int | None = None) -> ImageStore:
    if not path:
        raise ValueError(f"no data path configured for dataset {dataset!r}")
    if dataset == "mnist":
        return load_mnist_idx(path, limit)
    return load_pgm_dir(path, limit)


def encode_batch(X: np.ndarray, enc, rng: np.random.Generator) -> np.ndarray:
    """Trace matrices for a batch of stimuli: (B, N) intensities -> (B, N, T).

    Phase draws happen in the same stream order as per-stimulus encoding, so
    batched and one-at-a-time evaluation see identical spike trains.
    """
    B, N = X.shape
    phases = rng.random((B, N))
    steps = np.arange(enc.T + 1, dtype=np.float64)
    F = np.floor(X[:, :, None] * steps + phases[:, :, None])
    Sb = (np.diff(F, axis=2) > 0).astype(np.float64)
    kernel = trace_kernel(enc)
    Zb = np.zeros_like(Sb)
    for age, g in enumerate(kernel):
        Zb[:, :, age:] += g * Sb[:, :, : enc.T - age]
    return Zb


def eval_tiles(store: ImageStore, p: int, limit: int | None = None) -> np.ndarray:
    """Disjoint stride-p tiles of the first ``limit`` images, stacked (B, p*p)."""
    blocks = []
    for img in store.images[: limit if limit is not None else len(store)]:
        patches, _ = extract_patches(img, p, stride=p)
        blocks.append(patches)
    return np.vstack(blocks)


@dataclass(frozen=True)
class EvalResult:
    report: MetricsReport
    m_z_mean: float
    counts: np.ndarray
    originals: np.ndarray
    recons: np.ndarray


def evaluate_network(
    net: RepresentationNetwork, store: ImageStore, cfg: ExperimentConfig
) -> EvalResult:
    """Score the network on the test tiles with learning off.

    The encoding rng is re-derived from (seed, "eval") on every call, so the
    same network and test set always produce the same numbers; this is what
    makes record rows recomputable from saved snapshots.

    Metric populations: both reconstruction losses are averaged over tiles
    whose original has nonzero variance (the pairs Pearson admits; an
    all-black tile reconstructs to all-black exactly under the suppression
    rule, so counting its zero error would measure corpus emptiness, not
    reconstruction quality).  Sparsity is averaged over responses to tiles
    with any input at all, since blank-input responses are identically
    silent by construction.  Breadth tuning skips zero-spike responses as
    defined.
    """
    enc = cfg.encoder()
    X = eval_tiles(store, cfg.p, cfg.eval_images)
    rng = derive_rng(cfg.seed, "eval")
    N = cfg.p * cfg.p
    chunk = max(1, (1 << 22) // (N * enc.T))
    counts = np.empty((X.shape[0], net.D), dtype=np.int64)
    for start in range(0, X.shape[0], chunk):
        Zb = encode_batch(X[start : start + chunk], enc, rng)
        counts[start : start + chunk] = _engine.batch_counts(net.weights, net.theta, Zb)
    totals = counts.sum(axis=1)
    recons = np.zeros_like(X)
    active = totals > 0
    recons[active] = (counts[active] @ net.weights) / totals[active, None]
    valid = X.std(axis=1) > 0
    stimulated = X.sum(axis=1) > 0
    corr, n_skipped, _ = corr_loss_detail(X, recons)
    try:
        bt = breadth_tuning(counts)
    except ValueError:
        bt = float("nan")
    report = MetricsReport(
        corr_loss=corr,
        rms_loss=rms_recon_loss(X[valid], recons[valid]) if valid.any() else 0.0,
        sparsity=avg_sparsity(counts[stimulated], net.D, enc.T) if stimulated.any() else 0.0,
        breadth_tuning=bt,
        M=int(X.shape[0]),
        skipped=int(n_skipped),
    )
    m_z_mean = float(np.mean((counts > 0).sum(axis=1)))
    return EvalResult(report, m_z_mean, counts, X, recons)


@dataclass
class TrainResult:
    network: RepresentationNetwork
    record: RunRecord
    tail_m_z: float
    out_dir: Path
    seconds: float


def _weight_stats(net: RepresentationNetwork) -> dict:
    w = net.weights
    return {
        "w_max": float(w.max()),
        "w_min": float(w.min()),
        "w_mean": float(w.mean()),
    }


def _log_eval(
    record: RunRecord,
    net: RepresentationNetwork,
    test_store: ImageStore,
    cfg: ExperimentConfig,
    iteration: int,
    snap_dir: Path,
) -> EvalResult:
    save_weights(net, snap_dir / f"iter-{iteration:06d}.txt", cfg.lam)
    result = evaluate_network(net, test_store, cfg)
    values = {
        "corr_loss": result.report.corr_loss,
        "rms_loss": result.report.rms_loss,
        "sparsity": result.report.sparsity,
        "breadth_tuning": result.report.breadth_tuning,
        "theta": net.theta,
        "m_z_mean": result.m_z_mean,
    }
    values.update(_weight_stats(net))
    record.append(iteration, values)
    return result


def run_training(cfg: ExperimentConfig, progress=None) -> TrainResult:
    """Full seeded training run; writes weights.txt, record.csv, snapshots/,
    and summary.txt under cfg.out_dir."""
    t0 = time.perf_counter()
    out = Path(cfg.out_dir)
    snap_dir = out / "snapshots"
    snap_dir.mkdir(parents=True, exist_ok=True)
    train_store = load_store(cfg.dataset, cfg.data_path)
    test_store = load_store(cfg.dataset, cfg.test_data_path, cfg.eval_images)
    enc = cfg.encoder()
    params = cfg.learning()
    net = init_network(cfg.D, cfg.p * cfg.p, cfg.theta_init, derive_rng(cfg.seed, "init"), enc)
    rng_sample = derive_rng(cfg.seed, "sampling")
    rng_encode = derive_rng(cfg.seed, "encoding")
    tail = deque(maxlen=1000)
    record = RunRecord()
    _log_eval(record, net, test_store, cfg, 0, snap_dir)
    for it in range(1, cfg.iters + 1):
        idx = (it - 1) % len(train_store)
        one = ImageStore((train_store.images[idx],), (train_store.ids[idx],))
        batch = sample_patches(
            one, cfg.p, cfg.per_image_patches, cfg.min_mass, rng_sample,
            split="train", source=cfg.dataset,
        )
        for patch in batch.patches:
            S = spike_matrix(patch.intensities, enc, rng_encode)
            Z = trace_matrix(S, enc)
            raster = _engine.run_presentation(
                net.weights, net.theta, Z, S, a=params.a, lam=params.lam, learn=True
            )
            m_z = int(raster.any(axis=1).sum())
            net.theta = threshold_update(net.theta, m_z, params)
            tail.append(m_z)
        if it % cfg.eval_every == 0 or it == cfg.iters:
            result = _log_eval(record, net, test_store, cfg, it, snap_dir)
            if progress is not None:
                progress(it, result.report)
    save_weights(net, out / "weights.txt", params.lam)
    record.write_csv(out / "record.csv")
    tail_m_z = float(np.mean(tail)) if tail else float("nan")
    seconds = time.perf_counter() - t0
    _write_summary(out / "summary.txt", cfg, record, tail_m_z)
    return TrainResult(net, record, tail_m_z, out, seconds)


def _write_summary(path: Path, cfg: ExperimentConfig, record: RunRecord, tail_m_z: float) -> None:
    final = record.final
    zrms = final["rms_loss"] / 0.2887  # RMS in units of the sd of U[0,1] pixels
    lines = [
        f"dataset={cfg.dataset} D={cfg.D} lambda={fmt_number(cfg.lam)} "
        f"p={cfg.p} iters={cfg.iters} seed={cfg.seed}",
        f"final corr_loss={fmt_number(final['corr_loss'])}",
        f"final rms_loss={fmt_number(final['rms_loss'])}",
        f"final zrms_loss={fmt_number(zrms)}",
        f"final sparsity={fmt_number(final['sparsity'])}",
        f"final breadth_tuning={fmt_number(final['breadth_tuning'])}",
        f"final theta={fmt_number(final['theta'])}",
        f"training m_z mean (last {min(1000, cfg.iters * cfg.per_image_patches)} presentations)="
        f"{fmt_number(tail_m_z)}",
    ]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def member_seed(seed: int, *names: str) -> int:
    """Independent seed for a sweep member, stable under sweep composition."""
    return int(substream_seed(seed, "sweep", *names).generate_state(1, np.uint32)[0])


def run_lambda_sweep(cfg: ExperimentConfig, lambdas) -> list[dict]:
    """One full training per lambda; rows of (lambda, rms, weight stats).

    Partial results are written even when a member run dies, so a crashed
    sweep still leaves the completed rows on disk.
    """
    if not lambdas:
        raise ValueError("lambdas must be nonempty")
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows: list[dict] = []
    path = out / "lambda_sweep.csv"
    try:
        for lam in lambdas:
            tag = fmt_number(float(lam))
            member = cfg.replace(
                lam=float(lam),
                out_dir=str(out / f"lam-{tag}"),
                seed=member_seed(cfg.seed, "lambda", tag),
            )
            result = run_training(member)
            stats = _weight_stats(result.network)
            rows.append(
                {
                    "lambda": float(lam),
                    "rms_loss": result.record.final["rms_loss"],
                    **stats,
                }
            )
    finally:
        _write_sweep_csv(path, ("lambda", "rms_loss", "w_max", "w_min", "w_mean"), rows)
    return rows


def run_d_sweep(cfg: ExperimentConfig, Ds) -> list[dict]:
    """One full training per layer size D; rows of (D, final losses)."""
    if not Ds:
        raise ValueError("Ds must be nonempty")
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows: list[dict] = []
    path = out / "d_sweep.csv"
    try:
        for D in Ds:
            member = cfg.replace(
                D=int(D),
                out_dir=str(out / f"d-{int(D)}"),
                seed=member_seed(cfg.seed, "D", str(int(D))),
            )
            result = run_training(member)
            final = result.record.final
            rows.append(
                {
                    "D": int(D),
                    "corr_loss": final["corr_loss"],
                    "rms_loss": final["rms_loss"],
                    "sparsity": final["sparsity"],
                    "breadth_tuning": final["breadth_tuning"],
                }
            )
    finally:
        _write_sweep_csv(
            path, ("D", "corr_loss", "rms_loss", "sparsity", "breadth_tuning"), rows
        )
    return rows


def _write_sweep_csv(path: Path, columns, rows) -> None:
    lines = [",".join(columns)]
    for row in rows:
        lines.append(",".join(fmt_number(row[c]) for c in columns))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def export_filters(net: RepresentationNetwork, dirpath) -> list[Path]:
    """Each weight row as a p x p PGM plus one tiled contact sheet.

    All tiles share one linear map from the global (w_min, w_max) to
    (0, 255); a degenerate range maps everything to mid-gray.
    """
    out = Path(dirpath)
    out.mkdir(parents=True, exist_ok=True)
    p = int(round(math.sqrt(net.N)))
    if p * p != net.N:
        raise ValueError(f"N={net.N} is not a square; cannot render p x p filters")
    lo, hi = float(net.weights.min()), float(net.weights.max())
    if hi > lo:
        pixels = np.round(255.0 * (net.weights - lo) / (hi - lo)).astype(np.uint8)
    else:
        pixels = np.full_like(net.weights, 128, dtype=np.uint8)
    written = []
    for j in range(net.D):
        path = out / f"filter-{j:03d}.pgm"
        write_pgm(path, pixels[j].reshape(p, p))
        written.append(path)
    grid_cols = int(math.ceil(math.sqrt(net.D)))
    grid_rows = int(math.ceil(net.D / grid_cols))
    sheet = np.zeros((grid_rows * (p + 1) + 1, grid_cols * (p + 1) + 1), dtype=np.uint8)
    for j in range(net.D):
        r = (j // grid_cols) * (p + 1) + 1
        c = (j % grid_cols) * (p + 1) + 1
        sheet[r : r + p, c : c + p] = pixels[j].reshape(p, p)
    sheet_path = out / "contact-sheet.pgm"
    write_pgm(sheet_path, sheet)
    written.append(sheet_path)
    return written


def export_reconstructions(
    net: RepresentationNetwork,
    store: ImageStore,
    cfg: ExperimentConfig,
    dirpath,
    stride: int | None = None,
    limit: int = 8,
) -> list[Path]:
    """Write original/reconstruction PGM pairs for the first few test images."""
    out = Path(dirpath)
    out.mkdir(parents=True, exist_ok=True)
    stride = cfg.p if stride is None else stride
    enc = cfg.encoder()
    rng = derive_rng(cfg.seed, "eval", "reconstruct")
    written = []
    for k, img in enumerate(store.images[:limit]):
        patches, positions = extract_patches(img, cfg.p, stride)
        Zb = encode_batch(patches, enc, rng)
        counts = _engine.batch_counts(net.weights, net.theta, Zb)
        decoded = decode_batch(net.weights, counts)
        recon, _ = assemble_image(img.shape, cfg.p, positions, decoded)
        orig_path = out / f"orig-{k:03d}.pgm"
        recon_path = out / f"recon-{k:03d}.pgm"
        write_pgm(orig_path, img)
        write_pgm(recon_path, np.clip(recon, 0.0, 1.0))
        written.extend([orig_path, recon_path])
    return written


def collect_train_patches(cfg: ExperimentConfig, train_store: ImageStore) -> np.ndarray:
    """The exact patch population a training run with this config would see.

    Same image order and same (seed, "sampling") stream as run_training, so
    the baseline clusters what the network trained on.
    """
    rng_sample = derive_rng(cfg.seed, "sampling")
    blocks = []
    for it in range(1, cfg.iters + 1):
        idx = (it - 1) % len(train_store)
        one = ImageStore((train_store.images[idx],), (train_store.ids[idx],))
        batch = sample_patches(
            one, cfg.p, cfg.per_image_patches, cfg.min_mass, rng_sample,
            split="train", source=cfg.dataset,
        )
        if len(batch):
            blocks.append(batch.matrix())
    if not blocks:
        raise ValueError("no training patches survived blank rejection")
    return np.vstack(blocks)


def run_kmeans_baseline(cfg: ExperimentConfig, Ds=None, max_iters: int = 100) -> list[dict]:
    """Cluster the training patches and score nearest-centroid reconstruction
    on the same test tiles the network is scored on."""
    Ds = [cfg.D] if Ds is None else [int(D) for D in Ds]
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    train_store = load_store(cfg.dataset, cfg.data_path)
    test_store = load_store(cfg.dataset, cfg.test_data_path, cfg.eval_images)
    X_train = collect_train_patches(cfg, train_store)
    X_test = eval_tiles(test_store, cfg.p, cfg.eval_images)
    rows: list[dict] = []
    for D in Ds:
        codebook = kmeans_train(X_train, D, max_iters, derive_rng(cfg.seed, "kmeans", str(D)))
        save_codebook(codebook, out / f"kmeans-D{D}.txt")
        recons = codebook.centroids[assign(codebook.centroids, X_test)]
        corr, _, _ = corr_loss_detail(X_test, recons)
        rows.append(
            {
                "D": D,
                "corr_loss": corr,
                "rms_loss": rms_recon_loss(X_test, recons),
                "iterations": codebook.iterations_run,
                "converged": int(codebook.converged),
            }
        )
    _write_sweep_csv(
        out / "kmeans.csv", ("D", "corr_loss", "rms_loss", "iterations", "converged"), rows
    )
    return rows
