"""Command-line front end.

Subcommands mirror the experiment lifecycle: ``train`` produces weights and
a metric record, ``eval``/``reconstruct``/``export-filters`` consume saved
weights, the two sweeps rerun training across a hyperparameter range, and
``baseline-kmeans`` scores the clustering comparison on the same data.

Configuration comes from an optional flat ``key=value`` file (``--config``),
with any individual key overridable as ``--<key> <value>``; command-line
values win. Exit status is 0 on success, 1 with a one-line diagnostic on any
failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import harness
from .config import (
    ConfigError,
    build_config,
    external_keys,
    field_type,
    parse_config_file,
)
from .data import DataFormatError
from .fileio import SnapshotFormatError
from .network import load_weights


def _parse_number_list(text: str, kind) -> list:
    try:
        return [kind(tok) for tok in text.split(",") if tok.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad list {text!r}: {exc}") from exc


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", metavar="PATH", help="flat key=value config file")
    for key in external_keys():
        kind = field_type(key)
        parser.add_argument(
            f"--{key.replace('_', '-')}",
            dest=key,
            type=kind,
            metavar=key.upper(),
            help=argparse.SUPPRESS,
        )


def _build_cfg(ns: argparse.Namespace):
    file_values = parse_config_file(ns.config) if ns.config else None
    overrides = {
        key: getattr(ns, key)
        for key in external_keys()
        if getattr(ns, key, None) is not None
    }
    return build_config(file_values, overrides)


def _weights_path(ns: argparse.Namespace, cfg) -> Path:
    if ns.weights:
        return Path(ns.weights)
    return Path(cfg.out_dir) / "weights.txt"


def _print_report(report, m_z_mean: float) -> None:
    fmt = harness.fmt_number
    print(f"corr_loss={fmt(report.corr_loss)}")
    print(f"rms_loss={fmt(report.rms_loss)}")
    print(f"sparsity={fmt(report.sparsity)}")
    print(f"breadth_tuning={fmt(report.breadth_tuning)}")
    print(f"patches={report.M} skipped={report.skipped}")
    print(f"m_z_mean={fmt(m_z_mean)}")


def cmd_train(ns: argparse.Namespace) -> int:
    cfg = _build_cfg(ns)

    def progress(iteration, report):
        fmt = harness.fmt_number
        print(
            f"iter {iteration}: corr={fmt(report.corr_loss)} "
            f"rms={fmt(report.rms_loss)} sparsity={fmt(report.sparsity)}",
            flush=True,
        )

    result = harness.run_training(cfg, progress=progress if ns.verbose else None)
    final = result.record.final
    fmt = harness.fmt_number
    print(f"trained {cfg.iters} iterations in {result.seconds:.1f}s")
    print(f"final corr_loss={fmt(final['corr_loss'])} rms_loss={fmt(final['rms_loss'])}")
    print(f"wrote {result.out_dir / 'weights.txt'} and {result.out_dir / 'record.csv'}")
    return 0


def cmd_eval(ns: argparse.Namespace) -> int:
    cfg = _build_cfg(ns)
    net, _ = load_weights(_weights_path(ns, cfg), cfg.encoder())
    if net.N != cfg.p * cfg.p:
        raise ConfigError(
            f"weights expect {net.N} inputs but p={cfg.p} gives {cfg.p * cfg.p}"
        )
    store = harness.load_store(cfg.dataset, cfg.test_data_path, cfg.eval_images)
    result = harness.evaluate_network(net, store, cfg.replace(D=net.D))
    _print_report(result.report, result.m_z_mean)
    return 0


def cmd_reconstruct(ns: argparse.Namespace) -> int:
    cfg = _build_cfg(ns)
    net, _ = load_weights(_weights_path(ns, cfg), cfg.encoder())
    store = harness.load_store(cfg.dataset, cfg.test_data_path, ns.limit)
    written = harness.export_reconstructions(
        net, store, cfg.replace(D=net.D), Path(cfg.out_dir) / "recon",
        stride=ns.stride, limit=ns.limit,
    )
    print(f"wrote {len(written)} images under {Path(cfg.out_dir) / 'recon'}")
    return 0


def cmd_export_filters(ns: argparse.Namespace) -> int:
    cfg = _build_cfg(ns)
    net, _ = load_weights(_weights_path(ns, cfg), cfg.encoder())
    written = harness.export_filters(net, Path(cfg.out_dir) / "filters")
    print(f"wrote {len(written)} images under {Path(cfg.out_dir) / 'filters'}")
    return 0


def cmd_sweep_lambda(ns: argparse.Namespace) -> int:
    cfg = _build_cfg(ns)
    lambdas = _parse_number_list(ns.lambdas, float)
    rows = harness.run_lambda_sweep(cfg, lambdas)
    fmt = harness.fmt_number
    for row in rows:
        print(
            f"lambda={fmt(row['lambda'])} rms={fmt(row['rms_loss'])} "
            f"w_max={fmt(row['w_max'])} w_min={fmt(row['w_min'])}"
        )
    return 0


def cmd_sweep_d(ns: argparse.Namespace) -> int:
    cfg = _build_cfg(ns)
    sizes = _parse_number_list(ns.sizes, int)
    rows = harness.run_d_sweep(cfg, sizes)
    fmt = harness.fmt_number
    for row in rows:
        print(f"D={row['D']} corr={fmt(row['corr_loss'])} rms={fmt(row['rms_loss'])}")
    return 0


def cmd_baseline_kmeans(ns: argparse.Namespace) -> int:
    cfg = _build_cfg(ns)
    sizes = _parse_number_list(ns.sizes, int) if ns.sizes else None
    rows = harness.run_kmeans_baseline(cfg, sizes)
    fmt = harness.fmt_number
    for row in rows:
        print(f"D={row['D']} corr={fmt(row['corr_loss'])} rms={fmt(row['rms_loss'])}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spikerep",
        description="Spiking feature learning on image patches: train, evaluate, sweep.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    train = sub.add_parser("train", help="run one seeded training experiment")
    _add_config_flags(train)
    train.add_argument("--verbose", action="store_true", help="print each evaluation")
    train.set_defaults(fn=cmd_train)

    ev = sub.add_parser("eval", help="score saved weights on the test set")
    _add_config_flags(ev)
    ev.add_argument("--weights", help="weight snapshot (default <out_dir>/weights.txt)")
    ev.set_defaults(fn=cmd_eval)

    rec = sub.add_parser("reconstruct", help="write original/reconstruction image pairs")
    _add_config_flags(rec)
    rec.add_argument("--weights", help="weight snapshot (default <out_dir>/weights.txt)")
    rec.add_argument("--stride", type=int, default=None, help="tile stride (default p)")
    rec.add_argument("--limit", type=int, default=8, help="number of test images")
    rec.set_defaults(fn=cmd_reconstruct)

    filt = sub.add_parser("export-filters", help="render weight rows as PGM images")
    _add_config_flags(filt)
    filt.add_argument("--weights", help="weight snapshot (default <out_dir>/weights.txt)")
    filt.set_defaults(fn=cmd_export_filters)

    sl = sub.add_parser("sweep-lambda", help="train once per regularizer value")
    _add_config_flags(sl)
    sl.add_argument("--lambdas", default="0,1,10", help="comma-separated values")
    sl.set_defaults(fn=cmd_sweep_lambda)

    sd = sub.add_parser("sweep-d", help="train once per layer size")
    _add_config_flags(sd)
    sd.add_argument("--sizes", default="8,16,32,64,128", help="comma-separated sizes")
    sd.set_defaults(fn=cmd_sweep_d)

    km = sub.add_parser("baseline-kmeans", help="K-means comparison on the same data")
    _add_config_flags(km)
    km.add_argument("--sizes", default=None, help="comma-separated codebook sizes")
    km.set_defaults(fn=cmd_baseline_kmeans)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        return ns.fn(ns)
    except (ConfigError, DataFormatError, SnapshotFormatError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
