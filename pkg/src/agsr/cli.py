"""Command-line entry point: ``agsr gen-data | train | eval | ablate``.

Exit codes: 0 on success, 1 on runtime errors, 2 on usage errors.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import data
from .estimator import AGSRNet
from .evaluation import EvaluationReport, emit_report, residual_matrix
from .exceptions import AGSRError
from .model import VARIANTS
from .training import write_history

log = logging.getLogger("agsr")


def _split_arrays(manifest_path, split: str):
    manifest = data.read_manifest(manifest_path)
    pairs = data.load_dataset(manifest, split=split)
    if not pairs:
        raise AGSRError(f"manifest has no {split!r} samples; run gen-data (which splits) first")
    X = np.stack([p.lr.adj for p in pairs])
    y = np.stack([p.hr.adj for p in pairs])
    return manifest, [p.id for p in pairs], X, y


def cmd_gen_data(args) -> int:
    manifest = data.generate_synthetic_dataset(
        args.out, seed=args.seed, n_samples=args.samples, n=args.lr_nodes, n_h=args.hr_nodes)
    manifest = data.split_dataset(manifest, args.train_fraction, seed=args.seed)
    data.write_manifest(manifest, Path(args.out) / data.MANIFEST_NAME)
    print(f"wrote {len(manifest.samples)} samples "
          f"({len(manifest.ids('train'))} train / {len(manifest.ids('test'))} test) to {args.out}")
    return 0


def cmd_train(args) -> int:
    manifest, _, X, y = _split_arrays(args.data, "train")
    est = AGSRNet(variant=args.variant, k=args.k if args.k is not None else manifest.k,
                  epochs=args.epochs, lr_g=args.lr, lr_d=args.lr, lam=args.lam,
                  random_state=args.seed)
    est.fit(X, y)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    est.save(out / "model.ckpt")
    write_history(est.history_, out / "history.csv")
    if est.history_:
        last = est.history_[-1]
        print(f"{args.variant}: epoch {last.epoch} loss_g={last.loss_g:.6f} loss_hr={last.loss_hr:.6f}")
    print(f"checkpoint written to {out / 'model.ckpt'}")
    return 0


def cmd_eval(args) -> int:
    est = AGSRNet.load(args.model)
    manifest, ids, X, y = _split_arrays(args.data, "test")
    if (manifest.n, manifest.n_h) != (est.n_lr_, est.n_hr_) or manifest.k != est.k_:
        raise AGSRError(
            f"checkpoint (N={est.n_lr_}, N_h={est.n_hr_}, K={est.k_}) does not match "
            f"manifest (N={manifest.n}, N_h={manifest.n_h}, K={manifest.k})")
    report = EvaluationReport()
    residuals = {}
    for sid, pred, target in zip(ids, est.predict(X), y):
        report.add(est.variant, sid, pred, target)
        if args.residuals:
            residuals[f"{est.variant}.{sid}"] = residual_matrix(pred, target)[0]
    emit_report(report, args.report, residuals)
    agg = report.aggregate(est.variant)
    print(" ".join(f"{k}={v:.6g}" for k, v in agg.items()))
    return 0


def run_ablation(manifest_path, epochs: int, seed: int, lr: float = 1e-4, lam: float = 0.1) -> EvaluationReport:
    """Train every variant on the train split and evaluate on the test split."""
    manifest, _, X_train, y_train = _split_arrays(manifest_path, "train")
    _, ids, X_test, y_test = _split_arrays(manifest_path, "test")
    report = EvaluationReport()
    for variant in VARIANTS:
        log.info("training %s", variant)
        est = AGSRNet(variant=variant, k=manifest.k, epochs=epochs, lr_g=lr, lr_d=lr,
                      lam=lam, random_state=seed).fit(X_train, y_train)
        for sid, pred, target in zip(ids, est.predict(X_test), y_test):
            report.add(variant, sid, pred, target)
    report.compare()
    return report


def cmd_ablate(args) -> int:
    report = run_ablation(args.data, args.epochs, args.seed, args.lr, args.lam)
    written = emit_report(report, args.report)
    for method in report.methods:
        agg = report.aggregate(method)
        print(f"{method:10s} " + " ".join(f"{k}={v:.6g}" for k, v in agg.items()))
    print(f"significance tests written to {written['significance']}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = argparse.ArgumentParser(prog="agsr", description="Adversarial brain graph super-resolution.",
                                     formatter_class=fmt)
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress per epoch")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="generate a seeded synthetic LR/HR dataset", formatter_class=fmt)
    p.add_argument("--seed", type=int, default=42, help="random seed")
    p.add_argument("--samples", type=int, default=100, help="number of subjects")
    p.add_argument("--lr-nodes", type=int, default=20, help="LR node count N")
    p.add_argument("--hr-nodes", type=int, default=34, help="HR node count N_h")
    p.add_argument("--train-fraction", type=float, default=0.7, help="share of samples in the train split")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("train", help="train one model variant", formatter_class=fmt)
    p.add_argument("--data", required=True, help="dataset manifest or directory")
    p.add_argument("--variant", choices=VARIANTS, default="agsr-net", help="model variant")
    p.add_argument("--epochs", type=int, default=200, help="training epochs")
    p.add_argument("--lr", type=float, default=1e-4, help="Adam learning rate (generator and discriminator)")
    p.add_argument("--lambda", dest="lam", type=float, default=0.1, help="self-reconstruction weight")
    p.add_argument("--k", type=int, default=None, help="super-resolution factor; None takes the manifest value")
    p.add_argument("--seed", type=int, default=0, help="random seed")
    p.add_argument("--out", required=True, help="output directory for checkpoint and history")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint on the test split", formatter_class=fmt)
    p.add_argument("--model", required=True, help="checkpoint file")
    p.add_argument("--data", required=True, help="dataset manifest or directory")
    p.add_argument("--report", required=True, help="output CSV path")
    p.add_argument("--residuals", action="store_true", help="also write residual matrices")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("ablate", help="train and compare all five variants", formatter_class=fmt)
    p.add_argument("--data", required=True, help="dataset manifest or directory")
    p.add_argument("--epochs", type=int, default=200, help="training epochs per variant")
    p.add_argument("--seed", type=int, default=0, help="random seed")
    p.add_argument("--lr", type=float, default=1e-4, help="Adam learning rate")
    p.add_argument("--lambda", dest="lam", type=float, default=0.1, help="self-reconstruction weight")
    p.add_argument("--report", required=True, help="output CSV path")
    p.set_defaults(func=cmd_ablate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (AGSRError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
