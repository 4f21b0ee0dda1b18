"""Command line front end.

    python -m tabclust train --input emb.csv --labels y.txt --k 26 --out run1

Subcommands: pretrain, train, evaluate, ablate, bench-scale. Options can
also come from a flat JSON file (``--config``); flags given on the command
line win. On failure a single JSON object ``{"error", "phase", "message"}``
is printed to stderr and the exit status is nonzero.
"""
import argparse
import json
import logging
import os
import sys

from . import autoencoder as ae_mod
from . import harness, io
from .errors import TabclustError
from .metrics import evaluate_labels

EXIT_ERROR = 2
EXIT_INTERNAL = 3

# flag dest -> RunConfig field, for the flags whose names differ
_RENAME = {"k": "K"}


def _csv_ints(s):
    return [int(v) for v in s.split(",") if v.strip()]


def _add_shared(p):
    a = p.add_argument
    a("--config", help="JSON file of RunConfig keys")
    a("--input")
    a("--format", choices=["csv", "bin", "binary"])
    a("--header", action="store_true", default=None, help="skip the first CSV line")
    a("--labels")
    a("--k", type=int)
    a("--alpha", type=float)
    a("--gamma", type=float)
    a("--delta", type=float)
    a("--epsilon", type=float)
    a("--nu", type=float)
    a("--pretrain-epochs", type=int)
    a("--epochs", type=int)
    a("--lr", type=float)
    a("--pretrain-lr", type=float)
    a("--batch-size", type=int)
    a("--init", choices=["birch", "kmeans", "kmeanspp"])
    a("--distance", choices=["mahalanobis", "euclidean", "cosine"])
    a("--kernel", choices=["cauchy", "students-t", "students_t", "normal"])
    a("--threshold", type=float)
    a("--hidden-dims", type=_csv_ints)
    a("--latent-dim", type=int)
    a("--seed", type=int)
    a("--out")
    a("--profile", choices=sorted(harness.PROFILES))
    a("--ae-path", help="pretrained autoencoder (.npz) to start from")
    a("--no-baseline", dest="baseline", action="store_false", default=None,
      help="skip the K-means-on-raw-input comparison")
    a("-v", "--verbose", action="store_true")


def build_parser():
    parser = argparse.ArgumentParser(prog="tabclust", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in [("pretrain", "pretrain the autoencoder and save it"),
                       ("train", "full pipeline: pretrain, init, train, evaluate"),
                       ("ablate", "distance/kernel/initializer ablation grid"),
                       ("bench-scale", "per-epoch training time over a grid of K")]:
        p = sub.add_parser(name, help=text)
        _add_shared(p)
        if name == "bench-scale":
            p.add_argument("--k-grid", type=_csv_ints, default=[100, 200, 400, 800])
            p.add_argument("--n", type=int, default=5000, help="synthetic rows (no --input)")
            p.add_argument("--d", type=int, default=100, help="synthetic width (no --input)")
            p.add_argument("--warmup", type=int, default=2)
            p.add_argument("--measured", type=int, default=5)
    p = sub.add_parser("evaluate", help="score predicted labels against ground truth")
    p.add_argument("--labels", required=True, help="ground-truth labels file")
    p.add_argument("--pred", required=True, help="predicted labels file")
    p.add_argument("--out")
    p.add_argument("-v", "--verbose", action="store_true")
    return parser


def run_config_from_args(args):
    values = {}
    if getattr(args, "config", None):
        with open(args.config, encoding="utf-8") as fh:
            values.update(json.load(fh))
    fieldnames = set(harness.RunConfig.__dataclass_fields__)
    for dest, v in vars(args).items():
        key = _RENAME.get(dest, dest)
        if v is not None and key in fieldnames:
            values[key] = v
    return harness.RunConfig.from_dict(values)


def _cmd_pretrain(args):
    cfg = run_config_from_args(args).resolve()
    X, _, _ = harness._load_inputs(cfg, need_k=False)
    with harness._Phase("pretrain"):
        state = harness.pretrain_phase(X, cfg)
    os.makedirs(cfg.out, exist_ok=True)
    path = os.path.join(cfg.out, "autoencoder.npz")
    ae_mod.save_state(path, state)
    with open(os.path.join(cfg.out, "pretrain_losses.csv"), "w", encoding="utf-8") as fh:
        fh.write("epoch,re_loss\n")
        fh.writelines(f"{i},{v!r}\n" for i, v in enumerate(state.loss_curve, start=1))
    return {"autoencoder": path, "epochs": len(state.loss_curve),
            "final_re_loss": state.loss_curve[-1] if state.loss_curve else None}


def _cmd_train(args):
    report = harness.run_pipeline(run_config_from_args(args))
    return {"report": report["files"]["report"], "metrics": report.get("metrics")}


def _cmd_evaluate(args):
    with harness._Phase("load"):
        y_true = io.load_labels(args.labels)
        y_pred = io.load_labels(args.pred, n=y_true.size)
    with harness._Phase("evaluate"):
        report = evaluate_labels(y_true, y_pred).to_dict()
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, "metrics.json"), "w", encoding="utf-8") as fh:
            json.dump(report, fh, indent=2)
    return report


def _cmd_ablate(args):
    rows = harness.ablate(run_config_from_args(args))
    return {"cells": len(rows), "failed": sum(r["status"] != "ok" for r in rows)}


def _cmd_bench(args):
    rows = harness.bench_scalability(run_config_from_args(args), args.k_grid, n=args.n,
                                     d=args.d, warmup=args.warmup, measured=args.measured)
    return {"rows": rows}


COMMANDS = {
    "pretrain": _cmd_pretrain,
    "train": _cmd_train,
    "evaluate": _cmd_evaluate,
    "ablate": _cmd_ablate,
    "bench-scale": _cmd_bench,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        summary = COMMANDS[args.command](args)
    except (TabclustError, OSError) as err:
        code = getattr(err, "code", "io_error")
        phase = getattr(err, "phase", args.command)
        print(json.dumps({"error": code, "phase": phase, "message": str(err)}), file=sys.stderr)
        return EXIT_ERROR if isinstance(err, TabclustError) else EXIT_INTERNAL
    print(json.dumps(summary, default=str))
    return 0


if __name__ == "__main__":
    sys.exit(main())
