"""Command line interface.

Subcommands:

* ``train``     train one model, writing metrics.csv/params.csv, a model
                checkpoint, and report figures into the output directory
* ``eval``      evaluate a saved checkpoint on a dataset
* ``gradcheck`` run the finite-difference suite over every op
* ``compare``   train all four activations with a shared seed and emit a
                combined summary table, CSVs and overlay figure
"""

import argparse
import logging
import sys
from pathlib import Path

from .activations import ActivationKind
from .gradcheck import gradient_suite
from .harness import RunConfig, evaluate, export_metrics, load_dataset, train_run
from .models import load_checkpoint, save_checkpoint
from . import report

logger = logging.getLogger(__name__)

_ACTIVATIONS = tuple(k.value for k in ActivationKind)
_DATASETS = ("mnist", "cifar10", "synthetic")


def _add_run_flags(p, with_activation=True):
    p.add_argument("--dataset", choices=_DATASETS, default="mnist")
    if with_activation:
        p.add_argument("--activation", choices=_ACTIVATIONS, default="tangma")
    p.add_argument("--epochs", type=int, default=10)
    p.add_argument("--batch-size", type=int, default=64)
    p.add_argument("--lr", type=float, default=0.001, help="Adam learning rate")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--split", type=float, default=0.8, help="train fraction of the pooled data")
    p.add_argument("--subset", type=int, default=None, help="optional sample cap for desk-scale runs")
    p.add_argument("--trace-batches", default=None,
                   help="comma-separated batch indices for alpha/gamma sampling (default 130,260)")
    p.add_argument("--mnist-csv", default=None, help="path to the MNIST CSV file")
    p.add_argument("--cifar-dir", default=None, help="directory with CIFAR-10 *.bin batches")
    p.add_argument("--data-dir", default=None, help="default data directory (env TANGMANET_DATA_DIR)")
    p.add_argument("--synthetic-size", type=int, default=10000)
    p.add_argument("--synthetic-shape", choices=("mnist", "cifar"), default="mnist")
    p.add_argument("--eval-batch-size", type=int, default=512)
    p.add_argument("--out", default=None, help="output directory for CSVs, figures and checkpoint")
    p.add_argument("--no-figures", action="store_true", help="skip rendering report figures")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="tangmanet",
        description="Train and compare ReLU/Swish/GELU/Tangma CNNs on MNIST-style benchmarks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    _add_run_flags(sub.add_parser("train", help="train one model"))

    p_eval = sub.add_parser("eval", help="evaluate a checkpoint")
    p_eval.add_argument("--checkpoint", required=True)
    p_eval.add_argument("--dataset", choices=_DATASETS, default="mnist")
    p_eval.add_argument("--mnist-csv", default=None)
    p_eval.add_argument("--cifar-dir", default=None)
    p_eval.add_argument("--data-dir", default=None)
    p_eval.add_argument("--synthetic-size", type=int, default=10000)
    p_eval.add_argument("--synthetic-shape", choices=("mnist", "cifar"), default="mnist")
    p_eval.add_argument("--seed", type=int, default=0)
    p_eval.add_argument("--batch-size", type=int, default=512)

    p_grad = sub.add_parser("gradcheck", help="finite-difference gradient suite")
    p_grad.add_argument("--seed", type=int, default=0)
    p_grad.add_argument("--instances", type=int, default=100)
    p_grad.add_argument("--threshold", type=float, default=1e-5)

    _add_run_flags(sub.add_parser("compare", help="run all four activations"), with_activation=False)

    return parser


def _config_from_args(args, activation=None):
    trace = None
    if args.trace_batches:
        trace = tuple(int(b) for b in str(args.trace_batches).split(",") if b.strip())
    return RunConfig(
        dataset=args.dataset,
        activation=activation or args.activation,
        epochs=args.epochs,
        batch_size=args.batch_size,
        learning_rate=args.lr,
        seed=args.seed,
        train_fraction=args.split,
        subset=args.subset,
        mnist_csv=args.mnist_csv,
        cifar_dir=args.cifar_dir,
        data_dir=args.data_dir,
        output_dir=args.out,
        trace_batches=trace,
        synthetic_size=args.synthetic_size,
        synthetic_shape=args.synthetic_shape,
        eval_batch_size=args.eval_batch_size,
    )


def _default_out(cfg, suffix=None):
    name = f"{cfg.dataset}_{suffix or cfg.activation}_seed{cfg.seed}"
    return Path(cfg.output_dir) if cfg.output_dir else Path("runs") / name


def _write_run_outputs(cfg, result, out_dir, figures):
    out_dir.mkdir(parents=True, exist_ok=True)
    export_metrics(result.records, result.traces, out_dir)
    save_checkpoint(result.model, out_dir / "model.ckpt")
    if figures:
        report.render_metrics_figure(result.records, out_dir / "metrics.png")
        if result.traces:
            report.render_trace_figure(result.traces, out_dir / "params.png")


def cmd_train(args):
    cfg = _config_from_args(args)
    result = train_run(cfg)
    out_dir = _default_out(cfg)
    _write_run_outputs(cfg, result, out_dir, not args.no_figures)
    final = result.final()
    print(f"final val accuracy {final.val_accuracy:.2f}%  val loss {final.val_loss:.4f}  "
          f"train loss {final.train_loss:.4f}")
    print(f"outputs written to {out_dir}")
    return 0


def cmd_eval(args):
    model = load_checkpoint(args.checkpoint)
    cfg = RunConfig(dataset=args.dataset, activation=model.spec.activation.value,
                    mnist_csv=args.mnist_csv, cifar_dir=args.cifar_dir, data_dir=args.data_dir,
                    synthetic_size=args.synthetic_size, synthetic_shape=args.synthetic_shape,
                    seed=args.seed)
    dataset = load_dataset(cfg)
    loss, acc = evaluate(model, dataset, args.batch_size)
    print(f"{args.dataset}: loss {loss:.4f}  accuracy {acc:.2f}%  ({len(dataset)} samples)")
    return 0


def cmd_gradcheck(args):
    results = gradient_suite(seed=args.seed, instances=args.instances)
    width = max(len(name) for name in results)
    worst = 0.0
    for name, err in results.items():
        print(f"{name:<{width}}  max relative error {err:.3e}")
        worst = max(worst, err)
    ok = worst < args.threshold
    print(f"worst {worst:.3e} ({'OK' if ok else 'FAIL'} at threshold {args.threshold:g})")
    return 0 if ok else 1


def cmd_compare(args):
    cfg0 = _config_from_args(args, activation="tangma")
    dataset = load_dataset(cfg0)
    base_out = _default_out(cfg0, suffix="compare")

    summaries = {}
    for kind in _ACTIVATIONS:
        cfg = _config_from_args(args, activation=kind)
        logger.info("=== %s ===", kind)
        result = train_run(cfg, dataset=dataset)
        _write_run_outputs(cfg, result, base_out / kind, not args.no_figures)
        summaries[kind] = result.records

    rows = []
    for kind, records in summaries.items():
        final = records[-1]
        avg_time = sum(r.epoch_time_s for r in records) / len(records)
        rows.append((kind, final.val_accuracy, final.val_loss, final.train_loss, avg_time))

    header = f"{'activation':<12}{'val acc (%)':>12}{'val loss':>10}{'train loss':>12}{'avg epoch (s)':>15}"
    print(header)
    print("-" * len(header))
    for kind, acc, vl, tl, t in rows:
        print(f"{kind:<12}{acc:>12.2f}{vl:>10.4f}{tl:>12.4f}{t:>15.2f}")

    base_out.mkdir(parents=True, exist_ok=True)
    with open(base_out / "summary.csv", "w", encoding="utf-8", newline="") as fh:
        fh.write("activation,final_val_accuracy,final_val_loss,final_train_loss,avg_epoch_time_s\n")
        for kind, acc, vl, tl, t in rows:
            fh.write(f"{kind},{acc:.4f},{vl:.4f},{tl:.4f},{t:.4f}\n")
    if not args.no_figures:
        report.render_compare_figure(summaries, base_out / "compare.png")
    print(f"outputs written to {base_out}")
    return 0


_COMMANDS = {"train": cmd_train, "eval": cmd_eval, "gradcheck": cmd_gradcheck, "compare": cmd_compare}


def cli_main(argv=None):
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else 0
    try:
        return _COMMANDS[args.command](args)
    except (ValueError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main():
    sys.exit(cli_main(sys.argv[1:]))


if __name__ == "__main__":
    main()
