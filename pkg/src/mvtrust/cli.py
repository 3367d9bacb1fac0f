"""Command-line interface.

Subcommands: ``synth`` (write a synthetic dataset), ``train`` (fit a model
and save a checkpoint), ``eval`` (report metrics, uncertainty histograms,
and the conflict matrix, optionally under corruption), ``sweep`` (accuracy
vs noise level, or cross-validated learning-rate selection), ``ablate``
(variant comparison under identical seeds), and ``gradcheck`` (finite
difference validation of every loss).

Configuration comes from an optional JSON file whose keys mirror the
TrainConfig fields; individual flags override file values.  All outputs
are plain delimiter-separated rows plus a JSON run-metadata file.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from .data import (
    CorruptionSpec,
    inject_conflict,
    inject_noise,
    load_dataset,
    save_dataset,
    synthesize,
)
from .errors import ContractError, DataError, TrainingDiverged
from .pipeline import (
    TrainConfig,
    TrainedModel,
    ablate,
    evaluate,
    gradcheck_losses,
    run_experiment,
    run_lr_selection,
    run_noise_sweep,
    write_ablation,
    write_eval_report,
    write_run_meta,
    write_sweep,
    write_training_log,
)

_CONFIG_FLAGS = (
    ("subspace_dim", int),
    ("gamma", float),
    ("delta", float),
    ("eta", float),
    ("learning_rate", float),
    ("weight_decay", float),
    ("epochs", int),
    ("anneal_epochs", int),
    ("batch_size", int),
    ("seed", int),
    ("train_fraction", float),
    ("fold", str),
    ("evidence_activation", str),
    ("attention_eps", float),
)


def _add_config_flags(parser):
    parser.add_argument("--config", help="JSON file with TrainConfig keys")
    for name, kind in _CONFIG_FLAGS:
        parser.add_argument(f"--{name.replace('_', '-')}", type=kind, dest=name)
    parser.add_argument("--early-stop", action="store_true", dest="early_stop", default=None)


def _build_config(args):
    payload = {}
    if args.config:
        path = Path(args.config)
        if not path.exists():
            raise ContractError(f"config file not found: {path}")
        try:
            payload = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ContractError(f"{path}: invalid JSON ({exc})") from None
    for name, _ in _CONFIG_FLAGS:
        value = getattr(args, name, None)
        if value is not None:
            payload[name] = value
    if getattr(args, "early_stop", None):
        payload["early_stop"] = True
    return TrainConfig.from_dict(payload)


def _parse_views(text):
    return tuple(int(tok) for tok in text.split(",") if tok)


def _corruption_from_args(args, seed):
    if args.noise_sigma is not None:
        return CorruptionSpec(
            "gaussian_noise",
            args.noise_fraction,
            sigma=args.noise_sigma,
            views=_parse_views(args.corrupt_views) if args.corrupt_views else None,
            seed=seed,
        ), inject_noise
    if args.conflict_fraction is not None:
        return CorruptionSpec(
            "view_misalign",
            args.conflict_fraction,
            views=_parse_views(args.corrupt_views) if args.corrupt_views else None,
            seed=seed,
        ), inject_conflict
    return None, None


def _cmd_synth(args):
    ds = synthesize(
        n_classes=args.classes,
        n_views=len(_parse_views(args.dims)),
        n_samples=args.samples,
        view_dims=_parse_views(args.dims),
        separation=args.separation,
        nuisance_ratio=args.nuisance,
        seed=args.seed,
    )
    manifest = save_dataset(ds, args.out)
    print(f"wrote {ds.n_samples} samples x {ds.n_views} views to {manifest}")
    return 0


def _cmd_train(args):
    cfg = _build_config(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    ds = load_dataset(args.data)
    accuracies = []
    for trial in range(args.trials):
        trial_cfg = dataclasses.replace(cfg, seed=cfg.seed + trial)
        result = run_experiment(ds, trial_cfg)
        suffix = "" if args.trials == 1 else f"_trial{trial}"
        result.trained.save(out / f"checkpoint{suffix}.npz")
        write_training_log(result.log, out / f"training_log{suffix}.tsv")
        accuracies.append(result.report.accuracy)
        print(f"trial {trial}: test accuracy {result.report.accuracy:.4f}")
    write_run_meta(
        cfg,
        out / "run.meta",
        extras={
            "trials": args.trials,
            "test_accuracy": accuracies,
            "test_accuracy_mean": float(np.mean(accuracies)),
        },
    )
    return 0


def _cmd_eval(args):
    trained = TrainedModel.load(args.model)
    ds = trained.prepare(load_dataset(args.data))
    _, test_ds = _maybe_holdout(ds, trained, args)
    spec, injector = _corruption_from_args(args, args.seed)
    mask = None
    if spec is not None:
        test_ds, mask = injector(test_ds, spec)
    report = evaluate(trained, test_ds, mask)
    write_eval_report(report, args.out, mask)
    write_run_meta(trained.cfg, Path(args.out) / "run.meta", extras={"mode": "eval"})
    print(f"accuracy {report.accuracy:.4f} over {report.labels.size} instances")
    return 0


def _maybe_holdout(ds, trained, args):
    if not args.holdout:
        return None, ds
    from .data import split

    train_ds, test_ds = split(ds, trained.cfg.train_fraction, trained.cfg.seed)
    return train_ds, test_ds


def _cmd_sweep(args):
    if args.kind == "lr":
        cfg = _build_config(args)
        ds = load_dataset(args.data)
        rows = run_lr_selection(ds, cfg)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        lines = ["learning_rate\tmean_accuracy"]
        lines += [f"{lr!r}\t{acc!r}" for lr, acc in rows]
        (out / "lr_selection.tsv").write_text("\n".join(lines) + "\n")
        write_run_meta(cfg, out / "run.meta", extras={"mode": "sweep-lr"})
        best = max(rows, key=lambda r: r[1])
        print(f"best learning rate {best[0]} (mean accuracy {best[1]:.4f})")
        return 0
    trained = TrainedModel.load(args.model)
    ds = trained.prepare(load_dataset(args.data))
    _, test_ds = _maybe_holdout(ds, trained, args)
    sigmas = [float(tok) for tok in args.sigmas.split(",") if tok]
    rows = run_noise_sweep(trained, test_ds, sigmas, args.noise_fraction, args.corruption_seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_sweep(rows, out / "noise_sweep.tsv")
    write_run_meta(trained.cfg, out / "run.meta", extras={"mode": "sweep-noise"})
    for row in rows:
        print(f"sigma {row.sigma:g}: accuracy {row.accuracy:.4f}, mean u {row.mean_uncertainty:.4f}")
    return 0


def _cmd_ablate(args):
    cfg = _build_config(args)
    ds = load_dataset(args.data)
    switches = [tok for tok in args.switches.split(",") if tok] if args.switches else []
    rows = ablate(ds, cfg, switches)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_ablation(rows, out / "ablation.tsv")
    write_run_meta(cfg, out / "run.meta", extras={"mode": "ablate", "switches": switches})
    for row in rows:
        print(f"{row.variant}: accuracy {row.accuracy:.4f} (delta {row.accuracy_delta:+.4f})")
    return 0


def _cmd_gradcheck(args):
    worst = gradcheck_losses(n_seeds=args.seeds, tol=args.tol)
    failed = False
    for name, err in worst.items():
        status = "ok" if err < args.tol else "FAIL"
        print(f"{name}\tmax_rel_error={err:.3e}\t{status}")
        failed = failed or err >= args.tol
    return 1 if failed else 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="mvtrust",
        description="Trusted multi-view classification with hierarchical opinion aggregation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic multi-view dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--classes", type=int, default=4)
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--dims", default="20,30,25", help="comma-separated view widths")
    p.add_argument("--separation", type=float, default=2.5)
    p.add_argument("--nuisance", type=float, default=0.3)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=_cmd_synth)

    p = sub.add_parser("train", help="train a model on a dataset manifest")
    p.add_argument("--data", required=True, help="path to manifest.json")
    p.add_argument("--out", required=True)
    p.add_argument("--trials", type=int, default=1)
    _add_config_flags(p)
    p.set_defaults(fn=_cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint, optionally under corruption")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--holdout", action="store_true", help="evaluate only the seeded test split")
    p.add_argument("--noise-sigma", type=float, default=None)
    p.add_argument("--noise-fraction", type=float, default=0.1)
    p.add_argument("--conflict-fraction", type=float, default=None)
    p.add_argument("--corrupt-views", default=None, help="comma-separated view indices")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=_cmd_eval)

    p = sub.add_parser("sweep", help="noise sweep over a checkpoint, or lr selection")
    p.add_argument("--kind", choices=("noise", "lr"), default="noise")
    p.add_argument("--model")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--holdout", action="store_true")
    p.add_argument("--sigmas", default="0,1,10,100,10000")
    p.add_argument("--noise-fraction", type=float, default=1.0)
    p.add_argument("--corruption-seed", type=int, default=0)
    _add_config_flags(p)
    p.set_defaults(fn=_cmd_sweep)

    p = sub.add_parser("ablate", help="train ablation variants under identical seeds")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--switches", default="", help="comma-separated variant names")
    _add_config_flags(p)
    p.set_defaults(fn=_cmd_ablate)

    p = sub.add_parser("gradcheck", help="finite-difference validation of every loss")
    p.add_argument("--seeds", type=int, default=20)
    p.add_argument("--tol", type=float, default=1e-4)
    p.set_defaults(fn=_cmd_gradcheck)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ContractError, DataError, TrainingDiverged) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
