"""Command line entry point.

Eight subcommands, one JSON config each: gen-data, train, eval, baseline,
bench, sweep-g, heisenberg, dump-csv.  Exit codes: 0 success, 2 config
problem, 3 numeric failure (integration, divergence, corrupt artifact).
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from ..datasets import (
    dataset_fingerprint,
    dump_csv,
    generate_dataset,
    load_manifest,
    load_split,
)
from ..errors import (
    ConfigError,
    DataIntegrityError,
    IntegrationError,
    TrainingDivergedError,
)
from ..models import SpinModel
from ..neural.checkpoint import load_checkpoint, save_checkpoint
from ..neural.fcnn import init_fcnn
from ..neural.lstm import init_lstm
from ..neural.training import TrainConfig, train_full_evolution, train_step_wise
from ..observables import n_observables
from .bench import run_bench, write_bench_artifacts
from .configs import build_integrator, build_model, load_config
from .evaluate import compare_with_closure, evaluate_checkpoint
from .svg import line_chart

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

_DEFAULT_HIDDEN = {
    "lstm_full": [128, 128],
    "fcnn_full": [256, 256, 256, 256],
    "fcnn_step": [256, 256, 256, 256],
}


def _resolve_seed(args, cfg) -> int:
    return args.seed if args.seed is not None else cfg.get("seed", 0)


# ---------------------------------------------------------------- train core


def run_training(
    dataset_dir,
    strategy: str,
    checkpoint_path,
    hidden_sizes=None,
    epochs: int = 40,
    batch_size: int | None = None,
    learning_rate: float = 1e-3,
    seed: int = 0,
    microbatch_size: int = 256,
    loss_csv=None,
    resume=None,
):
    """Load splits, train one surrogate, write the checkpoint (+ loss CSV).

    epochs counts total epochs: resuming a checkpoint with k epochs done
    runs epochs k..epochs-1, reproducing a straight run bit for bit.
    """
    dataset_dir = Path(dataset_dir)
    manifest = load_manifest(dataset_dir)
    fingerprint = dataset_fingerprint(manifest)
    train = load_split(dataset_dir, "train")
    lo, hi = manifest["splits"]["val"]
    val_set = load_split(dataset_dir, "val") if hi - lo >= 1 else None

    n_train = len(train)
    n_obs = n_observables(train.l_max)
    n_points = train.times.shape[0]
    hidden = list(hidden_sizes) if hidden_sizes else _DEFAULT_HIDDEN[strategy]
    if batch_size is None:
        batch_size = min(1000, n_train)

    params = None
    optimizer = None
    start_epoch = 0
    if resume is not None:
        params, rheader, optimizer = load_checkpoint(resume)
        meta = rheader.get("meta") or {}
        if meta.get("dataset_fingerprint") != fingerprint:
            raise ConfigError(
                f"resume checkpoint was trained on dataset "
                f"{meta.get('dataset_fingerprint')}, this one is {fingerprint}"
            )
        if meta.get("strategy") != strategy:
            raise ConfigError(
                f"resume checkpoint strategy {meta.get('strategy')!r} "
                f"does not match {strategy!r}"
            )
        start_epoch = meta.get("epochs_done", 0)
        hidden = rheader["hidden_sizes"]
    else:
        rng = np.random.default_rng(seed)
        if strategy == "lstm_full":
            params = init_lstm(5, n_obs, hidden, rng)
        elif strategy == "fcnn_full":
            params = init_fcnn(n_points + 3, n_points * n_obs, hidden, rng)
        elif strategy == "fcnn_step":
            params = init_fcnn(n_obs + 2, n_obs, hidden, rng)
        else:
            raise ConfigError(f"unknown strategy {strategy!r}")

    cfg = TrainConfig(
        epochs=epochs, batch_size=batch_size, learning_rate=learning_rate,
        seed=seed, microbatch_size=microbatch_size,
    )
    history = []

    def record(epoch, train_loss, val_loss):
        history.append((epoch, train_loss, val_loss))

    if strategy == "fcnn_step":
        val = None if val_set is None else (val_set.drives, val_set.frames)
        result = train_step_wise(
            params, train.drives, train.times, train.frames, cfg,
            val=val, optimizer=optimizer, start_epoch=start_epoch,
            epoch_callback=record,
        )
    else:
        val = None if val_set is None else (
            val_set.drives, val_set.initial_locals, val_set.frames)
        result = train_full_evolution(
            params, train.drives, train.times, train.initial_locals,
            train.frames, cfg, val=val, optimizer=optimizer,
            start_epoch=start_epoch, epoch_callback=record,
        )

    meta = {
        "strategy": strategy,
        "dataset_fingerprint": fingerprint,
        "model": manifest["model"],
        "dt": manifest["grid"]["dt"],
        "t_max": manifest["grid"]["t_max"],
        "n_points": n_points,
        "n_obs": n_obs,
        "l_max": train.l_max,
        "epochs_done": epochs,
        "batch_size": batch_size,
        "learning_rate": learning_rate,
        "seed": seed,
    }
    checkpoint_path = Path(checkpoint_path)
    if checkpoint_path.parent != Path(""):
        checkpoint_path.parent.mkdir(parents=True, exist_ok=True)
    save_checkpoint(checkpoint_path, result.params, meta, optimizer=result.optimizer)

    if loss_csv is not None:
        loss_csv = Path(loss_csv)
        with open(loss_csv, "w") as fh:
            fh.write("epoch,train_loss,val_loss\n")
            for epoch, tl, vl in history:
                fh.write(f"{epoch},{tl!r},{'' if vl is None else repr(vl)}\n")
    return result, checkpoint_path


# ---------------------------------------------------------------- handlers


def _cmd_gen_data(args) -> int:
    cfg = load_config(args.config, "gen-data")
    model = build_model(cfg["model"])
    manifest_path = generate_dataset(
        cfg["out_dir"],
        model,
        cfg["drive"]["kind"],
        cfg["n_samples"],
        t_max=cfg.get("t_max", 7.0),
        dt=cfg.get("dt", 0.125),
        root_seed=_resolve_seed(args, cfg),
        integrator=build_integrator(cfg.get("integrator")),
        workers=args.workers,
        drive_params=cfg["drive"].get("params"),
        initial_p=cfg.get("initial_p"),
        l_max=cfg.get("l_max"),
        val_fraction=cfg.get("val_fraction", 0.1),
        test_fraction=cfg.get("test_fraction", 0.1),
        force=args.force,
    )
    print(manifest_path)
    return EXIT_OK


def _cmd_train(args) -> int:
    cfg = load_config(args.config, "train")
    result, path = run_training(
        cfg["dataset"],
        cfg["strategy"],
        cfg["checkpoint"],
        hidden_sizes=cfg.get("hidden_sizes"),
        epochs=cfg.get("epochs", 40),
        batch_size=cfg.get("batch_size"),
        learning_rate=cfg.get("learning_rate", 1e-3),
        seed=_resolve_seed(args, cfg),
        microbatch_size=cfg.get("microbatch_size", 256),
        loss_csv=cfg.get("loss_csv"),
        resume=cfg.get("resume"),
    )
    final_val = (None if result.val_loss is None or result.val_loss.size == 0
                 else float(result.val_loss[-1]))
    print(f"trained {cfg['strategy']} for {result.epochs_done} epochs; "
          f"final train loss {result.train_loss[-1]:.3e}"
          + (f", val loss {final_val:.3e}" if final_val is not None else ""))
    print(path)
    return EXIT_OK


def _cmd_eval(args) -> int:
    cfg = load_config(args.config, "eval")
    report = evaluate_checkpoint(
        cfg["checkpoint"],
        cfg["dataset"],
        cfg["out_dir"],
        t_max=cfg.get("t_max", 14.0),
        classes=tuple(cfg.get("classes", ["gp", "periodic", "quench"])),
        n_samples=cfg.get("n_samples", 1000),
        seed=_resolve_seed(args, cfg),
        initial_state=cfg.get("initial_state", "random"),
        entropy=cfg.get("entropy", False),
        integrator=build_integrator(cfg.get("integrator")),
        workers=args.workers,
    )
    for r in report.results:
        print(f"{r.name}: in-window rmse {report.in_window_mean(r.name):.4f}, "
              f"beyond {report.beyond_window_mean(r.name):.4f}, "
              f"violation rate {r.violation_rate:.4f}")
    for key in sorted(report.runtime):
        print(f"  {key}: {report.runtime[key]:.2f} s")
    print(Path(cfg["out_dir"]) / "summary.csv")
    return EXIT_OK


def _cmd_baseline(args) -> int:
    cfg = load_config(args.config, "baseline")
    report = compare_with_closure(
        cfg["checkpoint"],
        cfg["dataset"],
        cfg["out_dir"],
        t_max=cfg.get("t_max", 14.0),
        classes=tuple(cfg.get("classes", ["quench"])),
        n_samples=cfg.get("n_samples", 100),
        seed=_resolve_seed(args, cfg),
        initial_state=cfg.get("initial_state", "random"),
        integrator=build_integrator(cfg.get("integrator")),
        workers=args.workers,
    )
    for r in report.results:
        print(f"{r.name}: network beats closure at {100 * r.ordering_fraction:.1f}% "
              f"of times; {r.n_breakdowns} closure breakdowns; "
              f"closure error at t=0: {r.closure_first_sample:.2e}")
    print(Path(cfg["out_dir"]) / "baseline_summary.csv")
    return EXIT_OK


def _cmd_bench(args) -> int:
    cfg = load_config(args.config, "bench")
    report = run_bench(
        sizes=tuple(cfg.get("sizes", [6, 7, 8, 9, 10])),
        n_instances=cfg.get("n_instances", 100),
        t_max=cfg.get("t_max", 14.0),
        dt=cfg.get("dt", 0.125),
        hidden_sizes=tuple(cfg.get("hidden_sizes", [128, 128])),
        seed=_resolve_seed(args, cfg),
    )
    write_bench_artifacts(report, cfg["out_dir"])
    for r in report.rows:
        print(f"M={r.n_sites}: exact {1e3 * r.exact_s:.2f} ms, "
              f"network {1e3 * r.network_s:.2f} ms")
    print(f"exact growth exponent {report.exact_exponent:.3f}/site, "
          f"network power {report.network_exponent:.2f}")
    print(Path(cfg["out_dir"]) / "bench.csv")
    return EXIT_OK


def _cmd_sweep_g(args) -> int:
    cfg = load_config(args.config, "sweep-g")
    out = Path(cfg["out_dir"])
    seed = _resolve_seed(args, cfg)
    n_sites = cfg.get("n_sites", 7)
    t_max = cfg.get("t_max", 7.0)
    dt = cfg.get("dt", 0.125)
    tb = cfg.get("train", {})
    eb = cfg.get("eval", {})
    rows = []
    curves = {}
    for g in cfg["g_values"]:
        tag = f"g_{g:g}"
        model = SpinModel(kind="tfi_longitudinal", n_sites=n_sites, g=float(g))
        data_dir = out / tag / "data"
        generate_dataset(
            data_dir, model, tb.get("drive", {}).get("kind", "gp"),
            tb.get("n_samples", 400), t_max=t_max, dt=dt, root_seed=seed,
            workers=args.workers,
            drive_params=tb.get("drive", {}).get("params"),
            force=args.force,
        )
        ckpt = out / tag / "model.ckpt"
        run_training(
            data_dir, tb.get("strategy", "lstm_full"), ckpt,
            hidden_sizes=tb.get("hidden_sizes"),
            epochs=tb.get("epochs", 30),
            batch_size=tb.get("batch_size"),
            learning_rate=tb.get("learning_rate", 1e-3),
            seed=seed,
            loss_csv=out / tag / "loss.csv",
        )
        report = evaluate_checkpoint(
            ckpt, data_dir, out / tag / "eval",
            t_max=eb.get("t_max", 14.0),
            classes=tuple(eb.get("classes", ["quench"])),
            n_samples=eb.get("n_samples", 200),
            seed=seed,
            initial_state=eb.get("initial_state", "random"),
            entropy=eb.get("entropy", True),
            workers=args.workers,
        )
        for r in report.results:
            rows.append((g, r.name, report.in_window_mean(r.name),
                         report.beyond_window_mean(r.name), r.violation_rate))
            curves.setdefault(r.name, []).append((f"g={g:g}", r.times, r.rmse))
            print(f"g={g:g} {r.name}: in-window rmse "
                  f"{report.in_window_mean(r.name):.4f}")

    with open(out / "sweep.csv", "w") as fh:
        fh.write("g,class,in_window_rmse,beyond_window_rmse,violation_rate\n")
        for g, name, iw, bw, vr in rows:
            fh.write(f"{float(g)!r},{name},{iw!r},{bw!r},{vr!r}\n")
    for name, series in curves.items():
        line_chart(out / f"sweep_{name}.svg", series,
                   title=f"{name} drives across g", x_label="Jt",
                   y_label="rms error", vline=t_max)
    print(out / "sweep.csv")
    return EXIT_OK


def _cmd_heisenberg(args) -> int:
    cfg = load_config(args.config, "heisenberg")
    out = Path(cfg["out_dir"])
    seed = _resolve_seed(args, cfg)
    n_sites = cfg.get("n_sites", 7)
    t_max = cfg.get("t_max", 7.0)
    dt = cfg.get("dt", 0.125)
    tb = cfg.get("train", {})
    eb = cfg.get("eval", {})
    model = SpinModel(kind="heisenberg", n_sites=n_sites)
    data_dir = out / "data"
    generate_dataset(
        data_dir, model, tb.get("drive", {}).get("kind", "gp"),
        tb.get("n_samples", 400), t_max=t_max, dt=dt, root_seed=seed,
        workers=args.workers,
        drive_params=tb.get("drive", {}).get("params"),
        force=args.force,
    )
    ckpt = out / "model.ckpt"
    run_training(
        data_dir, tb.get("strategy", "lstm_full"), ckpt,
        hidden_sizes=tb.get("hidden_sizes"),
        epochs=tb.get("epochs", 30),
        batch_size=tb.get("batch_size"),
        learning_rate=tb.get("learning_rate", 1e-3),
        seed=seed,
        loss_csv=out / "loss.csv",
    )
    report = evaluate_checkpoint(
        ckpt, data_dir, out / "eval",
        t_max=eb.get("t_max", 14.0),
        classes=tuple(eb.get("classes", ["gp", "quench"])),
        n_samples=eb.get("n_samples", 200),
        seed=seed,
        initial_state=eb.get("initial_state", "random"),
        entropy=eb.get("entropy", False),
        workers=args.workers,
    )
    for r in report.results:
        print(f"{r.name}: in-window rmse {report.in_window_mean(r.name):.4f}, "
              f"beyond {report.beyond_window_mean(r.name):.4f}")
    print(out / "eval" / "summary.csv")
    return EXIT_OK


def _cmd_dump_csv(args) -> int:
    cfg = load_config(args.config, "dump-csv")
    path = dump_csv(cfg["dataset"], cfg["split"], cfg["out"])
    print(path)
    return EXIT_OK


# ---------------------------------------------------------------- plumbing


_COMMANDS = [
    ("gen-data", _cmd_gen_data, "simulate a dataset of driven trajectories"),
    ("train", _cmd_train, "fit a surrogate network on a dataset"),
    ("eval", _cmd_eval, "error curves on fresh drive suites"),
    ("baseline", _cmd_baseline, "closure vs exact vs network comparison"),
    ("bench", _cmd_bench, "runtime scaling of exact solve vs network"),
    ("sweep-g", _cmd_sweep_g, "train/eval across longitudinal field strengths"),
    ("heisenberg", _cmd_heisenberg, "end-to-end run with a driven XX coupling"),
    ("dump-csv", _cmd_dump_csv, "flatten one dataset split to CSV"),
]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spindrive",
        description="learn and predict driven spin-ring dynamics from observables",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, func, help_text in _COMMANDS:
        sp = sub.add_parser(name, help=help_text)
        sp.add_argument("config", help="path to the JSON config file")
        sp.add_argument("--seed", type=int, default=None,
                        help="override the config's seed")
        sp.add_argument("--workers", type=int, default=1,
                        help="process count for simulation batches")
        sp.add_argument("--force", action="store_true",
                        help="overwrite existing outputs")
        sp.set_defaults(func=func)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (IntegrationError, TrainingDivergedError, DataIntegrityError,
            FloatingPointError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
