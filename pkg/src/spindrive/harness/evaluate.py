"""Evaluation suites, error metrics, and report assembly.

A suite is a batch of freshly drawn drives of one class together with the
exact trajectories.  Reports carry root-mean-square error curves (averaged
over samples and observables at each time), a per-observable breakdown, the
physicality-violation rate, and optional mean entanglement entropy.  Raw
predictions are dumped next to the CSVs so every curve can be recomputed
from first principles.
"""
from __future__ import annotations

import json
import struct
import time
from dataclasses import dataclass
from multiprocessing import Pool
from pathlib import Path

import numpy as np

from ..closure import integrate_closure
from ..datasets import dataset_fingerprint, load_manifest
from ..drives import DriveTrajectory, child_rng, sample_drive
from ..errors import ConfigError, DataIntegrityError, IntegrationError
from ..models import IntegratorConfig, ProductStateSpec, SpinModel
from ..neural.checkpoint import load_checkpoint
from ..neural.fcnn import FcnnParams
from ..neural.training import predict_fcnn_full, predict_lstm, rollout_step_wise
from ..observables import frame_labels, product_frame, product_locals, time_grid
from ..qdyn import evolve
from .configs import model_from_manifest
from .svg import line_chart

DUMP_FORMAT_VERSION = 1
_MAX_ATTEMPTS = 5


# ---------------------------------------------------------------- suites


@dataclass
class EvalSuite:
    """Fresh drives of one class plus their exact trajectories."""

    drive_kind: str
    times: np.ndarray       # (T,)
    drives: np.ndarray      # (n, T)
    initial_p: np.ndarray   # (n,)
    frames: np.ndarray      # (n, T, n_obs)
    entropy: np.ndarray | None = None   # (n, T)

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])

    @property
    def initial_locals(self) -> np.ndarray:
        return np.stack([product_locals(p) for p in self.initial_p])


def _suite_sample(args):
    (index, model, drive_kind, drive_params, n_points, dt, root_seed,
     integrator, initial_p, l_max, want_entropy) = args
    times = dt * np.arange(n_points)
    for attempt in range(_MAX_ATTEMPTS):
        rng = child_rng(root_seed, index, attempt)
        p = rng.uniform() if initial_p is None else float(initial_p)
        drive = sample_drive(drive_kind, n_points, dt, rng, params=drive_params)
        try:
            series = evolve(
                model, drive, times,
                state=ProductStateSpec(p=p), integrator=integrator,
                l_max=l_max, entropy=want_entropy,
            )
        except IntegrationError:
            continue
        return p, drive.values, series.frames, series.entropy
    raise IntegrationError(
        f"evaluation sample {index} failed {_MAX_ATTEMPTS} integration attempts",
        t_reached=0.0,
    )


def generate_suite(
    model: SpinModel,
    drive_kind: str,
    n_samples: int,
    t_max: float,
    dt: float,
    root_seed: int = 0,
    integrator: IntegratorConfig = IntegratorConfig(),
    initial_state: str = "random",
    l_max: int | None = None,
    drive_params: dict | None = None,
    entropy: bool = False,
    workers: int = 1,
) -> EvalSuite:
    """Draw n_samples drives and solve them exactly on the inclusive grid."""
    if initial_state not in ("random", "all_up"):
        raise ConfigError(f"unknown initial_state {initial_state!r}")
    initial_p = 1.0 if initial_state == "all_up" else None
    times = time_grid(t_max, dt)
    args = [
        (i, model, drive_kind, drive_params, times.shape[0], dt, root_seed,
         integrator, initial_p, l_max, entropy)
        for i in range(n_samples)
    ]
    if workers > 1:
        with Pool(workers) as pool:
            rows = list(pool.imap(_suite_sample, args, chunksize=4))
    else:
        rows = [_suite_sample(a) for a in args]
    return EvalSuite(
        drive_kind=drive_kind,
        times=times,
        drives=np.stack([r[1] for r in rows]),
        initial_p=np.array([r[0] for r in rows]),
        frames=np.stack([r[2] for r in rows]),
        entropy=np.stack([r[3] for r in rows]) if entropy else None,
    )


# ---------------------------------------------------------------- metrics


def rmse_curve(pred: np.ndarray, target: np.ndarray) -> np.ndarray:
    """Root mean square error at each time, averaged over samples and observables."""
    if pred.shape != target.shape:
        raise ConfigError(f"shape mismatch {pred.shape} vs {target.shape}")
    return np.sqrt(np.mean((pred - target) ** 2, axis=(0, 2)))


def per_observable_rmse(pred: np.ndarray, target: np.ndarray) -> np.ndarray:
    return np.sqrt(np.mean((pred - target) ** 2, axis=(0, 1)))


def physicality_rate(pred: np.ndarray) -> float:
    """Fraction of predicted expectation values outside [-1, 1]."""
    return float(np.mean(np.abs(pred) > 1.0))


# ------------------------------------------------------- prediction dumps


def write_predictions(path, class_name: str, times, pred, target) -> Path:
    """Raw dump: length-prefixed JSON header, then times, pred, target (f8 LE)."""
    path = Path(path)
    pred = np.ascontiguousarray(pred, dtype="<f8")
    target = np.ascontiguousarray(target, dtype="<f8")
    header = {
        "format_version": DUMP_FORMAT_VERSION,
        "class": class_name,
        "n_samples": int(pred.shape[0]),
        "n_points": int(pred.shape[1]),
        "n_obs": int(pred.shape[2]),
    }
    blob = json.dumps(header, sort_keys=True, separators=(",", ":")).encode()
    with open(path, "wb") as fh:
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        fh.write(np.ascontiguousarray(times, dtype="<f8").tobytes())
        fh.write(pred.tobytes())
        fh.write(target.tobytes())
    return path


def read_predictions(path):
    """Inverse of write_predictions: (class, times, pred, target)."""
    path = Path(path)
    with open(path, "rb") as fh:
        raw = fh.read(4)
        if len(raw) < 4:
            raise DataIntegrityError(f"{path} is not a prediction dump")
        (hlen,) = struct.unpack("<I", raw)
        header = json.loads(fh.read(hlen))
        if header.get("format_version") != DUMP_FORMAT_VERSION:
            raise DataIntegrityError(f"{path}: unsupported dump version")
        n, t, o = header["n_samples"], header["n_points"], header["n_obs"]
        times = np.frombuffer(fh.read(8 * t), dtype="<f8")
        pred = np.frombuffer(fh.read(8 * n * t * o), dtype="<f8")
        target = np.frombuffer(fh.read(8 * n * t * o), dtype="<f8")
    if times.size != t or pred.size != n * t * o or target.size != n * t * o:
        raise DataIntegrityError(f"{path}: truncated dump")
    return (header["class"], times,
            pred.reshape(n, t, o).copy(), target.reshape(n, t, o).copy())


def rmse_from_dump(path) -> tuple[np.ndarray, np.ndarray]:
    """(times, rmse curve) recomputed from a raw dump alone."""
    _, times, pred, target = read_predictions(path)
    return times, rmse_curve(pred, target)


# ---------------------------------------------------------------- reports


@dataclass
class ClassResult:
    name: str
    times: np.ndarray
    rmse: np.ndarray
    baseline: np.ndarray
    per_obs: np.ndarray
    violation_rate: float
    n_samples: int
    entropy: np.ndarray | None = None

    def __post_init__(self):
        if self.rmse.shape != self.times.shape:
            raise ConfigError("curve length does not match the evaluation grid")
        if np.any(self.rmse < 0):
            raise ConfigError("negative error curve")


@dataclass
class EvalReport:
    window_t: float
    labels: list[str]
    results: list[ClassResult]
    runtime: dict[str, float]

    def result(self, name: str) -> ClassResult:
        for r in self.results:
            if r.name == name:
                return r
        raise KeyError(name)

    def in_window_mean(self, name: str) -> float:
        r = self.result(name)
        mask = r.times <= self.window_t + 1e-9
        return float(np.mean(r.rmse[mask]))

    def beyond_window_mean(self, name: str) -> float:
        r = self.result(name)
        mask = r.times > self.window_t + 1e-9
        return float(np.mean(r.rmse[mask])) if mask.any() else float("nan")


# ----------------------------------------------------------- prediction


def _checkpoint_strategy(header: dict) -> str:
    meta = header.get("meta") or {}
    strategy = meta.get("strategy")
    if strategy is None:
        raise ConfigError(
            "checkpoint metadata carries no strategy; re-save it through the "
            "train command or add meta['strategy']"
        )
    return strategy


def predict_frames(params, header: dict, drives: np.ndarray, times: np.ndarray,
                   initial_p: np.ndarray, l_max: int) -> np.ndarray:
    """Dispatch a checkpoint to its prediction routine."""
    strategy = _checkpoint_strategy(header)
    s0 = np.stack([product_locals(p) for p in initial_p])
    if strategy == "lstm_full":
        return predict_lstm(params, drives, times, s0)
    if strategy == "fcnn_full":
        n_obs = params.n_outputs // (params.n_inputs - 3)
        return predict_fcnn_full(params, drives, s0, n_obs)
    if strategy == "fcnn_step":
        frames0 = np.stack([product_frame(p, l_max) for p in initial_p])
        return rollout_step_wise(params, frames0, times, drives)
    raise ConfigError(f"unknown strategy {strategy!r} in checkpoint")


def _baseline_frames(params, header: dict, n_points: int) -> np.ndarray:
    """Constant prediction of the output bias: the zero-parameter network."""
    b_out = params.tensors()[-1]
    strategy = _checkpoint_strategy(header)
    if strategy == "fcnn_full":
        n_obs = params.n_outputs // (params.n_inputs - 3)
        return b_out.reshape(params.n_inputs - 3, n_obs)[None, :, :]
    return np.broadcast_to(b_out, (1, n_points, b_out.shape[0]))


# ------------------------------------------------------------- top level


def _class_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence(seed, spawn_key=(index,)).generate_state(1)[0])


def _check_fingerprint(header: dict, manifest: dict):
    meta = header.get("meta") or {}
    want = meta.get("dataset_fingerprint")
    have = dataset_fingerprint(manifest)
    if want is not None and want != have:
        raise ConfigError(
            f"checkpoint was trained on dataset {want}, got {have}; "
            "point the eval at the training dataset"
        )


def evaluate_checkpoint(
    checkpoint_path,
    dataset_dir,
    out_dir,
    t_max: float = 14.0,
    classes=("gp", "periodic", "quench"),
    n_samples: int = 1000,
    seed: int = 0,
    initial_state: str = "random",
    entropy: bool = False,
    integrator: IntegratorConfig = IntegratorConfig(),
    workers: int = 1,
    predict_hook=None,
) -> EvalReport:
    """Evaluate a trained checkpoint on fresh suites and write all artifacts.

    predict_hook, when given, replaces the network prediction: called as
    hook(suite, times) and expected to return frames of matching shape.
    """
    params, header, _ = load_checkpoint(checkpoint_path)
    manifest = load_manifest(Path(dataset_dir) / "manifest.json")
    _check_fingerprint(header, manifest)
    model = model_from_manifest(manifest)
    dt = manifest["grid"]["dt"]
    window_t = manifest["grid"]["t_max"]
    l_max = manifest["l_max"]
    times = time_grid(t_max, dt)
    if (_checkpoint_strategy(header) == "fcnn_full" and predict_hook is None
            and times.shape[0] != params.n_inputs - 3):
        raise ConfigError(
            f"full-evolution net is fixed to {params.n_inputs - 3} points; "
            f"evaluation grid has {times.shape[0]} (set t_max to the training window)"
        )

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    labels = frame_labels(l_max)
    results = []
    runtime = {}
    for ci, name in enumerate(classes):
        t0 = time.perf_counter()
        suite = generate_suite(
            model, name, n_samples, t_max, dt,
            root_seed=_class_seed(seed, ci), integrator=integrator,
            initial_state=initial_state, l_max=l_max, entropy=entropy,
            workers=workers,
        )
        t1 = time.perf_counter()
        if predict_hook is not None:
            pred = predict_hook(suite, times)
        else:
            pred = predict_frames(params, header, suite.drives, times,
                                  suite.initial_p, l_max)
        t2 = time.perf_counter()
        runtime[f"{name}.suite_s"] = t1 - t0
        runtime[f"{name}.predict_s"] = t2 - t1
        base = _baseline_frames(params, header, times.shape[0])
        results.append(ClassResult(
            name=name,
            times=times,
            rmse=rmse_curve(pred, suite.frames),
            baseline=rmse_curve(np.broadcast_to(
                base, suite.frames.shape), suite.frames),
            per_obs=per_observable_rmse(pred, suite.frames),
            violation_rate=physicality_rate(pred),
            n_samples=n_samples,
            entropy=None if suite.entropy is None else suite.entropy.mean(axis=0),
        ))
        write_predictions(out_dir / f"predictions_{name}.bin", name,
                          times, pred, suite.frames)

    report = EvalReport(window_t=window_t, labels=labels,
                        results=results, runtime=runtime)
    write_report_artifacts(report, out_dir)
    return report


def write_report_artifacts(report: EvalReport, out_dir) -> list[Path]:
    """CSV (canonical) and SVG views; deterministic bytes for fixed inputs."""
    out_dir = Path(out_dir)
    written = []

    path = out_dir / "rmse.csv"
    with open(path, "w") as fh:
        fh.write("class,t,rmse,baseline,in_window\n")
        for r in report.results:
            for k, t in enumerate(r.times):
                inside = int(t <= report.window_t + 1e-9)
                fh.write(f"{r.name},{float(t)!r},{float(r.rmse[k])!r},"
                         f"{float(r.baseline[k])!r},{inside}\n")
    written.append(path)

    path = out_dir / "observables.csv"
    with open(path, "w") as fh:
        fh.write("class,observable,rmse\n")
        for r in report.results:
            for label, v in zip(report.labels, r.per_obs):
                fh.write(f"{r.name},{label},{float(v)!r}\n")
    written.append(path)

    path = out_dir / "summary.csv"
    with open(path, "w") as fh:
        fh.write("class,n_samples,in_window_rmse,beyond_window_rmse,violation_rate\n")
        for r in report.results:
            fh.write(f"{r.name},{r.n_samples},"
                     f"{report.in_window_mean(r.name)!r},"
                     f"{report.beyond_window_mean(r.name)!r},"
                     f"{r.violation_rate!r}\n")
    written.append(path)

    if any(r.entropy is not None for r in report.results):
        path = out_dir / "entropy.csv"
        with open(path, "w") as fh:
            fh.write("class,t,entropy\n")
            for r in report.results:
                if r.entropy is None:
                    continue
                for t, s in zip(r.times, r.entropy):
                    fh.write(f"{r.name},{float(t)!r},{float(s)!r}\n")
        written.append(path)

    for r in report.results:
        series = [("network", r.times, r.rmse), ("constant", r.times, r.baseline)]
        written.append(line_chart(
            out_dir / f"rmse_{r.name}.svg", series,
            title=f"{r.name} drives", x_label="Jt", y_label="rms error",
            vline=report.window_t,
        ))
        if r.entropy is not None:
            written.append(line_chart(
                out_dir / f"entropy_{r.name}.svg",
                [("mean entropy", r.times, r.entropy)],
                title=f"{r.name} drives", x_label="Jt",
                y_label="half-chain entropy", vline=report.window_t,
            ))
    return written


# ------------------------------------------------- closure comparison


def _closure_sample(args):
    model, values, dt, kind, p, n_points, integrator, l_max = args
    times = dt * np.arange(n_points)
    drive = DriveTrajectory(values=values, dt=dt, kind=kind)
    series = integrate_closure(
        model, drive, times, state=ProductStateSpec(p=p),
        integrator=integrator, l_max=l_max,
    )
    return series.frames, series.breakdown_time


def closure_suite_frames(model, suite: EvalSuite,
                         integrator: IntegratorConfig = IntegratorConfig(),
                         l_max: int | None = None, workers: int = 1):
    """Gaussian-closure trajectories for every drive; (frames, breakdown times)."""
    args = [
        (model, suite.drives[i], suite.dt, suite.drive_kind,
         float(suite.initial_p[i]), suite.times.shape[0], integrator, l_max)
        for i in range(suite.drives.shape[0])
    ]
    if workers > 1:
        with Pool(workers) as pool:
            rows = list(pool.imap(_closure_sample, args, chunksize=4))
    else:
        rows = [_closure_sample(a) for a in args]
    frames = np.stack([r[0] for r in rows])
    breakdowns = [r[1] for r in rows]
    return frames, breakdowns


@dataclass
class BaselineResult:
    name: str
    times: np.ndarray
    closure_rmse: np.ndarray
    network_rmse: np.ndarray
    ordering_fraction: float      # share of times where the network is closer
    n_breakdowns: int
    closure_first_sample: float   # closure error at t = 0 (exact for product states)


@dataclass
class BaselineReport:
    window_t: float
    results: list[BaselineResult]

    def result(self, name: str) -> BaselineResult:
        for r in self.results:
            if r.name == name:
                return r
        raise KeyError(name)


def compare_with_closure(
    checkpoint_path,
    dataset_dir,
    out_dir,
    t_max: float = 14.0,
    classes=("quench",),
    n_samples: int = 100,
    seed: int = 0,
    initial_state: str = "random",
    integrator: IntegratorConfig = IntegratorConfig(),
    workers: int = 1,
) -> BaselineReport:
    """Closure vs exact vs network on shared fresh suites, with artifacts."""
    params, header, _ = load_checkpoint(checkpoint_path)
    manifest = load_manifest(Path(dataset_dir) / "manifest.json")
    _check_fingerprint(header, manifest)
    model = model_from_manifest(manifest)
    dt = manifest["grid"]["dt"]
    l_max = manifest["l_max"]
    times = time_grid(t_max, dt)

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    results = []
    for ci, name in enumerate(classes):
        suite = generate_suite(
            model, name, n_samples, t_max, dt,
            root_seed=_class_seed(seed, ci), integrator=integrator,
            initial_state=initial_state, l_max=l_max, workers=workers,
        )
        closure_frames, breakdowns = closure_suite_frames(
            model, suite, integrator=integrator, l_max=l_max, workers=workers)
        pred = predict_frames(params, header, suite.drives, times,
                              suite.initial_p, l_max)
        c_rmse = rmse_curve(closure_frames, suite.frames)
        n_rmse = rmse_curve(pred, suite.frames)
        results.append(BaselineResult(
            name=name,
            times=times,
            closure_rmse=c_rmse,
            network_rmse=n_rmse,
            ordering_fraction=float(np.mean(n_rmse < c_rmse)),
            n_breakdowns=sum(b is not None for b in breakdowns),
            closure_first_sample=float(c_rmse[0]),
        ))
        write_predictions(out_dir / f"closure_{name}.bin", name,
                          times, closure_frames, suite.frames)
        write_predictions(out_dir / f"network_{name}.bin", name,
                          times, pred, suite.frames)

    window_t = manifest["grid"]["t_max"]
    path = out_dir / "baseline.csv"
    with open(path, "w") as fh:
        fh.write("class,t,closure_rmse,network_rmse,in_window\n")
        for r in results:
            for k, t in enumerate(r.times):
                inside = int(t <= window_t + 1e-9)
                fh.write(f"{r.name},{float(t)!r},{float(r.closure_rmse[k])!r},"
                         f"{float(r.network_rmse[k])!r},{inside}\n")
    path = out_dir / "baseline_summary.csv"
    with open(path, "w") as fh:
        fh.write("class,n_samples,ordering_fraction,n_breakdowns,closure_first_sample\n")
        for r in results:
            fh.write(f"{r.name},{n_samples},{r.ordering_fraction!r},"
                     f"{r.n_breakdowns},{r.closure_first_sample!r}\n")
    for r in results:
        line_chart(
            out_dir / f"baseline_{r.name}.svg",
            [("closure", r.times, r.closure_rmse),
             ("network", r.times, r.network_rmse)],
            title=f"{r.name} drives", x_label="Jt", y_label="rms error",
            vline=window_t,
        )
    return BaselineReport(window_t=window_t, results=results)
