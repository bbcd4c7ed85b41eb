"""Reproducible sample sets: generation, binary storage, splits.

A dataset directory holds ``manifest.json`` plus one ``<split>.bin`` per
split.  Every sample is stored as a little-endian record

    u32 header length | JSON header | float64 drive values | float64 frames

so the files are portable, append-friendly and independent of this
package.  Sample i is computed from child RNG stream i of the root seed,
which makes the bytes independent of worker count and completion order;
reruns with equal seeds reproduce the files exactly.  The manifest carries
per-file content hashes and the only timestamp in the dataset (file bytes
stay comparable across reruns).
"""
from __future__ import annotations

import hashlib
import io
import json
import struct
from dataclasses import dataclass
from datetime import datetime, timezone
from multiprocessing import Pool
from pathlib import Path

import numpy as np

from .drives import DriveTrajectory, child_rng, sample_drive
from .errors import ConfigError, DataIntegrityError, IntegrationError
from .models import IntegratorConfig, ProductStateSpec, SpinModel
from .observables import max_distance, n_observables, product_locals, time_grid
from .qdyn import evolve

FORMAT_VERSION = 1
SPLITS = ("train", "val", "test")
_MAX_ATTEMPTS = 5


def _canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def write_record(fh, header: dict, drive_values: np.ndarray, frames: np.ndarray):
    blob = _canonical_json(header).encode()
    fh.write(struct.pack("<I", len(blob)))
    fh.write(blob)
    fh.write(np.ascontiguousarray(drive_values, dtype="<f8").tobytes())
    fh.write(np.ascontiguousarray(frames, dtype="<f8").tobytes())


def read_records(fh):
    while True:
        raw = fh.read(4)
        if not raw:
            return
        if len(raw) < 4:
            raise DataIntegrityError("truncated record header")
        (hlen,) = struct.unpack("<I", raw)
        header = json.loads(fh.read(hlen))
        t = header["n_points"]
        n_obs = header["n_obs"]
        drive_values = np.frombuffer(fh.read(8 * t), dtype="<f8")
        frames = np.frombuffer(fh.read(8 * t * n_obs), dtype="<f8").reshape(t, n_obs)
        if drive_values.size != t or frames.size != t * n_obs:
            raise DataIntegrityError(f"truncated arrays in record {header.get('index')}")
        yield header, drive_values, frames


def _compute_sample(args):
    (index, model, drive_kind, drive_params, n_points, dt, root_seed,
     integrator, initial_p, l_max) = args
    times = dt * np.arange(n_points)
    for attempt in range(_MAX_ATTEMPTS):
        rng = child_rng(root_seed, index, attempt)
        p = rng.uniform() if initial_p is None else float(initial_p)
        drive = sample_drive(drive_kind, n_points, dt, rng, params=drive_params)
        try:
            series = evolve(
                model, drive, times,
                state=ProductStateSpec(p=p), integrator=integrator, l_max=l_max,
            )
        except IntegrationError:
            continue
        header = {
            "index": index,
            "p": p,
            "drive_kind": drive_kind,
            "drive_params": drive.params,
            "retries": attempt,
            "n_points": n_points,
            "n_obs": series.frames.shape[1],
        }
        return header, drive.values, series.frames
    raise IntegrationError(
        f"sample {index} failed {_MAX_ATTEMPTS} integration attempts", t_reached=0.0
    )


def _split_sizes(n: int, val_fraction: float, test_fraction: float):
    n_val = int(round(val_fraction * n))
    n_test = int(round(test_fraction * n))
    n_train = n - n_val - n_test
    if n_train < 1:
        raise ConfigError(f"{n} samples leave no training split")
    return n_train, n_val, n_test


def generate_dataset(
    out_dir,
    model: SpinModel,
    drive_kind: str,
    n_samples: int,
    t_max: float = 7.0,
    dt: float = 0.125,
    root_seed: int = 0,
    integrator: IntegratorConfig = IntegratorConfig(),
    workers: int = 1,
    drive_params: dict | None = None,
    initial_p: float | None = None,
    l_max: int | None = None,
    val_fraction: float = 0.1,
    test_fraction: float = 0.1,
    force: bool = False,
) -> Path:
    """Simulate n_samples drives and store them split into train/val/test.

    Returns the manifest path.  Existing datasets are never overwritten
    unless force is set.  Samples that fail to integrate are retried on a
    fresh child stream (same index, next attempt); retry counts land in the
    manifest.
    """
    out_dir = Path(out_dir)
    manifest_path = out_dir / "manifest.json"
    if manifest_path.exists() and not force:
        raise ConfigError(f"{manifest_path} exists; pass force to regenerate")
    if n_samples < 1:
        raise ConfigError("n_samples must be >= 1")
    times = time_grid(t_max, dt)
    n_points = times.shape[0]
    l_max = max_distance(model.n_sites) if l_max is None else int(l_max)
    n_train, n_val, n_test = _split_sizes(n_samples, val_fraction, test_fraction)
    bounds = {
        "train": (0, n_train),
        "val": (n_train, n_train + n_val),
        "test": (n_train + n_val, n_samples),
    }
    out_dir.mkdir(parents=True, exist_ok=True)

    args = [
        (i, model, drive_kind, drive_params, n_points, dt, root_seed,
         integrator, initial_p, l_max)
        for i in range(n_samples)
    ]
    if workers > 1:
        pool = Pool(workers)
        results = pool.imap(_compute_sample, args, chunksize=8)
    else:
        pool = None
        results = map(_compute_sample, args)

    files = {}
    retries = {}
    try:
        it = iter(results)
        for split in SPLITS:
            lo, hi = bounds[split]
            name = f"{split}.bin"
            digest = hashlib.sha256()
            count = 0
            with open(out_dir / name, "wb") as fh:
                for _ in range(lo, hi):
                    header, drive_values, frames = next(it)
                    if header["retries"]:
                        retries[str(header["index"])] = header["retries"]
                    buf = io.BytesIO()
                    write_record(buf, header, drive_values, frames)
                    blob = buf.getvalue()
                    fh.write(blob)
                    digest.update(blob)
                    count += 1
            files[name] = {"sha256": digest.hexdigest(), "n_samples": count}
    finally:
        if pool is not None:
            pool.close()
            pool.join()

    manifest = {
        "format_version": FORMAT_VERSION,
        "model": {
            "kind": model.kind,
            "n_sites": model.n_sites,
            "coupling": model.coupling,
            "g": model.g,
            "jy": model.jy,
            "jz": model.jz,
        },
        "grid": {"t_max": t_max, "dt": dt, "n_points": n_points, "sample_every": 1},
        "drive": {"kind": drive_kind, "params": drive_params},
        "initial_state": {"p": initial_p},
        "integrator": {
            "atol": integrator.atol,
            "rtol": integrator.rtol,
            "max_steps": integrator.max_steps,
        },
        "l_max": l_max,
        "n_samples": n_samples,
        "root_seed": root_seed,
        "splits": {s: list(bounds[s]) for s in SPLITS},
        "files": files,
        "retries": retries,
        "created": datetime.now(timezone.utc).isoformat(),
    }
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest_path


def load_manifest(path) -> dict:
    path = Path(path)
    if path.is_dir():
        path = path / "manifest.json"
    if not path.exists():
        raise ConfigError(f"no manifest at {path}")
    return json.loads(path.read_text())


def dataset_fingerprint(manifest: dict) -> str:
    """Stable identity of a dataset's content, bound into checkpoints."""
    stable = {k: v for k, v in manifest.items() if k != "created"}
    return hashlib.sha256(_canonical_json(stable).encode()).hexdigest()[:16]


@dataclass
class Sample:
    index: int
    p: float
    drive: DriveTrajectory
    frames: np.ndarray
    retries: int = 0


class SampleSet:
    """One split held in memory, with array views for training code."""

    def __init__(self, samples: list[Sample], times: np.ndarray, l_max: int,
                 manifest: dict):
        self.samples = samples
        self.times = times
        self.l_max = l_max
        self.manifest = manifest

    def __len__(self):
        return len(self.samples)

    @property
    def drives(self) -> np.ndarray:
        return np.stack([s.drive.values for s in self.samples])

    @property
    def frames(self) -> np.ndarray:
        return np.stack([s.frames for s in self.samples])

    @property
    def initial_p(self) -> np.ndarray:
        return np.array([s.p for s in self.samples])

    @property
    def initial_locals(self) -> np.ndarray:
        return np.stack([product_locals(s.p) for s in self.samples])


def _verify_file(path: Path, expected_sha: str):
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    if digest.hexdigest() != expected_sha:
        raise DataIntegrityError(f"content hash mismatch for {path}")


def load_split(dataset_dir, split: str) -> SampleSet:
    manifest = load_manifest(dataset_dir)
    if split not in SPLITS:
        raise ConfigError(f"split must be one of {SPLITS}, got {split!r}")
    lo, hi = manifest["splits"][split]
    if hi - lo < 1:
        raise ConfigError(f"split {split!r} too small ({hi - lo} samples)")
    path = Path(dataset_dir)
    if path.is_file():
        path = path.parent
    fpath = path / f"{split}.bin"
    _verify_file(fpath, manifest["files"][f"{split}.bin"]["sha256"])
    dt = manifest["grid"]["dt"]
    samples = []
    with open(fpath, "rb") as fh:
        for header, drive_values, frames in read_records(fh):
            expected_obs = n_observables(manifest["l_max"])
            if header["n_obs"] != expected_obs:
                raise DataIntegrityError(
                    f"record {header['index']} has {header['n_obs']} observables, "
                    f"manifest implies {expected_obs}"
                )
            samples.append(
                Sample(
                    index=header["index"],
                    p=header["p"],
                    drive=DriveTrajectory(
                        values=drive_values.copy(),
                        dt=dt,
                        kind=header["drive_kind"],
                        params=header["drive_params"],
                    ),
                    frames=frames,
                    retries=header.get("retries", 0),
                )
            )
    if len(samples) != hi - lo:
        raise DataIntegrityError(
            f"{fpath} holds {len(samples)} records, manifest says {hi - lo}"
        )
    times = dt * np.arange(manifest["grid"]["n_points"])
    return SampleSet(samples, times, manifest["l_max"], manifest)


def dump_csv(dataset_dir, split: str, out_path, max_samples: int | None = None) -> Path:
    """Flat CSV export: one row per (sample, time)."""
    from .observables import frame_labels

    ss = load_split(dataset_dir, split)
    labels = frame_labels(ss.l_max)
    out_path = Path(out_path)
    with open(out_path, "w") as fh:
        fh.write("sample,t,drive," + ",".join(labels) + "\n")
        for s in ss.samples[: max_samples if max_samples else len(ss.samples)]:
            for k, t in enumerate(ss.times):
                row = [str(s.index), repr(float(t)), repr(float(s.drive.values[k]))]
                row += [repr(float(v)) for v in s.frames[k]]
                fh.write(",".join(row) + "\n")
    return out_path
