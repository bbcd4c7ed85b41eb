"""Runtime scaling: exact state-vector evolution versus a network forward pass.

The exact route runs at deliberately loose tolerances so stepping cost, not
error control, dominates.  The network route times single-trajectory forward
passes of a freshly initialized net per system size: forward cost does not
depend on the weight values, so no training is needed for the comparison
(the report records this protocol).  Timing numbers are machine-dependent;
these artifacts are the one place the toolkit writes non-reproducible bytes.
"""
from __future__ import annotations

import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..drives import child_rng, sample_drive
from ..models import BENCH_INTEGRATOR, ProductStateSpec, SpinModel
from ..neural.lstm import init_lstm
from ..neural.training import predict_lstm
from ..observables import max_distance, n_observables, time_grid
from ..qdyn import evolve
from .svg import line_chart

PROTOCOL_NOTE = (
    "network timings use freshly initialized weights per size; "
    "forward-pass cost is independent of weight values"
)


@dataclass
class BenchRow:
    n_sites: int
    exact_s: float     # mean seconds per trajectory, exact solver
    network_s: float   # mean seconds per trajectory, network forward pass


@dataclass
class BenchReport:
    rows: list[BenchRow]
    n_instances: int
    exact_exponent: float     # slope of ln(time) vs M: time ~ e^(a M)
    network_exponent: float   # slope of ln(time) vs ln(M): time ~ M^b
    protocol: str = PROTOCOL_NOTE

    def row(self, n_sites: int) -> BenchRow:
        for r in self.rows:
            if r.n_sites == n_sites:
                return r
        raise KeyError(n_sites)


def run_bench(
    sizes=(6, 7, 8, 9, 10),
    n_instances: int = 100,
    t_max: float = 14.0,
    dt: float = 0.125,
    hidden_sizes=(128, 128),
    seed: int = 0,
) -> BenchReport:
    times = time_grid(t_max, dt)
    n_points = times.shape[0]
    rows = []
    for m in sizes:
        model = SpinModel(kind="tfi", n_sites=m)
        n_obs = n_observables(max_distance(m))
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(m,)))
        params = init_lstm(5, n_obs, list(hidden_sizes), rng)

        drives = []
        ps = []
        for i in range(n_instances):
            crng = child_rng(seed, i, 0)
            ps.append(crng.uniform())
            drives.append(sample_drive("gp", n_points, dt, crng))

        # one untimed pass absorbs compilation and allocator warmup
        evolve(model, drives[0], times, state=ProductStateSpec(p=ps[0]),
               integrator=BENCH_INTEGRATOR)
        t0 = time.perf_counter()
        for i in range(n_instances):
            evolve(model, drives[i], times, state=ProductStateSpec(p=ps[i]),
                   integrator=BENCH_INTEGRATOR)
        exact_s = (time.perf_counter() - t0) / n_instances

        drive_mat = np.stack([d.values for d in drives])
        s0 = np.stack([[2.0 * np.sqrt(p * (1.0 - p)), 0.0, 2.0 * p - 1.0]
                       for p in ps])
        predict_lstm(params, drive_mat[:1], times, s0[:1])
        t0 = time.perf_counter()
        for i in range(n_instances):
            predict_lstm(params, drive_mat[i: i + 1], times, s0[i: i + 1])
        network_s = (time.perf_counter() - t0) / n_instances

        rows.append(BenchRow(n_sites=m, exact_s=exact_s, network_s=network_s))

    ms = np.array([r.n_sites for r in rows], dtype=float)
    exact_exp = float(np.polyfit(ms, np.log([r.exact_s for r in rows]), 1)[0])
    net_exp = float(np.polyfit(np.log(ms), np.log([r.network_s for r in rows]), 1)[0])
    return BenchReport(rows=rows, n_instances=n_instances,
                       exact_exponent=exact_exp, network_exponent=net_exp)


def write_bench_artifacts(report: BenchReport, out_dir) -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []

    path = out_dir / "bench.csv"
    with open(path, "w") as fh:
        fh.write("n_sites,exact_s,network_s,ratio\n")
        for r in report.rows:
            fh.write(f"{r.n_sites},{r.exact_s!r},{r.network_s!r},"
                     f"{r.exact_s / r.network_s!r}\n")
    written.append(path)

    path = out_dir / "bench_summary.csv"
    with open(path, "w") as fh:
        fh.write("n_instances,exact_exponent,network_exponent,protocol\n")
        fh.write(f"{report.n_instances},{report.exact_exponent!r},"
                 f"{report.network_exponent!r},\"{report.protocol}\"\n")
    written.append(path)

    ms = [r.n_sites for r in report.rows]
    written.append(line_chart(
        out_dir / "bench.svg",
        [("exact", ms, [r.exact_s for r in report.rows]),
         ("network", ms, [r.network_s for r in report.rows])],
        title="runtime per trajectory", x_label="ring size M",
        y_label="seconds", log_y=True,
    ))
    return written
