"""Experiment configuration and Monte-Carlo runners behind the ``bcs`` CLI.

Every random draw is keyed by the experiment seed plus a stream tag and the
trial coordinates, so any row can be regenerated on its own:

    signal  [seed, 1, trial]
    sensor  [seed, 2, beta, m]            (+ trial when redraw_sensor)
    noise   [seed, 3, trial, beta, m, round(1000 * snr_db)]
    dataset [seed, 4, j]                  (kernel training signals)

Standard and serial BCS see the same signal, sensor and noise in a trial, so
their errors can be compared pairwise.
"""
import csv
import dataclasses
import glob
import json
import logging
import math
import os
import re
import statistics
import time
from dataclasses import dataclass, field

import numpy as np

from .kernel_learning import CorrelationKernel, learn_kernel
from .partition import PartitionMap, PartitionSpec, factors_for
from .recovery import RecoveryConfig, default_max_iters, parallel_bcs, serial_bcs
from .sensing import draw_sensor, measure, scale_to_snr
from .signals import ClusterSpec, generate_clustered, generate_dataset
from .tensor_core import load_tensor, save_tensor

log = logging.getLogger(__name__)

METHODS = ("standard-bcs", "serial-bcs")


class ConfigError(ValueError):
    pass


@dataclass
class SolverSettings:
    logit_scale: float = 1.0
    prior_clip: float = 1e-3
    residual_tol_factor: float = 1.0
    budget_factor: float = 1.5
    workers: int = 1


@dataclass
class ExperimentConfig:
    name: str = "desk"
    signal: ClusterSpec = field(default_factory=lambda: ClusterSpec((16, 16), 3, 1, 18, "gaussian"))
    betas: tuple = (1, 4, 16)
    strategy: str = "comb"
    ensemble: str = "gaussian"
    ratio: float = 0.4
    snr_grid: tuple = (0, 5, 10, 15, 20, 25, 30)
    ratio_grid: tuple = (0.2, 0.3, 0.4, 0.5)
    snr_db: float = 30.0
    trials: int = 100
    timing_trials: int = 5
    dataset_size: int = 200
    dataset_dir: str | None = None
    kernel_path: str | None = None
    redraw_sensor: bool = True
    max_stored_scalars: int = 20_000_000
    seed: int = 0
    solver: SolverSettings = field(default_factory=SolverSettings)

    def __post_init__(self):
        self.betas = tuple(int(b) for b in self.betas)
        self.snr_grid = tuple(float(s) for s in self.snr_grid)
        self.ratio_grid = tuple(float(r) for r in self.ratio_grid)
        if self.trials < 1 or self.timing_trials < 1:
            raise ConfigError("trials must be >= 1")
        if not self.betas:
            raise ConfigError("betas must be nonempty")
        try:
            for beta in self.betas:
                factors_for(self.signal.dims, beta)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if self.strategy not in ("comb", "contiguous"):
            raise ConfigError(f"unknown partition strategy {self.strategy!r}")

    @property
    def n(self):
        return int(np.prod(self.signal.dims))

    def measurements_for(self, ratio):
        """``ratio * n`` rounded to the nearest multiple of every beta in the config."""
        step = math.lcm(*self.betas)
        m = step * int(round(ratio * self.n / step))
        return max(step, min(m, self.n))

    def to_json(self):
        out = dataclasses.asdict(self)
        out["signal"] = self.signal.to_json()
        for key in ("betas", "snr_grid", "ratio_grid"):
            out[key] = list(out[key])
        return out

    @classmethod
    def from_json(cls, obj):
        obj = dict(obj)
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(obj) - names
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            if "signal" in obj:
                obj["signal"] = ClusterSpec.from_json(obj["signal"])
            if "solver" in obj:
                obj["solver"] = SolverSettings(**obj["solver"])
            return cls(**obj)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc


def profile(name):
    """Named configurations. ``desk`` runs in minutes; ``paper`` uses the 4-D grid."""
    if name == "desk":
        # real-valued data: the Gaussian log-likelihood carries a 1/(2 sigma^2), hence scale 2
        return ExperimentConfig(solver=SolverSettings(logit_scale=2.0))
    if name == "paper":
        return ExperimentConfig(
            name="paper",
            signal=ClusterSpec((16, 16, 8, 8), 3, 1, 50, "complex-gaussian"),
            betas=(1, 16, 64),
            ensemble="complex-gaussian",
            trials=10,
            timing_trials=3,
        )
    if name == "timing":
        return ExperimentConfig(
            name="timing",
            signal=ClusterSpec((16, 16, 8, 8), 3, 1, 50, "gaussian"),
            betas=(16, 64),
            trials=3,
            timing_trials=3,
            solver=SolverSettings(logit_scale=2.0),
        )
    if name == "tiny":
        return ExperimentConfig(
            name="tiny",
            signal=ClusterSpec((8, 8), 2, 1, 6, "gaussian"),
            betas=(1, 4),
            snr_grid=(10, 30),
            ratio_grid=(0.25, 0.5),
            trials=4,
            timing_trials=2,
            dataset_size=20,
            solver=SolverSettings(logit_scale=2.0),
        )
    raise ConfigError(f"unknown profile {name!r}")


def load_config(path=None, profile_name=None, seed=None):
    cfg = profile(profile_name or "desk")
    if path is not None:
        with open(path) as fh:
            try:
                obj = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}: {exc}") from exc
        base = cfg.to_json()
        base.update(obj)
        cfg = ExperimentConfig.from_json(base)
    if seed is not None:
        cfg = dataclasses.replace(cfg, seed=int(seed))
    return cfg


# -- datasets and kernels ---------------------------------------------------

def write_dataset(cfg, out_dir):
    """Write ``dataset_size`` training signals plus ``manifest.json``."""
    os.makedirs(out_dir, exist_ok=True)
    signals = generate_dataset(cfg.signal, cfg.dataset_size, seed=[cfg.seed, 4])
    for j, x in enumerate(signals):
        save_tensor(os.path.join(out_dir, f"signal_{j}.json"), x)
    manifest = {"J": cfg.dataset_size, "seed": cfg.seed, "config": cfg.to_json()}
    with open(os.path.join(out_dir, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
    return out_dir


def read_dataset(data_dir):
    paths = glob.glob(os.path.join(data_dir, "signal_*.json"))
    if not paths:
        raise ConfigError(f"no signal_<j>.json files in {data_dir}")
    key = lambda p: int(re.search(r"signal_(\d+)\.json$", p).group(1))
    return [load_tensor(p) for p in sorted(paths, key=key)]


def kernel_for(cfg):
    """Kernel and average sparsity from the configured source.

    Preference order: ``kernel_path`` (with a ``stats.json`` beside it),
    ``dataset_dir``, and finally a freshly generated training set.
    """
    if cfg.kernel_path:
        kernel = CorrelationKernel.load(cfg.kernel_path)
        with open(os.path.join(os.path.dirname(cfg.kernel_path) or ".", "stats.json")) as fh:
            s_avg = json.load(fh)["s_avg"]
        return kernel, s_avg
    dataset = read_dataset(cfg.dataset_dir) if cfg.dataset_dir else \
        generate_dataset(cfg.signal, cfg.dataset_size, seed=[cfg.seed, 4])
    kernel, stats = learn_kernel(dataset)
    return kernel, stats.s_avg


# -- Monte-Carlo trials -----------------------------------------------------

@dataclass
class TrialRecord:
    trial: int
    beta: int
    m: int
    snr_db: float
    method: str
    error: float
    energy: float
    ms: float


class Infeasible(Exception):
    pass


def _partition(cfg, beta):
    return PartitionMap(PartitionSpec(cfg.signal.dims, factors_for(cfg.signal.dims, beta), cfg.strategy))


def _solver_config(cfg, s_avg, beta, m):
    s = cfg.solver
    return RecoveryConfig(
        max_iters=default_max_iters(s_avg, beta, m // beta, s.budget_factor),
        residual_tol_factor=s.residual_tol_factor,
        logit_scale=s.logit_scale,
        prior_clip=s.prior_clip,
        noise_var=1.0,
        workers=s.workers,
    )


def check_feasible(cfg, m, beta):
    n = cfg.n
    if m % beta or n % beta:
        raise Infeasible(f"beta={beta} does not divide m={m}, n={n}")
    if m * n // beta > cfg.max_stored_scalars:
        raise Infeasible(f"m={m}, n={n}, beta={beta} needs {m * n // beta} stored scalars")


def run_point(cfg, m, beta, snr_db, kernel, s_avg, methods=METHODS, trials=None):
    """Run ``trials`` paired trials at one grid point; returns TrialRecords."""
    check_feasible(cfg, m, beta)
    pmap = _partition(cfg, beta)
    scfg = _solver_config(cfg, s_avg, beta, m)
    sensor = None if cfg.redraw_sensor else \
        draw_sensor(m, cfg.n, beta, pmap, [cfg.seed, 2, beta, m], cfg.ensemble)
    records = []
    for t in range(cfg.trials if trials is None else trials):
        sen = sensor or draw_sensor(m, cfg.n, beta, pmap, [cfg.seed, 2, beta, m, t], cfg.ensemble)
        x = generate_clustered(cfg.signal, np.random.default_rng([cfg.seed, 1, t]))
        x = scale_to_snr(sen, x, snr_db, sigma=1.0)
        meas = measure(sen, x, 1.0, seed=[cfg.seed, 3, t, beta, m, int(round(1000 * snr_db))])
        energy = float(np.sum(np.abs(x) ** 2))
        for method in methods:
            t0 = time.perf_counter()
            if method == "standard-bcs":
                x_hat = parallel_bcs(meas, sen, scfg).x
            elif method == "serial-bcs":
                x_hat = serial_bcs(meas, sen, kernel, s_avg, scfg).x
            else:
                raise ConfigError(f"unknown method {method!r}")
            ms = 1e3 * (time.perf_counter() - t0)
            err = float(np.sum(np.abs(x_hat - x) ** 2))
            records.append(TrialRecord(t, beta, m, snr_db, method, err, energy, ms))
    return records


def summarise(records):
    """NMSE (ratio of means) and mean time per method."""
    err = np.mean([r.error for r in records])
    energy = np.mean([r.energy for r in records])
    return float(err / energy), float(np.mean([r.ms for r in records]))


def bench_snr(cfg, kernel=None, s_avg=None):
    """Rows ``(snr_db, beta, method, nmse, mean_ms)`` at the configured ratio; also the raw records."""
    if kernel is None:
        kernel, s_avg = kernel_for(cfg)
    m = cfg.measurements_for(cfg.ratio)
    rows, raw = [], []
    for snr in sorted(cfg.snr_grid):
        for beta in sorted(cfg.betas):
            try:
                recs = run_point(cfg, m, beta, snr, kernel, s_avg)
            except Infeasible as exc:
                log.warning("skipping: %s", exc)
                rows.extend((snr, beta, meth, "", "") for meth in METHODS)
                continue
            raw.extend(recs)
            for meth in METHODS:
                rows.append((snr, beta, meth, *summarise([r for r in recs if r.method == meth])))
    return rows, raw


def bench_subsampling(cfg, kernel=None, s_avg=None):
    """Rows ``(ratio, beta, method, nmse)`` at ``cfg.snr_db``; also the raw records."""
    if kernel is None:
        kernel, s_avg = kernel_for(cfg)
    rows, raw = [], []
    for ratio in sorted(cfg.ratio_grid):
        m = cfg.measurements_for(ratio)
        for beta in sorted(cfg.betas):
            try:
                recs = run_point(cfg, m, beta, cfg.snr_db, kernel, s_avg)
            except Infeasible as exc:
                log.warning("skipping: %s", exc)
                rows.extend((ratio, beta, meth, "") for meth in METHODS)
                continue
            raw.extend(recs)
            for meth in METHODS:
                rows.append((ratio, beta, meth, summarise([r for r in recs if r.method == meth])[0]))
    return rows, raw


TIMING_METHODS = ("standard-bcs", "standard-bcs-parallel", "serial-bcs")


def timing(cfg, kernel=None, s_avg=None):
    """Median wall-clock (ms) per beta and method at the configured ratio and SNR.

    ``standard-bcs`` solves the blocks one after another, ``standard-bcs-parallel``
    on a thread pool with ``max(solver.workers, cpu count)`` threads.
    """
    if kernel is None:
        kernel, s_avg = kernel_for(cfg)
    m = cfg.measurements_for(cfg.ratio)
    workers = max(cfg.solver.workers, os.cpu_count() or 1)
    rows = []
    for beta in sorted(cfg.betas):
        try:
            check_feasible(cfg, m, beta)
        except Infeasible as exc:
            log.warning("skipping: %s", exc)
            rows.extend((beta, meth, "") for meth in TIMING_METHODS)
            continue
        pmap = _partition(cfg, beta)
        scfg = _solver_config(cfg, s_avg, beta, m)
        pcfg = dataclasses.replace(scfg, workers=workers)
        sensor = draw_sensor(m, cfg.n, beta, pmap, [cfg.seed, 2, beta, m], cfg.ensemble)
        runs = {
            "standard-bcs": lambda meas: parallel_bcs(meas, sensor, scfg),
            "standard-bcs-parallel": lambda meas: parallel_bcs(meas, sensor, pcfg),
            "serial-bcs": lambda meas: serial_bcs(meas, sensor, kernel, s_avg, scfg),
        }
        times = {meth: [] for meth in TIMING_METHODS}
        for t in range(cfg.timing_trials + 1):
            x = generate_clustered(cfg.signal, np.random.default_rng([cfg.seed, 1, t]))
            x = scale_to_snr(sensor, x, cfg.snr_db, sigma=1.0)
            meas = measure(sensor, x, 1.0, seed=[cfg.seed, 3, t, beta, m, int(round(1000 * cfg.snr_db))])
            for meth in TIMING_METHODS:
                t0 = time.perf_counter()
                runs[meth](meas)
                if t > 0:  # trial 0 is a warm-up
                    times[meth].append(1e3 * (time.perf_counter() - t0))
        rows.extend((beta, meth, statistics.median(times[meth])) for meth in TIMING_METHODS)
    return rows


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([repr(v) if isinstance(v, float) else v for v in row])


def write_sidecar(path, cfg, extra=None):
    meta = {"config": cfg.to_json()}
    if extra:
        meta.update(extra)
    with open(path, "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
