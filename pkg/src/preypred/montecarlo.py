"""Ensembles, pointwise statistics and first-entry (hitting) times.

Paths are split into fixed-size chunks regardless of the worker count and the
per-chunk statistics are merged in chunk order, so results are bit-identical
for any number of workers.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .model import InvalidInputError, ModelParams, State
from .noise import NoiseParams, derive_stream
from .sim import ControlSchedule, Path, SimConfig, _schedule_coefficients, fmt, integrate_blocks

__all__ = [
    "CHUNK_PATHS",
    "TargetSpec",
    "EnsembleStats",
    "run_ensemble",
    "hitting_time",
    "first_entry_index",
    "estimate_objective",
    "objective_from_times",
    "write_stats_csv",
    "write_hitting_csv",
]

CHUNK_PATHS = 256


@dataclass(frozen=True)
class TargetSpec:
    target: State
    epsilon: float = 0.5

    def __post_init__(self):
        if not (math.isfinite(self.epsilon) and self.epsilon > 0):
            raise InvalidInputError(f"epsilon must be > 0, got {self.epsilon!r}")

    def inside(self, x, y):
        return np.maximum(np.abs(x - self.target.x), np.abs(y - self.target.y)) <= self.epsilon


@dataclass
class EnsembleStats:
    n_paths: int
    times: np.ndarray
    mean: np.ndarray  # (n+1, 2)
    std: np.ndarray  # (n+1, 2)
    hitting_times: np.ndarray | None  # tau per path; censored paths carry the horizon
    censored: np.ndarray | None  # bool per path
    clamp_events: int = 0

    @property
    def horizon(self) -> float:
        return float(self.times[-1])

    @property
    def censored_fraction(self) -> float:
        if self.censored is None:
            return float("nan")
        return float(np.mean(self.censored))

    @property
    def mean_hitting_time(self) -> float:
        """Mean over uncensored paths (nan when every path is censored)."""
        if self.hitting_times is None:
            return float("nan")
        hit = self.hitting_times[~self.censored]
        return float(hit.mean()) if hit.size else float("nan")

    @property
    def hitting_time_se(self) -> float:
        if self.hitting_times is None:
            return float("nan")
        hit = self.hitting_times[~self.censored]
        if hit.size < 2:
            return float("nan")
        return float(hit.std(ddof=1) / math.sqrt(hit.size))


def first_entry_index(xs, ys, target: TargetSpec):
    """First grid index inside the target ball along axis 0, or -1 when never inside."""
    inside = target.inside(xs, ys)
    any_in = inside.any(axis=0)
    idx = np.argmax(inside, axis=0)
    return np.where(any_in, idx, -1)


def hitting_time(path: Path, target: TargetSpec) -> float | None:
    """First grid time within ``epsilon`` (max-norm) of the target; ``None`` if censored."""
    k = int(first_entry_index(path.states[:, 0:1], path.states[:, 1:2], target)[0])
    return None if k < 0 else float(path.times[k])


def objective_from_times(taus, censored, horizon: float) -> tuple[float, float]:
    """Mean of censored-at-horizon hitting times and its standard error over all paths."""
    vals = np.where(censored, horizon, taus).astype(float)
    n = vals.size
    J = float(vals.mean())
    se = float(vals.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return J, se


def estimate_objective(stats: EnsembleStats, horizon: float | None = None) -> tuple[float, float]:
    if stats.hitting_times is None:
        raise InvalidInputError("ensemble was run without a target")
    T = stats.horizon if horizon is None else horizon
    return objective_from_times(stats.hitting_times, stats.censored, T)


def _merge(acc, part):
    """Chan et al. pairwise merge of (count, mean, M2), referenced to the running mean."""
    if acc is None:
        return part
    na, ma, Ma = acc
    nb, mb, Mb = part
    n = na + nb
    delta = mb - ma
    mean = ma + delta * (nb / n)
    M2 = Ma + Mb + delta * delta * (na * nb / n)
    return n, mean, M2


def _chunk_moments(v):
    # shift by the first path so identical paths give exactly zero spread
    ref = v[:, :1]
    d = v - ref
    md = d.mean(axis=1, keepdims=True)
    M2 = ((d - md) ** 2).sum(axis=1)
    return ref[:, 0] + md[:, 0], M2


def _run_chunk(args):
    (start, count, x0, y0, alpha, xi, mp, nz, cfg, seed, target) = args
    n = cfg.n_steps
    streams = [derive_stream(seed, start + i) for i in range(count)]
    mean = np.empty((n + 1, 2))
    M2 = np.empty((n + 1, 2))
    mean[0] = (x0, y0)
    M2[0] = 0.0
    hit = np.full(count, -1, dtype=np.int64)
    if target is not None:
        hit[:] = np.where(target.inside(np.full(count, x0), np.full(count, y0)), 0, -1)
    clamps = 0
    for k0, xs, ys, _, cl in integrate_blocks(np.full(count, x0), np.full(count, y0), alpha, xi,
                                              mp, nz, cfg, streams=streams, path_offset=start):
        b = xs.shape[0]
        sl = slice(k0 + 1, k0 + 1 + b)
        mean[sl, 0], M2[sl, 0] = _chunk_moments(xs)
        mean[sl, 1], M2[sl, 1] = _chunk_moments(ys)
        clamps += int(cl.sum())
        if target is not None and (hit < 0).any():
            idx = first_entry_index(xs, ys, target)
            new = (hit < 0) & (idx >= 0)
            hit[new] = k0 + 1 + idx[new]
    return count, mean, M2, hit, clamps


def run_ensemble(n: int, x0: float, y0: float, schedule: ControlSchedule | None, mp: ModelParams,
                 nz: NoiseParams, cfg: SimConfig, master_seed: int,
                 target: TargetSpec | None = None, workers: int = 1) -> EnsembleStats:
    """Simulate ``n`` paths (stream ``i`` for path ``i``) and aggregate them pointwise."""
    if n < 1:
        raise InvalidInputError("need at least one path")
    alpha, xi = _schedule_coefficients(schedule, mp, cfg.n_steps)
    jobs = [(s, min(CHUNK_PATHS, n - s), float(x0), float(y0), alpha, xi, mp, nz, cfg,
             master_seed, target) for s in range(0, n, CHUNK_PATHS)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_run_chunk, jobs))
    else:
        results = [_run_chunk(j) for j in jobs]

    acc = None
    hits = []
    clamps = 0
    for count, mean, M2, hit, cl in results:
        acc = _merge(acc, (count, mean, M2))
        hits.append(hit)
        clamps += cl
    _, mean, M2 = acc
    std = np.sqrt(M2 / n)
    hit = np.concatenate(hits)
    times = cfg.times
    taus = censored = None
    if target is not None:
        censored = hit < 0
        taus = np.where(censored, cfg.horizon, times[np.maximum(hit, 0)])
    return EnsembleStats(n, times, mean, std, taus, censored, clamps)


def write_stats_csv(stats: EnsembleStats, target) -> None:
    with open(target, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "mean_x", "mean_y", "std_x", "std_y"])
        for k, t in enumerate(stats.times):
            w.writerow([fmt(t), fmt(stats.mean[k, 0]), fmt(stats.mean[k, 1]),
                        fmt(stats.std[k, 0]), fmt(stats.std[k, 1])])


def write_hitting_csv(stats: EnsembleStats, target) -> None:
    if stats.hitting_times is None:
        raise InvalidInputError("ensemble was run without a target")
    with open(target, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["path_index", "tau", "censored"])
        for i, (tau, c) in enumerate(zip(stats.hitting_times, stats.censored)):
            w.writerow([i, fmt(tau), int(c)])
