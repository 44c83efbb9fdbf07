"""Euler-Maruyama integration of the jump-diffusion prey-predator system.

One step of the scheme, per species::

    x' = x + x f_x dt + sigma1 x dW1 + x jump1 (dN1 - lam dt)

where ``x f_x`` is the deterministic drift.  Jumps are multiplicative with a
per-step compensator, and ``dN`` follows the exact Poisson law, so several
events may land in one step.

The integrator works on batches of paths (one numpy lane per path) and hands
out blocks of states to its consumers; a single :class:`Path` is a batch of
one.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .model import InvalidInputError, ModelParams, State, drift_xy
from .noise import DRAWS_PER_STEP, NoiseIncrement, NoiseParams, RandomStream, step_increments

__all__ = [
    "NumericalOverflowError",
    "SimConfig",
    "ControlSchedule",
    "Path",
    "BatchPaths",
    "step",
    "advance",
    "simulate_path",
    "simulate_batch",
    "simulate_with_noise",
    "integrate_blocks",
    "write_path_csv",
    "read_path_csv",
    "fmt",
]

BLOCK_STEPS = 1024


def fmt(v) -> str:
    """17 significant digits, the round-trip precision of a double."""
    return format(float(v), ".17g")


class NumericalOverflowError(ArithmeticError):
    def __init__(self, message: str, step: int | None = None, path: int | None = None):
        super().__init__(message)
        self.step = step
        self.path = path


@dataclass(frozen=True)
class SimConfig:
    dt: float = 1e-3
    horizon: float = 50.0
    positivity_floor: float = 1e-12
    record_noise: bool = True

    def __post_init__(self):
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise InvalidInputError(f"dt must be > 0, got {self.dt!r}")
        if not (math.isfinite(self.horizon) and self.horizon >= 0):
            raise InvalidInputError(f"horizon must be >= 0, got {self.horizon!r}")
        if self.horizon > 0 and self.dt > self.horizon:
            raise InvalidInputError("dt must not exceed the horizon")
        if not (0 < self.positivity_floor <= 1e-8):
            raise InvalidInputError("positivity_floor must lie in (0, 1e-8]")
        n = self.horizon / self.dt
        if abs(n - round(n)) > 1e-6 * max(1.0, n):
            raise InvalidInputError("horizon must be an integer multiple of dt")

    @property
    def n_steps(self) -> int:
        return int(round(self.horizon / self.dt))

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n_steps + 1) * self.dt


@dataclass(frozen=True)
class ControlSchedule:
    """Open-loop control values on the simulation grid.

    ``mode`` says which coefficient the values replace: ``"quality"`` for
    alpha, ``"quantity"`` for xi.
    """

    values: np.ndarray
    mode: str
    bounds: tuple[float, float]

    def __post_init__(self):
        lo, hi = self.bounds
        if self.mode not in ("quality", "quantity"):
            raise InvalidInputError(f"unknown control mode {self.mode!r}")
        if not (0 <= lo <= hi and math.isfinite(hi)):
            raise InvalidInputError(f"invalid bounds {self.bounds!r}")
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 1 or not np.all(np.isfinite(vals)):
            raise InvalidInputError("schedule values must be a finite 1-d array")
        if np.any(vals < lo) or np.any(vals > hi):
            raise InvalidInputError("schedule values outside bounds")
        object.__setattr__(self, "values", vals)

    @classmethod
    def constant(cls, value: float, n_points: int, mode: str, bounds: tuple[float, float]):
        return cls(np.full(n_points, float(value)), mode, bounds)

    def coefficients(self, mp: ModelParams) -> tuple[np.ndarray, np.ndarray]:
        """Per-grid-point (alpha, xi) arrays implied by the schedule."""
        if self.mode == "quality":
            return self.values, np.full_like(self.values, mp.xi)
        return np.full_like(self.values, mp.alpha), self.values


@dataclass(frozen=True)
class Path:
    times: np.ndarray  # (n+1,)
    states: np.ndarray  # (n+1, 2)
    controls: np.ndarray  # (n+1, 2) alpha, xi
    noise: np.ndarray | None  # (n, 4) dW1, dW2, dN1, dN2
    clamp_events: int = 0

    def __len__(self) -> int:
        return len(self.times)

    def state(self, k: int) -> State:
        return State(float(self.states[k, 0]), float(self.states[k, 1]))

    def increment(self, k: int) -> NoiseIncrement:
        if self.noise is None:
            raise InvalidInputError("path was simulated without a noise record")
        dW1, dW2, dN1, dN2 = self.noise[k]
        return NoiseIncrement(float(dW1), float(dW2), int(dN1), int(dN2))


@dataclass(frozen=True)
class BatchPaths:
    """Many paths on one grid; arrays are indexed ``[k, path]``."""

    times: np.ndarray
    x: np.ndarray
    y: np.ndarray
    alpha: np.ndarray  # (n+1,)
    xi: np.ndarray  # (n+1,)
    noise: tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray] | None
    clamp_events: np.ndarray  # per path

    @property
    def n_paths(self) -> int:
        return self.x.shape[1]

    def path(self, i: int) -> Path:
        states = np.column_stack([self.x[:, i], self.y[:, i]])
        controls = np.column_stack([self.alpha, self.xi])
        noise = None
        if self.noise is not None:
            noise = np.column_stack([a[:, i] for a in self.noise]).astype(float)
        return Path(self.times, states, controls, noise, int(self.clamp_events[i]))


def advance(x, y, alpha, xi, mp: ModelParams, nz: NoiseParams, dW1, dW2, dN1, dN2, dt, floor):
    """Vectorized step; returns ``(x', y', clamped_x, clamped_y)``.

    A component that leaves the positive half-line from a positive value is
    reset to ``floor`` and flagged (unless it overflowed to -inf).  Zero
    stays zero: every term carries the state as a factor.
    """
    fx, fy = drift_xy(x, y, mp, alpha, xi)
    xn = x + fx * dt + nz.sigma1 * x * dW1 + x * nz.jump1 * (dN1 - nz.lam * dt)
    yn = y + fy * dt + nz.sigma2 * y * dW2 + y * nz.jump2 * (dN2 - nz.lam * dt)
    # -inf is an overflow, not a positivity violation; it is left for the finiteness check
    cx = (xn <= 0) & (x > 0) & (xn > -np.inf)
    cy = (yn <= 0) & (y > 0) & (yn > -np.inf)
    if cx.any():
        xn = np.where(cx, floor, xn)
    if cy.any():
        yn = np.where(cy, floor, yn)
    return xn, yn, cx, cy


def _advance_scalar(x, y, alpha, xi, mp, nz, dW1, dW2, dN1, dN2, dt, floor):
    # same arithmetic as advance() on Python floats; single paths avoid numpy call overhead
    fx, fy = drift_xy(x, y, mp, alpha, xi)
    xn = x + fx * dt + nz.sigma1 * x * dW1 + x * nz.jump1 * (dN1 - nz.lam * dt)
    yn = y + fy * dt + nz.sigma2 * y * dW2 + y * nz.jump2 * (dN2 - nz.lam * dt)
    cx = -math.inf < xn <= 0 and x > 0
    cy = -math.inf < yn <= 0 and y > 0
    return (floor if cx else xn), (floor if cy else yn), cx, cy


def step(s: State, ctrl: tuple[float, float], mp: ModelParams, nz: NoiseParams,
         inc: NoiseIncrement, dt: float, positivity_floor: float = 1e-12) -> State:
    """One Euler-Maruyama step from ``s`` with controls ``ctrl = (alpha, xi)``."""
    if not dt >= 0:
        raise InvalidInputError(f"dt must be >= 0, got {dt!r}")
    alpha, xi = ctrl
    xn, yn, _, _ = _advance_scalar(s.x, s.y, alpha, xi, mp, nz, inc.dW1, inc.dW2, inc.dN1,
                                   inc.dN2, dt, positivity_floor)
    if not (math.isfinite(xn) and math.isfinite(yn)):
        raise NumericalOverflowError("non-finite state after step", step=0)
    return State(float(xn), float(yn))


def _stream_blocks(streams: Sequence[RandomStream], n_steps: int, dt: float, nz: NoiseParams,
                   block: int) -> Iterator[tuple]:
    for start in range(0, n_steps, block):
        b = min(block, n_steps - start)
        u = np.stack([s.uniforms(DRAWS_PER_STEP * b).reshape(b, DRAWS_PER_STEP) for s in streams],
                     axis=1)
        yield step_increments(u, dt, nz)


def _array_blocks(noise, n_steps: int, block: int) -> Iterator[tuple]:
    dW1, dW2, dN1, dN2 = noise
    for start in range(0, n_steps, block):
        sl = slice(start, min(start + block, n_steps))
        yield dW1[sl], dW2[sl], dN1[sl], dN2[sl]


def integrate_blocks(x0, y0, alpha, xi, mp: ModelParams, nz: NoiseParams, cfg: SimConfig,
                     streams: Sequence[RandomStream] | None = None, noise=None,
                     block: int = BLOCK_STEPS, path_offset: int = 0):
    """Generator over blocks of the integration.

    Yields ``(k0, xs, ys, incs, clamps)`` where ``xs[j]`` is the state at
    grid index ``k0 + j + 1`` and ``incs`` the increments that produced it.
    Increments come from ``streams`` (one per path) or from an explicit
    ``noise`` tuple of ``(n_steps, n_paths)`` arrays.
    """
    n = cfg.n_steps
    x = np.array(x0, dtype=float, ndmin=1)
    y = np.array(y0, dtype=float, ndmin=1)
    if np.any(x < 0) or np.any(y < 0) or not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise InvalidInputError("initial state must be finite and nonnegative")
    alpha = np.broadcast_to(np.asarray(alpha, dtype=float), (n + 1,))
    xi = np.broadcast_to(np.asarray(xi, dtype=float), (n + 1,))
    if streams is not None:
        source = _stream_blocks(streams, n, cfg.dt, nz, block)
    elif noise is not None:
        source = _array_blocks(noise, n, block)
    else:
        raise InvalidInputError("need either streams or an explicit noise record")
    dt, floor = cfg.dt, cfg.positivity_floor
    k0 = 0
    for dW1, dW2, dN1, dN2 in source:
        b = dW1.shape[0]
        xs = np.empty((b, x.size))
        ys = np.empty((b, x.size))
        clamps = np.zeros(x.size, dtype=np.int64)
        if x.size == 1:
            k0 = _scalar_block(x, y, xs, ys, clamps, k0, alpha, xi, mp, nz,
                               (dW1, dW2, dN1, dN2), dt, floor)
            x, y = xs[-1].copy(), ys[-1].copy()
            _check_block(xs, ys, k0 - b, path_offset)
            yield k0 - b, xs, ys, (dW1, dW2, dN1, dN2), clamps
            continue
        for j in range(b):
            k = k0 + j
            x, y, cx, cy = advance(x, y, alpha[k], xi[k], mp, nz, dW1[j], dW2[j], dN1[j], dN2[j],
                                   dt, floor)
            if cx.any() or cy.any():
                clamps += cx + cy
            xs[j] = x
            ys[j] = y
        _check_block(xs, ys, k0, path_offset)
        yield k0, xs, ys, (dW1, dW2, dN1, dN2), clamps
        k0 += b


def _check_block(xs, ys, k0, path_offset):
    bad = ~(np.isfinite(xs) & np.isfinite(ys))
    if bad.any():
        j, i = np.argwhere(bad)[0]
        raise NumericalOverflowError(
            f"non-finite state at step {k0 + j} of path {path_offset + i}",
            step=int(k0 + j), path=int(path_offset + i))


def _scalar_block(x, y, xs, ys, clamps, k0, alpha, xi, mp, nz, incs, dt, floor):
    xv, yv = float(x[0]), float(y[0])
    a_list = alpha[k0:k0 + xs.shape[0]].tolist()
    q_list = xi[k0:k0 + xs.shape[0]].tolist()
    cols = [np.asarray(v).reshape(-1).tolist() for v in incs]
    n_clamp = 0
    with np.errstate(over="ignore", invalid="ignore"):
        for j, (a, q, w1, w2, n1, n2) in enumerate(zip(a_list, q_list, *cols)):
            xv, yv, cx, cy = _advance_scalar(xv, yv, a, q, mp, nz, w1, w2, n1, n2, dt, floor)
            n_clamp += cx + cy
            xs[j, 0] = xv
            ys[j, 0] = yv
    clamps[0] += n_clamp
    return k0 + xs.shape[0]


def _collect(x0, y0, alpha, xi, mp, nz, cfg, streams=None, noise=None, record_noise=True):
    n = cfg.n_steps
    P = len(streams) if streams is not None else np.shape(noise[0])[1]
    xs = np.empty((n + 1, P))
    ys = np.empty((n + 1, P))
    xs[0] = x0
    ys[0] = y0
    rec = tuple(np.empty((n, P)) for _ in range(4)) if record_noise else None
    clamps = np.zeros(P, dtype=np.int64)
    alpha = np.broadcast_to(np.asarray(alpha, dtype=float), (n + 1,))
    xi = np.broadcast_to(np.asarray(xi, dtype=float), (n + 1,))
    for k0, bx, by, incs, cl in integrate_blocks(x0 * np.ones(P), y0 * np.ones(P), alpha, xi,
                                                 mp, nz, cfg, streams=streams, noise=noise):
        b = bx.shape[0]
        xs[k0 + 1:k0 + 1 + b] = bx
        ys[k0 + 1:k0 + 1 + b] = by
        clamps += cl
        if rec is not None:
            for dst, src in zip(rec, incs):
                dst[k0:k0 + b] = src
    return BatchPaths(cfg.times, xs, ys, np.array(alpha), np.array(xi), rec, clamps)


def _schedule_coefficients(schedule: ControlSchedule | None, mp: ModelParams, n: int):
    if schedule is None:
        return np.full(n + 1, mp.alpha), np.full(n + 1, mp.xi)
    if schedule.values.shape[0] != n + 1:
        raise InvalidInputError(
            f"schedule has {schedule.values.shape[0]} points, grid has {n + 1}")
    return schedule.coefficients(mp)


def simulate_batch(x0: float, y0: float, schedule: ControlSchedule | None, mp: ModelParams,
                   nz: NoiseParams, cfg: SimConfig, streams: Sequence[RandomStream]) -> BatchPaths:
    alpha, xi = _schedule_coefficients(schedule, mp, cfg.n_steps)
    return _collect(x0, y0, alpha, xi, mp, nz, cfg, streams=streams,
                    record_noise=cfg.record_noise)


def simulate_path(x0: float, y0: float, schedule: ControlSchedule | None, mp: ModelParams,
                  nz: NoiseParams, cfg: SimConfig, stream: RandomStream) -> Path:
    """Simulate one path on the grid of ``cfg``; ``schedule=None`` keeps the controls in ``mp``."""
    return simulate_batch(x0, y0, schedule, mp, nz, cfg, [stream]).path(0)


def simulate_with_noise(x0: float, y0: float, schedule: ControlSchedule | None, mp: ModelParams,
                        nz: NoiseParams, cfg: SimConfig, noise: np.ndarray) -> Path:
    """Replay a path from an explicit ``(n_steps, 4)`` increment record."""
    noise = np.asarray(noise, dtype=float)
    if noise.shape != (cfg.n_steps, 4):
        raise InvalidInputError(f"noise record must have shape ({cfg.n_steps}, 4)")
    alpha, xi = _schedule_coefficients(schedule, mp, cfg.n_steps)
    cols = tuple(noise[:, j:j + 1] for j in range(4))
    return _collect(x0, y0, alpha, xi, mp, nz, cfg, noise=cols, record_noise=True).path(0)


PATH_COLUMNS = ("t", "x", "y", "alpha", "xi", "dW1", "dW2", "dN1", "dN2")


def write_path_csv(path: Path, target) -> None:
    """Write a path; the noise cells of the final grid point are left empty."""
    with open(target, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(PATH_COLUMNS)
        n = len(path)
        for k in range(n):
            row = [fmt(path.times[k]), fmt(path.states[k, 0]), fmt(path.states[k, 1]),
                   fmt(path.controls[k, 0]), fmt(path.controls[k, 1])]
            if path.noise is not None and k < n - 1:
                dW1, dW2, dN1, dN2 = path.noise[k]
                row += [fmt(dW1), fmt(dW2), str(int(dN1)), str(int(dN2))]
            else:
                row += ["", "", "", ""]
            w.writerow(row)


def read_path_csv(source) -> Path:
    with open(source, newline="") as fh:
        rows = list(csv.reader(fh))
    if tuple(rows[0]) != PATH_COLUMNS:
        raise InvalidInputError(f"unexpected header {rows[0]!r}")
    body = rows[1:]
    times = np.array([float(r[0]) for r in body])
    states = np.array([[float(r[1]), float(r[2])] for r in body])
    controls = np.array([[float(r[3]), float(r[4])] for r in body])
    noise = None
    if len(body) > 1 and body[0][5] != "":
        noise = np.array([[float(v) for v in r[5:9]] for r in body[:-1]])
    return Path(times, states, controls, noise)
