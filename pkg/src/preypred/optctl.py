"""Hamiltonian, costates and the forward-backward sweep for the food controls.

With costates ``p = (p1, p2)``, diffusion costates ``q`` (2x2, row-major
``q1..q4``) and jump costates ``r = (r1, r2)`` the Hamiltonian is::

    H = L(x, y) + F1 p1 + F2 p2 + sigma1 x q1 + sigma2 y q4
        + lam (jump1 x r1 + jump2 y r2)

where ``F1 = x [r (1 - x/gamma) - y/D]`` and ``F2 = y [e (x + xi g)/D - m1 - m2 y]``
are the drift components.  The jump integrals collapse to ``lam`` times the
jump size because the mark space is a single point.  The running cost ``L``
is the constant 1 for the plain time functional; the sweep uses a smooth
target-dependent surrogate so that the costates carry information.

Costates obey ``dp/dt = -grad_(x,y) H`` backward from ``p(T) = 0``.  The
control formulas are the closed forms obtained from the two stationarity
conditions::

    alpha = e p2 (1 + x + omega x^2) / (x (e p2 - p1))
    xi    = x (p1 - e p2) / (e p2 (1 + omega x^2))

``alpha`` above is the root of dH/dxi = 0 and ``xi`` the root of
dH/dalpha = 0; each derivative's sign factor does not involve its own
control, so the pairing cannot be the other way round.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .model import InvalidInputError, ModelParams, State, drift_jacobian, drift_xy
from .montecarlo import (
    EnsembleStats,
    TargetSpec,
    estimate_objective,
    first_entry_index,
    objective_from_times,
    run_ensemble,
)
from .noise import NoiseParams, derive_stream
from .sim import (
    BatchPaths,
    ControlSchedule,
    NumericalOverflowError,
    Path,
    SimConfig,
    fmt,
    simulate_batch,
)

__all__ = [
    "ConfigurationError",
    "AdjointState",
    "RunningCost",
    "UNIT_COST",
    "SweepConfig",
    "StreamSet",
    "SweepResult",
    "HistoryEntry",
    "ControlSchedule",
    "hamiltonian",
    "hamiltonian_xy",
    "adjoint_drift",
    "adjoint_drift_xy",
    "control_update_quality",
    "control_update_quantity",
    "update_controls",
    "quality_residual",
    "quantity_residual",
    "backward_pass",
    "forward_backward_sweep",
    "DEGENERATE_TOL",
    "write_controls_csv",
    "write_adjoint_csv",
    "write_history_csv",
]

DEGENERATE_TOL = 1e-12


class ConfigurationError(ValueError):
    pass


@dataclass(frozen=True)
class AdjointState:
    """Costates; fields may be scalars or equally shaped arrays."""

    p1: float = 0.0
    p2: float = 0.0
    q1: float = 0.0
    q2: float = 0.0
    q3: float = 0.0
    q4: float = 0.0
    r1: float = 0.0
    r2: float = 0.0

    def at(self, k) -> "AdjointState":
        return AdjointState(*(np.asarray(getattr(self, f))[k] for f in _ADJ_FIELDS))

    def mean_over_paths(self) -> "AdjointState":
        return AdjointState(*(np.asarray(getattr(self, f)).mean(axis=1) for f in _ADJ_FIELDS))


_ADJ_FIELDS = ("p1", "p2", "q1", "q2", "q3", "q4", "r1", "r2")


@dataclass(frozen=True)
class RunningCost:
    """Running cost of the time functional.

    Without a target this is the constant 1.  With a target it is the smooth
    surrogate ``d^2 / (1 + d^2)`` of "not yet at the target", where ``d`` is
    the distance to the target measured in units of ``scale``.
    """

    target: State | None = None
    scale: tuple[float, float] = (1.0, 1.0)

    def __post_init__(self):
        if self.scale[0] <= 0 or self.scale[1] <= 0:
            raise InvalidInputError("cost scales must be positive")

    def value(self, x, y):
        if self.target is None:
            return np.ones(np.broadcast(x, y).shape) if np.ndim(x) or np.ndim(y) else 1.0
        u = (x - self.target.x) / self.scale[0]
        v = (y - self.target.y) / self.scale[1]
        d2 = u * u + v * v
        return d2 / (1.0 + d2)

    def gradient(self, x, y):
        if self.target is None:
            return 0.0 * x, 0.0 * y
        u = (x - self.target.x) / self.scale[0]
        v = (y - self.target.y) / self.scale[1]
        w = 1.0 / (1.0 + u * u + v * v) ** 2
        return 2.0 * u * w / self.scale[0], 2.0 * v * w / self.scale[1]


UNIT_COST = RunningCost()


def hamiltonian_xy(x, y, alpha, xi, adj: AdjointState, mp: ModelParams, nz: NoiseParams,
                   cost: RunningCost = UNIT_COST):
    F1, F2 = drift_xy(x, y, mp, alpha, xi)
    return (cost.value(x, y) + F1 * adj.p1 + F2 * adj.p2
            + nz.sigma1 * x * adj.q1 + nz.sigma2 * y * adj.q4
            + nz.lam * (nz.jump1 * x * adj.r1 + nz.jump2 * y * adj.r2))


def hamiltonian(s: State, ctrl: tuple[float, float], adj: AdjointState, mp: ModelParams,
                nz: NoiseParams, cost: RunningCost = UNIT_COST) -> float:
    """Hamiltonian at state ``s`` with controls ``ctrl = (alpha, xi)``."""
    vals = [s.x, s.y, *ctrl, *(getattr(adj, f) for f in _ADJ_FIELDS)]
    if not all(math.isfinite(v) for v in vals):
        raise InvalidInputError("hamiltonian inputs must be finite")
    return float(hamiltonian_xy(s.x, s.y, ctrl[0], ctrl[1], adj, mp, nz, cost))


def adjoint_drift_xy(x, y, alpha, xi, adj: AdjointState, mp: ModelParams, nz: NoiseParams,
                     cost: RunningCost = UNIT_COST):
    """``-dH/dx, -dH/dy``; vectorized, unchecked."""
    fxx, fxy, fyx, fyy = drift_jacobian(x, y, mp, alpha, xi)
    Lx, Ly = cost.gradient(x, y)
    dHx = Lx + fxx * adj.p1 + fyx * adj.p2 + nz.sigma1 * adj.q1 + nz.lam * nz.jump1 * adj.r1
    dHy = Ly + fxy * adj.p1 + fyy * adj.p2 + nz.sigma2 * adj.q4 + nz.lam * nz.jump2 * adj.r2
    return -dHx, -dHy


def adjoint_drift(s: State, ctrl: tuple[float, float], adj: AdjointState, mp: ModelParams,
                  nz: NoiseParams, cost: RunningCost = UNIT_COST) -> tuple[float, float]:
    """Costate drift ``(dp1/dt, dp2/dt) = -grad H``.

    Differentiating H directly (rather than copying a printed adjoint system)
    keeps the predation term's ``y`` factor in ``dH/dx``.
    """
    vals = [s.x, s.y, *ctrl, *(getattr(adj, f) for f in _ADJ_FIELDS)]
    if not all(math.isfinite(v) for v in vals):
        raise InvalidInputError("adjoint_drift inputs must be finite")
    d1, d2 = adjoint_drift_xy(s.x, s.y, ctrl[0], ctrl[1], adj, mp, nz, cost)
    return float(d1), float(d2)


# -- control formulas ---------------------------------------------------------

def quality_residual(x, p1, p2, mp: ModelParams, alpha):
    """Residual of ``alpha x p1 + e p2 (1 + omega x^2 + x (1 - alpha)) = 0``."""
    return alpha * x * p1 + mp.e * p2 * (1.0 + mp.omega * x * x + x * (1.0 - alpha))


def quantity_residual(x, p1, p2, mp: ModelParams, xi):
    """Residual of ``x p1 - e p2 (x + xi (omega x^2 + 1)) = 0``."""
    return x * p1 - mp.e * p2 * (x + xi * (mp.omega * x * x + 1.0))


def update_controls(mode: str, x, y, adj: AdjointState, mp: ModelParams,
                    bounds: tuple[float, float], nz: NoiseParams | None = None,
                    cost: RunningCost = UNIT_COST):
    """Vectorized control update.

    Returns ``(values, degenerate)`` where ``degenerate`` marks the points
    whose formula denominator vanished and which were resolved by comparing
    the Hamiltonian at the two bounds (ties go to the lower bound).
    """
    lo, hi = bounds
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise InvalidInputError("control formulas need x > 0")
    p1, p2 = np.asarray(adj.p1, dtype=float), np.asarray(adj.p2, dtype=float)
    e, om = mp.e, mp.omega
    if mode == "quality":
        num = e * p2 * (1.0 + x + om * x * x)
        den = x * (e * p2 - p1)
    elif mode == "quantity":
        num = x * (p1 - e * p2)
        den = e * p2 * (1.0 + om * x * x)
    else:
        raise InvalidInputError(f"unknown control mode {mode!r}")
    degenerate = np.abs(den) < DEGENERATE_TOL
    with np.errstate(divide="ignore", invalid="ignore"):
        raw = np.where(degenerate, lo, num / np.where(degenerate, 1.0, den))
    values = np.clip(raw, lo, hi)
    if degenerate.any():
        nz = nz or NoiseParams.deterministic()
        if mode == "quality":
            H_lo = hamiltonian_xy(x, y, lo, mp.xi, adj, mp, nz, cost)
            H_hi = hamiltonian_xy(x, y, hi, mp.xi, adj, mp, nz, cost)
        else:
            H_lo = hamiltonian_xy(x, y, mp.alpha, lo, adj, mp, nz, cost)
            H_hi = hamiltonian_xy(x, y, mp.alpha, hi, adj, mp, nz, cost)
        endpoint = np.where(H_hi < H_lo, hi, lo)
        values = np.where(degenerate, endpoint, values)
    return values, degenerate


def control_update_quality(s: State, adj: AdjointState, mp: ModelParams,
                           bounds: tuple[float, float], nz: NoiseParams | None = None,
                           cost: RunningCost = UNIT_COST) -> float:
    if not s.x > 0:
        raise InvalidInputError("quality update needs x > 0")
    v, _ = update_controls("quality", s.x, s.y, adj, mp, bounds, nz, cost)
    return float(v)


def control_update_quantity(s: State, adj: AdjointState, mp: ModelParams,
                            bounds: tuple[float, float], nz: NoiseParams | None = None,
                            cost: RunningCost = UNIT_COST) -> float:
    if not s.x > 0:
        raise InvalidInputError("quantity update needs x > 0")
    v, _ = update_controls("quantity", s.x, s.y, adj, mp, bounds, nz, cost)
    return float(v)


# -- backward pass ------------------------------------------------------------

@dataclass(frozen=True)
class SweepConfig:
    max_iters: int = 200
    relaxation: float = 0.5
    tol: float = 1e-4
    q_mode: str = "pathwise-zero"
    max_backtracks: int = 40
    objective_paths: int = 10_000

    def __post_init__(self):
        if self.max_iters < 1:
            raise InvalidInputError("max_iters must be >= 1")
        if not (0 < self.relaxation <= 1):
            raise InvalidInputError("relaxation must lie in (0, 1]")
        if not self.tol > 0:
            raise InvalidInputError("tol must be > 0")
        if self.q_mode not in ("pathwise-zero", "regression"):
            raise InvalidInputError(f"unknown q_mode {self.q_mode!r}")
        if self.max_backtracks < 0 or self.objective_paths < 1:
            raise InvalidInputError("max_backtracks >= 0 and objective_paths >= 1 required")


def _as_batch(path) -> BatchPaths:
    if isinstance(path, BatchPaths):
        return path
    noise = None
    if path.noise is not None:
        noise = tuple(path.noise[:, j:j + 1] for j in range(4))
    return BatchPaths(path.times, path.states[:, 0:1], path.states[:, 1:2],
                      path.controls[:, 0], path.controls[:, 1], noise,
                      np.array([path.clamp_events]))


def _regression_basis(x, y):
    # centred and scaled quadratic polynomials in the state
    def norm(v):
        s = v.std()
        return (v - v.mean()) / s if s > 0 else np.zeros_like(v)

    u, v = norm(x), norm(y)
    return np.column_stack([np.ones_like(u), u, v, u * u, u * v, v * v])


def backward_pass(path: Path | BatchPaths, schedule: ControlSchedule | None, mp: ModelParams,
                  nz: NoiseParams, cfg: SweepConfig, cost: RunningCost = UNIT_COST) -> AdjointState:
    """Integrate the costates backward from ``p(T) = 0`` along stored forward paths.

    The result holds ``(n+1,)`` arrays for a single :class:`Path` and
    ``(n+1, P)`` arrays for a batch.  Each step is Euler in reverse time with
    the costate taken implicitly::

        p_k = p_{k+1} - dt * (dp/dt)(x_k, y_k, u_k, p_k, q_k, r_k)

    i.e. a 2x2 linear solve per path.  The explicit variant is unstable once
    ``dt * |df/dx|`` exceeds 2, which large predator densities reach.  In
    ``pathwise-zero`` mode ``q = r = 0``.  In ``regression`` mode ``p_{k+1}``
    is projected across the ensemble onto state polynomials plus the step's
    noise increments; the polynomial part estimates the conditional mean and
    the increment coefficients give ``q`` and ``r``.
    """
    single = isinstance(path, Path)
    b = _as_batch(path)
    if b.noise is None:
        raise ConfigurationError("backward pass needs a path recorded with noise")
    n = len(b.times) - 1
    P = b.n_paths
    if schedule is not None:
        if schedule.values.shape[0] != n + 1:
            raise ConfigurationError("schedule is not aligned with the path grid")
        alpha, xi = schedule.coefficients(mp)
    else:
        alpha, xi = b.alpha, b.xi
    dt = float(b.times[1] - b.times[0]) if n > 0 else 0.0

    p1 = np.zeros((n + 1, P))
    p2 = np.zeros((n + 1, P))
    q = np.zeros((4, n + 1, P))
    r = np.zeros((2, n + 1, P))
    regression = cfg.q_mode == "regression"
    if regression:
        ncols = 6 + 2 + (1 if nz.shared_jumps else 2)
        if P <= ncols:
            raise ConfigurationError(f"regression mode needs more than {ncols} paths")
    dW1, dW2, dN1, dN2 = b.noise
    if P == 1 and not regression and n > 0:
        _backward_scalar(b.x[:, 0], b.y[:, 0], alpha, xi, mp, cost, dt, p1[:, 0], p2[:, 0])
    for k in range(n - 1, -1, -1) if (P > 1 or regression) else ():
        x, y = b.x[k], b.y[k]
        if regression:
            basis = _regression_basis(x, y)
            jumps = [dN1[k] - nz.lam * dt]
            if not nz.shared_jumps:
                jumps.append(dN2[k] - nz.lam * dt)
            A = np.column_stack([basis, dW1[k], dW2[k], *jumps])
            c1 = np.linalg.lstsq(A, p1[k + 1], rcond=None)[0]
            c2 = np.linalg.lstsq(A, p2[k + 1], rcond=None)[0]
            nb = basis.shape[1]
            q[:, k] = np.array([c1[nb], c1[nb + 1], c2[nb], c2[nb + 1]])[:, None]
            r[0, k] = c1[nb + 2]
            r[1, k] = c2[nb + 2] if nz.shared_jumps else c2[nb + 3]
            e1, e2 = basis @ c1[:nb], basis @ c2[:nb]
        else:
            e1, e2 = p1[k + 1], p2[k + 1]
        # implicit in p: (I - dt J^T) p_k = p_next + dt c_k, J the drift Jacobian at step k
        fxx, fxy, fyx, fyy = drift_jacobian(x, y, mp, alpha[k], xi[k])
        Lx, Ly = cost.gradient(x, y)
        g1 = Lx + nz.sigma1 * q[0, k] + nz.lam * nz.jump1 * r[0, k]
        g2 = Ly + nz.sigma2 * q[3, k] + nz.lam * nz.jump2 * r[1, k]
        a11, a12 = 1.0 - dt * fxx, -dt * fyx
        a21, a22 = -dt * fxy, 1.0 - dt * fyy
        b1, b2 = e1 + dt * g1, e2 + dt * g2
        det = a11 * a22 - a12 * a21
        if np.any(np.abs(det) < 1e-12):
            raise NumericalOverflowError(f"singular costate step at {k}", step=k)
        p1[k] = (a22 * b1 - a12 * b2) / det
        p2[k] = (a11 * b2 - a21 * b1) / det
    bad = ~(np.isfinite(p1) & np.isfinite(p2))
    if bad.any():
        k = int(np.argwhere(bad)[0][0])
        raise NumericalOverflowError(f"non-finite costate at step {k}", step=k)
    if single:
        return AdjointState(p1[:, 0], p2[:, 0], *(q[j, :, 0] for j in range(4)),
                            r[0, :, 0], r[1, :, 0])
    return AdjointState(p1, p2, *q, *r)


def _backward_scalar(x, y, alpha, xi, mp, cost, dt, p1, p2):
    """Single-path pathwise-zero recursion; coefficients are vectorized, the solve is scalar."""
    n = len(x) - 1
    fxx, fxy, fyx, fyy = drift_jacobian(x[:n], y[:n], mp, alpha[:n], xi[:n])
    Lx, Ly = cost.gradient(x[:n], y[:n])
    a11, a12 = 1.0 - dt * fxx, -dt * fyx
    a21, a22 = -dt * fxy, 1.0 - dt * fyy
    det = a11 * a22 - a12 * a21
    small = np.abs(det) < 1e-12
    if small.any():
        k = int(np.argmax(small))
        raise NumericalOverflowError(f"singular costate step at {k}", step=k)
    cols = [v.tolist() for v in (a11, a12, a21, a22, det, dt * Lx, dt * Ly)]
    e1 = e2 = 0.0
    for k in range(n - 1, -1, -1):
        c11, c12, c21, c22, d, g1, g2 = (c[k] for c in cols)
        b1, b2 = e1 + g1, e2 + g2
        e1 = (c22 * b1 - c12 * b2) / d
        e2 = (c11 * b2 - c21 * b1) / d
        p1[k] = e1
        p2[k] = e2


# -- sweep --------------------------------------------------------------------

@dataclass(frozen=True)
class StreamSet:
    """Paths used inside the sweep; path ``i`` always draws from stream ``(seed, i)``."""

    master_seed: int
    n_paths: int = 1000

    def streams(self):
        return [derive_stream(self.master_seed, i) for i in range(self.n_paths)]


@dataclass(frozen=True)
class HistoryEntry:
    iteration: int
    sup_change: float
    objective: float
    surrogate: float
    relaxation: float


@dataclass
class SweepResult:
    schedule: ControlSchedule
    state_path: Path
    mean_states: np.ndarray
    adjoint_path: AdjointState
    objective: float
    objective_se: float
    censored_fraction: float
    fixed_horizon_objective: float
    history: list[HistoryEntry] = field(default_factory=list)
    converged: bool = False
    stalled: bool = False
    stats: EnsembleStats | None = None


def default_cost(x0: float, y0: float, target: TargetSpec) -> RunningCost:
    """Surrogate cost whose unit distance is half the initial offset per component."""
    sx = max(abs(x0 - target.target.x) / 2.0, target.epsilon)
    sy = max(abs(y0 - target.target.y) / 2.0, target.epsilon)
    return RunningCost(target.target, (sx, sy))


def _evaluate(x0, y0, schedule, mp, nz, simcfg, streams, target, cost):
    b = simulate_batch(x0, y0, schedule, mp, nz, simcfg, streams)
    idx = first_entry_index(b.x, b.y, target)
    censored = idx < 0
    taus = np.where(censored, simcfg.horizon, b.times[np.maximum(idx, 0)])
    J, _ = objective_from_times(taus, censored, simcfg.horizon)
    L = cost.value(b.x[:-1], b.y[:-1])
    surrogate = float(L.sum(axis=0).mean() * simcfg.dt)
    return b, J, surrogate


def _no_worse(J_new, S_new, J_old, S_old, eps=1e-12):
    if J_new < J_old - eps:
        return True
    return J_new <= J_old + eps and S_new <= S_old + eps


def forward_backward_sweep(x0: float, y0: float, mode: str, mp: ModelParams, nz: NoiseParams,
                           simcfg: SimConfig, sweepcfg: SweepConfig, bounds: tuple[float, float],
                           stream_set: StreamSet, target: TargetSpec,
                           cost: RunningCost | None = None,
                           initial: ControlSchedule | None = None,
                           objective_seed: int | None = None, workers: int = 1) -> SweepResult:
    """Relaxed forward-backward sweep on an open-loop control schedule.

    Each iteration simulates the ensemble, runs the backward pass, evaluates
    the control formula on the ensemble means of state and costates, and
    moves a fraction ``relaxation`` toward it.  A move is kept only if the
    censored mean hitting time does not increase (ties are broken by the
    surrogate cost); otherwise the fraction is halved.  The sweep has
    converged once the candidate move, accepted or not, is no larger than
    ``tol`` in sup-norm.  ``stalled`` records that the final move was a
    rejected one, i.e. the formula no longer offered a descent direction.
    """
    if not (x0 > 0 and y0 > 0):
        raise InvalidInputError("initial state must be positive")
    lo, hi = bounds
    if not (0 <= lo <= hi):
        raise InvalidInputError(f"invalid bounds {bounds!r}")
    n = simcfg.n_steps
    cost = cost or default_cost(x0, y0, target)
    if initial is None:
        start = mp.alpha if mode == "quality" else mp.xi
        initial = ControlSchedule.constant(min(max(start, lo), hi), n + 1, mode, bounds)
    if initial.mode != mode:
        raise InvalidInputError("initial schedule mode does not match")
    simcfg = SimConfig(simcfg.dt, simcfg.horizon, simcfg.positivity_floor, record_noise=True)

    def run(schedule, it):
        try:
            return _evaluate(x0, y0, schedule, mp, nz, simcfg, stream_set.streams(), target, cost)
        except NumericalOverflowError as exc:
            raise NumericalOverflowError(f"iteration {it}: {exc}", step=exc.step,
                                         path=exc.path) from exc

    schedule = ControlSchedule(np.clip(initial.values, lo, hi), mode, bounds)
    batch, J, S = run(schedule, 0)
    history: list[HistoryEntry] = []
    converged = stalled = False
    adj = None
    for it in range(1, sweepcfg.max_iters + 1):
        adj = backward_pass(batch, schedule, mp, nz, sweepcfg, cost)
        mean_adj = adj.mean_over_paths()
        xbar, ybar = batch.x.mean(axis=1), batch.y.mean(axis=1)
        target_u, _ = update_controls(mode, xbar, ybar, mean_adj, mp, bounds, nz, cost)
        theta = sweepcfg.relaxation
        accepted = None
        change = 0.0
        for _ in range(sweepcfg.max_backtracks + 1):
            cand_vals = np.clip((1.0 - theta) * schedule.values + theta * target_u, lo, hi)
            change = float(np.max(np.abs(cand_vals - schedule.values)))
            if change <= sweepcfg.tol:
                break
            cand = ControlSchedule(cand_vals, mode, bounds)
            cb, cJ, cS = run(cand, it)
            if _no_worse(cJ, cS, J, S):
                accepted = (cand, cb, cJ, cS)
                break
            theta *= 0.5
        if accepted is None:
            # the admissible move is below tolerance (or no descent was found)
            stalled = change > sweepcfg.tol or theta < sweepcfg.relaxation
            history.append(HistoryEntry(it, change, J, S, theta))
            converged = change <= sweepcfg.tol
            break
        schedule, batch, J, S = accepted
        history.append(HistoryEntry(it, change, J, S, theta))
    adj = backward_pass(batch, schedule, mp, nz, sweepcfg, cost)

    deterministic = nz.sigma1 == 0 and nz.sigma2 == 0 and nz.lam == 0
    n_obj = 1 if deterministic else sweepcfg.objective_paths
    seed = stream_set.master_seed if objective_seed is None else objective_seed
    stats = run_ensemble(n_obj, x0, y0, schedule, mp, nz, simcfg, seed, target, workers=workers)
    obj, se = estimate_objective(stats, simcfg.horizon)
    return SweepResult(
        schedule=schedule,
        state_path=batch.path(0),
        mean_states=np.column_stack([batch.x.mean(axis=1), batch.y.mean(axis=1)]),
        adjoint_path=adj.mean_over_paths(),
        objective=obj,
        objective_se=se,
        censored_fraction=stats.censored_fraction,
        fixed_horizon_objective=simcfg.horizon,
        history=history,
        converged=converged,
        stalled=stalled,
        stats=stats,
    )


# -- serialization ------------------------------------------------------------

def _write_rows(target, header, rows):
    with open(target, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def write_controls_csv(result: SweepResult, target) -> None:
    t = result.state_path.times
    _write_rows(target, ["t", "u"], ([fmt(a), fmt(b)] for a, b in zip(t, result.schedule.values)))


def write_adjoint_csv(result: SweepResult, target) -> None:
    t = result.state_path.times
    cols = [np.broadcast_to(np.asarray(getattr(result.adjoint_path, f), dtype=float), t.shape)
            for f in _ADJ_FIELDS]
    rows = ([fmt(t[k])] + [fmt(c[k]) for c in cols] for k in range(len(t)))
    _write_rows(target, ["t", *_ADJ_FIELDS], rows)


def write_history_csv(result: SweepResult, target) -> None:
    rows = ([h.iteration, fmt(h.sup_change), fmt(h.objective)] for h in result.history)
    _write_rows(target, ["iter", "sup_change", "objective"], rows)
