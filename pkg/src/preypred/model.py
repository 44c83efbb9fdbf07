"""Deterministic coefficients of the additional-food Holling IV prey-predator model.

All rates are written in non-dimensional form::

    dx/dt = r x (1 - x/gamma) - x y / D
    dy/dt = y [e (x + xi g) / D - m1 - m2 y]

with ``g = omega x^2 + 1`` and ``D = (1 + alpha xi) g + x``.

The functions here accept scalars or numpy arrays (broadcasting) so that the
simulator and the optimal-control code can evaluate them on whole ensembles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import brentq

__all__ = [
    "InvalidInputError",
    "DimensionalParams",
    "ModelParams",
    "State",
    "Equilibrium",
    "PUBLISHED_PARAMS",
    "functional_response",
    "drift",
    "drift_xy",
    "drift_jacobian",
    "nondimensionalize",
    "dimensional_drift",
    "equilibria",
]


class InvalidInputError(ValueError):
    """Raised for non-finite or out-of-domain inputs."""


def _check_finite(**values) -> None:
    for name, v in values.items():
        if not np.all(np.isfinite(v)):
            raise InvalidInputError(f"{name} must be finite, got {v!r}")


@dataclass(frozen=True)
class DimensionalParams:
    r: float
    K: float
    c: float
    e: float
    m1: float
    delta: float
    A: float
    b: float
    a: float
    eta: float
    alpha: float

    def __post_init__(self):
        _check_finite(**{k: getattr(self, k) for k in self.__dataclass_fields__})
        for name in ("r", "K", "c", "e"):
            if getattr(self, name) <= 0:
                raise InvalidInputError(f"{name} must be > 0")
        if self.a < 0:
            raise InvalidInputError("a must be > 0")
        for name in ("m1", "delta", "A", "b", "eta", "alpha"):
            if getattr(self, name) < 0:
                raise InvalidInputError(f"{name} must be >= 0")


@dataclass(frozen=True)
class ModelParams:
    """Non-dimensional parameter set.

    ``gamma=math.inf`` is accepted and switches the logistic term off
    (``1/gamma == 0``), which turns the prey equation into a linear growth law.
    ``alpha`` and ``xi`` are the additional-food quality and quantity; the
    control code overrides one of them per time step.
    """

    r: float = 1.5
    gamma: float = 12.0
    omega: float = 15.0
    e: float = 0.4
    m1: float = 0.15
    m2: float = 0.01
    alpha: float = 1.0
    xi: float = 1.0

    def __post_init__(self):
        for name in ("r", "omega", "e", "m1", "m2", "alpha", "xi"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise InvalidInputError(f"{name} must be finite, got {v!r}")
        if math.isnan(self.gamma) or self.gamma == -math.inf:
            raise InvalidInputError(f"gamma must be > 0, got {self.gamma!r}")
        for name in ("r", "gamma", "e"):
            if getattr(self, name) <= 0:
                raise InvalidInputError(f"{name} must be > 0, got {getattr(self, name)!r}")
        for name in ("omega", "m1", "m2", "alpha", "xi"):
            if getattr(self, name) < 0:
                raise InvalidInputError(f"{name} must be >= 0, got {getattr(self, name)!r}")

    @property
    def inv_gamma(self) -> float:
        return 0.0 if math.isinf(self.gamma) else 1.0 / self.gamma

    def with_controls(self, alpha: float | None = None, xi: float | None = None) -> "ModelParams":
        return replace(
            self,
            alpha=self.alpha if alpha is None else alpha,
            xi=self.xi if xi is None else xi,
        )


PUBLISHED_PARAMS = ModelParams(r=1.5, gamma=12.0, omega=15.0, e=0.4, m1=0.15, m2=0.01)


@dataclass(frozen=True)
class State:
    x: float
    y: float

    def __post_init__(self):
        _check_finite(x=self.x, y=self.y)
        if self.x < 0 or self.y < 0:
            raise InvalidInputError(f"state must be nonnegative, got ({self.x}, {self.y})")

    def __iter__(self):
        yield self.x
        yield self.y


@dataclass(frozen=True)
class Equilibrium:
    state: State
    kind: str  # "trivial" | "axial-prey" | "axial-predator" | "interior"
    drift_residual: float


def _denominator(x, alpha, xi, omega):
    return (1.0 + alpha * xi) * (omega * x * x + 1.0) + x


def functional_response(x, p: ModelParams, alpha=None, xi=None):
    """Per-predator predation rate ``x / D``; lies in [0, 1) for x >= 0."""
    _check_finite(x=x)
    if np.any(np.asarray(x) < 0):
        raise InvalidInputError("prey density must be >= 0")
    a = p.alpha if alpha is None else alpha
    q = p.xi if xi is None else xi
    return x / _denominator(x, a, q, p.omega)


def drift_xy(x, y, p: ModelParams, alpha=None, xi=None):
    """Unchecked vectorized drift; ``alpha``/``xi`` override the values in ``p``."""
    a = p.alpha if alpha is None else alpha
    q = p.xi if xi is None else xi
    g = p.omega * x * x + 1.0
    D = (1.0 + a * q) * g + x
    fx = p.r * x * (1.0 - x * p.inv_gamma) - x * y / D
    fy = y * (p.e * (x + q * g) / D - p.m1 - p.m2 * y)
    return fx, fy


def drift(s: State, p: ModelParams, alpha=None, xi=None) -> tuple[float, float]:
    x, y = s
    _check_finite(x=x, y=y)
    fx, fy = drift_xy(x, y, p, alpha, xi)
    return float(fx), float(fy)


def drift_jacobian(x, y, p: ModelParams, alpha=None, xi=None):
    """Analytic partial derivatives of the drift pair.

    Returns ``(dfx/dx, dfx/dy, dfy/dx, dfy/dy)``.
    """
    a = p.alpha if alpha is None else alpha
    q = p.xi if xi is None else xi
    g = p.omega * x * x + 1.0
    k = 1.0 + a * q
    D = k * g + x
    dD = 2.0 * k * p.omega * x + 1.0
    N = x + q * g
    dN = 1.0 + 2.0 * q * p.omega * x
    fxx = p.r - 2.0 * p.r * x * p.inv_gamma - y * (D - x * dD) / (D * D)
    fxy = -x / D
    fyx = p.e * y * (dN * D - N * dD) / (D * D)
    fyy = p.e * N / D - p.m1 - 2.0 * p.m2 * y
    return fxx, fxy, fyx, fyy


def nondimensionalize(d: DimensionalParams) -> ModelParams:
    """Map dimensional parameters onto the scaled model (N = a x, P = a y / c).

    The competition coefficient is ``m2 = a * delta / c``; this is the value
    that makes the scaled system reproduce the dimensional one exactly.
    """
    if d.a == 0:
        raise ZeroDivisionError("half-saturation scale a must be nonzero")
    return ModelParams(
        r=d.r,
        gamma=d.K / d.a,
        omega=d.b * d.a * d.a,
        e=d.e,
        m1=d.m1,
        m2=d.a * d.delta / d.c,
        alpha=d.alpha,
        xi=d.eta * d.A / d.a,
    )


def dimensional_drift(N, P, d: DimensionalParams):
    """Right-hand side of the dimensional system with predator competition."""
    D = (d.A * d.eta * d.alpha + d.a) * (d.b * N * N + 1.0) + N
    dN = d.r * N * (1.0 - N / d.K) - d.c * N / D * P
    dP = d.e * (N + d.eta * d.A * (d.b * N * N + 1.0)) / D * P - d.m1 * P - d.delta * P * P
    return dN, dP


# -- equilibria ---------------------------------------------------------------

_GRID_CELLS = 400
_MERGE_TOL = 1e-6
_RESIDUAL_TOL = 1e-9


def _residual(x, y, p):
    fx, fy = drift_xy(x, y, p)
    return max(abs(fx), abs(fy))


def _newton_polish(x, y, p, iters=50):
    for _ in range(iters):
        fx, fy = drift_xy(x, y, p)
        if max(abs(fx), abs(fy)) <= 1e-13:
            break
        a, b, c, d = drift_jacobian(x, y, p)
        det = a * d - b * c
        if det == 0 or not math.isfinite(det):
            break
        dx = (d * fx - b * fy) / det
        dy = (-c * fx + a * fy) / det
        x, y = x - dx, y - dy
    return x, y


def _predator_branch(x, p):
    """y on the predator nullcline (m2 > 0) as a function of x."""
    g = p.omega * x * x + 1.0
    D = (1.0 + p.alpha * p.xi) * g + x
    return (p.e * (x + p.xi * g) / D - p.m1) / p.m2


def _scan_roots(h, lo, hi, cells):
    grid = np.linspace(lo, hi, cells + 1)
    vals = np.array([h(t) for t in grid])
    roots = []
    for i in range(cells):
        a, b = vals[i], vals[i + 1]
        if not (math.isfinite(a) and math.isfinite(b)):
            continue
        if a == 0.0:
            roots.append(grid[i])
        elif a * b < 0:
            roots.append(brentq(h, grid[i], grid[i + 1], xtol=1e-15, rtol=4 * np.finfo(float).eps))
    if vals[-1] == 0.0:
        roots.append(grid[-1])
    return roots


def equilibria(p: ModelParams) -> list[Equilibrium]:
    """All nonnegative equilibria found on the search box.

    Interior roots come from a sign scan of the prey-nullcline condition along
    the predator nullcline, refined by bisection and polished with Newton.
    """
    found: list[tuple[float, float, str]] = [(0.0, 0.0, "trivial")]
    if math.isfinite(p.gamma):
        found.append((p.gamma, 0.0, "axial-prey"))
        x_max = 2.0 * p.gamma
    else:
        x_max = 1e3

    food = p.e * p.xi / (1.0 + p.alpha * p.xi)
    if p.m2 > 0 and food - p.m1 > 0:
        found.append((0.0, (food - p.m1) / p.m2, "axial-predator"))

    # the predator yield fraction (x + xi g)/D never exceeds max(1, xi/(1 + alpha xi))
    yield_cap = max(1.0, p.xi / (1.0 + p.alpha * p.xi))
    y_cap = 2.0 * p.e * yield_cap / p.m2 if p.m2 > 0 else 1e3

    candidates: list[tuple[float, float]] = []
    if p.m2 > 0:
        def h(x):
            y = _predator_branch(x, p)
            g = p.omega * x * x + 1.0
            D = (1.0 + p.alpha * p.xi) * g + x
            return p.r * (1.0 - x * p.inv_gamma) - y / D

        for x in _scan_roots(h, 0.0, x_max, _GRID_CELLS):
            y = _predator_branch(x, p)
            if x > 0 and 0 < y <= y_cap:
                candidates.append((x, y))
    else:
        def h(x):
            g = p.omega * x * x + 1.0
            D = (1.0 + p.alpha * p.xi) * g + x
            return p.e * (x + p.xi * g) / D - p.m1

        for x in _scan_roots(h, 0.0, x_max, _GRID_CELLS):
            g = p.omega * x * x + 1.0
            D = (1.0 + p.alpha * p.xi) * g + x
            y = p.r * (1.0 - x * p.inv_gamma) * D
            if x > 0 and 0 < y <= y_cap:
                candidates.append((x, y))

    for x, y in candidates:
        x, y = _newton_polish(x, y, p)
        if x > 0 and y > 0:
            found.append((x, y, "interior"))

    out: list[Equilibrium] = []
    for x, y, kind in found:
        res = _residual(x, y, p)
        if res > _RESIDUAL_TOL:
            continue
        if any(max(abs(x - q.state.x), abs(y - q.state.y)) < _MERGE_TOL for q in out):
            continue
        out.append(Equilibrium(State(float(x), float(y)), kind, float(res)))
    return out
