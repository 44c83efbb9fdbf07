"""Reproducible Brownian and Poisson increments.

Every simulated path owns a :class:`RandomStream` keyed by
``(master_seed, stream_id)``.  The underlying bit source is numpy's Philox
counter-based generator, so a stream's draws depend only on its key and on
how many values have been consumed, never on thread or process scheduling.

Uniforms are turned into normals with the Box-Muller transform and into
Poisson counts by inversion of the exact CDF.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import cosdg, sindg

from .model import InvalidInputError

__all__ = [
    "DEFAULT_SEED",
    "NoiseParams",
    "NoiseIncrement",
    "RandomStream",
    "derive_stream",
    "box_muller",
    "gaussian_pair",
    "standard_normals",
    "brownian_increment",
    "poisson_inverse",
    "poisson_count",
    "DRAWS_PER_STEP",
    "step_increments",
]

DEFAULT_SEED = 42
_MASK64 = (1 << 64) - 1
_TWO_M53 = 2.0 ** -53
_TINY = np.nextafter(0.0, 1.0)

# uniforms consumed per simulation step: Box-Muller pair, prey jump, predator jump
DRAWS_PER_STEP = 4


@dataclass(frozen=True)
class NoiseParams:
    """Brownian intensities and the point-mass jump specification.

    With ``shared_jumps`` (the default) a single Poisson process drives both
    species, so ``dN1 == dN2`` on every step.
    """

    sigma1: float = 0.02
    sigma2: float = 0.02
    lam: float = 1.0
    jump1: float = 1.0
    jump2: float = 1.0
    shared_jumps: bool = True

    def __post_init__(self):
        for name in ("sigma1", "sigma2", "lam", "jump1", "jump2"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise InvalidInputError(f"{name} must be finite, got {v!r}")
        for name in ("sigma1", "sigma2", "lam"):
            if getattr(self, name) < 0:
                raise InvalidInputError(f"{name} must be >= 0, got {getattr(self, name)!r}")
        for name in ("jump1", "jump2"):
            if getattr(self, name) <= -1:
                raise InvalidInputError(f"{name} must be > -1, got {getattr(self, name)!r}")

    @classmethod
    def deterministic(cls) -> "NoiseParams":
        return cls(sigma1=0.0, sigma2=0.0, lam=0.0)


@dataclass(frozen=True)
class NoiseIncrement:
    dW1: float
    dW2: float
    dN1: int
    dN2: int

    def __post_init__(self):
        if self.dN1 < 0 or self.dN2 < 0:
            raise InvalidInputError("jump counts must be >= 0")


@dataclass
class RandomStream:
    """Single-owner stream of 64-bit words for one path."""

    master_seed: int
    stream_id: int
    _bitgen: np.random.Philox = field(init=False, repr=False)

    def __post_init__(self):
        self.master_seed = int(self.master_seed) & _MASK64
        self.stream_id = int(self.stream_id) & _MASK64
        key = np.array([self.master_seed, self.stream_id], dtype=np.uint64)
        self._bitgen = np.random.Philox(key=key)

    def raw(self, n: int) -> np.ndarray:
        return self._bitgen.random_raw(n)

    def uniforms(self, n: int) -> np.ndarray:
        """``n`` uniforms on [0, 1) with 53-bit resolution."""
        return (self.raw(n) >> np.uint64(11)).astype(np.float64) * _TWO_M53


def derive_stream(master_seed: int, path_index: int) -> RandomStream:
    """Stream for path ``path_index``; the key pair is used verbatim, so the map is injective."""
    return RandomStream(master_seed, path_index)


def _open_left(u):
    # (0,1] variant of a [0,1) uniform for the logarithm in Box-Muller
    return np.where(u == 0.0, _TINY, u)


def box_muller(u1, u2):
    """Box-Muller transform of ``u1`` in (0, 1] and ``u2`` in [0, 1)."""
    rad = np.sqrt(-2.0 * np.log(u1))
    # degree-based trig keeps quadrant points exact (cos 90 deg == 0)
    ang = 360.0 * u2
    return rad * cosdg(ang), rad * sindg(ang)


def gaussian_pair(stream: RandomStream) -> tuple[float, float]:
    u = stream.uniforms(2)
    z1, z2 = box_muller(_open_left(u[0]), u[1])
    return float(z1), float(z2)


def standard_normals(stream: RandomStream, n: int) -> np.ndarray:
    """``n`` standard normals, generated pairwise in stream order."""
    m = (n + 1) // 2
    u = stream.uniforms(2 * m).reshape(m, 2)
    z1, z2 = box_muller(_open_left(u[:, 0]), u[:, 1])
    return np.column_stack([z1, z2]).ravel()[:n]


def brownian_increment(stream: RandomStream, dt: float) -> float:
    """One Brownian increment ``z sqrt(dt)`` (the second normal of the pair is discarded)."""
    if not dt > 0:
        raise InvalidInputError(f"dt must be > 0, got {dt!r}")
    z1, _ = gaussian_pair(stream)
    return z1 * math.sqrt(dt)


@lru_cache(maxsize=64)
def _poisson_cdf(mean: float) -> np.ndarray:
    # cumulative probabilities until the tail mass is below double resolution
    probs = [math.exp(-mean)]
    cdf = [probs[0]]
    k = 0
    while cdf[-1] < 1.0 - 1e-17 and k < 10_000:
        k += 1
        probs.append(probs[-1] * mean / k)
        cdf.append(cdf[-1] + probs[-1])
        if probs[-1] == 0.0 and k > mean:
            break
    return np.array(cdf)


def poisson_inverse(u, mean: float):
    """Poisson(mean) variates from uniforms on [0, 1) by CDF inversion."""
    if mean < 0 or not math.isfinite(mean):
        raise InvalidInputError(f"Poisson mean must be finite and >= 0, got {mean!r}")
    if mean == 0.0:
        return np.zeros(np.shape(u), dtype=np.int64)
    if mean > 500.0:
        # exp(-mean) underflows the table start; no caller reaches this regime
        raise InvalidInputError(f"Poisson mean {mean} too large for inversion")
    cdf = _poisson_cdf(float(mean))
    return np.searchsorted(cdf, u, side="right").astype(np.int64)


def poisson_count(stream: RandomStream, lam: float, dt: float) -> int:
    if lam < 0:
        raise InvalidInputError(f"lambda must be >= 0, got {lam!r}")
    if not dt > 0:
        raise InvalidInputError(f"dt must be > 0, got {dt!r}")
    u = stream.uniforms(1)
    return int(poisson_inverse(u, lam * dt)[0])


def step_increments(uniforms: np.ndarray, dt: float, noise: NoiseParams):
    """Map a ``(..., DRAWS_PER_STEP)`` uniform block to per-step increments.

    Returns ``dW1, dW2, dN1, dN2`` with the leading shape of ``uniforms``.
    The layout is fixed, so a step always consumes the same four words
    whatever the noise configuration.
    """
    sq = math.sqrt(dt)
    z1, z2 = box_muller(_open_left(uniforms[..., 0]), uniforms[..., 1])
    dW1 = z1 * sq
    dW2 = z2 * sq
    mean = noise.lam * dt
    dN1 = poisson_inverse(uniforms[..., 2], mean)
    dN2 = dN1 if noise.shared_jumps else poisson_inverse(uniforms[..., 3], mean)
    return dW1, dW2, dN1, dN2
