"""Chordal Loewner numerics with piecewise-constant driving.

On ``[t_k, t_k + dt_k)`` the driving is the constant ``xi_k`` and the
Loewner flow is solved exactly by the vertical slit map

    g(z) = xi_k + sqrt((z - xi_k)**2 + 4 dt_k),

with the square root taken in the closed upper half plane.  The map at
time ``t_k`` is the composition of the first ``k`` slit maps.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from . import _kernels, _random


class _Swallowed:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "SWALLOWED"

    def __bool__(self):
        return False


SWALLOWED = _Swallowed()


@dataclass(frozen=True)
class DrivingPath:
    """Driving samples ``values[k]`` at ``t_k = k dt``, constant on ``[t_k, t_{k+1})``."""

    dt: float
    values: np.ndarray
    kappa: float = 0.0
    seed: Optional[int] = None

    @property
    def n_steps(self) -> int:
        return len(self.values) - 1

    @property
    def times(self) -> np.ndarray:
        return self.dt * np.arange(len(self.values))

    @property
    def T(self) -> float:
        return self.dt * self.n_steps

    @classmethod
    def constant(cls, value: float, dt: float, T: float) -> "DrivingPath":
        return cls(float(dt), np.full(_random.n_steps_for(dt, T) + 1, float(value)))

    @classmethod
    def from_increments(cls, increments, dt: float, kappa: float = 0.0, seed=None) -> "DrivingPath":
        values = np.concatenate([[0.0], np.cumsum(increments)])
        return cls(float(dt), values, float(kappa), seed)

    def increments(self) -> np.ndarray:
        return np.diff(self.values)

    def truncate(self, n_steps: int) -> "DrivingPath":
        return DrivingPath(self.dt, self.values[: n_steps + 1], self.kappa, self.seed)


def sample_driving(kappa, dt, T, seed, index: int = 0) -> DrivingPath:
    """``sqrt(kappa) B`` sampled on a grid; sample ``index`` of the run ``seed``."""
    kappa = float(kappa)
    if kappa < 0:
        raise ValueError("kappa must be non-negative")
    K = _random.n_steps_for(dt, T)
    inc = _random.brownian_increments(kappa, dt, K, seed, index)
    return DrivingPath.from_increments(inc, dt, kappa, seed)


def sample_driving_batch(kappa, dt, T, seed, n_samples: int) -> np.ndarray:
    """Driving values, shape (n_samples, n_steps + 1)."""
    K = _random.n_steps_for(dt, T)
    inc = _random.brownian_increments_batch(kappa, dt, K, seed, n_samples)
    return np.concatenate([np.zeros((n_samples, 1)), np.cumsum(inc, axis=1)], axis=1)


@dataclass(frozen=True)
class LoewnerMapState:
    """Ordered elementary steps ``(dt_k, xi_k)``; no steps is the identity map."""

    dts: np.ndarray
    xis: np.ndarray

    def __post_init__(self):
        dts = np.asarray(self.dts, dtype=np.float64).reshape(-1)
        xis = np.asarray(self.xis, dtype=np.float64).reshape(-1)
        if dts.shape != xis.shape:
            raise ValueError("dts and xis must have equal length")
        if np.any(dts <= 0):
            raise ValueError("every elementary step needs dt > 0")
        object.__setattr__(self, "dts", dts)
        object.__setattr__(self, "xis", xis)

    @classmethod
    def empty(cls) -> "LoewnerMapState":
        return cls(np.zeros(0), np.zeros(0))

    @classmethod
    def from_driving(cls, driving: DrivingPath, n_steps: Optional[int] = None) -> "LoewnerMapState":
        k = driving.n_steps if n_steps is None else n_steps
        return cls(np.full(k, driving.dt), driving.values[:k])

    @property
    def total_time(self) -> float:
        return float(self.dts.sum())

    def __len__(self):
        return len(self.dts)


def _run(state: LoewnerMapState, z):
    pts = np.atleast_1d(np.asarray(z, dtype=np.complex128))
    return _kernels.forward(pts, state.xis, state.dts)


def forward_map_many(state: LoewnerMapState, zs):
    """Images and derivatives for many points; swallowed points come back as NaN."""
    img, der, swallow = _run(state, zs)
    dead = (swallow >= 0) & (swallow < len(state))
    img = np.where(dead, np.nan + 0j, img)
    der = np.where(dead, np.nan + 0j, der)
    return img, der


def forward_map(state: LoewnerMapState, z):
    """``g_t(z)``, or SWALLOWED if ``z`` leaves the domain before the last step."""
    img, _, swallow = _run(state, z)
    if 0 <= swallow[0] < len(state):
        return SWALLOWED
    return complex(img[0])


def map_derivative(state: LoewnerMapState, z):
    """``g_t'(z)`` by the chain rule over the elementary steps."""
    _, der, swallow = _run(state, z)
    if 0 <= swallow[0] < len(state):
        return SWALLOWED
    return complex(der[0])


def swallow_time(driving: DrivingPath, z) -> Optional[float]:
    """First grid time at which ``z`` joins the hull, or None if it survives to T.

    A point is swallowed when its image comes within 1e-9 of the driving,
    when it sits on the slit drawn during a step, or (for points on the
    real line) when the driving jumps past its image.
    """
    state = LoewnerMapState.from_driving(driving)
    _, _, swallow = _run(state, z)
    k = int(swallow[0])
    return None if k < 0 else k * driving.dt


def trace(driving: DrivingPath) -> np.ndarray:
    """Tips ``gamma(t_k)`` for ``k = 1..n_steps`` (complex array).

    The tip after step ``k`` is the preimage of that step's driving value,
    so ``gamma(t_1) = xi_0 + 2i sqrt(dt)``.
    """
    K = driving.n_steps
    if K == 0:
        return np.zeros(0, dtype=np.complex128)
    return _kernels.trace(np.ascontiguousarray(driving.values[:K]), np.full(K, driving.dt))


@dataclass(frozen=True)
class LaurentJet:
    """``ghat(z) = z + b_0 + b_1/z + ... + b_K/z**K``."""

    coeffs: np.ndarray

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    def __call__(self, z):
        return z + sum(b * z ** (-j) for j, b in enumerate(self.coeffs))


@dataclass(frozen=True)
class JetSeries:
    times: np.ndarray
    coeffs: np.ndarray

    def __len__(self):
        return len(self.times)

    def __getitem__(self, k) -> LaurentJet:
        return LaurentJet(self.coeffs[k].copy())


MAX_JET_ORDER = 8


def laurent_flow(driving: DrivingPath, K: int) -> JetSeries:
    """Expansion of the centred map ``g_t - xi_t`` at infinity, to order ``1/z**K``.

    Between driving samples the coefficients follow d/dt ghat = 2/ghat,
    integrated with one classical RK4 step per driving interval; ``b_0``
    absorbs the driving jumps.
    """
    if not 1 <= K <= MAX_JET_ORDER:
        raise ValueError(f"jet order must be in 1..{MAX_JET_ORDER}")
    coeffs = _kernels.laurent(np.ascontiguousarray(driving.values, dtype=np.float64), float(driving.dt), int(K))
    return JetSeries(driving.times, coeffs)


def boundary_flow(x0: float, increments, dt: float, record):
    """Centred images ``X = g_t(x0) - xi_t`` and derivatives ``Y = g_t'(x0)`` of a real point.

    ``increments`` has shape (n_paths, n_steps).  Returns ``(X, Y, stop)``
    sampled at the step counts in ``record``; after the driving overtakes
    the image the values stay at their last pre-swallow level and ``stop``
    holds the swallowing step count (-1 if never).
    """
    if x0 <= 0:
        raise ValueError("x0 must be positive")
    inc = np.atleast_2d(np.asarray(increments, dtype=np.float64))
    record = np.asarray(record, dtype=np.int64)
    return _kernels.boundary(float(x0), inc, float(dt), record)


def hull_indicator(driving: DrivingPath, points) -> List[bool]:
    """Whether each point has been swallowed by the final time."""
    state = LoewnerMapState.from_driving(driving)
    _, _, swallow = _run(state, points)
    return [bool(s >= 0) for s in swallow]
