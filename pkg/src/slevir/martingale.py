"""Monte Carlo checks that the level-2 observables are conserved in mean.

Two families of observables are simulated:

* pairings ``<w, G_t w0>`` of the lifted flow against a probe state ``w``;
* boundary observables ``g_t'(x0)**h * (g_t(x0) - xi_t)**p`` of the
  Loewner flow, whose exponents solve ``kappa/2 p(p-1) + 2p - 2h = 0``.

A weighted least-squares slope of the sample means against time is the
test statistic.
"""

from __future__ import annotations

import cmath
from dataclasses import asdict, dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import _random
from .group_flow import basis, evolve_increments, probe_row
from .loewner import boundary_flow
from .virasoro import ModuleParams, VermaVector, hamiltonian_state, shapovalov

CONSERVED = "CONSERVED"
DRIFTING = "DRIFTING"
INCONCLUSIVE = "INCONCLUSIVE"

Z_CONSERVED = 3.0
Z_DRIFTING = 5.0
DEFAULT_POINTS = 10
DEFAULT_SAMPLES = 10_000


class InsufficientDataError(RuntimeError):
    """Too few usable samples or time points for a drift estimate."""


@dataclass(frozen=True)
class MCEstimate:
    t: float
    mean: float
    stderr: float
    n: int


@dataclass(frozen=True)
class DriftReport:
    slope: float
    slope_stderr: float
    z_score: float
    t_start: float
    t_end: float
    observable: str
    verdict: str
    degenerate: bool = False
    stopped_fraction: Optional[float] = None

    def as_dict(self) -> dict:
        return asdict(self)


def verdict_for(z: float) -> str:
    if abs(z) < Z_CONSERVED:
        return CONSERVED
    if abs(z) > Z_DRIFTING:
        return DRIFTING
    return INCONCLUSIVE


def summarize(samples: np.ndarray, times: Sequence[float]) -> List[MCEstimate]:
    """Per-time mean and standard error of a (n_samples, n_times) array."""
    samples = np.asarray(samples, dtype=np.float64)
    n = samples.shape[0]
    if n < 2:
        raise InsufficientDataError("need at least two samples")
    mean = samples.mean(axis=0)
    se = samples.std(axis=0, ddof=1) / np.sqrt(n)
    return [MCEstimate(float(t), float(m), float(s), n) for t, m, s in zip(times, mean, se)]


def mean_covariance(samples: np.ndarray) -> np.ndarray:
    """Covariance matrix of the time-point means (sample covariance / n)."""
    samples = np.asarray(samples, dtype=np.float64)
    return np.cov(samples, rowvar=False, ddof=1).reshape(samples.shape[1], samples.shape[1]) / samples.shape[0]


def drift_test(series: Sequence[MCEstimate], cov: Optional[np.ndarray] = None,
               observable: str = "", scale_tol: float = 1e-12) -> DriftReport:
    """Weighted least-squares slope of mean against time, weights 1/stderr**2.

    Without ``cov`` the means are taken as independent.  Paths shared
    across time points make them correlated; pass the covariance of the
    means (see :func:`mean_covariance`) to get an honest slope error.
    A series with no variance at all is flagged ``degenerate``.
    """
    if len(series) < 3:
        raise InsufficientDataError("drift test needs at least three time points")
    t = np.array([e.t for e in series])
    m = np.array([e.mean for e in series])
    s = np.array([e.stderr for e in series])
    t0, t1 = float(t.min()), float(t.max())

    keep = s > 0
    if keep.sum() < 3:
        # zero-variance series: ordinary least squares, exact slope
        tc = t - t.mean()
        slope = float(tc @ (m - m.mean()) / (tc @ tc))
        size = max(1.0, float(np.abs(m).max()))
        if abs(slope) <= scale_tol * size:
            return DriftReport(0.0, 0.0, 0.0, t0, t1, observable, CONSERVED, degenerate=True)
        z = float(np.copysign(np.inf, slope))
        return DriftReport(slope, 0.0, z, t0, t1, observable, DRIFTING, degenerate=True)

    w = np.where(keep, 1.0 / np.where(keep, s, 1.0) ** 2, 0.0)
    tbar = (w @ t) / w.sum()
    a = w * (t - tbar)
    a = a / (a @ (t - tbar))
    slope = float(a @ m)
    if cov is None:
        var = float(a ** 2 @ s ** 2)
    else:
        var = float(a @ np.asarray(cov) @ a)
    se = float(np.sqrt(max(var, 0.0)))
    if se == 0.0:
        z = 0.0 if slope == 0.0 else float(np.copysign(np.inf, slope))
    else:
        z = slope / se
    return DriftReport(slope, se, z, t0, t1, observable, verdict_for(z))


def record_steps(n_steps: int, n_points: int = DEFAULT_POINTS) -> np.ndarray:
    """Step counts of ``n_points`` equally spaced positive sampling times."""
    if n_points < 1 or n_points > n_steps:
        raise ValueError("need 1 <= n_points <= n_steps")
    steps = np.rint(np.arange(1, n_points + 1) * n_steps / n_points).astype(np.int64)
    return steps


def probe_label(w: VermaVector) -> str:
    chunks = []
    for part, coef in sorted(w.terms.items()):
        mono = "".join(f"L-{n}" for n in part) or "w"
        chunks.append(mono if coef == 1 else f"{coef}*{mono}")
    return " + ".join(chunks) or "0"


def pairing_samples(probes: Sequence[VermaVector], kappa, N: int, dt: float, T: float,
                    n_samples: int, seed: int, n_points: int = DEFAULT_POINTS,
                    increments: Optional[np.ndarray] = None) -> Tuple[np.ndarray, np.ndarray]:
    """Path values ``<w, G_t w0>`` for every probe.

    Returns ``(times, values)`` with ``values`` of shape
    (n_probes, n_samples, n_points).  All probes share one set of paths.
    """
    for w in probes:
        if w.max_grade > N:
            raise ValueError(f"probe grade {w.max_grade} exceeds truncation {N}")
    K = _random.n_steps_for(dt, T)
    rec = record_steps(K, n_points)
    if increments is None:
        increments = _random.brownian_increments_batch(kappa, dt, K, seed, n_samples)
    coeffs = evolve_increments(increments, N, dt, rec)
    rows = np.stack([probe_row(w, N) for w in probes], axis=1)
    values = np.einsum("nrp,pq->qnr", coeffs, rows)
    return rec * float(dt), values


def pairing_series(w: VermaVector, kappa, params: ModuleParams, N: int, dt: float, T: float,
                   n_samples: int, seed: int, n_points: int = DEFAULT_POINTS) -> List[MCEstimate]:
    if w.params != params:
        raise ValueError("probe lives in a different module")
    times, values = pairing_samples([w], kappa, N, dt, T, n_samples, seed, n_points)
    return summarize(values[0], times)


def pairing_drifts(probes: Sequence[VermaVector], kappa, N: int, dt: float, T: float,
                   n_samples: int, seed: int, n_points: int = DEFAULT_POINTS):
    """Drift report and series for each probe, from one shared batch of paths."""
    times, values = pairing_samples(probes, kappa, N, dt, T, n_samples, seed, n_points)
    out = []
    for w, vals in zip(probes, values):
        series = summarize(vals, times)
        report = drift_test(series, mean_covariance(vals), observable=probe_label(w))
        out.append((report, series))
    return out


def expected_initial_drift(w: VermaVector, kappa, params: ModuleParams) -> Fraction:
    """Exact ``<w, H w0>``: the time derivative of E<w, G_t w0> at t = 0."""
    return Fraction(shapovalov(w, hamiltonian_state(kappa, params)))


def boundary_power_exponents(kappa, h):
    """Roots of ``kappa/2 p(p-1) + 2p - 2h = 0``, larger first.

    Complex roots come back as complex numbers, sorted by real part.
    """
    kappa, h = float(kappa), float(h)
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    a, b, c = kappa / 2, 2 - kappa / 2, -2 * h
    disc = b * b - 4 * a * c
    if disc >= 0:
        r = np.sqrt(disc)
        return ((-b + r) / (2 * a), (-b - r) / (2 * a))
    r = cmath.sqrt(disc)
    return ((-b + r) / (2 * a), (-b - r) / (2 * a))


def boundary_samples(kappa, h, p, x0, dt, T, n_samples, seed, n_points=DEFAULT_POINTS):
    """Stopped observable values, shape (n_samples, n_points), and the stop steps.

    At the swallowing time the centred image is 0, so a stopped path keeps
    the value the observable takes there: 0 for p > 0, ``g'**h`` for
    p = 0, and its last pre-swallow value for p < 0.
    """
    K = _random.n_steps_for(dt, T)
    rec = record_steps(K, n_points)
    inc = _random.brownian_increments_batch(kappa, dt, K, seed, n_samples)
    X, Y, stop = boundary_flow(float(x0), inc, float(dt), rec)
    h, p = float(h), float(p)
    live_val = Y ** h * X ** p
    stopped = (stop[:, None] >= 0) & (rec[None, :] >= stop[:, None])
    if p > 0:
        frozen = np.zeros_like(live_val)
    elif p == 0:
        frozen = Y ** h
    else:
        frozen = live_val
    M = np.where(stopped, frozen, live_val)
    return rec * float(dt), M, stop


def boundary_martingale_test(kappa, h, p, x0, dt, T, n_samples, seed,
                             n_points: int = DEFAULT_POINTS) -> DriftReport:
    if float(x0) <= 0:
        raise ValueError("x0 must be positive")
    times, M, stop = boundary_samples(kappa, h, p, x0, dt, T, n_samples, seed, n_points)
    K = _random.n_steps_for(dt, T)
    rec = record_steps(K, n_points)
    if n_points >= 2 and np.all((stop >= 0) & (stop <= rec[1])):
        raise InsufficientDataError("every path was swallowed before the second time point")
    series = summarize(M, times)
    report = drift_test(series, mean_covariance(M),
                        observable=f"boundary(h={h}, p={p}, x0={x0})")
    frac = float(np.mean(stop >= 0))
    return DriftReport(**{**report.as_dict(), "stopped_fraction": frac})
