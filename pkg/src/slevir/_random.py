"""Per-sample Gaussian streams shared by every simulation in the package.

Sample ``i`` of a run seeded with ``seed`` always draws from the generator
``default_rng([seed, i])``, so growing ``n_samples`` never reshuffles the
samples already produced and the Loewner and group-flow simulations see
the same Brownian increments.
"""

import numpy as np


def standard_normals(n_steps, seed, index=0):
    return np.random.default_rng([int(seed), int(index)]).standard_normal(int(n_steps))


def standard_normals_batch(n_steps, seed, n_samples, start=0):
    out = np.empty((int(n_samples), int(n_steps)))
    for i in range(int(n_samples)):
        out[i] = standard_normals(n_steps, seed, start + i)
    return out


def brownian_increments(kappa, dt, n_steps, seed, index=0):
    """Increments of ``sqrt(kappa) B`` on a grid of spacing ``dt``."""
    return np.sqrt(float(kappa) * float(dt)) * standard_normals(n_steps, seed, index)


def brownian_increments_batch(kappa, dt, n_steps, seed, n_samples, start=0):
    return np.sqrt(float(kappa) * float(dt)) * standard_normals_batch(n_steps, seed, n_samples, start)


def n_steps_for(dt, T):
    """Number of whole steps of size ``dt`` covering ``[0, T]``."""
    dt, T = float(dt), float(T)
    if dt <= 0:
        raise ValueError("dt must be positive")
    if T < 0:
        raise ValueError("T must be non-negative")
    n = int(round(T / dt))
    if abs(n * dt - T) > 1e-9 * max(1.0, T):
        raise ValueError(f"T={T} is not a whole multiple of dt={dt}")
    return n
