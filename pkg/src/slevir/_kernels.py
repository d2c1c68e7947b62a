"""Hot loops, each in two flavours.

``*_loops`` are scalar loop kernels compiled with numba; ``*_numpy`` are
vectorised equivalents used when numba is unavailable or the environment
variable ``SLEVIR_NO_NUMBA`` is set to a non-empty value other than ``0``.
The public names at the bottom of the module point at the selected flavour.
"""

import os

import numpy as np

SWALLOW_DIST = 1e-9
CUT_TOL = 1e-12

_flag = os.environ.get("SLEVIR_NO_NUMBA", "")
USE_NUMBA = _flag in ("", "0")
if USE_NUMBA:
    try:
        from numba import njit
    except ImportError:  # pragma: no cover
        USE_NUMBA = False
if not USE_NUMBA:

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda f: f


# ---------------------------------------------------------------- group flow

@njit(cache=True)
def flow_batch_loops(dxi, op_a, op_i, op_k, op_v, n_basis, record):
    """Right-multiply identity by exp(step) along every path.

    ``G_new[k] = sum over nonzeros of op_v * dxi**op_a * G[op_i]``;
    ``record[s]`` is the step count at which slot ``s`` is sampled.
    """
    n, K = dxi.shape
    R = record.shape[0]
    out = np.zeros((n, R, n_basis))
    nnz = op_a.shape[0]
    amax = 0
    for t in range(nnz):
        if op_a[t] > amax:
            amax = op_a[t]
    powers = np.empty(amax + 1)
    for p in range(n):
        g = np.zeros(n_basis)
        g[0] = 1.0
        new = np.empty(n_basis)
        slot = 0
        while slot < R and record[slot] == 0:
            out[p, slot, :] = g
            slot += 1
        for k in range(K):
            x = dxi[p, k]
            powers[0] = 1.0
            for a in range(1, amax + 1):
                powers[a] = powers[a - 1] * x
            new[:] = 0.0
            for t in range(nnz):
                new[op_k[t]] += op_v[t] * powers[op_a[t]] * g[op_i[t]]
            g[:] = new
            while slot < R and record[slot] == k + 1:
                out[p, slot, :] = g
                slot += 1
    return out


def flow_batch_numpy(dxi, op_a, op_i, op_k, op_v, n_basis, record):
    n, K = dxi.shape
    amax = int(op_a.max()) if op_a.size else 0
    dense = np.zeros((n_basis, (amax + 1) * n_basis))
    np.add.at(dense, (op_i, op_a * n_basis + op_k), op_v)
    out = np.zeros((n, len(record), n_basis))
    g = np.zeros((n, n_basis))
    g[:, 0] = 1.0
    slot = 0
    while slot < len(record) and record[slot] == 0:
        out[:, slot] = g
        slot += 1
    for k in range(K):
        pw = dxi[:, k:k + 1] ** np.arange(amax + 1)
        g = np.einsum("nak,na->nk", (g @ dense).reshape(n, amax + 1, n_basis), pw)
        while slot < len(record) and record[slot] == k + 1:
            out[:, slot] = g
            slot += 1
    return out


# ------------------------------------------------------------------ Loewner

@njit(cache=True)
def _up_sqrt(arg, side):
    # root with nonnegative imaginary part; on the real axis follow `side`
    s = np.sqrt(arg + 0j)
    if s.imag < 0.0 or (s.imag == 0.0 and side < 0.0):
        s = -s
    return s


@njit(cache=True)
def forward_loops(z, xis, dts):
    """Compose slit maps on each point of ``z``.

    Returns images, derivatives and the index of the grid time at which
    each point was swallowed (-1 if it survives).
    """
    m = z.shape[0]
    K = xis.shape[0]
    img = np.empty(m, dtype=np.complex128)
    der = np.empty(m, dtype=np.complex128)
    swallow = np.full(m, -1, dtype=np.int64)
    for p in range(m):
        w = z[p]
        d = 1.0 + 0j
        real_point = z[p].imag <= 0.0
        prev_side = 0.0
        for k in range(K):
            u = w - xis[k]
            if abs(u) < SWALLOW_DIST:
                swallow[p] = k
                break
            side = 1.0 if u.real >= 0.0 else -1.0
            if (real_point or w.imag <= CUT_TOL) and prev_side != 0.0 and side != prev_side:
                swallow[p] = k
                break
            arg = u * u + 4.0 * dts[k]
            s = _up_sqrt(arg, side)
            d = d * u / s
            w = xis[k] + s
            prev_side = side
            if (not real_point) and abs(arg.imag) <= CUT_TOL and -CUT_TOL <= arg.real <= 4.0 * dts[k]:
                swallow[p] = k + 1
                break
        img[p] = w
        der[p] = d
    return img, der, swallow


def forward_numpy(z, xis, dts):
    z = np.asarray(z, dtype=np.complex128)
    m = z.shape[0]
    w = z.copy()
    d = np.ones(m, dtype=np.complex128)
    swallow = np.full(m, -1, dtype=np.int64)
    real_point = z.imag <= 0.0
    prev_side = np.zeros(m)
    for k in range(len(xis)):
        live = swallow < 0
        if not live.any():
            break
        u = w - xis[k]
        side = np.where(u.real >= 0.0, 1.0, -1.0)
        hit = live & (np.abs(u) < SWALLOW_DIST)
        flip = live & ~hit & (real_point | (w.imag <= CUT_TOL)) & (prev_side != 0.0) & (side != prev_side)
        swallow[hit | flip] = k
        live &= ~(hit | flip)
        arg = u * u + 4.0 * dts[k]
        s = np.sqrt(arg)
        s = np.where((s.imag < 0.0) | ((s.imag == 0.0) & (side < 0.0)), -s, s)
        d = np.where(live, d * u / np.where(live, s, 1.0), d)
        w = np.where(live, xis[k] + s, w)
        prev_side = np.where(live, side, prev_side)
        cut = live & ~real_point & (np.abs(arg.imag) <= CUT_TOL) & (arg.real >= -CUT_TOL) & (arg.real <= 4.0 * dts[k])
        swallow[cut] = k + 1
    return w, d, swallow


@njit(cache=True)
def trace_loops(xis, dts):
    """Tip after each step, by inverting the slit maps back to time zero."""
    K = xis.shape[0]
    tips = np.empty(K, dtype=np.complex128)
    for k in range(K):
        w = xis[k] + 0j
        for j in range(k, -1, -1):
            u = w - xis[j]
            side = 1.0 if u.real >= 0.0 else -1.0
            w = xis[j] + _up_sqrt(u * u - 4.0 * dts[j], side)
        tips[k] = w
    return tips


def trace_numpy(xis, dts):
    K = len(xis)
    w = xis.astype(np.complex128)
    for j in range(K - 1, -1, -1):
        u = w[j:] - xis[j]
        s = np.sqrt(u * u - 4.0 * dts[j])
        flip = (s.imag < 0.0) | ((s.imag == 0.0) & (u.real < 0.0))
        w[j:] = xis[j] + np.where(flip, -s, s)
    return w


@njit(cache=True)
def boundary_loops(x0, dxi, dt, record):
    """Centred image and derivative of the real point ``x0`` along each path.

    Values freeze at the last step before the driving overtakes the image;
    ``stop[p]`` is the first step count at which path ``p`` is swallowed.
    """
    n, K = dxi.shape
    R = record.shape[0]
    X = np.empty((n, R))
    Y = np.empty((n, R))
    stop = np.full(n, -1, dtype=np.int64)
    for p in range(n):
        x = x0
        y = 1.0
        slot = 0
        while slot < R and record[slot] == 0:
            X[p, slot] = x
            Y[p, slot] = y
            slot += 1
        for k in range(K):
            if stop[p] < 0:
                r = np.sqrt(x * x + 4.0 * dt)
                xn = r - dxi[p, k]
                if xn <= SWALLOW_DIST:
                    stop[p] = k + 1
                else:
                    y = y * x / r
                    x = xn
            while slot < R and record[slot] == k + 1:
                X[p, slot] = x
                Y[p, slot] = y
                slot += 1
    return X, Y, stop


def boundary_numpy(x0, dxi, dt, record):
    n, K = dxi.shape
    X = np.empty((n, len(record)))
    Y = np.empty((n, len(record)))
    stop = np.full(n, -1, dtype=np.int64)
    x = np.full(n, float(x0))
    y = np.ones(n)
    slot = 0
    while slot < len(record) and record[slot] == 0:
        X[:, slot], Y[:, slot] = x, y
        slot += 1
    for k in range(K):
        r = np.sqrt(x * x + 4.0 * dt)
        xn = r - dxi[:, k]
        live = stop < 0
        hit = live & (xn <= SWALLOW_DIST)
        stop[hit] = k + 1
        live &= ~hit
        y = np.where(live, y * x / r, y)
        x = np.where(live, xn, x)
        while slot < len(record) and record[slot] == k + 1:
            X[:, slot], Y[:, slot] = x, y
            slot += 1
    return X, Y, stop


@njit(cache=True)
def _jet_rhs(b):
    # d/dt of b_1..b_K under d/dt g = 2/g with g = z + b_0 + b_1/z + ...
    K = b.shape[0] - 1
    q = np.zeros(K)
    out = np.zeros(K + 1)
    if K == 0:
        return out
    q[0] = 1.0
    for n in range(1, K):
        acc = 0.0
        for m in range(1, n + 1):
            acc += b[m - 1] * q[n - m]
        q[n] = -acc
    for j in range(1, K + 1):
        out[j] = 2.0 * q[j - 1]
    return out


@njit(cache=True)
def laurent_loops(xis, dt, order):
    K = xis.shape[0] - 1
    out = np.zeros((K + 1, order + 1))
    b = np.zeros(order + 1)
    b[0] = 0.0
    out[0] = b
    for k in range(K):
        k1 = _jet_rhs(b)
        k2 = _jet_rhs(b + 0.5 * dt * k1)
        k3 = _jet_rhs(b + 0.5 * dt * k2)
        k4 = _jet_rhs(b + dt * k3)
        b = b + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        b[0] -= xis[k + 1] - xis[k]
        out[k + 1] = b
    return out


laurent_numpy = laurent_loops.py_func if USE_NUMBA else laurent_loops


if USE_NUMBA:
    flow_batch = flow_batch_loops
    forward = forward_loops
    trace = trace_loops
    boundary = boundary_loops
    laurent = laurent_loops
else:
    flow_batch = flow_batch_numpy
    forward = forward_numpy
    trace = trace_numpy
    boundary = boundary_numpy
    laurent = laurent_numpy
