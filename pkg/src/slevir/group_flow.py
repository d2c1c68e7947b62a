"""Lifted SLE flow in the grade-truncated enveloping algebra of negative modes.

An element is a combination of PBW monomials ``L_{-n1}...L_{-nk}`` of
total grade at most ``N``; the empty monomial is the unit.  Each step of
the flow right-multiplies by ``exp(-2 dt L_{-2} + dxi L_{-1})``, which is
a finite sum once grades above ``N`` are dropped.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import product
from math import factorial
from typing import Dict, List, Sequence, Tuple

import numpy as np

from . import _kernels, _random
from .virasoro import (
    DEFAULT_MAX_GRADE,
    GradeLimitError,
    ModuleParams,
    Partition,
    VermaVector,
    as_rational,
    grade,
    hamiltonian_state,
    monomial_product,
    partitions,
    shapovalov,
)

DEFAULT_TRUNCATION = 4
DEFAULT_DT = 1e-3


@lru_cache(maxsize=None)
def basis(N: int) -> Tuple[Partition, ...]:
    """All PBW monomials of grade <= N, ordered by grade then lexicographically."""
    return tuple(p for g in range(N + 1) for p in sorted(partitions(g)))


def _check_truncation(N: int):
    if N < 1:
        raise ValueError("truncation grade must be at least 1")
    if N > DEFAULT_MAX_GRADE:
        raise GradeLimitError(f"truncation {N} exceeds the grade cap {DEFAULT_MAX_GRADE}")


@dataclass(frozen=True)
class EnvelopingElement:
    N: int
    terms: Dict[Partition, object] = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for part, coef in self.terms.items():
            part = tuple(part)
            if grade(part) > self.N:
                raise ValueError(f"term {part} exceeds truncation {self.N}")
            if coef != 0:
                clean[part] = coef
        object.__setattr__(self, "terms", clean)

    @classmethod
    def identity(cls, N: int) -> "EnvelopingElement":
        return cls(N, {(): Fraction(1)})

    @classmethod
    def mode(cls, n: int, N: int, coef=Fraction(1)) -> "EnvelopingElement":
        """``coef * L_{-n}``."""
        return cls(N, {(n,): coef} if n <= N else {})

    @classmethod
    def from_vector(cls, vec, N: int) -> "EnvelopingElement":
        return cls(N, {p: float(v) for p, v in zip(basis(N), vec)})

    def to_vector(self) -> np.ndarray:
        return np.array([float(self.terms.get(p, 0)) for p in basis(self.N)])

    def coefficient(self, part: Partition):
        return self.terms.get(tuple(part), 0)

    def truncate(self, M: int) -> "EnvelopingElement":
        return EnvelopingElement(M, {p: v for p, v in self.terms.items() if grade(p) <= M})

    def __add__(self, other: "EnvelopingElement") -> "EnvelopingElement":
        if self.N != other.N:
            raise ValueError("mismatched truncation grades")
        out = dict(self.terms)
        for p, v in other.terms.items():
            out[p] = out.get(p, 0) + v
        return EnvelopingElement(self.N, out)

    def __sub__(self, other):
        return self + other * -1

    def __mul__(self, scalar) -> "EnvelopingElement":
        return EnvelopingElement(self.N, {p: v * scalar for p, v in self.terms.items()})

    __rmul__ = __mul__


def multiply(a: EnvelopingElement, b: EnvelopingElement) -> EnvelopingElement:
    """Truncated product; no central terms arise among negative modes."""
    if a.N != b.N:
        raise ValueError("mismatched truncation grades")
    N = a.N
    out: Dict[Partition, object] = {}
    for p, x in a.terms.items():
        for q, y in b.terms.items():
            if grade(p) + grade(q) > N:
                continue
            for r, z in monomial_product(p, q).items():
                out[r] = out.get(r, 0) + x * y * z
    return EnvelopingElement(N, out)


@lru_cache(maxsize=None)
def _exp_table(N: int) -> Dict[Tuple[int, int], Dict[Partition, Fraction]]:
    # exp(-2 dt L_{-2} + dxi L_{-1}) = sum over (a, b) of dxi**a dt**b E_ab
    table: Dict[Tuple[int, int], Dict[Partition, Fraction]] = {}
    for length in range(N + 1):
        for word in product((1, 2), repeat=length):
            if sum(word) > N:
                continue
            a, b = word.count(1), word.count(2)
            weight = Fraction((-2) ** b, factorial(length))
            expansion = monomial_product(word, ()) if word else {(): Fraction(1)}
            slot = table.setdefault((a, b), {})
            for r, z in expansion.items():
                slot[r] = slot.get(r, 0) + weight * z
    return {k: {p: v for p, v in d.items() if v != 0} for k, d in table.items()}


def exp_increment(dt, dxi, N: int) -> EnvelopingElement:
    """One multiplicative Euler factor ``exp(-2 dt L_{-2} + dxi L_{-1})``, exact at grade N."""
    _check_truncation(N)
    out: Dict[Partition, object] = {}
    for (a, b), terms in _exp_table(N).items():
        w = dxi ** a * dt ** b
        for p, v in terms.items():
            out[p] = out.get(p, 0) + v * w
    return EnvelopingElement(N, out)


def gaussian_moment(k: int, variance):
    """E[X**k] for centred Gaussian X with the given variance."""
    if k % 2:
        return 0 * variance
    double_fact = 1
    for j in range(k - 1, 0, -2):
        double_fact *= j
    return double_fact * variance ** (k // 2)


def expected_increment(kappa, dt, N: int) -> EnvelopingElement:
    """Mean of one step factor over dxi ~ Normal(0, kappa dt)."""
    _check_truncation(N)
    out: Dict[Partition, object] = {}
    for (a, b), terms in _exp_table(N).items():
        w = gaussian_moment(a, kappa * dt) * dt ** b
        for p, v in terms.items():
            out[p] = out.get(p, 0) + v * w
    return EnvelopingElement(N, out)


@lru_cache(maxsize=None)
def _step_operator(N: int) -> Tuple[Tuple[int, int, int, int, Fraction], ...]:
    # right multiplication by E_ab as nonzeros (a, b, i, k, value): G*E_ab [k] += value * G[i]
    index = {p: i for i, p in enumerate(basis(N))}
    entries: Dict[Tuple[int, int, int, int], Fraction] = {}
    for (a, b), terms in _exp_table(N).items():
        for p in basis(N):
            for q, v in terms.items():
                if grade(p) + grade(q) > N:
                    continue
                for r, z in monomial_product(p, q).items():
                    key = (a, b, index[p], index[r])
                    entries[key] = entries.get(key, 0) + v * z
    return tuple(k + (v,) for k, v in sorted(entries.items()) if v != 0)


def step_operator_arrays(N: int, dt: float):
    """Sparse right-multiplication operator with dt folded in, grouped by powers of dxi."""
    merged: Dict[Tuple[int, int, int], float] = {}
    for a, b, i, k, v in _step_operator(N):
        key = (a, i, k)
        merged[key] = merged.get(key, 0.0) + float(v) * float(dt) ** b
    keys = sorted(k for k, v in merged.items() if v != 0.0)
    op_a = np.array([k[0] for k in keys], dtype=np.int64)
    op_i = np.array([k[1] for k in keys], dtype=np.int64)
    op_k = np.array([k[2] for k in keys], dtype=np.int64)
    op_v = np.array([merged[k] for k in keys], dtype=np.float64)
    return op_a, op_i, op_k, op_v


@dataclass
class FlowPath:
    kappa: float
    dt: float
    times: np.ndarray
    elements: List[EnvelopingElement]
    increments: np.ndarray
    seed: int
    index: int = 0


def evolve_increments(increments, N: int, dt: float, record=None) -> np.ndarray:
    """Run the flow on given driving increments of shape (n_paths, n_steps).

    Returns coefficients in ``basis(N)`` with shape (n_paths, n_records, P);
    ``record`` lists the step counts to sample (default: every step).
    """
    _check_truncation(N)
    increments = np.atleast_2d(np.asarray(increments, dtype=np.float64))
    K = increments.shape[1]
    if record is None:
        record = np.arange(K + 1)
    record = np.asarray(record, dtype=np.int64)
    if np.any(np.diff(record) < 0) or (record.size and (record[0] < 0 or record[-1] > K)):
        raise ValueError("record steps must be sorted and within the path")
    op_a, op_i, op_k, op_v = step_operator_arrays(N, dt)
    return _kernels.flow_batch(increments, op_a, op_i, op_k, op_v, len(basis(N)), record)


def evolve(kappa, N: int, dt: float, T: float, seed: int, index: int = 0,
           increments=None) -> FlowPath:
    """Sample one path of the lifted flow, deterministic in (seed, index).

    ``increments`` overrides the Gaussian draw (used for zero-noise and
    paired-simulation checks).
    """
    dt = float(dt)
    K = _random.n_steps_for(dt, T)
    if K < 1:
        raise ValueError("T must be at least dt")
    if increments is None:
        increments = _random.brownian_increments(kappa, dt, K, seed, index)
    increments = np.asarray(increments, dtype=np.float64)
    coeffs = evolve_increments(increments[None, :], N, dt)[0]
    elements = [EnvelopingElement.from_vector(row, N) for row in coeffs]
    return FlowPath(float(kappa), dt, dt * np.arange(K + 1), elements, increments, seed, index)


def evolve_batch(kappa, N: int, dt: float, T: float, seed: int, n_samples: int,
                 record=None) -> np.ndarray:
    """Coefficient arrays for samples ``0..n_samples-1``; identical to stacking :func:`evolve`."""
    K = _random.n_steps_for(dt, T)
    inc = _random.brownian_increments_batch(kappa, dt, K, seed, n_samples)
    return evolve_increments(inc, N, dt, record)


def mean_flow(kappa, N: int, dt: float, n_steps: int) -> np.ndarray:
    """Exact mean E[G_k] for k = 0..n_steps, in floating point.

    Increments are independent of the past, so E[G_{k+1}] = E[G_k] E[step].
    """
    step = expected_increment(float(kappa), float(dt), N)
    index = {p: i for i, p in enumerate(basis(N))}
    P = len(index)
    right = np.zeros((P, P))
    for p in basis(N):
        prod = multiply(EnvelopingElement(N, {p: 1.0}), step)
        for r, z in prod.terms.items():
            right[index[p], index[r]] += z
    out = np.zeros((n_steps + 1, P))
    out[0, 0] = 1.0
    for k in range(n_steps):
        out[k + 1] = out[k] @ right
    return out


def act_on_hwv(g: EnvelopingElement, params: ModuleParams) -> VermaVector:
    """``g . w``; the Verma module is free over the negative modes, so coefficients carry over."""
    return VermaVector(params, dict(g.terms))


def probe_row(w: VermaVector, N: int) -> np.ndarray:
    """Pairings of ``w`` with every basis state of grade <= N, as floats."""
    return np.array([float(shapovalov(w, VermaVector.basis(p, w.params))) for p in basis(N)])


def generator_drift_coefficients(w: VermaVector, kappa, params: ModuleParams) -> List[Fraction]:
    """Exact one-step drift (E<w, G_1 w0> - <w, w0>) / dt as a polynomial in dt.

    Entry ``j`` is the coefficient of ``dt**j``.
    """
    kappa = as_rational(kappa)
    N = max(w.max_grade, 2)
    coeffs: Dict[int, Fraction] = {}
    for (a, b), terms in _exp_table(N).items():
        if a % 2:
            continue
        # E[dxi**a] dt**b = (a-1)!! kappa**(a/2) dt**(a/2 + b)
        power = a // 2 + b
        if power == 0:
            continue
        scale = gaussian_moment(a, kappa)
        state = VermaVector(params, {p: v * scale for p, v in terms.items()})
        val = shapovalov(w, state)
        if val:
            coeffs[power - 1] = coeffs.get(power - 1, 0) + val
    top = max(coeffs, default=0)
    return [Fraction(coeffs.get(j, 0)) for j in range(top + 1)]


def generator_step_defect(w: VermaVector, kappa, params: ModuleParams, dt) -> Fraction:
    """One-step drift per unit time minus <w, H w0>; an O(dt) residual."""
    dt = as_rational(dt)
    if dt <= 0:
        raise ValueError("dt must be positive")
    coeffs = generator_drift_coefficients(w, kappa, params)
    drift = sum(c * dt ** j for j, c in enumerate(coeffs))
    return Fraction(drift - shapovalov(w, hamiltonian_state(kappa, params)))


def ordered_coordinates(g: EnvelopingElement, tol: float = 1e-9) -> List[object]:
    """Coordinates x_1..x_N with g = exp(x_N L_{-N}) ... exp(x_1 L_{-1}).

    Peels factors off the right; raises if ``g`` is not group-like.
    """
    N = g.N
    xs = []
    rest = g
    for n in range(1, N + 1):
        x = rest.coefficient((n,))
        xs.append(x)
        rest = multiply(rest, _mode_exp(n, -x, N))
    leftover = rest - EnvelopingElement.identity(N)
    if any(abs(v) > tol for v in leftover.terms.values()):
        raise ValueError("element is not group-like")
    return xs


def from_ordered_coordinates(xs: Sequence, N: int) -> EnvelopingElement:
    g = EnvelopingElement.identity(N)
    for n, x in enumerate(xs, start=1):
        g = multiply(_mode_exp(n, x, N), g)
    return g


def _mode_exp(n: int, x, N: int) -> EnvelopingElement:
    return EnvelopingElement(N, {(n,) * j: x ** j * Fraction(1, factorial(j)) for j in range(N // n + 1)})
