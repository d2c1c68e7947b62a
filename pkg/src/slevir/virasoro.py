"""Exact Verma-module arithmetic for the Virasoro algebra.

States are finite combinations of PBW monomials ``L_{-n1} ... L_{-nk} w``
with ``n1 >= ... >= nk >= 1`` acting on a highest-weight vector ``w``.
A monomial is stored as the tuple ``(n1, ..., nk)``; the empty tuple is
``w`` itself.  All scalars are :class:`fractions.Fraction`.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from numbers import Rational
from typing import Dict, Iterable, Iterator, List, Tuple

Partition = Tuple[int, ...]

DEFAULT_MAX_GRADE = 6


class GradeLimitError(ValueError):
    """Raised when an operation would produce states above the grade cap."""


def as_rational(x) -> Fraction:
    """Coerce ``x`` to an exact Fraction; floats are refused."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise TypeError("booleans are not scalars")
    if isinstance(x, (int, Rational)):
        return Fraction(x)
    if isinstance(x, str):
        try:
            return Fraction(x.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"not a rational number: {x!r}") from exc
    raise TypeError(f"expected an exact rational, got {type(x).__name__}")


@dataclass(frozen=True)
class ModuleParams:
    c: Fraction
    h: Fraction

    def __post_init__(self):
        object.__setattr__(self, "c", as_rational(self.c))
        object.__setattr__(self, "h", as_rational(self.h))


def grade(part: Partition) -> int:
    return sum(part)


def partitions(n: int, largest: int | None = None) -> Iterator[Partition]:
    """Weakly decreasing partitions of ``n`` with parts at most ``largest``."""
    if largest is None:
        largest = n
    if n == 0:
        yield ()
        return
    for first in range(min(n, largest), 0, -1):
        for rest in partitions(n - first, first):
            yield (first,) + rest


def pbw_basis(level: int) -> List[Partition]:
    """PBW monomials of one grade, lexicographically sorted."""
    return sorted(partitions(level))


def commutator_coeff(n: int, m: int, c) -> Tuple[Fraction, Fraction]:
    """Structure constants of ``[L_n, L_m]``: (coefficient of L_{n+m}, central part)."""
    c = as_rational(c)
    central = c / 12 * n * (n * n - 1) if n + m == 0 else Fraction(0)
    return Fraction(n - m), central


@lru_cache(maxsize=None)
def _apply_mode(m: int, part: Partition, c: Fraction, h: Fraction) -> Tuple[Tuple[Partition, Fraction], ...]:
    # L_m acting on the monomial `part` applied to w, rewritten in PBW order.
    if m == 0:
        return ((part, h + grade(part)),)
    if not part:
        if m > 0:
            return ()
        return (((-m,), Fraction(1)),)
    n1 = part[0]
    if m < 0 and -m >= n1:
        return (((-m,) + part, Fraction(1)),)
    rest = part[1:]
    out: Dict[Partition, Fraction] = {}
    # L_m L_{-n1} rest = L_{-n1} (L_m rest) + [L_m, L_{-n1}] rest
    for q, a in _apply_mode(m, rest, c, h):
        for r, b in _apply_mode(-n1, q, c, h):
            out[r] = out.get(r, 0) + a * b
    lie, central = commutator_coeff(m, -n1, c)
    if lie:
        for q, a in _apply_mode(m - n1, rest, c, h):
            out[q] = out.get(q, 0) + lie * a
    if central:
        out[rest] = out.get(rest, 0) + central
    return tuple((p, v) for p, v in out.items() if v != 0)


def monomial_product(p: Partition, q: Partition) -> Dict[Partition, Fraction]:
    """PBW expansion of the product of two negative-mode monomials.

    Only negative modes occur, so neither the central charge nor the
    highest weight enters.
    """
    terms: Dict[Partition, Fraction] = {q: Fraction(1)}
    zero = Fraction(0)
    for n in reversed(p):
        nxt: Dict[Partition, Fraction] = {}
        for mono, a in terms.items():
            for r, b in _apply_mode(-n, mono, zero, zero):
                nxt[r] = nxt.get(r, 0) + a * b
        terms = {k: v for k, v in nxt.items() if v != 0}
    return terms


class VermaVector:
    """Immutable element of the Verma module with parameters ``params``."""

    __slots__ = ("params", "terms")

    def __init__(self, params: ModuleParams, terms: Dict[Partition, object] | None = None):
        clean = {}
        for part, coef in (terms or {}).items():
            part = tuple(part)
            if any(a < b for a, b in zip(part, part[1:])) or any(n < 1 for n in part):
                raise ValueError(f"not a PBW partition: {part}")
            if coef != 0:
                clean[part] = coef
        object.__setattr__(self, "params", params)
        object.__setattr__(self, "terms", clean)

    def __setattr__(self, name, value):
        raise AttributeError("VermaVector is immutable")

    @classmethod
    def highest_weight(cls, params: ModuleParams) -> "VermaVector":
        return cls(params, {(): Fraction(1)})

    @classmethod
    def basis(cls, part: Iterable[int], params: ModuleParams) -> "VermaVector":
        return cls(params, {tuple(part): Fraction(1)})

    def coefficient(self, part: Partition):
        return self.terms.get(tuple(part), 0)

    def grades(self) -> set:
        return {grade(p) for p in self.terms}

    @property
    def grade(self) -> int:
        gs = self.grades()
        if len(gs) != 1:
            raise ValueError("vector is not homogeneous")
        return gs.pop()

    @property
    def max_grade(self) -> int:
        return max(self.grades(), default=0)

    def is_zero(self) -> bool:
        return not self.terms

    def _check(self, other: "VermaVector"):
        if self.params != other.params:
            raise ValueError("vectors belong to different modules")

    def __add__(self, other: "VermaVector") -> "VermaVector":
        self._check(other)
        out = dict(self.terms)
        for p, v in other.terms.items():
            out[p] = out.get(p, 0) + v
        return VermaVector(self.params, out)

    def __neg__(self) -> "VermaVector":
        return VermaVector(self.params, {p: -v for p, v in self.terms.items()})

    def __sub__(self, other: "VermaVector") -> "VermaVector":
        return self + (-other)

    def __mul__(self, scalar) -> "VermaVector":
        return VermaVector(self.params, {p: scalar * v for p, v in self.terms.items()})

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        if not isinstance(other, VermaVector):
            return NotImplemented
        return self.params == other.params and self.terms == other.terms

    def __hash__(self):
        return hash((self.params, frozenset(self.terms.items())))

    def __repr__(self) -> str:
        if not self.terms:
            return "0"
        chunks = []
        for part in sorted(self.terms, key=lambda p: (grade(p), p)):
            mono = "".join(f"L_{{-{n}}}" for n in part) or "1"
            chunks.append(f"({self.terms[part]})*{mono}")
        return " + ".join(chunks) + " w"


def apply_mode(v: VermaVector, m: int, max_grade: int | None = None) -> VermaVector:
    """Act with ``L_m`` (any integer ``m``) on ``v``."""
    cap = DEFAULT_MAX_GRADE if max_grade is None else max_grade
    if m < 0 and v.max_grade - m > cap:
        raise GradeLimitError(f"grade {v.max_grade - m} exceeds the cap {cap}")
    c, h = v.params.c, v.params.h
    out: Dict[Partition, object] = {}
    for part, a in v.terms.items():
        for q, b in _apply_mode(m, part, c, h):
            out[q] = out.get(q, 0) + a * b
    return VermaVector(v.params, out)


def lower(v: VermaVector, n: int, max_grade: int | None = None) -> VermaVector:
    """Left multiplication by ``L_{-n}``, ``n >= 1``."""
    if n < 1:
        raise ValueError("lower expects a positive mode index")
    return apply_mode(v, -n, max_grade)


def raise_(v: VermaVector, n: int) -> VermaVector:
    """Action of ``L_n``, ``n >= 1``, by commuting it through to ``w``."""
    if n < 1:
        raise ValueError("raise_ expects a positive mode index")
    return apply_mode(v, n)


def lower_monomial(v: VermaVector, part: Partition, max_grade: int | None = None) -> VermaVector:
    """Apply ``L_{-n1} ... L_{-nk}`` (rightmost factor first) to ``v``."""
    for n in reversed(part):
        v = lower(v, n, max_grade)
    return v


def _pair_monomial(part: Partition, v: VermaVector):
    # <L_{-n1}...L_{-nk} w, v> = coefficient of w in L_{nk}...L_{n1} v
    for n in part:
        v = raise_(v, n)
        if v.is_zero():
            return 0
    return v.coefficient(())


def shapovalov(u: VermaVector, v: VermaVector):
    """Contravariant form with ``L_n`` adjoint to ``L_{-n}`` and <w, w> = 1."""
    u._check(v)
    total = 0
    for part, a in u.terms.items():
        g = grade(part)
        block = VermaVector(v.params, {p: b for p, b in v.terms.items() if grade(p) == g})
        if block.is_zero():
            continue
        total += a * _pair_monomial(part, block)
    return total


def gram_matrix(level: int, params: ModuleParams, max_grade: int | None = None) -> List[List[Fraction]]:
    cap = DEFAULT_MAX_GRADE if max_grade is None else max_grade
    if level > cap:
        raise GradeLimitError(f"level {level} exceeds the cap {cap}")
    basis = [VermaVector.basis(p, params) for p in pbw_basis(level)]
    size = len(basis)
    gram = [[Fraction(0)] * size for _ in range(size)]
    for i in range(size):
        for j in range(i, size):
            gram[i][j] = gram[j][i] = Fraction(shapovalov(basis[i], basis[j]))
    return gram


def _positive(kappa) -> Fraction:
    kappa = as_rational(kappa)
    if kappa <= 0:
        raise ValueError(f"kappa must be positive, got {kappa}")
    return kappa


def h_kappa(kappa) -> Fraction:
    """Weight of the level-2 degenerate field, (6 - kappa) / (2 kappa)."""
    kappa = _positive(kappa)
    return (6 - kappa) / (2 * kappa)


def c_kappa(kappa) -> Fraction:
    """Central charge (3 kappa - 8)(6 - kappa) / (2 kappa)."""
    kappa = _positive(kappa)
    return (3 * kappa - 8) * (6 / kappa - 1) / 2


def kac_params(kappa) -> ModuleParams:
    return ModuleParams(c_kappa(kappa), h_kappa(kappa))


def hamiltonian_state(kappa, params: ModuleParams) -> VermaVector:
    """``(-2 L_{-2} + kappa/2 L_{-1}^2) w``."""
    kappa = _positive(kappa)
    return VermaVector(params, {(2,): Fraction(-2), (1, 1): kappa / 2})


def singular_defect(kappa, params: ModuleParams) -> Tuple[Fraction, Fraction]:
    """Obstructions to the level-2 state being singular.

    Returns the coefficient of ``L_{-1} w`` in ``L_1 H w`` and the
    coefficient of ``w`` in ``L_2 H w``; both vanish exactly at the Kac
    point of ``kappa``.
    """
    state = hamiltonian_state(kappa, params)
    d1 = raise_(state, 1).coefficient((1,))
    d2 = raise_(state, 2).coefficient(())
    return Fraction(d1), Fraction(d2)


def is_singular(v: VermaVector) -> bool:
    """True when ``L_1`` and ``L_2`` (hence every positive mode) kill ``v``."""
    return raise_(v, 1).is_zero() and raise_(v, 2).is_zero()
