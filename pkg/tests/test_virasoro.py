from fractions import Fraction as F
from itertools import product

import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import pairing, word_product
from slevir.virasoro import (
    GradeLimitError,
    ModuleParams,
    VermaVector,
    apply_mode,
    as_rational,
    c_kappa,
    commutator_coeff,
    gram_matrix,
    h_kappa,
    hamiltonian_state,
    is_singular,
    kac_params,
    lower,
    lower_monomial,
    monomial_product,
    partitions,
    pbw_basis,
    raise_,
    shapovalov,
    singular_defect,
)

GENERIC = ModuleParams(F(7, 3), F(-2, 5))
KAC_KAPPAS = [F(2), F(8, 3), F(4), F(6)]

rationals = st.fractions(min_value=F(-20), max_value=F(20), max_denominator=50)
positive_kappas = st.fractions(min_value=F(1, 50), max_value=F(20), max_denominator=50).filter(lambda k: k > 0)


def hw(params=GENERIC):
    return VermaVector.highest_weight(params)


def vec(part, params=GENERIC):
    return VermaVector.basis(part, params)


# ----------------------------------------------------------- commutator_coeff

@pytest.mark.parametrize("n, m, c, expected", [
    (2, -2, F(1, 2), (F(4), F(1, 4))),
    (1, 1, F(5), (F(0), F(0))),
    (3, -3, F(12), (F(6), F(24))),
    (1, -1, F(9), (F(2), F(0))),
    (2, 1, F(3), (F(1), F(0))),
])
def test_commutator_coeff(n, m, c, expected):
    assert commutator_coeff(n, m, c) == expected


# ------------------------------------------------------------- lower / raise

def test_lower_examples():
    assert lower(hw(), 2) == vec((2,))
    assert lower(vec((2,)), 1) == vec((2, 1)) + vec((3,))
    assert lower(lower(hw(), 1), 1) == vec((1, 1))


def test_raise_examples():
    h = GENERIC.h
    assert raise_(vec((1,)), 1) == 2 * h * hw()
    assert raise_(vec((1, 1)), 1) == (4 * h + 2) * vec((1,))
    assert raise_(hw(), 5).is_zero()


def test_raise_matches_vacuum_oracle():
    # <u, L_n v> = <L_{-n} u, v>: compare against brute-force word reduction
    c, h = GENERIC.c, GENERIC.h
    for g in range(1, 6):
        for q in pbw_basis(g):
            for n in range(1, g + 1):
                out = raise_(vec(q), n)
                for p in pbw_basis(g - n):
                    lhs = shapovalov(vec(p), out)
                    rhs = pairing((n,) + p, q, c, h)
                    assert lhs == rhs


def test_monomial_product_matches_bubble_sort():
    for g in range(1, 7):
        for word in product(range(1, g + 1), repeat=3):
            if sum(word) > 6:
                continue
            a, b = (word[0],), tuple(sorted(word[1:], reverse=True))
            expected = word_product((word[0],) + b)
            assert monomial_product(a, b) == expected


def test_grade_cap_is_loud():
    v = vec((3, 2, 1))
    with pytest.raises(GradeLimitError):
        lower(v, 1)
    assert lower(v, 1, max_grade=7).max_grade == 7
    with pytest.raises(GradeLimitError):
        gram_matrix(7, GENERIC)


def test_vector_validation():
    with pytest.raises(ValueError):
        VermaVector(GENERIC, {(1, 2): F(1)})
    with pytest.raises(ValueError):
        hw() + VermaVector.highest_weight(ModuleParams(0, 0))
    assert VermaVector(GENERIC, {(2,): F(0)}).is_zero()


def test_as_rational_refuses_floats():
    assert as_rational("8/3") == F(8, 3)
    assert as_rational(3) == F(3)
    with pytest.raises(TypeError):
        as_rational(2.5)
    with pytest.raises(ValueError):
        as_rational("abc")


# ----------------------------------------------------------------- PBW laws

def _basis_upto(g):
    return [p for k in range(g + 1) for p in pbw_basis(k)]


def test_pbw_consistency_with_commutator():
    modes = [m for m in range(-3, 4)]
    for part in _basis_upto(6):
        v = vec(part)
        for n, m in product(modes, modes):
            if part and max(0, -n) + max(0, -m) + sum(part) > 6:
                continue
            if not part and max(0, -n) + max(0, -m) > 6:
                continue
            lhs = apply_mode(apply_mode(v, m), n) - apply_mode(apply_mode(v, n), m)
            lie, central = commutator_coeff(n, m, GENERIC.c)
            rhs = lie * apply_mode(v, n + m) + central * v
            assert lhs == rhs, (part, n, m)


def _kac_table_point(t, r, s):
    # c(t) = 13 - 6t - 6/t, h_{r,s}(t) = (r^2-1) t/4 - (rs-1)/2 + (s^2-1)/(4t)
    c = 13 - 6 * t - 6 / t
    h = F(r * r - 1) * t / 4 - F(r * s - 1, 2) + F(s * s - 1) / (4 * t)
    return ModuleParams(c, h)


def _singular_vectors(params, level):
    basis = pbw_basis(level)
    rows = []
    for n in (1, 2):
        targets = pbw_basis(level - n) if level >= n else []
        images = [raise_(vec(p, params), n) for p in basis]
        for q in targets:
            rows.append([img.coefficient(q) for img in images])
    null = sympy.Matrix(rows).nullspace() if rows else [sympy.eye(len(basis))[:, 0]]
    out = []
    for col in null:
        coeffs = {p: F(int(sympy.fraction(x)[0]), int(sympy.fraction(x)[1])) for p, x in zip(basis, col)}
        out.append(VermaVector(params, coeffs))
    return out


@pytest.mark.parametrize("t", [F(3, 2), F(2, 5), F(7, 4)])
@pytest.mark.parametrize("r, s", [(1, 2), (2, 1), (1, 3), (3, 1), (2, 2), (1, 4), (1, 5), (2, 3), (3, 2), (1, 6)])
def test_l1_l2_generate_positive_modes(t, r, s):
    params = _kac_table_point(t, r, s)
    level = r * s
    found = _singular_vectors(params, level)
    assert found, "engineered Kac-table point must carry a singular vector"
    for v in found:
        assert is_singular(v)
        for n in range(3, level + 1):
            assert raise_(v, n).is_zero()


# --------------------------------------------------------------- Kac point

@pytest.mark.parametrize("kappa, expected", [(F(6), F(0)), (F(2), F(1)), (F(16), F(-5, 16))])
def test_h_kappa(kappa, expected):
    assert h_kappa(kappa) == expected


@pytest.mark.parametrize("kappa, expected", [(F(6), F(0)), (F(2), F(-2)), (F(4), F(1)), (F(8, 3), F(0))])
def test_c_kappa(kappa, expected):
    assert c_kappa(kappa) == expected


@pytest.mark.parametrize("bad", [0, -1, F(-1, 3)])
def test_kappa_domain(bad):
    with pytest.raises(ValueError):
        c_kappa(bad)
    with pytest.raises(ValueError):
        h_kappa(bad)


def test_c_kappa_alternative_form_at_squares():
    # 1 - 6 (2/sqrt(k) - sqrt(k)/2)^2 with k = s^2, s rational
    for s in [F(1), F(3, 2), F(2), F(5, 3), F(7, 2)]:
        k = s * s
        assert c_kappa(k) == 1 - 6 * (2 / s - s / 2) ** 2


@settings(max_examples=50, deadline=None)
@given(positive_kappas)
def test_kac_relations(kappa):
    c, h = c_kappa(kappa), h_kappa(kappa)
    assert c == c_kappa(16 / kappa)
    assert c == h * (3 * kappa - 8)
    assert singular_defect(kappa, ModuleParams(c, h)) == (0, 0)


@settings(max_examples=50, deadline=None)
@given(positive_kappas, rationals.filter(lambda x: x != 0), st.booleans())
def test_detuning_breaks_singularity(kappa, delta, shift_h):
    c, h = c_kappa(kappa), h_kappa(kappa)
    params = ModuleParams(c, h + delta) if shift_h else ModuleParams(c + delta, h)
    assert singular_defect(kappa, params) != (0, 0)


@settings(max_examples=60, deadline=None)
@given(positive_kappas, rationals, rationals)
def test_singular_defect_closed_form(kappa, c, h):
    d1, d2 = singular_defect(kappa, ModuleParams(c, h))
    assert d1 == kappa * (2 * h + 1) - 6
    assert d2 == 3 * kappa * h - 8 * h - c


@pytest.mark.parametrize("kappa, c, h, expected", [
    (F(6), F(0), F(0), (F(0), F(0))),
    (F(6), F(0), F(1), (F(12), F(10))),
    (F(2), F(-2), F(1), (F(0), F(0))),
])
def test_singular_defect_examples(kappa, c, h, expected):
    assert singular_defect(kappa, ModuleParams(c, h)) == expected


@pytest.mark.parametrize("kappa, coef", [(F(6), F(3)), (F(2), F(1)), (F(8, 3), F(4, 3))])
def test_hamiltonian_state(kappa, coef):
    state = hamiltonian_state(kappa, GENERIC)
    assert state == -2 * vec((2,)) + coef * vec((1, 1))


# --------------------------------------------------------------- Shapovalov

def test_shapovalov_examples():
    h = GENERIC.h
    assert shapovalov(hw(), hw()) == 1
    assert shapovalov(vec((1,)), vec((1,))) == 2 * h
    assert shapovalov(vec((2,)), vec((1, 1))) == 6 * h


def test_shapovalov_matches_oracle():
    c, h = GENERIC.c, GENERIC.h
    for g in range(5):
        for p in pbw_basis(g):
            for q in pbw_basis(g):
                assert shapovalov(vec(p), vec(q)) == pairing(p, q, c, h)


def test_shapovalov_rejects_mixed_modules():
    with pytest.raises(ValueError):
        shapovalov(hw(), VermaVector.highest_weight(ModuleParams(1, 1)))


def _vectors(params):
    parts = [p for g in range(5) for p in partitions(g)]
    return st.dictionaries(st.sampled_from(parts), rationals, max_size=4).map(lambda d: VermaVector(params, d))


@settings(max_examples=40, deadline=None)
@given(_vectors(GENERIC), _vectors(GENERIC))
def test_shapovalov_symmetric_and_graded(u, v):
    assert shapovalov(u, v) == shapovalov(v, u)
    for g in range(5):
        for k in range(5):
            if g == k:
                continue
            ug = VermaVector(GENERIC, {p: a for p, a in u.terms.items() if sum(p) == g})
            vk = VermaVector(GENERIC, {p: a for p, a in v.terms.items() if sum(p) == k})
            assert shapovalov(ug, vk) == 0


def test_gram_examples():
    for params in (GENERIC, ModuleParams(F(-2), F(1)), ModuleParams(0, 0)):
        assert gram_matrix(1, params) == [[2 * params.h]]
    g2 = gram_matrix(2, ModuleParams(F(-2), F(1)))
    assert g2 == [[12, 6], [6, 3]]
    assert sympy.Matrix(g2).det() == 0
    assert gram_matrix(2, ModuleParams(0, 0)) == [[0, 0], [0, 0]]


def test_gram_level2_determinant_factorises():
    # det = 2h (16h^2 + 2hc - 10h + c): vanishes on the level-2 Kac curve
    c, h = sympy.symbols("c h")
    for cv, hv in [(F(7, 3), F(-2, 5)), (F(1, 2), F(1, 16)), (F(3), F(5))]:
        det = sympy.Matrix(gram_matrix(2, ModuleParams(cv, hv))).det()
        assert det == (2 * h * (16 * h ** 2 + 2 * h * c - 10 * h + c)).subs({c: cv, h: hv})


def test_gram_symmetric_up_to_level_6():
    g = gram_matrix(6, GENERIC)
    assert all(g[i][j] == g[j][i] for i in range(len(g)) for j in range(len(g)))
    assert len(g) == 11


# ------------------------------------------------------------ radical property

@pytest.mark.parametrize("kappa", KAC_KAPPAS)
def test_hamiltonian_state_in_radical(kappa):
    params = kac_params(kappa)
    state = hamiltonian_state(kappa, params)
    for k in range(0, 5):
        for mono in pbw_basis(k):
            descendant = lower_monomial(state, mono)
            for w in pbw_basis(2 + k):
                assert shapovalov(vec(w, params), descendant) == 0
