from fractions import Fraction
from math import factorial

import pytest
import sympy

from primegaps.forms import RationalMatrix, assemble_forms, assemble_I_form, assemble_J_form, inner_integral
from primegaps.simplex import Signature, SymPoly, enumerate_signatures, integrate_sympoly

ONE = Signature()


def frac_rows(M):
    return M.to_fractions()


def test_I_examples():
    assert frac_rows(assemble_I_form([ONE], 2)) == [[Fraction(1, 2)]]
    assert frac_rows(assemble_I_form([ONE, Signature((), 1)], 2)) == [
        [Fraction(1, 2), Fraction(1, 6)],
        [Fraction(1, 6), Fraction(1, 12)],
    ]


@pytest.mark.parametrize("k", [1, 2, 7, 54])
@pytest.mark.parametrize("ell", [0, 2, 5])
def test_singleton_closed_forms(k, ell):
    s = [Signature((), ell)]
    assert assemble_I_form(s, k)[0, 0] == Fraction(factorial(2 * ell), factorial(k + 2 * ell))
    assert assemble_J_form(s, k)[0, 0] == Fraction(
        k * factorial(2 * ell + 2), (ell + 1) ** 2 * factorial(k + 2 * ell + 1)
    )


def test_J_examples():
    assert frac_rows(assemble_J_form([ONE], 2)) == [[Fraction(2, 3)]]
    assert frac_rows(assemble_J_form([ONE], 1)) == [[Fraction(1)]]


def test_I_entries_match_integrate_sympoly():
    basis = enumerate_signatures(4, "p1p2p3", 5)
    M = assemble_I_form(basis, 4)
    for i, a in enumerate(basis):
        for j, b in enumerate(basis):
            assert M[i, j] == integrate_sympoly(SymPoly.from_signature(a * b, 4))


def test_forms_symmetric():
    fp = assemble_forms(enumerate_signatures(10, "even", 8), 10)
    assert fp.M1.is_symmetric() and fp.M2.is_symmetric()
    assert fp.M1.shape == fp.M2.shape == (len(fp.basis),) * 2


def test_rejects_bad_input():
    with pytest.raises(ValueError):
        assemble_I_form([ONE], 0)
    with pytest.raises(ValueError):
        assemble_I_form([ONE, ONE], 3)
    with pytest.raises(TypeError):
        assemble_J_form([1], 3)


def test_inner_integral_constant():
    # int_0^{1-s} (1 - s - t)^a dt = (1 - s)^(a+1) / (a+1)
    assert inner_integral(Signature((), 3)) == {Signature((), 4): Fraction(1, 4)}


def _sympy_poly(sig, ts):
    P1 = sum(ts)
    expr = (1 - P1) ** sig.boundary_power
    for e in sig.exponents:
        expr *= sum(t**e for t in ts)
    return expr


def test_direct_sum_matches_symmetry_shortcut():
    """Coordinate-by-coordinate sum of J_l on k = 3 equals k * J_k computed once."""
    k = 3
    ts = sympy.symbols("t1 t2 t3", nonnegative=True)
    basis = [ONE, Signature((), 1), Signature((2,)), Signature((2,), 1), Signature((3,))]
    M1 = assemble_J_form(basis, k)

    def J_ell(expr_a, expr_b, ell):
        others = [t for i, t in enumerate(ts) if i != ell]
        s = sum(others)
        ia = sympy.integrate(expr_a, (ts[ell], 0, 1 - s))
        ib = sympy.integrate(expr_b, (ts[ell], 0, 1 - s))
        u, v = others
        return sympy.integrate(sympy.expand(ia * ib), (v, 0, 1 - u), (u, 0, 1))

    exprs = [_sympy_poly(b, ts) for b in basis]
    for i in range(len(basis)):
        for j in range(i, len(basis)):
            direct = sum(J_ell(exprs[i], exprs[j], ell) for ell in range(k))
            assert Fraction(str(direct)) == M1[i, j]


def test_rational_matrix_helpers():
    M = RationalMatrix.from_rows([[Fraction(1, 2), Fraction(1, 3)], [Fraction(1, 3), 1]])
    assert M.is_symmetric()
    assert M.quadratic_form([1, 1]) == Fraction(1, 2) + Fraction(2, 3) + 1
    assert M.leading(1).to_fractions() == [[Fraction(1, 2)]]
    assert M == RationalMatrix.from_rows([[Fraction(2, 4), Fraction(1, 3)], [Fraction(1, 3), 1]])
