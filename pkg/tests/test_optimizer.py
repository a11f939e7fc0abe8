import json
from fractions import Fraction
from pathlib import Path

import mpmath
import pytest
import sympy

from primegaps.forms import RationalMatrix, assemble_forms
from primegaps.optimizer import (
    ExpectationParams,
    LinearDependenceError,
    SearchExhausted,
    closed_form_ratio,
    exact_rayleigh_quotient,
    family_forms,
    guaranteed_primes,
    min_k_certify,
    solve_ratio,
)
from primegaps.simplex import Signature

GOLDEN = Path(__file__).parent / "golden"


def singleton(k, ell):
    return assemble_forms([Signature((), ell)], k)


# ------------------------------------------------------------ closed form

def test_closed_form_examples():
    for k in (1, 2, 10, 99):
        assert closed_form_ratio(k, 0) == 2 - Fraction(2, k + 1)
    assert closed_form_ratio(4, 1) == Fraction(12, 7)
    v = closed_form_ratio(10**4, 100)
    assert 3.9 < v < 4


def test_closed_form_approaches_four_from_below():
    vals = [closed_form_ratio(k, int(k**0.5)) for k in (10**2, 10**3, 10**4, 10**5)]
    assert all(v < 4 for v in vals)
    assert vals == sorted(vals)


# ------------------------------------------------------------ solve_ratio

def test_solve_examples():
    c = solve_ratio(assemble_forms([Signature()], 2))
    assert c.rayleigh_exact == Fraction(4, 3)
    assert abs(c.lambda_max - 4 / 3) < 1e-14
    c = solve_ratio(singleton(4, 1))
    assert c.rayleigh_exact == Fraction(12, 7)


@pytest.mark.parametrize("k,ell", [(2, 0), (3, 4), (17, 2), (100, 10)])
def test_singleton_equals_closed_form(k, ell):
    c = solve_ratio(singleton(k, ell))
    expected = closed_form_ratio(k, ell)
    assert c.rayleigh_exact == expected
    assert abs(c.lambda_max - float(expected)) <= 1e-12 * float(expected)


def test_against_exact_characteristic_polynomial():
    """Largest root of det(M1 - x M2) = 0, found by sympy, on a 4-element basis."""
    fp = family_forms(2, "p1p2", 2)
    x = sympy.Symbol("x")
    M1 = sympy.Matrix([[sympy.Rational(v.numerator, v.denominator) for v in r] for r in fp.M1.to_fractions()])
    M2 = sympy.Matrix([[sympy.Rational(v.numerator, v.denominator) for v in r] for r in fp.M2.to_fractions()])
    roots = sympy.Poly((M1 - x * M2).det(), x).nroots(n=30)
    top = max(sympy.re(r) for r in roots)
    c = solve_ratio(fp)
    assert abs(c.lambda_max - float(top)) < 1e-12


def test_against_mpmath_eigensolver():
    fp = family_forms(5, "p1p2", 6)
    mpmath.mp.dps = 80
    A = mpmath.matrix([[mpmath.mpf(v.numerator) / v.denominator for v in r] for r in fp.M2.to_fractions()])
    B = mpmath.matrix([[mpmath.mpf(v.numerator) / v.denominator for v in r] for r in fp.M1.to_fractions()])
    ev = mpmath.eig(mpmath.inverse(A) * B, left=False, right=False)
    top = max(mpmath.re(e) for e in ev)
    c = solve_ratio(fp)
    assert abs(c.lambda_max - float(top)) < 1e-11


def test_certificate_invariants():
    fp = family_forms(20, "even", 10)
    c = solve_ratio(fp, target=3)
    assert c.residual <= 1e-8
    assert c.rayleigh_exact >= Fraction(c.lambda_max) - Fraction(1, 10**9)
    assert exact_rayleigh_quotient(fp, c.f_exact) == c.rayleigh_exact
    assert c.exceeds_target and c.verify()
    assert not c.verify(target=5)


def test_deterministic():
    fp = family_forms(8, "p1p2p3", 8)
    a, b = solve_ratio(fp), solve_ratio(fp)
    assert a.lambda_max == b.lambda_max and a.f == b.f
    assert json.dumps(a.to_json()) == json.dumps(b.to_json())


def test_nested_basis_monotonicity():
    fp = family_forms(54, "even", 12)
    c = solve_ratio(fp)
    prof = [c.degree_profile[d] for d in sorted(c.degree_profile)]
    assert all(b >= a - 1e-12 for a, b in zip(prof, prof[1:]))
    # a leading block solved on its own gives the same value
    n = fp.prefix_length(6)
    sub = assemble_forms(fp.basis[:n], 54)
    assert abs(solve_ratio(sub).lambda_max - c.degree_profile[6]) < 1e-10


def test_p1p2_family_saturates_below_four_at_54():
    prof = solve_ratio(family_forms(54, "p1p2", 23)).degree_profile
    assert 3.70 < prof[23] < 3.71
    assert prof[23] - prof[11] < 2e-3


def test_dependent_basis_is_reported():
    # identical rows: P2 and 2*P2/2 cannot be distinguished, so build a singular M2 by hand
    fp = assemble_forms([Signature(), Signature((), 1)], 3)
    bad = RationalMatrix.from_rows([[1, 1], [1, 1]])
    from primegaps.forms import FormPair

    with pytest.raises(LinearDependenceError):
        solve_ratio(FormPair(M1=fp.M1, M2=bad, basis=fp.basis, k=3))


def test_golden_certificate():
    golden = json.loads((GOLDEN / "certificate_k5_p1p2_d6.json").read_text())
    doc = solve_ratio(family_forms(5, "p1p2", 6), target=2).to_json()
    for key in ("schema", "family", "k", "max_degree", "basis_size", "basis", "target", "exceeds_target"):
        assert doc[key] == golden[key]
    assert doc["lambda_exact_rayleigh"][:14] == golden["lambda_exact_rayleigh"][:14]
    assert doc["coefficients"] == pytest.approx(golden["coefficients"], rel=1e-8, abs=1e-12)


# ------------------------------------------------------- expectation bookkeeping

@pytest.mark.parametrize("ratio,theta,E,m", [
    (Fraction("4.002"), Fraction(1, 2), Fraction("1.0005"), 2),
    (Fraction("2.1"), Fraction(1), Fraction("1.05"), 2),
    (Fraction(1), Fraction(1, 2), Fraction(1, 4), 1),
    (Fraction(4), Fraction(1, 2), Fraction(1), 1),  # E = 1 exactly is not enough
    (Fraction(0), Fraction(1), Fraction(0), 0),
    (Fraction(9), Fraction(1), Fraction(9, 2), 5),
])
def test_guaranteed_primes(ratio, theta, E, m):
    assert guaranteed_primes(ExpectationParams(theta, ratio, 5)) == (E, m)


def test_expectation_params_validation():
    with pytest.raises(ValueError):
        ExpectationParams(Fraction(0), 1, 2)
    with pytest.raises(ValueError):
        ExpectationParams(Fraction(3, 2), 1, 2)
    with pytest.raises(ValueError):
        ExpectationParams(Fraction(1), -1, 2)


# ------------------------------------------------------------ min_k_certify

def test_min_k_target_two():
    res = min_k_certify(2, range(3, 11), family="p1p2", max_degree=6)
    assert res.k == 5
    assert set(res.rejected) == {3, 4}
    assert all(v < 2 for v in res.rejected.values())
    assert res.certificate.rayleigh_exact > 2


def test_min_k_constant_basis_member():
    k = 7
    res = min_k_certify(closed_form_ratio(k, 0) - Fraction(1, 10**6), [k], family="p1p2", max_degree=0)
    assert res.k == k


def test_min_k_exhausted():
    with pytest.raises(SearchExhausted) as info:
        min_k_certify(4, range(2, 6), family="p1p2", max_degree=0)
    assert set(info.value.rejected) == set(range(2, 6))
