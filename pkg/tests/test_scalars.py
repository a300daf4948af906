from fractions import Fraction

import pytest
import sympy
from hypothesis import given, strategies as st

from contqg.errors import DivisionByNonMonomial
from contqg.scalars import ONE, QDIFF, ZERO, HbarSeries, LaurentV, expand_hbar, q

V = sympy.Symbol("v")


def to_sympy(x):
    num = sum(sympy.Rational(c.numerator, c.denominator) * V ** k for k, c in x.terms.items())
    return num / (V ** 2 - V ** -2) ** x.den


coef = st.fractions(min_value=-5, max_value=5, max_denominator=4)
laurent = st.builds(lambda t, d: LaurentV(t, d),
                    st.dictionaries(st.integers(-6, 6), coef, max_size=4), st.integers(0, 2))


def same(x, expr):
    return sympy.simplify(to_sympy(x) - expr) == 0


@given(laurent, laurent)
def test_ring_ops_match_sympy(x, y):
    assert same(x + y, to_sympy(x) + to_sympy(y))
    assert same(x * y, to_sympy(x) * to_sympy(y))
    assert same(x - y, to_sympy(x) - to_sympy(y))


@given(laurent, laurent, laurent)
def test_distributive(x, y, z):
    assert x * (y + z) == x * y + x * z


@given(laurent)
def test_canonical_form_makes_equality_exact(x):
    # (x * D) / D returns the same representation
    assert (x * QDIFF) / QDIFF == x
    assert (x * QDIFF).divide_by_qdiff() == x


def test_qdiff_cancels():
    assert (q(1) - q(-1)) / QDIFF == ONE
    assert LaurentV.inv_qdiff() * QDIFF == ONE
    assert str(LaurentV.inv_qdiff()) == "(1)/(q - q^-1)"


def test_half_integer_powers():
    assert q(Fraction(1, 2)) * q(Fraction(1, 2)) == q(1)
    with pytest.raises(ValueError):
        q(Fraction(1, 3))


def test_non_monomial_division_raises():
    with pytest.raises(DivisionByNonMonomial):
        ONE / (ONE + q(1))
    with pytest.raises(DivisionByNonMonomial):
        (ONE + q(1)).inverse()


def test_at_q1_and_substitute():
    x = q(2) + q(-1) * 3
    assert x.at_q1() == 4
    assert x.substitute(Fraction(2)) == 16 + Fraction(3, 4)
    with pytest.raises(DivisionByNonMonomial):
        LaurentV.inv_qdiff().at_q1()


def test_rendering():
    assert str(q(1)) == "q"
    assert str(ZERO) == "0"
    assert str(LaurentV.vpow(1) - q(-2)) == "v - q^-2"


# -- hbar series -------------------------------------------------------------------------

def test_expand_matches_sympy_series():
    h = sympy.Symbol("h")
    for x in (q(1), q(-2) * 3 + LaurentV.vpow(1), LaurentV.inv_qdiff(), (q(1) + q(-1)) * LaurentV.inv_qdiff()):
        s = expand_hbar(x, 4)
        expr = to_sympy(x).subs(V, sympy.exp(h / 4))
        ref = sympy.Poly(sympy.expand(sympy.series(expr, h, 0, 5).removeO() * h ** 2), h)
        for j in range(-2, 5):
            want = ref.coeff_monomial(h ** (j + 2))
            assert sympy.Rational(s[j].numerator, s[j].denominator) == want, (x, j)


def test_series_inverse_and_precision():
    e = expand_hbar(q(1), 5)
    assert e * expand_hbar(q(-1), 5) == HbarSeries.const(1, 5)
    d = expand_hbar(QDIFF, 5)
    assert d.low() == 1
    inv = d.inverse()
    assert inv.low() == -1
    assert (d * inv).truncate(3) == HbarSeries.const(1, 3)


@given(laurent, laurent)
def test_expansion_is_a_ring_map(x, y):
    order = 3
    assert expand_hbar(x * y, order) == (expand_hbar(x, order + 4) * expand_hbar(y, order + 4)).truncate(order)
    assert expand_hbar(x + y, order) == expand_hbar(x, order) + expand_hbar(y, order)
