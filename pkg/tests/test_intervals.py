from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from contqg.errors import ParseError, ResourceLimit, SpaceMismatch
from contqg.intervals import (
    COEFFICIENTS, FULL_CIRCLE, ROW_LABEL, UNDEFINED, CharFun, RelativePosition as P, VertexSpace, arc,
    arcs_grid, classify, close_grid, coeff_alpha, coeff_beta_prime, coeff_sigma, contains, difference,
    euler_case, euler_form, half_form, interval_sum, is_defined, line, parse_interval, serre_pair,
    splittings, strict_intersection, strict_union, table_representatives, uniform_grid,
)

# -- an independent oracle: membership by arithmetic, limits by probing ------------------

EPS = Fraction(1, 10 ** 6)


def member(iv, x):
    if iv.space is VertexSpace.LINE:
        return iv.a < x <= iv.b
    if iv.full:
        return True
    x = x % 1
    a, b = iv.a, iv.b
    return a < x <= b if a < b else (x > a or x <= b)


def jump_points(*ivs):
    pts = set()
    for iv in ivs:
        if not iv.full:
            pts.update((iv.a, iv.b))
    return sorted(pts)


def oracle_half_form(x, y):
    """sum over jump points p of 1_x(p-) (1_y(p-) - 1_y(p+))."""
    tot = 0
    for p in jump_points(x, y):
        tot += member(x, p) * (member(y, p) - member(y, p + EPS))
    return tot


def oracle_set(iv, mesh):
    return frozenset(m for m in mesh if member(iv, m))


@st.composite
def line_ivs(draw):
    a = draw(st.integers(0, 5))
    b = draw(st.integers(a + 1, 6))
    return line(a, b)


@st.composite
def circle_ivs(draw):
    if draw(st.integers(0, 7)) == 0:
        return FULL_CIRCLE
    a = draw(st.integers(0, 5))
    b = draw(st.integers(0, 5).filter(lambda t: t != a))
    return arc(Fraction(a, 6), Fraction(b, 6))


pairs = st.one_of(st.tuples(line_ivs(), line_ivs()), st.tuples(circle_ivs(), circle_ivs()))
MESH_LINE = [Fraction(k, 4) for k in range(-4, 30)]
MESH_CIRCLE = [Fraction(k, 24) for k in range(24)]


def mesh_of(x):
    return MESH_LINE if x.space is VertexSpace.LINE else MESH_CIRCLE


# -- parsing and values ---------------------------------------------------------------------

def test_parse_round_trip():
    for text in ("(0,1]", "(1/2,3]", "circ(1/4,0]", "circle"):
        assert str(parse_interval(text)) == text


@pytest.mark.parametrize("text", ["(1,0]", "[0,1]", "(0,1)", "circ(0,0]", "", "(a,b]"])
def test_parse_rejects(text):
    with pytest.raises(ParseError):
        parse_interval(text)


def test_arcs_normalize_mod_one():
    assert arc(Fraction(5, 4), Fraction(3, 2)) == arc(Fraction(1, 4), Fraction(1, 2))


def test_mixed_spaces_raise():
    with pytest.raises(SpaceMismatch):
        interval_sum(line(0, 1), arc(0, Fraction(1, 2)))


def test_strict_ops_examples():
    assert strict_union(line(0, 1), line(1, 2)) == line(0, 2)
    assert strict_intersection(line(0, 1), line(1, 2)) is UNDEFINED
    assert strict_union(line(0, 2), line(1, 3)) == line(0, 3)
    assert strict_intersection(line(0, 2), line(1, 3)) == line(1, 2)
    assert strict_union(line(0, 1), line(0, 2)) is UNDEFINED
    assert strict_intersection(line(0, 1), line(0, 2)) is UNDEFINED


def test_half_form_examples():
    assert half_form(line(0, 1), line(0, 1)) == 1
    assert half_form(line(0, 1), line(1, 2)) == -1
    assert half_form(FULL_CIRCLE, arc(0, Fraction(1, 2))) == 0
    assert half_form(FULL_CIRCLE, FULL_CIRCLE) == 0


def test_euler_form_diagonal():
    assert euler_form(line(0, 3), line(0, 3)) == 2
    assert euler_form(arc(Fraction(3, 4), Fraction(1, 4)), arc(Fraction(3, 4), Fraction(1, 4))) == 2
    assert euler_form(FULL_CIRCLE, FULL_CIRCLE) == 0


def test_complementary_arcs_pair_to_minus_two():
    a, c = arc(0, Fraction(1, 3)), arc(Fraction(1, 3), 0)
    assert interval_sum(a, c) == FULL_CIRCLE
    assert euler_form(a, c) == -2
    assert coeff_beta_prime(a, c) == coeff_alpha(a, FULL_CIRCLE) == 0


def test_table_representatives_cover_all_rows():
    reps = table_representatives(4)
    assert sorted(reps) == list("abcdefghijk")
    for lab, (x, y) in reps.items():
        assert ROW_LABEL[classify(x, y)] == lab


def test_serre_pair_circle():
    a = arc(0, Fraction(1, 2))
    assert serre_pair(a, FULL_CIRCLE) and not serre_pair(FULL_CIRCLE, a)
    assert serre_pair(line(0, 1), line(0, 1))


def test_grids():
    assert len(uniform_grid(5)) == 15
    assert len(uniform_grid(6)) == 21
    g = arcs_grid(4)
    assert FULL_CIRCLE in g and len(g) == 13
    # overlapping intervals neither add nor subtract
    assert close_grid([line(0, 2), line(1, 3)]) == [line(0, 2), line(1, 3)]
    assert close_grid([line(0, 2), line(0, 1), line(2, 3)]) == sorted(
        {line(0, 1), line(1, 2), line(2, 3), line(0, 2), line(1, 3), line(0, 3)})
    with pytest.raises(ResourceLimit):
        close_grid([line(i, i + 1) for i in range(30)], cap=256)


def test_splittings():
    assert splittings(line(0, 2), uniform_grid(2)) == [(line(0, 1), line(1, 2)), (line(1, 2), line(0, 1))]


# -- properties ---------------------------------------------------------------------------

@given(pairs)
def test_half_form_matches_pointwise_oracle(p):
    x, y = p
    assert half_form(x, y) == oracle_half_form(x, y)


@given(pairs)
def test_euler_form_symmetric(p):
    x, y = p
    assert euler_form(x, y) == euler_form(y, x)


@given(pairs)
def test_contractible_euler_values_follow_case_list(p):
    x, y = p
    want = euler_case(x, y)
    if want is not None:
        assert euler_form(x, y) == want
    if x.contractible and y.contractible:
        assert euler_form(x, y) in (2, 1, 0, -1, -2)


@given(pairs, pairs)
def test_half_form_bilinear(p, r):
    (x, y), (z, w) = p, r
    if x.space is not z.space:
        return
    f = CharFun.of(x) + CharFun.of(z)
    assert half_form(f, y) == half_form(x, y) + half_form(z, y)
    g = CharFun.of(y) - CharFun.of(w)
    assert half_form(x, g) == half_form(x, y) - half_form(x, w)


@given(pairs)
def test_sum_and_difference_are_set_operations(p):
    x, y = p
    mesh = mesh_of(x)
    s = interval_sum(x, y)
    if is_defined(s):
        assert not (oracle_set(x, mesh) & oracle_set(y, mesh))
        assert oracle_set(s, mesh) == oracle_set(x, mesh) | oracle_set(y, mesh)
        assert interval_sum(y, x) == s
        assert difference(s, x) == y
    d = difference(x, y)
    if is_defined(d):
        assert contains(x, y)
        assert oracle_set(d, mesh) == oracle_set(x, mesh) - oracle_set(y, mesh)


@given(st.tuples(circle_ivs(), circle_ivs(), circle_ivs()) | st.tuples(line_ivs(), line_ivs(), line_ivs()))
def test_sum_associative(t):
    x, y, z = t
    xy = interval_sum(x, y)
    yz = interval_sum(y, z)
    left = interval_sum(xy, z) if is_defined(xy) else UNDEFINED
    right = interval_sum(x, yz) if is_defined(yz) else UNDEFINED
    if is_defined(left) and is_defined(right):
        assert left == right


@given(pairs)
def test_strict_ops_symmetric(p):
    x, y = p
    assert strict_union(x, y) == strict_union(y, x)
    assert strict_intersection(x, y) == strict_intersection(y, x)


@given(pairs)
def test_strict_union_defining_property(p):
    x, y = p
    u = strict_union(x, y)
    if is_defined(u):
        assert is_defined(difference(u, x)) and is_defined(difference(u, y))
    i = strict_intersection(x, y)
    if is_defined(i):
        assert is_defined(difference(x, i)) and is_defined(difference(y, i))


MIRROR = {P.ADJACENT_AB: P.ADJACENT_BA, P.OVERLAP_AB: P.OVERLAP_BA, P.STRICT_SUB_AB: P.STRICT_SUB_BA,
          P.RSUB_AB: P.RSUB_BA, P.LSUB_AB: P.LSUB_BA,
          P.CONTAINS_FULL_CIRCLE_AB: P.CONTAINS_FULL_CIRCLE_BA}
MIRROR.update({v: k for k, v in MIRROR.items()})


@given(st.tuples(line_ivs(), line_ivs()))
def test_classify_mirrors_on_swap(p):
    x, y = p
    a, b = classify(x, y), classify(y, x)
    assert MIRROR.get(a, a) == b


@given(st.tuples(line_ivs(), line_ivs()))
def test_sigma_antisymmetric_on_line(p):
    x, y = p
    assert coeff_sigma(x, y) == -coeff_sigma(y, x)


@given(st.tuples(line_ivs(), line_ivs()))
def test_coefficients_integer_or_undefined(p):
    for fn in COEFFICIENTS.values():
        v = fn(*p)
        assert (not is_defined(v)) or Fraction(v).denominator == 1


@settings(max_examples=50)
@given(st.lists(line_ivs(), min_size=1, max_size=3))
def test_closure_is_closed(ivs):
    g = close_grid(ivs)
    gs = set(g)
    for x in g:
        for y in g:
            for z in (interval_sum(x, y), difference(x, y)):
                assert not is_defined(z) or z in gs
