import pytest
from hypothesis import given, strategies as st

from contqg.errors import BudgetExhausted, ParseError, UnboundGenerator
from contqg.freealg import (
    NcElement, RewriteSystem, apply_hom, letter, normal_form, overlap_report, parse_element, render, tensor,
    word,
)
from contqg.intervals import CharFun, close_grid, line
from contqg.qgroup import E, F, K, system_for
from contqg.scalars import ONE, q

A, B = line(0, 1), line(1, 2)


def test_parse_render_round_trip():
    for text in ("(* (E (1,2]) (E (0,1]))", "(+ (* q (F (0,1]) (K (0,1])) (E (1,2]))",
                 "(- (E circ(0,1/2]) (* 2 (F circle)))"):
        x = parse_element(text)
        assert parse_element(render(x)) == x


def test_parse_errors():
    for bad in ("(* (E (1,2]", "(% (E (0,1]))", "(E (2,1])", "(E (0,1]) (E (1,2])", "(* v^1/2)"):
        with pytest.raises(ParseError):
            parse_element(bad)


def test_powers_and_inverse_cartan():
    x = parse_element("(* (E^2 (0,1]) (Kinv (0,1]) (K (0,1]))")
    rs = system_for(close_grid([A]))
    assert normal_form(x, rs) == E(A) * E(A)


def test_reordering_example():
    rs = system_for(close_grid([A, B]))
    nf = normal_form(E(B) * E(A), rs)
    assert nf == (E(A) * E(B)).scale(q(1)) - E(line(0, 2)).scale(q(1))


def test_cartan_moves_to_the_middle():
    rs = system_for(close_grid([A]))
    nf = normal_form(E(A) * K(A) * F(A), rs)
    words = [w for w in nf.words()]
    for w in words:
        fams = "".join(l[0] for l in w)
        assert fams == "".join(sorted(fams, key="FKHE".index))


def test_budget_exhausted_carries_partial():
    rs = system_for(close_grid([A, B]))
    x = E(B) * E(A) * E(B) * E(A) * F(A) * F(B)
    with pytest.raises(BudgetExhausted) as ei:
        normal_form(x, rs, step_budget=1)
    assert ei.value.partial is not None


def test_overlap_report_detects_a_bad_system():
    a, b, c = letter("E", A), letter("E", B), letter("E", line(0, 2))
    # ba -> ab with aa -> c: baa reduces to cb one way and to bc the other
    rules = {(b, a): NcElement.from_word(word(a, b)), (a, a): NcElement.from_word(word(c))}
    rs = RewriteSystem(rules, alphabet=[a, b, c])
    assert overlap_report(rs, 3)
    assert overlap_report(system_for(close_grid([A, B])), 3) == []


def test_apply_hom_and_unbound():
    x = E(A) * F(B) + ONE
    img = apply_hom({letter("E", A): E(B), letter("F", B): F(A)}, x)
    assert img == E(B) * F(A) + ONE
    with pytest.raises(UnboundGenerator):
        apply_hom({}, E(A))


def test_tensor_and_legs():
    t = tensor(E(A), F(B))
    assert t.degree == 2
    assert t.flip() == tensor(F(B), E(A))
    assert t.multiply_legs() == E(A) * F(B)


gens = st.sampled_from([E(A), E(B), F(A), F(B), K(A), K(B), E(line(0, 2)), F(line(0, 2))])
elems = st.lists(gens, min_size=1, max_size=3).map(lambda gs: _prod(gs))


def _prod(gs):
    out = NcElement.one()
    for g in gs:
        out = out * g
    return out


@given(elems, elems, elems)
def test_free_algebra_associative(x, y, z):
    assert (x * y) * z == x * (y * z)


@given(elems, elems)
def test_normal_form_is_idempotent_and_multiplicative(x, y):
    rs = system_for(close_grid([A, B]))
    nx, ny = normal_form(x, rs), normal_form(y, rs)
    assert normal_form(nx, rs) == nx
    assert normal_form(nx * ny, rs) == normal_form(x * y, rs)


@given(elems)
def test_strategies_agree_on_confluent_system(x):
    rs = system_for(close_grid([A, B]))
    assert normal_form(x, rs, strategy="left") == normal_form(x, rs, strategy="right")


def test_charfun_letters_render():
    x = NcElement.gen("K", CharFun.of(A) + CharFun.of(B))
    assert "K" in render(x)
