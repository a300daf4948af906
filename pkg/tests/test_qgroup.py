from fractions import Fraction

import pytest
import sympy
from hypothesis import given, strategies as st

from contqg import qgroup
from contqg.errors import MixedBorel, NotARefinement, NotASerrePair, ResourceLimit
from contqg.freealg import NcElement, normal_form, tensor
from contqg.intervals import FULL_CIRCLE, arc, line, uniform_grid
from contqg.qgroup import (
    E, F, INV_QDIFF, K, Coefficients, GridHopf, build_vector_rep, coproduct, counit, hopf_pairing,
    qbinom, qint, relation_instance,
)
from contqg.scalars import ONE, ZERO, q

A, B, AB = line(0, 1), line(1, 2), line(0, 2)
U2 = uniform_grid(2)


# -- relations and the vector representation -------------------------------------------

def test_relation_instance_kinds():
    r = relation_instance("Diagonal", A, A, "+")
    assert r.element == K(A) * E(A) - (E(A) * K(A)).scale(q(2))
    with pytest.raises(NotASerrePair):
        relation_instance("QSerre", FULL_CIRCLE, arc(0, Fraction(1, 2)))
    with pytest.raises(ValueError):
        relation_instance("Cubic", A, B)


def test_vector_rep_cells():
    rho = build_vector_rep(2)
    m = rho(E(A))
    assert set(m.e) == {(0, 1)} and m.e[(0, 1)] == q(Fraction(1, 2))
    k = rho(K(A))
    assert k.e[(0, 0)] == q(1) and k.e[(1, 1)] == q(-1) and k.e[(2, 2)] == ONE


def test_rep_sweep_and_mutations():
    rep = qgroup.rep_relation_sweep(3)
    assert rep.passed and len(rep.extra["positions_covered"]) == 12
    for ctl in qgroup.mutation_controls(3, seed=0):
        assert not ctl.passed, ctl.suite
    assert [c.suite for c in qgroup.mutation_controls(3, seed=0)] == \
        [c.suite for c in qgroup.mutation_controls(3, seed=0)]


@pytest.mark.parametrize("name,delta", qgroup.MUTATION_POOL)
def test_every_mutation_in_the_pool_is_detected(name, delta):
    assert not qgroup.rep_relation_sweep(3, Coefficients({name: delta})).passed


def test_q_relations_check():
    assert qgroup.q_relations_check(uniform_grid(3)).passed


# -- quantum integers --------------------------------------------------------------------

def test_qint_values():
    assert qint(2) == q(1) + q(-1)
    assert qint(3) == q(2) + ONE + q(-2)


@pytest.mark.parametrize("n", range(0, 6))
def test_qbinom_matches_factorial_formula(n):
    v = sympy.Symbol("v")

    def qi(m):
        return sympy.cancel((v ** (2 * m) - v ** (-2 * m)) / (v ** 2 - v ** -2))

    def qf(m):
        out = sympy.Integer(1)
        for i in range(1, m + 1):
            out *= qi(i)
        return out

    for k in range(0, n + 1):
        want = sympy.cancel(qf(n) / (qf(k) * qf(n - k)))
        got = sum(sympy.Rational(c.numerator, c.denominator) * v ** e for e, c in qbinom(n, k).terms.items())
        assert sympy.cancel(got - want) == 0


# -- Hopf structure ----------------------------------------------------------------------

def test_coproduct_generators():
    one = NcElement.one()
    k_letter = K(A).words()[0][0]
    assert coproduct(k_letter, U2) == tensor(K(A), K(A))
    D = coproduct(E(AB), U2)
    assert tensor(E(AB), one) + tensor(K(AB), E(AB)) != D  # the splitting term is present
    assert counit(E(A)) == ZERO and counit(K(A)) == ONE


def test_hopf_sweep_small():
    rep = qgroup.hopf_axiom_sweep(U2)
    assert rep.passed, rep.summary()


def test_split_sign_control_fails():
    rep = qgroup.hopf_axiom_sweep(U2, split_sign=-1)
    assert not rep.passed


def test_antipode_on_generators():
    h = GridHopf(U2)
    assert h.nf(h.antipode(K(A)) * K(A)) == NcElement.one()
    # D(E) = E (x) 1 + K (x) E forces S(E) = -K^-1 E
    assert h.nf(h.antipode(E(A))) == -(K(A, -1) * E(A))


# -- pairing -----------------------------------------------------------------------------

def test_pairing_values():
    assert hopf_pairing(E(A), F(A), U2) == INV_QDIFF
    assert hopf_pairing(E(A), F(B), U2) == ZERO
    assert hopf_pairing(K(A), K(B), U2) == q(-1)
    with pytest.raises(MixedBorel):
        hopf_pairing(E(A) * F(A), F(A), U2)
    with pytest.raises(ResourceLimit):
        hopf_pairing(E(A) * E(B), F(B) * F(A), U2, degree_bound=1)


def test_pairing_sweep_small():
    rep = qgroup.pairing_sweep(U2, degree_bound=2)
    assert rep.passed, rep.summary()
    assert rep.extra["orientations_descending_deg2"] == ["right-op"]


def test_literal_cartan_normalization_breaks_annihilation():
    good = qgroup.cartan_normalization_probe(U2, 1)
    bad = qgroup.cartan_normalization_probe(U2, Fraction(1, 2))
    assert good.passed and not bad.passed
    assert all(f["kind"].startswith("annihilate") for f in bad.failures)


def test_implied_xi_pairing():
    s = qgroup.implied_xi_pairing(A, A)
    assert s[-1] == 4 and all(s[j] == 0 for j in range(0, s.order + 1))


# -- classical limit and colimits --------------------------------------------------------

def test_classical_limit_ratio():
    rep = qgroup.classical_limit_check(U2, order=2)
    assert rep.passed and rep.extra["ratio"] == "1/2"
    assert qgroup.degeneration_check(U2).passed


def test_q_colimit_signs():
    assert qgroup.q_colimit_sweep(uniform_grid(3)).passed
    printed = qgroup.q_colimit_sweep(uniform_grid(3), signs="printed")
    assert not printed.passed
    assert all(f["kind"].startswith("image") for f in printed.failures)


def test_q_embedding_refuses_non_refinement():
    with pytest.raises(NotARefinement):
        qgroup.q_embedding_images([AB], [A, line(1, 3)])


def test_q_iso_line_small():
    rep = qgroup.q_iso_line_check(3)
    assert rep.passed, rep.summary()


# -- R-matrix ----------------------------------------------------------------------------

def test_ybe_and_intertwiner_n1():
    rep = qgroup.rmatrix_ybe_check(1, 1)
    assert rep.passed and rep.extra["intertwiner_checked"]


def test_ybe_orientation_control():
    from contqg.qgroup import FMat, _leg13, truncated_r_matrix

    def ybe(R, d):
        one = FMat.identity(d)
        return (R.kron(one) * _leg13(R, d) * one.kron(R) - one.kron(R) * _leg13(R, d) * R.kron(one)).is_zero()

    assert ybe(truncated_r_matrix(2, 2)[0], 3)
    assert not ybe(truncated_r_matrix(2, 2, orientation="plain")[0], 3)


# -- properties --------------------------------------------------------------------------

letters = st.sampled_from([E(A), E(B), E(AB), F(A), F(B), F(AB), K(A), K(B), K(A, -1)])
words = st.lists(letters, min_size=1, max_size=3).map(lambda ls: _prod(ls))


def _prod(ls):
    out = NcElement.one()
    for x in ls:
        out = out * x
    return out


@given(words, words)
def test_coproduct_is_multiplicative_in_the_quotient(x, y):
    h = GridHopf(U2)
    assert h.nf(h.delta(x * y)) == h.nf(h.delta(x) * h.delta(y))


@given(words)
def test_counit_axiom_on_words(x):
    h = GridHopf(U2)
    D = h.delta(x)
    left = qgroup.apply_on_leg(D, 0, lambda w: NcElement.scalar(counit(NcElement.from_word(w)))).multiply_legs()
    assert h.nf(left - x).is_zero()


@given(words)
def test_rep_respects_normal_form(x):
    rho = build_vector_rep(2)
    rs = qgroup.system_for(U2)
    assert (rho(x) - rho(normal_form(x, rs))).is_zero()
