"""Noncommutative polynomials over exact scalars, tensor powers, and bounded rewriting.

A word is a tuple of letters.  Letters are ``("E", I)``, ``("F", I)``,
``("H", I)`` for an interval ``I`` and ``("K", f)`` for a characteristic
function ``f``: the group-like element ``K^f``, so that ``K_I`` is
``K^{1_I}`` and ``K_I^{-1}`` is ``K^{-1_I}``.  Adjacent Cartan letters are
merged on concatenation, which makes ``K_I K_I^{-1} = 1`` and
``K_{I+J} = K_I K_J`` hold on the nose.

An element of tensor degree ``d`` maps ``d``-tuples of words to scalars.
"""

from __future__ import annotations

import re
import sys
from collections import namedtuple
from fractions import Fraction

from .errors import BudgetExhausted, ParseError, UnboundGenerator
from .intervals import CharFun, Interval, VertexSpace, parse_interval
from .scalars import LaurentV

Gen = namedtuple("Gen", "family index")

FAMILY_RANK = {"F": 0, "K": 1, "H": 2, "E": 3}


def letter(family, index):
    """Letter for a generator family in {E, F, K, Kinv, H}."""
    if family == "K":
        return ("K", CharFun.of(index))
    if family == "Kinv":
        return ("K", -CharFun.of(index))
    if family in ("E", "F", "H"):
        return (family, index)
    raise ValueError(f"unknown generator family {family!r}")


def kpow(f):
    return ("K", f)


def cat(u, w):
    """Concatenate words, merging Cartan letters at the junction."""
    if not u:
        return w
    if not w:
        return u
    a, b = u[-1], w[0]
    if a[0] == "K" and b[0] == "K":
        f = a[1] + b[1]
        mid = () if f.is_zero() else (("K", f),)
        return u[:-1] + mid + w[1:]
    return u + w


def word(*letters):
    out = ()
    for l in letters:
        out = cat(out, (l,))
    return out


def _nonzero(c):
    return not (c == 0)


class NcElement:
    """Finite linear combination of tensor-words of fixed degree."""

    __slots__ = ("terms", "degree")

    def __init__(self, terms=None, degree=1):
        self.degree = degree
        self.terms = {k: c for k, c in (terms or {}).items() if _nonzero(c)}

    # constructors
    @staticmethod
    def zero(degree=1):
        return NcElement({}, degree)

    @staticmethod
    def one(degree=1, coeff=None):
        c = LaurentV.const(1) if coeff is None else coeff
        return NcElement({((),) * degree: c}, degree)

    @staticmethod
    def scalar(c, degree=1):
        return NcElement({((),) * degree: c}, degree)

    @staticmethod
    def gen(family, index, coeff=None):
        c = LaurentV.const(1) if coeff is None else coeff
        return NcElement({(word(letter(family, index)),): c})

    @staticmethod
    def from_word(w, coeff=None):
        c = LaurentV.const(1) if coeff is None else coeff
        return NcElement({(w,): c})

    def items(self):
        return self.terms.items()

    def is_zero(self):
        return not self.terms

    def __bool__(self):
        return bool(self.terms)

    def _check(self, other):
        if other.degree != self.degree:
            raise ValueError("tensor degrees differ")

    def __add__(self, other):
        if not isinstance(other, NcElement):
            return self + NcElement.scalar(other, self.degree)
        self._check(other)
        out = dict(self.terms)
        for k, c in other.terms.items():
            out[k] = out[k] + c if k in out else c
        return NcElement(out, self.degree)

    __radd__ = __add__

    def __neg__(self):
        return NcElement({k: -c for k, c in self.terms.items()}, self.degree)

    def __sub__(self, other):
        if not isinstance(other, NcElement):
            other = NcElement.scalar(other, self.degree)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, c):
        return NcElement({k: v * c for k, v in self.terms.items()}, self.degree)

    def __mul__(self, other):
        if not isinstance(other, NcElement):
            return self.scale(other)
        self._check(other)
        out = {}
        for k1, c1 in self.terms.items():
            for k2, c2 in other.terms.items():
                k = tuple(cat(a, b) for a, b in zip(k1, k2))
                c = c1 * c2
                out[k] = out[k] + c if k in out else c
        return NcElement(out, self.degree)

    def __rmul__(self, c):
        return self.scale(c)

    def __pow__(self, n):
        out = NcElement.one(self.degree)
        for _ in range(n):
            out = out * self
        return out

    def __eq__(self, other):
        if not isinstance(other, NcElement):
            return NotImplemented
        return self.degree == other.degree and (self - other).is_zero()

    def __hash__(self):
        return hash((self.degree, frozenset(self.terms)))

    def map_coeffs(self, fn):
        return NcElement({k: fn(c) for k, c in self.terms.items()}, self.degree)

    def leg(self, i, fn):
        """Apply a linear map word -> NcElement (degree 1) to tensor leg i."""
        acc = {}
        for k, c in self.terms.items():
            img = fn(k[i])
            for (w,), c2 in img.terms.items():
                nk = k[:i] + (w,) + k[i + 1:]
                v = c * c2
                acc[nk] = acc[nk] + v if nk in acc else v
        return NcElement(acc, self.degree)

    def flip(self, perm=None):
        perm = perm or tuple(reversed(range(self.degree)))
        return NcElement({tuple(k[p] for p in perm): c for k, c in self.terms.items()}, self.degree)

    def multiply_legs(self):
        """m: U^(x d) -> U, concatenating the words of each term."""
        acc = {}
        for k, c in self.terms.items():
            w = ()
            for part in k:
                w = cat(w, part)
            kk = (w,)
            acc[kk] = acc[kk] + c if kk in acc else c
        return NcElement(acc, 1)

    def words(self):
        return [k[0] for k in self.terms] if self.degree == 1 else list(self.terms)

    def __str__(self):
        return render(self)

    __repr__ = __str__


def tensor(x, y):
    out = {}
    for k1, c1 in x.terms.items():
        for k2, c2 in y.terms.items():
            k = k1 + k2
            c = c1 * c2
            out[k] = out[k] + c if k in out else c
    return NcElement(out, x.degree + y.degree)


def apply_hom(assign, x, one=None):
    """Algebra homomorphism extending ``assign`` (a dict or a callable on letters).

    Values must support ``*`` and ``+`` and scalar multiplication on the left
    by coefficients; ``one`` is the unit of the target (defaults to the
    identity element of the free algebra).
    """
    if one is None:
        one = NcElement.one()

    def img(l):
        if callable(assign):
            v = assign(l)
            if v is None:
                raise UnboundGenerator(f"no image for {render_letter(l)}")
            return v
        if l not in assign:
            raise UnboundGenerator(f"no image for {render_letter(l)}")
        return assign[l]

    total = None
    for k, c in x.terms.items():
        if x.degree != 1:
            raise ValueError("apply_hom acts on degree-1 elements")
        acc = one
        for l in k[0]:
            acc = acc * img(l)
        term = acc * c if not isinstance(acc, NcElement) else acc.scale(c)
        total = term if total is None else total + term
    if total is None:
        return one * 0 if not isinstance(one, NcElement) else NcElement.zero()
    return total


# -- rewriting -----------------------------------------------------------------------

class RewriteSystem:
    """Length-two rewrite rules on letters, plus a Cartan commutation rule.

    ``rules`` maps an ordered letter pair to the replacement element for the
    word ``ab``.  ``cartan_weight(f, I)`` returns the exponent ``n`` in
    ``K^f E_I = q^n E_I K^f``; the engine then moves Cartan letters to the
    middle (``E K -> K E``, ``K F -> F K``).  ``alphabet`` lists the letters
    used when enumerating critical pairs.
    """

    def __init__(self, rules, cartan_weight=None, alphabet=(), name="rules"):
        self.rules = dict(rules)
        self.cartan_weight = cartan_weight
        self.alphabet = list(alphabet)
        self.name = name
        self._cache = {"left": {}, "right": {}}

    def replacement(self, a, b):
        """Replacement for the word ``ab`` (degree-1 element) or None."""
        r = self.rules.get((a, b))
        if r is not None:
            return r
        if self.cartan_weight is None:
            return None
        fa, fb = a[0], b[0]
        if fa == "E" and fb == "K":
            n = self.cartan_weight(b[1], a[1])
            return NcElement({((b, a),): LaurentV.qpow(-n)})
        if fa == "K" and fb == "F":
            n = self.cartan_weight(a[1], b[1])
            return NcElement({((b, a),): LaurentV.qpow(-n)})
        if fa == "E" and fb == "H":
            # E_a H_b = H_b E_a - (b, a) E_a
            n = self.cartan_weight(CharFun.of(b[1]), a[1])
            return NcElement({((b, a),): LaurentV.const(1), ((a,),): LaurentV.const(-n)})
        if fa == "H" and fb == "F":
            n = self.cartan_weight(CharFun.of(a[1]), b[1])
            return NcElement({((b, a),): LaurentV.const(1), ((b,),): LaurentV.const(-n)})
        if fa == "H" and fb == "K":
            return NcElement({((b, a),): LaurentV.const(1)})
        if fa == "H" and fb == "H" and b[1].sort_key() < a[1].sort_key():
            return NcElement({((b, a),): LaurentV.const(1)})
        return None

    def redexes(self, w):
        return [i for i in range(len(w) - 1) if self.replacement(w[i], w[i + 1]) is not None]

    def step(self, w, i):
        rep = self.replacement(w[i], w[i + 1])
        pre, post = w[:i], w[i + 2:]
        out = {}
        for (m,), c in rep.terms.items():
            k = (cat(cat(pre, m), post),)
            out[k] = out[k] + c if k in out else c
        return NcElement(out)

    def clear_cache(self):
        self._cache = {"left": {}, "right": {}}


class _Budget:
    def __init__(self, n):
        self.left = n


def _nf_word(rs, w, strategy, budget):
    cache = rs._cache[strategy]
    hit = cache.get(w)
    if hit is not None:
        return hit
    # iterative reduction with an explicit stack of pending words
    stack = [w]
    while stack:
        cur = stack[-1]
        if cur in cache:
            stack.pop()
            continue
        n = len(cur)
        idx = None
        rng = range(n - 1) if strategy == "left" else range(n - 2, -1, -1)
        for i in rng:
            if rs.replacement(cur[i], cur[i + 1]) is not None:
                idx = i
                break
        if idx is None:
            cache[cur] = NcElement({(cur,): LaurentV.const(1)})
            stack.pop()
            continue
        nxt = rs.step(cur, idx)
        missing = [k[0] for k in nxt.terms if k[0] not in cache]
        if missing:
            budget.left -= 1
            if budget.left < 0:
                raise BudgetExhausted(f"step budget exhausted at word {render_word(cur)}")
            if len(stack) > 200000:
                raise BudgetExhausted("reduction stack overflow")
            stack.extend(missing)
            continue
        acc = {}
        for (m,), c in nxt.terms.items():
            for (m2,), c2 in cache[m].terms.items():
                v = c * c2
                acc[(m2,)] = acc[(m2,)] + v if (m2,) in acc else v
        cache[cur] = NcElement(acc)
        stack.pop()
    return cache[w]


def normal_form(x, rules, step_budget=10 ** 5, strategy="left"):
    """Rewrite every tensor leg of ``x`` to a fixpoint of ``rules``."""
    if step_budget <= 0:
        raise ValueError("step_budget must be positive")
    budget = _Budget(step_budget)
    out = x
    try:
        for i in range(x.degree):
            out = out.leg(i, lambda w: _nf_word(rules, w, strategy, budget))
    except BudgetExhausted as exc:
        raise BudgetExhausted(str(exc), partial=out) from None
    return out


def is_normal(w, rules):
    return not rules.redexes(w)


def overlap_report(rules, max_degree=3, step_budget=10 ** 5):
    """Critical words ``abc`` (``ab`` and ``bc`` both reducible) whose two
    one-step reductions reach different normal forms.

    With length-two left sides every ambiguity is a word of length three, so
    any ``max_degree >= 3`` covers all of them over ``rules.alphabet``.
    """
    if max_degree < 2:
        raise ValueError("max_degree must be at least 2")
    if max_degree < 3:
        return []
    alpha = rules.alphabet
    succ = {a: [b for b in alpha if rules.replacement(a, b) is not None] for a in alpha}
    bad = []
    for a in alpha:
        for b in succ[a]:
            for c in succ.get(b, ()):
                w = word(a, b, c)
                if len(w) != 3:
                    continue
                left = normal_form(rules.step(w, 0), rules, step_budget)
                right = normal_form(rules.step(w, 1), rules, step_budget)
                diff = left - right
                if not diff.is_zero():
                    bad.append((w, diff))
    return bad


# -- rendering and parsing ---------------------------------------------------------

def render_letter(l):
    fam, idx = l
    if fam == "K":
        return render_cartan(idx)
    return f"({fam} {idx})"


def render_cartan(f):
    parts = []
    for iv, n in charfun_pieces(f):
        if n == 1:
            parts.append(f"(K {iv})")
        elif n == -1:
            parts.append(f"(Kinv {iv})")
        elif n > 0:
            parts.append(f"(K^{n} {iv})")
        else:
            parts.append(f"(Kinv^{-n} {iv})")
    return " ".join(parts)


def charfun_pieces(f):
    """Decompose a characteristic function into (interval, height) on maximal
    pieces of constant nonzero value."""
    from .intervals import FULL_CIRCLE, arc, line

    pts = [p for p, _ in f.jumps]
    out = []
    if f.space is VertexSpace.LINE:
        for l, r in zip(pts, pts[1:]):
            v = f.left_value(r)
            if v:
                out.append((line(l, r), v))
        return out
    if not pts:
        return [(FULL_CIRCLE, f.base)] if f.base else []
    pieces = []
    for i, l in enumerate(pts):
        last = i + 1 == len(pts)
        r = pts[0] if last else pts[i + 1]
        # the piece running through the point 0 carries the base value
        pieces.append((l, r, f.base if last else f.left_value(r)))
    m = min(v for _, _, v in pieces)
    if m:
        out.append((FULL_CIRCLE, m))
    for l, r, v in pieces:
        if v - m:
            out.append((arc(l, r), v - m))
    return out


def render_word(w):
    if not w:
        return "1"
    return " ".join(render_letter(l) for l in w)


def _render_scalar(c):
    s = str(c)
    return s if " " not in s else f"[{s}]"


def render(x):
    """S-expression text for an element."""
    if x.is_zero():
        return "0"
    items = sorted(x.terms.items(), key=lambda kv: _term_key(kv[0]))
    parts = []
    for k, c in items:
        if x.degree == 1:
            body = render_word(k[0])
        else:
            body = "(@ " + " ".join(f"[{render_word(w)}]" for w in k) + ")"
        parts.append(f"(* {_render_scalar(c)} {body})")
    return parts[0] if len(parts) == 1 else "(+ " + " ".join(parts) + ")"


def letter_key(l):
    fam, idx = l
    if fam == "K":
        return (FAMILY_RANK["K"], tuple((p, j) for p, j in idx.jumps), idx.base)
    return (FAMILY_RANK[fam], idx.sort_key())


def _term_key(k):
    return tuple(tuple(letter_key(l) for l in w) for w in k)


_TOKEN = re.compile(
    r"\s*(circ\(\s*-?\d+(?:/\d+)?\s*,\s*-?\d+(?:/\d+)?\s*\]"
    r"|\(\s*-?\d+(?:/\d+)?\s*,\s*-?\d+(?:/\d+)?\s*\]"
    r"|\(|\)|[^\s()]+)"
)


def _tokens(text):
    pos, out = 0, []
    text = text.strip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ParseError(f"cannot tokenize at {text[pos:]!r}")
        out.append(m.group(1))
        pos = m.end()
    return out


_SCALAR = re.compile(r"^(-?\d+(?:/\d+)?)$|^(q|v)(?:\^(-?\d+(?:/\d+)?))?$")


def _scalar_atom(tok):
    m = _SCALAR.match(tok)
    if not m:
        return None
    if m.group(1) is not None:
        return LaurentV.const(Fraction(m.group(1)))
    e = Fraction(m.group(3)) if m.group(3) else Fraction(1)
    if m.group(2) == "q":
        return LaurentV.qpow(e)
    if e.denominator != 1:
        raise ParseError(f"fractional power of v: {tok}")
    return LaurentV.vpow(int(e))


def parse_element(text, space=None):
    """Parse the S-expression element syntax, e.g. ``(* (E (1,2]) (E (0,1]))``."""
    toks = _tokens(text)
    pos = 0

    def expr():
        nonlocal pos
        if pos >= len(toks):
            raise ParseError("unexpected end of input")
        t = toks[pos]
        if t == "(":
            pos += 1
            if pos >= len(toks):
                raise ParseError("unexpected end of input")
            head = toks[pos]
            pos += 1
            fam = re.match(r"^(E|F|K|Kinv|H)(?:\^(\d+))?$", head)
            if fam:
                if pos >= len(toks):
                    raise ParseError("missing interval")
                iv = parse_interval(toks[pos])
                if space is not None and iv.space is not space:
                    raise ParseError(f"interval {iv} is not on {space.value}")
                pos += 1
                close()
                n = int(fam.group(2) or 1)
                return NcElement.gen(fam.group(1), iv) ** n
            args = []
            while pos < len(toks) and toks[pos] != ")":
                args.append(expr())
            close()
            if head == "+":
                out = NcElement.zero()
                for a in args:
                    out = out + a
                return out
            if head == "*":
                out = NcElement.one()
                for a in args:
                    out = out * a
                return out
            if head == "-":
                if len(args) == 1:
                    return -args[0]
                out = args[0]
                for a in args[1:]:
                    out = out - a
                return out
            raise ParseError(f"unknown operator {head!r}")
        if t == ")":
            raise ParseError("unexpected ')'")
        pos += 1
        s = _scalar_atom(t)
        if s is None:
            raise ParseError(f"unknown atom {t!r}")
        return NcElement.scalar(s)

    def close():
        nonlocal pos
        if pos >= len(toks) or toks[pos] != ")":
            raise ParseError("expected ')'")
        pos += 1

    out = expr()
    if pos != len(toks):
        raise ParseError(f"trailing input: {' '.join(toks[pos:])}")
    return out
