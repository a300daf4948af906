"""Exact coefficients: Laurent polynomials in v = q^(1/2) and truncated series in hbar.

``LaurentV`` is an element of Q[v, 1/v] localized at q - 1/q, stored as
``num / (q - 1/q)**den`` with ``num`` not divisible by ``q - 1/q`` whenever
``den > 0``.  That localization is the smallest ring in which the Cartan
term of the double relation and the generator pairing are exact; division by
anything else that is not a monomial raises DivisionByNonMonomial.
"""

from __future__ import annotations

import math
from fractions import Fraction

from .errors import DivisionByNonMonomial


def _clean(terms):
    return {k: c for k, c in terms.items() if c}


def _pmul(x, y):
    out = {}
    for i, a in x.items():
        for j, b in y.items():
            out[i + j] = out.get(i + j, 0) + a * b
    return _clean(out)


def _padd(x, y, s=1):
    out = dict(x)
    for k, c in y.items():
        out[k] = out.get(k, 0) + s * c
    return _clean(out)


# q - 1/q = v^2 - v^-2
_D = {2: Fraction(1), -2: Fraction(-1)}


def _div_by_d(p):
    """p / (v^2 - v^-2) if exact, else None."""
    if not p:
        return {}
    # v^2 - v^-2 = v^-2 (v^4 - 1); divisible iff every residue class mod 4 sums to 0
    sums = [0, 0, 0, 0]
    for k, c in p.items():
        sums[k % 4] += c
    if any(sums):
        return None
    hi, lo = max(p), min(p)
    quo = {}
    carry = {}
    # (v^4 - 1) Q = p, solve from the top: Q[e-4] = p[e] + Q[e]
    for e in range(hi, lo + 3, -1):
        c = p.get(e, 0) + carry.get(e, 0)
        if c:
            quo[e - 4] = c
            carry[e - 4] = c
    return {k + 2: c for k, c in quo.items() if c}


class LaurentV:
    __slots__ = ("terms", "den", "_hash")

    def __init__(self, terms=None, den=0):
        t = _clean({int(k): Fraction(c) for k, c in (terms or {}).items()})
        while den > 0 and t:
            r = _div_by_d(t)
            if r is None:
                break
            t, den = r, den - 1
        if not t:
            den = 0
        self.terms = t
        self.den = den
        self._hash = None

    # constructors
    @staticmethod
    def const(c):
        return LaurentV({0: c})

    @staticmethod
    def vpow(k, c=1):
        return LaurentV({k: c})

    @staticmethod
    def qpow(n, c=1):
        """c * q^n with n an integer or half-integer."""
        k = Fraction(n) * 2
        if k.denominator != 1:
            raise ValueError(f"q exponent {n} is not a half-integer")
        return LaurentV({int(k): c})

    @staticmethod
    def qdiff():
        return LaurentV(dict(_D))

    @staticmethod
    def inv_qdiff():
        return LaurentV({0: 1}, 1)

    @staticmethod
    def coerce(x):
        if isinstance(x, LaurentV):
            return x
        if isinstance(x, (int, Fraction)):
            return LaurentV({0: x})
        raise TypeError(f"cannot coerce {type(x).__name__} to LaurentV")

    # ring ops
    def _lift(self, den):
        t = self.terms
        for _ in range(den - self.den):
            t = _pmul(t, _D)
        return t

    def __add__(self, other):
        try:
            o = LaurentV.coerce(other)
        except TypeError:
            return NotImplemented
        d = max(self.den, o.den)
        return LaurentV(_padd(self._lift(d), o._lift(d)), d)

    __radd__ = __add__

    def __neg__(self):
        return LaurentV({k: -c for k, c in self.terms.items()}, self.den)

    def __sub__(self, other):
        try:
            return self + (-LaurentV.coerce(other))
        except TypeError:
            return NotImplemented

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        try:
            o = LaurentV.coerce(other)
        except TypeError:
            return NotImplemented
        if not self.terms or not o.terms:
            return LaurentV()
        if not o.den and len(o.terms) == 1 and 0 in o.terms:
            c = o.terms[0]
            return LaurentV({k: v * c for k, v in self.terms.items()}, self.den)
        return LaurentV(_pmul(self.terms, o.terms), self.den + o.den)

    __rmul__ = __mul__

    def __pow__(self, n):
        if n < 0:
            return (self.inverse()) ** (-n)
        out = LaurentV.const(1)
        for _ in range(n):
            out = out * self
        return out

    def is_unit(self):
        return len(self.terms) == 1

    def inverse(self):
        """Inverse of a monomial times (q - 1/q)^k; anything else raises."""
        if len(self.terms) != 1:
            raise DivisionByNonMonomial(f"cannot invert {self}")
        (k, c), = self.terms.items()
        out = LaurentV({-k: 1 / c})
        for _ in range(self.den):
            out = out * LaurentV.qdiff()
        return out

    def divide_by_qdiff(self, n=1):
        return LaurentV(self.terms, self.den + n)

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)):
            return LaurentV({k: c / other for k, c in self.terms.items()}, self.den)
        o = LaurentV.coerce(other)
        if len(o.terms) == 1:
            return self * o.inverse()
        if o.terms == _D:
            return LaurentV(self.terms, self.den + o.den + 1)
        raise DivisionByNonMonomial(f"division by non-monomial {o}")

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = LaurentV.const(other)
        if not isinstance(other, LaurentV):
            return NotImplemented
        return self.den == other.den and self.terms == other.terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.den, frozenset(self.terms.items())))
        return self._hash

    def __bool__(self):
        return bool(self.terms)

    def is_zero(self):
        return not self.terms

    def is_laurent(self):
        return self.den == 0

    def constant(self):
        """The rational value when this is a constant, else None."""
        if self.den == 0 and set(self.terms) <= {0}:
            return self.terms.get(0, Fraction(0))
        return None

    def at_q1(self):
        """Value at q = 1 (v = 1); only for Laurent polynomials."""
        if self.den:
            raise DivisionByNonMonomial("q - 1/q vanishes at q = 1")
        return sum(self.terms.values(), Fraction(0))

    def substitute(self, value):
        """Evaluate at v = value (any field element supporting ** and +)."""
        num = 0
        for k, c in self.terms.items():
            num = num + c * value ** k
        if self.den:
            d = value ** 2 - value ** -2
            num = num / d ** self.den
        return num

    def to_json(self):
        return {
            "v_exponents": {str(k): [c.numerator, c.denominator] for k, c in sorted(self.terms.items())},
            "qdiff_power": -self.den,
        }

    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        for k in sorted(self.terms, reverse=True):
            c = self.terms[k]
            cs = str(c)
            if k == 0:
                mon = ""
            elif k % 2 == 0:
                mon = "q" if k == 2 else f"q^{k // 2}"
            else:
                mon = "v" if k == 1 else f"v^{k}"
            if not mon:
                parts.append(cs)
            elif c == 1:
                parts.append(mon)
            elif c == -1:
                parts.append("-" + mon)
            else:
                parts.append(f"{cs}*{mon}")
        body = " + ".join(parts).replace("+ -", "- ")
        if self.den:
            pw = "" if self.den == 1 else f"^{self.den}"
            body = f"({body})/(q - q^-1){pw}"
        return body

    def __repr__(self):
        return f"LaurentV({self})"


ZERO = LaurentV()
ONE = LaurentV.const(1)
Q = LaurentV.vpow(2)
V = LaurentV.vpow(1)
QDIFF = LaurentV.qdiff()


def q(n):
    return LaurentV.qpow(n)


class HbarSeries:
    """Truncated Laurent series in hbar: sum_{j >= low} c_j hbar^j mod hbar^(order+1)."""

    __slots__ = ("coeffs", "order")

    def __init__(self, coeffs, order):
        self.order = order
        self.coeffs = {j: Fraction(c) for j, c in coeffs.items() if c and j <= order}

    @staticmethod
    def const(c, order):
        return HbarSeries({0: c}, order)

    @staticmethod
    def hbar(order):
        return HbarSeries({1: 1}, order)

    def low(self):
        return min(self.coeffs) if self.coeffs else self.order + 1

    def __getitem__(self, j):
        return self.coeffs.get(j, Fraction(0))

    def _coerce(self, other):
        if isinstance(other, HbarSeries):
            return other
        if isinstance(other, (int, Fraction)):
            return HbarSeries({0: other}, self.order)
        return None

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        order = min(self.order, o.order)
        out = dict(self.coeffs)
        for j, c in o.coeffs.items():
            out[j] = out.get(j, 0) + c
        return HbarSeries(out, order)

    __radd__ = __add__

    def __neg__(self):
        return HbarSeries({j: -c for j, c in self.coeffs.items()}, self.order)

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        # precision: each factor is known up to its own order
        order = min(self.order + (o.low() if o.coeffs else 0),
                    o.order + (self.low() if self.coeffs else 0))
        if not self.coeffs or not o.coeffs:
            return HbarSeries({}, min(self.order, o.order))
        out = {}
        for i, a in self.coeffs.items():
            for j, b in o.coeffs.items():
                if i + j <= order:
                    out[i + j] = out.get(i + j, 0) + a * b
        return HbarSeries(out, order)

    __rmul__ = __mul__

    def shift(self, k):
        """Multiply by hbar^k (k may be negative)."""
        return HbarSeries({j + k: c for j, c in self.coeffs.items()}, self.order + k)

    def inverse(self):
        low = self.low()
        if not self.coeffs:
            raise ZeroDivisionError("inverse of zero series")
        u = self.shift(-low)
        n = u.order
        a0 = u[0]
        inv = {0: 1 / a0}
        for k in range(1, n + 1):
            s = sum(u[i] * inv[k - i] for i in range(1, k + 1))
            inv[k] = -s / a0
        return HbarSeries(inv, n).shift(-low)

    def truncate(self, order):
        return HbarSeries(self.coeffs, min(order, self.order))

    def is_zero(self):
        return not self.coeffs

    def __eq__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        order = min(self.order, o.order)
        return self.truncate(order).coeffs == o.truncate(order).coeffs

    def __hash__(self):
        return hash(frozenset(self.coeffs.items()))

    def __str__(self):
        if not self.coeffs:
            return f"O(hbar^{self.order + 1})"
        parts = []
        for j in sorted(self.coeffs):
            c = self.coeffs[j]
            parts.append(str(c) if j == 0 else f"{c}*hbar^{j}")
        return " + ".join(parts) + f" + O(hbar^{self.order + 1})"

    __repr__ = __str__


def _exp_series(rate, order):
    """exp(rate * hbar) up to hbar^order."""
    return HbarSeries({k: Fraction(rate) ** k / math.factorial(k) for k in range(order + 1)}, order)


def expand_hbar(x, order):
    """Substitute v = exp(hbar/4), keeping terms up to hbar^order."""
    x = LaurentV.coerce(x)
    work = order + x.den
    num = HbarSeries({}, work)
    for k, c in x.terms.items():
        num = num + c * _exp_series(Fraction(k, 4), work)
    if x.den:
        d = _exp_series(Fraction(1, 2), work + 1) - _exp_series(Fraction(-1, 2), work + 1)
        num = num * _spow(d, x.den).inverse()
    return num.truncate(order)


def _spow(s, n):
    out = HbarSeries.const(1, s.order)
    for _ in range(n):
        out = out * s
    return out
