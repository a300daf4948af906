"""Interval calculus on the rational line and the rational circle.

Intervals are half-open, ``(a, b]``.  On the circle an arc ``(a, b]`` is the
set swept counterclockwise from ``a`` (excluded) to ``b`` (included), with
endpoints normalized to ``[0, 1)``; the full circle is a separate value.

Partial operations return :data:`UNDEFINED` instead of raising.  Everything
here is exact: endpoints are :class:`fractions.Fraction`.
"""

from __future__ import annotations

import enum
import itertools
import re
from dataclasses import dataclass
from fractions import Fraction

from .errors import ParseError, ResourceLimit, SpaceMismatch
from .reports import Report


class VertexSpace(enum.Enum):
    LINE = "line"
    CIRCLE = "circle"


class _Undefined:
    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self):
        return "Undefined"

    def __bool__(self):
        return False

    def __reduce__(self):
        return (_Undefined, ())


UNDEFINED = _Undefined()


def is_defined(x):
    return x is not UNDEFINED


class RelativePosition(enum.Enum):
    EQUAL = "Equal"
    ADJACENT_AB = "AdjacentAB"          # (a)  alpha then beta
    ADJACENT_BA = "AdjacentBA"          # (b)
    OVERLAP_AB = "OverlapAB"            # (c)  a < a' < b < b'
    OVERLAP_BA = "OverlapBA"            # (d)
    ORTHOGONAL = "Orthogonal"           # (e)
    STRICT_SUB_AB = "StrictSubAB"       # (f)  alpha inside beta, no shared endpoint
    STRICT_SUB_BA = "StrictSubBA"       # (g)
    RSUB_AB = "RSubAB"                  # (h)  alpha inside beta, same left endpoint
    LSUB_AB = "LSubAB"                  # (i)  alpha inside beta, same right endpoint
    RSUB_BA = "RSubBA"                  # (j)
    LSUB_BA = "LSubBA"                  # (k)
    DOUBLE_OVERLAP = "DoubleOverlap"
    CONTAINS_FULL_CIRCLE_AB = "ContainsFullCircleAB"  # alpha is the full circle
    CONTAINS_FULL_CIRCLE_BA = "ContainsFullCircleBA"  # beta is the full circle


# table row label for each line position
ROW_LABEL = {
    RelativePosition.ADJACENT_AB: "a",
    RelativePosition.ADJACENT_BA: "b",
    RelativePosition.OVERLAP_AB: "c",
    RelativePosition.OVERLAP_BA: "d",
    RelativePosition.ORTHOGONAL: "e",
    RelativePosition.STRICT_SUB_AB: "f",
    RelativePosition.STRICT_SUB_BA: "g",
    RelativePosition.RSUB_AB: "h",
    RelativePosition.LSUB_AB: "i",
    RelativePosition.RSUB_BA: "j",
    RelativePosition.LSUB_BA: "k",
}


def _q(x):
    return x if isinstance(x, Fraction) else Fraction(x)


def _fmt(x):
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


@dataclass(frozen=True)
class Interval:
    """A line interval, a proper arc, or the full circle."""

    space: VertexSpace
    a: Fraction
    b: Fraction
    full: bool = False

    def __post_init__(self):
        object.__setattr__(self, "a", _q(self.a))
        object.__setattr__(self, "b", _q(self.b))
        if self.space is VertexSpace.LINE:
            if self.full or not self.a < self.b:
                raise ValueError(f"line interval needs a < b, got ({self.a},{self.b}]")
        elif self.full:
            object.__setattr__(self, "a", Fraction(0))
            object.__setattr__(self, "b", Fraction(0))
        else:
            a, b = self.a % 1, self.b % 1
            if a == b:
                raise ValueError("arc endpoints must differ mod 1; use full_circle()")
            object.__setattr__(self, "a", a)
            object.__setattr__(self, "b", b)
        # intervals are dict keys in every hot loop
        object.__setattr__(self, "_h", hash((self.space, self.a, self.b, self.full)))

    def __hash__(self):
        return self._h

    @property
    def contractible(self):
        return not self.full

    @property
    def length(self):
        if self.full:
            return Fraction(1)
        if self.space is VertexSpace.LINE:
            return self.b - self.a
        return (self.b - self.a) % 1

    def sort_key(self):
        if self.space is VertexSpace.LINE:
            return (0, self.a, self.b)
        if self.full:
            return (1, Fraction(2), Fraction(2))
        return (0, self.a, self.length)

    def __lt__(self, other):
        return self.sort_key() < other.sort_key()

    def __str__(self):
        if self.full:
            return "circle"
        body = f"({_fmt(self.a)},{_fmt(self.b)}]"
        return body if self.space is VertexSpace.LINE else "circ" + body

    def __repr__(self):
        return f"Interval<{self}>"


def line(a, b):
    return Interval(VertexSpace.LINE, a, b)


def arc(a, b):
    return Interval(VertexSpace.CIRCLE, a, b)


def full_circle():
    return Interval(VertexSpace.CIRCLE, 0, 0, True)


FULL_CIRCLE = full_circle()

_NUM = r"\s*(-?\d+(?:/\d+)?)\s*"
_LIT = re.compile(r"^\s*(circ)?\(" + _NUM + "," + _NUM + r"\]\s*$")


def parse_interval(text):
    """Parse ``(a,b]``, ``circ(a,b]`` or ``circle``."""
    if text.strip() == "circle":
        return FULL_CIRCLE
    m = _LIT.match(text)
    if not m:
        raise ParseError(f"not an interval literal: {text!r}")
    try:
        a, b = Fraction(m.group(2)), Fraction(m.group(3))
        return arc(a, b) if m.group(1) else line(a, b)
    except (ValueError, ZeroDivisionError) as exc:
        raise ParseError(f"bad interval {text!r}: {exc}") from None


def _same_space(x, y):
    if x.space is not y.space:
        raise SpaceMismatch(f"{x} and {y} live on different spaces")


# -- point sets: sorted disjoint lists of half-open pieces (l, r] -------------

def _pieces(iv):
    if iv.space is VertexSpace.LINE:
        return [(iv.a, iv.b)]
    if iv.full:
        return [(Fraction(0), Fraction(1))]
    if iv.a < iv.b:
        return [(iv.a, iv.b)]
    out = []
    if iv.b > 0:
        out.append((Fraction(0), iv.b))
    out.append((iv.a, Fraction(1)))
    return out


def _merge(ps):
    ps = sorted(p for p in ps if p[0] < p[1])
    out = []
    for l, r in ps:
        if out and l <= out[-1][1]:
            out[-1] = (out[-1][0], max(out[-1][1], r))
        else:
            out.append((l, r))
    return out


def _inter(A, B):
    return _merge((max(l1, l2), min(r1, r2)) for l1, r1 in A for l2, r2 in B)


def _minus(A, B):
    out = list(A)
    for bl, br in B:
        nxt = []
        for l, r in out:
            if br <= l or bl >= r:
                nxt.append((l, r))
                continue
            if l < bl:
                nxt.append((l, bl))
            if br < r:
                nxt.append((br, r))
        out = nxt
    return _merge(out)


def _components(space, ps):
    n = len(ps)
    if space is VertexSpace.CIRCLE and n > 1 and ps[0][0] == 0 and ps[-1][1] == 1:
        n -= 1
    return n


def _to_interval(space, ps):
    if not ps:
        return UNDEFINED
    if space is VertexSpace.LINE:
        return line(*ps[0]) if len(ps) == 1 else UNDEFINED
    if len(ps) == 1:
        l, r = ps[0]
        if l == 0 and r == 1:
            return FULL_CIRCLE
        return arc(l, r)
    if len(ps) == 2 and ps[0][0] == 0 and ps[1][1] == 1:
        return arc(ps[1][0], ps[0][1])
    return UNDEFINED


def contains(x, y):
    """True when y is a subset of x."""
    _same_space(x, y)
    return not _minus(_pieces(y), _pieces(x))


def intersection_components(x, y):
    _same_space(x, y)
    return _components(x.space, _inter(_pieces(x), _pieces(y)))


# -- partial operations -------------------------------------------------------

def interval_sum(x, y):
    """x (+) y: the union when x, y are disjoint and the union is an interval."""
    _same_space(x, y)
    px, py = _pieces(x), _pieces(y)
    if _inter(px, py):
        return UNDEFINED
    return _to_interval(x.space, _merge(px + py))


def difference(x, y):
    """x (-) y: the set difference when y is inside x and the rest is an interval."""
    _same_space(x, y)
    px, py = _pieces(x), _pieces(y)
    if _minus(py, px):
        return UNDEFINED
    return _to_interval(x.space, _minus(px, py))


def strict_union(x, y):
    """Smallest interval g with g (-) x and g (-) y both defined."""
    _same_space(x, y)
    if x == y:
        return UNDEFINED
    s = interval_sum(x, y)
    if is_defined(s):
        return s
    px, py = _pieces(x), _pieces(y)
    if not _inter(px, py) or contains(x, y) or contains(y, x):
        return UNDEFINED
    u = _to_interval(x.space, _merge(px + py))
    if is_defined(u) and is_defined(difference(u, x)) and is_defined(difference(u, y)):
        return u
    return UNDEFINED


def strict_intersection(x, y):
    """Biggest interval g with x (-) g and y (-) g both defined."""
    _same_space(x, y)
    if x == y or contains(x, y) or contains(y, x):
        return UNDEFINED
    i = _to_interval(x.space, _inter(_pieces(x), _pieces(y)))
    if is_defined(i) and is_defined(difference(x, i)) and is_defined(difference(y, i)):
        return i
    return UNDEFINED


def classify(x, y):
    _same_space(x, y)
    P = RelativePosition
    if x == y:
        return P.EQUAL
    if x.full:
        return P.CONTAINS_FULL_CIRCLE_AB
    if y.full:
        return P.CONTAINS_FULL_CIRCLE_BA
    px, py = _pieces(x), _pieces(y)
    inter = _inter(px, py)
    ncomp = _components(x.space, inter)
    if ncomp == 0:
        # complementary arcs touch on both sides; reported as AdjacentAB
        if x.b == y.a:
            return P.ADJACENT_AB
        if y.b == x.a:
            return P.ADJACENT_BA
        return P.ORTHOGONAL
    if ncomp == 2:
        return P.DOUBLE_OVERLAP
    if not _minus(px, py):  # x inside y
        if x.a == y.a:
            return P.RSUB_AB
        if x.b == y.b:
            return P.LSUB_AB
        return P.STRICT_SUB_AB
    if not _minus(py, px):
        if x.a == y.a:
            return P.RSUB_BA
        if x.b == y.b:
            return P.LSUB_BA
        return P.STRICT_SUB_BA
    # single overlap: the common piece ends where x ends
    common = _to_interval(x.space, inter)
    return P.OVERLAP_AB if common.b == x.b else P.OVERLAP_BA


# -- characteristic functions and the Euler form --------------------------------

@dataclass(frozen=True)
class CharFun:
    """Integer step function, stored as its jumps plus the value just left of 0.

    On the line ``base`` is always 0.  On the circle ``base`` is the value on
    the piece ending at the point 0 = 1; the jumps then fix everything else.
    """

    space: VertexSpace
    base: int
    jumps: tuple

    def __post_init__(self):
        object.__setattr__(self, "_h", hash((self.space, self.base, self.jumps)))

    def __hash__(self):
        return self._h

    @staticmethod
    def build(space, base, jumps):
        acc = {}
        for p, j in jumps:
            if space is VertexSpace.CIRCLE:
                p = p % 1
            acc[p] = acc.get(p, 0) + j
        return CharFun(space, base, tuple(sorted((p, j) for p, j in acc.items() if j)))

    @staticmethod
    def zero(space):
        return CharFun(space, 0, ())

    @staticmethod
    def of(x):
        if isinstance(x, CharFun):
            return x
        if x.full:
            return CharFun(x.space, 1, ())
        base = 1 if (x.space is VertexSpace.CIRCLE and x.a > x.b) else 0
        return CharFun.build(x.space, base, [(x.a, 1), (x.b, -1)])

    def __add__(self, other):
        other = CharFun.of(other)
        if other.space is not self.space:
            raise SpaceMismatch("characteristic functions on different spaces")
        return CharFun.build(self.space, self.base + other.base, self.jumps + other.jumps)

    def __neg__(self):
        return CharFun(self.space, -self.base, tuple((p, -j) for p, j in self.jumps))

    def __sub__(self, other):
        return self + (-CharFun.of(other))

    def __rmul__(self, n):
        return CharFun.build(self.space, n * self.base, [(p, n * j) for p, j in self.jumps])

    def is_zero(self):
        return self.base == 0 and not self.jumps

    def left_value(self, p):
        """f_-(p), the limit from the left."""
        v = self.base
        for t, j in self.jumps:
            if t < p:
                v += j
        return v

    def value(self, p):
        # left-continuous, since the pieces are (l, r]
        if self.space is VertexSpace.CIRCLE:
            p = p % 1
            if p == 0:
                return self.base
        return self.left_value(p)

    def __str__(self):
        return f"CharFun(base={self.base}, jumps={[(_fmt(p), j) for p, j in self.jumps]})"


def half_form(f, g):
    """<f|g> = sum_p f_-(p) (g_-(p) - g_+(p))."""
    f, g = CharFun.of(f), CharFun.of(g)
    if f.space is not g.space:
        raise SpaceMismatch("half_form across spaces")
    return -sum(f.left_value(p) * j for p, j in g.jumps)


def euler_form(f, g):
    return half_form(f, g) + half_form(g, f)


# -- coefficient functions ------------------------------------------------------

def _half(n):
    n = Fraction(n, 2)
    return int(n) if n.denominator == 1 else n


def coeff_alpha(x, y):
    return (-1) ** (half_form(x, y) % 2) * euler_form(x, y)


def coeff_beta_prime(x, y):
    u = strict_union(x, y)
    return coeff_alpha(x, u) if is_defined(u) else UNDEFINED


def coeff_gamma_plus(x, y):
    d = difference(x, y)
    return _half(coeff_alpha(y, d) - 1) if is_defined(d) else UNDEFINED


def coeff_gamma_minus(x, y):
    d = difference(y, x)
    return _half(coeff_alpha(d, x) + 1) if is_defined(d) else UNDEFINED


def coeff_sigma(x, y):
    if x == y:
        return 0
    return (-1) ** (half_form(x, y) % 2) * euler_form(x, y) ** 2


def coeff_theta(x, y, sign):
    s = interval_sum(x, y)
    return _half(coeff_alpha(y, s) + sign) if is_defined(s) else UNDEFINED


def coeff_theta_plus(x, y):
    return coeff_theta(x, y, 1)


def coeff_theta_minus(x, y):
    return coeff_theta(x, y, -1)


COEFFICIENTS = {
    "alpha": coeff_alpha,
    "beta_prime": coeff_beta_prime,
    "gamma_plus": coeff_gamma_plus,
    "gamma_minus": coeff_gamma_minus,
    "sigma": coeff_sigma,
    "theta_plus": coeff_theta_plus,
    "theta_minus": coeff_theta_minus,
}


def serre_pair(x, y):
    _same_space(x, y)
    if x.space is VertexSpace.LINE:
        return True
    return not x.full


# -- grids ------------------------------------------------------------------------

DEFAULT_CLOSURE_CAP = 256


def close_grid(intervals, cap=DEFAULT_CLOSURE_CAP):
    """Close a family of intervals under (+) and (-); sorted by the total order."""
    found = set(intervals)
    spaces = {iv.space for iv in found}
    if len(spaces) > 1:
        raise SpaceMismatch("grid mixes spaces")
    frontier = list(found)
    while frontier:
        new = set()
        for x, y in itertools.product(frontier, list(found)):
            for z in (interval_sum(x, y), difference(x, y), difference(y, x)):
                if is_defined(z) and z not in found:
                    new.add(z)
        found |= new
        if len(found) > cap:
            raise ResourceLimit(f"grid closure exceeds {cap} intervals")
        frontier = list(new)
    return sorted(found)


def uniform_cells(n):
    return [line(i, i + 1) for i in range(n)]


def uniform_grid(n, cap=DEFAULT_CLOSURE_CAP):
    """All intervals (i, j] with 0 <= i < j <= n."""
    return close_grid(uniform_cells(n), cap)


def arc_cells(n):
    return [arc(Fraction(i, n), Fraction(i + 1, n)) for i in range(n)]


def arcs_grid(n, cap=DEFAULT_CLOSURE_CAP):
    """The n unit arcs plus the full circle, closed."""
    return close_grid(arc_cells(n) + [FULL_CIRCLE], cap)


def endpoints(grid):
    pts = set()
    for iv in grid:
        if not iv.full:
            pts.update((iv.a, iv.b))
    return sorted(pts)


def splittings(x, grid):
    """Ordered pairs (b, c) from the grid with b (+) c = x."""
    gs = set(grid)
    out = []
    for b in grid:
        for c in grid:
            if interval_sum(b, c) == x:
                out.append((b, c))
    return [p for p in out if p[0] in gs and p[1] in gs]


# -- reference values -------------------------------------------------------------

_ND = UNDEFINED

# row -> (<a|b>, <b|a>, alpha, beta', gamma+, gamma-, sigma, theta+, theta-)
COEFFICIENT_TABLE = {
    "a": (-1, 0, 1, 1, _ND, _ND, -1, 0, -1),
    "b": (0, -1, -1, -1, _ND, _ND, 1, 1, 0),
    "c": (-1, 1, 0, 1, _ND, _ND, 0, _ND, _ND),
    "d": (1, -1, 0, -1, _ND, _ND, 0, _ND, _ND),
    "e": (0, 0, 0, _ND, _ND, _ND, 0, _ND, _ND),
    "f": (0, 0, 0, _ND, _ND, _ND, 0, _ND, _ND),
    "g": (0, 0, 0, _ND, _ND, _ND, 0, _ND, _ND),
    "h": (0, 1, 1, _ND, _ND, 0, 1, _ND, _ND),
    "i": (1, 0, -1, _ND, _ND, 1, -1, _ND, _ND),
    "j": (1, 0, -1, _ND, 0, _ND, -1, _ND, _ND),
    "k": (0, 1, 1, _ND, -1, _ND, 1, _ND, _ND),
}

TABLE_COLUMNS = ("alpha", "beta_prime", "gamma_plus", "gamma_minus", "sigma", "theta_plus", "theta_minus")


def table_representatives(n=4):
    """One line pair per table row, the first found in the n-cell grid."""
    reps = {}
    for x, y in itertools.product(uniform_grid(n), repeat=2):
        lab = ROW_LABEL.get(classify(x, y))
        if lab is not None and lab not in reps:
            reps[lab] = (x, y)
    return dict(sorted(reps.items()))


def coefficient_table_check(n=4):
    """Every coefficient function on every line position (77 cells).

    Each row is checked on all pairs of that position in the n-cell grid; a
    cell passes only if every such pair gives the table value.
    """
    rep = Report("coeff-table", "line", uniform_grid(n))
    grid = uniform_grid(n)
    by_row = {}
    for x, y in itertools.product(grid, repeat=2):
        lab = ROW_LABEL.get(classify(x, y))
        if lab is not None:
            by_row.setdefault(lab, []).append((x, y))
    for lab, row in COEFFICIENT_TABLE.items():
        pairs = by_row.get(lab, [])
        expected = dict(zip(TABLE_COLUMNS, row[2:]))
        for name in TABLE_COLUMNS:
            fn = COEFFICIENTS[name]
            bad = [(x, y) for x, y in pairs if fn(x, y) != expected[name]]
            ok = bool(pairs) and not bad
            rep.record(ok, f"row ({lab}) {name}: expected {expected[name]}"
                       + (f", got {fn(*bad[0])} at {bad[0][0]}, {bad[0][1]}" if bad else ", no pairs"))
        # the two half-form columns are reported, not counted
        if pairs and all(half_form(x, y) == row[0] and half_form(y, x) == row[1] for x, y in pairs):
            rep.extra.setdefault("half_form_rows_ok", []).append(lab)
    rep.extra["rows"] = len(by_row)
    return rep


def euler_case(x, y):
    """The five-value case list for contractible x, y; None outside it."""
    if not (x.contractible and y.contractible):
        return None
    if x == y:
        return 2
    if is_defined(difference(x, y)) or is_defined(difference(y, x)):
        return 1
    s = interval_sum(x, y)
    if is_defined(s):
        return -1 if s.contractible else -2
    if not intersection_components(x, y):
        return 0
    return None


def euler_case_check(grids=None):
    """Euler form against the case list on every pair of the given grids.

    Also checks (circle, circle) = 0 and (circle, arc) = 0 and that all five
    values occur.
    """
    grids = grids or [uniform_grid(4), arcs_grid(4)]
    rep = Report("euler-cases", "line+circle", [iv for g in grids for iv in g])
    seen = set()
    for g in grids:
        for x, y in itertools.product(g, repeat=2):
            want = euler_case(x, y)
            if want is None:
                if x.full:
                    rep.record(euler_form(x, y) == 0, f"({x},{y}) should be 0")
                continue
            seen.add(want)
            got = euler_form(x, y)
            rep.record(got == want, f"({x},{y}): expected {want}, got {got}")
    for v in (2, 1, 0, -1, -2):
        rep.record(v in seen, f"case value {v} never generated")
    rep.extra["values_seen"] = sorted(seen)
    return rep
