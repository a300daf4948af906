"""A walk through the interval layer.

Prints the eleven relative positions of two half-open intervals with the
coefficients attached to each, then the Euler form on a few small grids.
"""
from fractions import Fraction

from contqg.intervals import (
    COEFFICIENT_TABLE, TABLE_COLUMNS, UNDEFINED, arc, classify, euler_form, half_form, line,
    table_representatives, uniform_grid,
)


def show_table():
    cols = ("<a|b>", "<b|a>") + TABLE_COLUMNS
    print("row  " + "  ".join(f"{c:>11}" for c in cols))
    for row, (a, b) in sorted(table_representatives(4).items()):
        vals = COEFFICIENT_TABLE[row]
        print(f"{row:>3}  " + "  ".join(f"{'-' if v is UNDEFINED else str(v):>11}" for v in vals) + f"    e.g. {a} vs {b}")


def show_gram(grid):
    print(f"\nEuler form on {' '.join(map(str, grid))}")
    for a in grid:
        print("  " + " ".join(f"{euler_form(a, b):>3}" for b in grid))


if __name__ == "__main__":
    show_table()
    show_gram(uniform_grid(3))
    show_gram([line(0, 2), line(1, 2), line(0, 1)])
    a, b = arc(0, Fraction(1, 2)), arc(Fraction(1, 2), 0)
    print(f"\ncomplementary arcs {a}, {b}: position {classify(a, b).name}, "
          f"<a|b> = {half_form(a, b)}, <b|a> = {half_form(b, a)}, (a,b) = {euler_form(a, b)}")
