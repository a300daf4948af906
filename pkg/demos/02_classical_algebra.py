"""Brackets, the invariant form and Cartan data for interval Lie algebras."""
from fractions import Fraction

from contqg import lie
from contqg.intervals import FULL_CIRCLE, arc, arcs_grid, line, uniform_grid
from contqg.lie import LieElement, bracket, cartan_matrix, cobracket, quiver_dot

A, B = line(0, 1), line(1, 2)

x = bracket(LieElement.xp(A), LieElement.xp(B))
print("[x+(0,1], x+(1,2]] =", x)
print("[x+(0,1], x-(0,1]] =", bracket(LieElement.xp(A), LieElement.xm(A)))
print("cobracket of x+(0,2] on uniform:2:", lie.render_terms(cobracket(LieElement.xp(line(0, 2)), uniform_grid(2))))

print()
for rep in (lie.jacobi_check(uniform_grid(3)), lie.invariance_check(uniform_grid(2)),
            lie.co_jacobi_check(uniform_grid(3)), lie.cocycle_check(uniform_grid(2))):
    print(rep.summary())

print("\nA3 from three adjacent intervals")
print(quiver_dot(cartan_matrix([line(0, 1), line(1, 2), line(2, 3)]), name="A3"))
print("half arc plus the whole circle")
print(quiver_dot(cartan_matrix([arc(0, Fraction(1, 2)), FULL_CIRCLE]), name="loop"))

print("Jacobi on arcs:2, where the complementary pair sits")
rep = lie.jacobi_check(arcs_grid(2))
print(rep.summary())
if rep.first_failure:
    print("  first failure:", rep.first_failure)
