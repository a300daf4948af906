"""The quantized algebra: normal forms, Hopf axioms, the pairing and the R-matrix."""
from contqg import qgroup
from contqg.freealg import parse_element, render, normal_form
from contqg.intervals import line, uniform_grid
from contqg.qgroup import E, F, K, GridHopf, hopf_pairing

U2 = uniform_grid(2)
A, B = line(0, 1), line(1, 2)
rs = qgroup.system_for(U2)

x = parse_element("(* (E (1,2]) (E (0,1]))")
print(render(x), "->", render(normal_form(x, rs)))
print("E F - F E on (0,1] ->", render(normal_form(E(A) * F(A) - F(A) * E(A), rs)))

h = GridHopf(U2)
print("\ncoproduct of E(0,2]:", render(h.delta(E(line(0, 2)))))
print("antipode of E(0,1]:", render(h.antipode(E(A))))
print(qgroup.hopf_axiom_sweep(U2).summary())

print("\n(E_a, F_a) =", hopf_pairing(E(A), F(A), U2))
print("(K_a, K_b) =", hopf_pairing(K(A), K(B), U2))
print(qgroup.pairing_sweep(U2, degree_bound=2).summary())
print("with the Cartan pairing halved:", qgroup.cartan_normalization_probe(U2, 0.5).summary())

print()
print(qgroup.classical_limit_check(U2, order=2).summary())
print(qgroup.rmatrix_ybe_check(2, 2).summary())
