"""Quick end-to-end check of the Python bindings."""

import math

import doslab

z1 = doslab.Space.lattice(1)
print(z1, z1.descriptor())

c = z1.check_c(200)
assert c["verdict"] == "pass", c

f2 = doslab.Space.cayley_f2()
c = f2.check_c(12)
assert c["verdict"] == "fail" and abs(c["tail_ratio"] - 3.0) < 0.01, c

h = doslab.Hamiltonian.adjacency()
g = doslab.Function.gaussian(0.0, 1.0)
rows = doslab.dos(z1, h, g, [50.0, 100.0, 200.0])
assert [r[1] for r in rows] == [101, 201, 401]
print("dos", rows)

check = doslab.theorem_check(z1, h, doslab.Function.bump(0.0, 1.0), 600.0, margin=50.0, weight="lattice")
print("gap", check["relative_gap"])
assert check["relative_gap"] < 0.1

energies = doslab.ids(z1, h, 200.0)
frac = sum(e <= 0.5 for e in energies) / len(energies)
assert abs(frac - doslab.arcsine_ids(0.5)) < 0.01

est = doslab.dixmier_estimate([1.0 / (k + 1) for k in range(1 << 14)])
print("dixmier slope", est)

cx = doslab.counterexample(8)
assert len(cx) > 0

assert abs(doslab.vp_volume(2, 2.0) - math.pi) < 1e-12

rep = doslab.folner_check(2, "cube", 6)
assert rep["nested"]

perc = doslab.chemical_growth(2, 60, 0.6, 1, 10)
print("chemical growth rows", len(perc["rows"]))

try:
    doslab.Function.gaussian(0.0, -1.0)
except ValueError as e:
    print("rejected:", e)
else:
    raise AssertionError("negative sigma accepted")

print("ok", doslab.__version__)
