"""Completely integrable systems and Hamilton-Jacobi solutions.

A family of first integrals in involution spans a horizontal
distribution on phase space, i.e. a connection whose coefficients solve
a linear system. Integral sections of that connection are closed
one-forms on which the Hamiltonian is constant: Hamilton-Jacobi
solutions. For a constant metric the connection is flat with zero
coefficients and the constant covectors form a separated complete
solution family.
"""

from linconn import (
    HamiltonianModel, OneFormOnM, geodesic_model, hj_verify,
    integrable_connection, integrable_report, parse, sample_points,
)
from linconn.model import BundleModel

# Geodesic Hamiltonian of the constant inverse metric [[2,1],[1,1]].
ham = geodesic_model([[parse("2"), parse("1")], [parse("1"), parse("1")]])
print(f"H = {ham.H}")
ham = HamiltonianModel(bundle=ham.bundle, H=ham.H,
                       first_integrals=(parse("p1"), parse("p2")))
m = integrable_connection(ham)
print("connection coefficients:",
      [[str(e) for e in row] for row in m.gamma])

pts = sample_points(m, 100, seed=3)
report = integrable_report(ham, m, pts, 1e-9)
for sub in report.subreports:
    print(f"  {sub.name}: {'pass' if sub.passed else 'fail'}")

for lam1, lam2 in ((0.3, 0.7), (-1.2, 0.4)):
    alpha = OneFormOnM((parse(str(lam1)), parse(str(lam2))))
    verdict = hj_verify(ham, alpha, pts, 1e-9, connection=m)
    print(f"alpha = {lam1} dx1 + {lam2} dx2: "
          f"{'solution' if verdict.passed else 'not a solution'}")

# One degree of freedom with a potential: the induced coefficient is
# singular on the zero-momentum locus, and the energy shell is a
# solution away from the turning points.
b1 = BundleModel("cotangent", ("x1",), ("p1",))
osc = HamiltonianModel(bundle=b1, H=parse("p1^2/2 + x1^2/2"),
                       first_integrals=(parse("p1^2/2 + x1^2/2"),))
m1 = integrable_connection(osc)
print(f"\noscillator: coefficient {m1.gamma[0][0]} "
      f"(excluded locus {m1.excluded[0]} = 0)")
alpha = OneFormOnM((parse("sqrt(1 - x1^2)"),))
pts1 = sample_points(m1, 80, seed=4, box={"x1": (-0.9, 0.9),
                                          "p1": (0.5, 2.0)})
verdict = hj_verify(osc, alpha, pts1, 1e-9)
print(f"energy-shell covector sqrt(1 - x1^2) dx1: "
      f"{'solution' if verdict.passed else 'not a solution'} "
      f"(closed + level)")
