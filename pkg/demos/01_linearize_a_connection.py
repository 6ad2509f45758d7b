"""Linearize a nonlinear connection and inspect the induced tensors.

A connection on a rank-2 bundle over a 2-dimensional base is declared by
four coefficient expressions. Differentiating them along the fiber gives
the coefficients of a linear connection on the pullback bundle; from
those come the tension (does the connection scale correctly?), the
curvature of the nonlinear connection, and the two curvature blocks of
the linear one.
"""

from pathlib import Path

from linconn import (
    bianchi_check, check_homogeneous, curvature, hh_curvature, linear_coeffs,
    load_model, sample_points, tension, tension_identities_check, vh_curvature,
)

model_file = Path(__file__).resolve().parents[1] / "models" / "m4.lc"
doc = load_model(model_file.read_text())
m = doc.connection

print("coefficients:")
for A, row in enumerate(m.gamma, start=1):
    for i, e in enumerate(row, start=1):
        print(f"  Gamma[{A},{i}] = {e}")

print("\nlinearized coefficients (fiber derivative):")
lin = linear_coeffs(m)
for idx, e in lin.items():
    if str(e) != "0":
        print(f"  {lin.label(idx)} = {e}")

print("\ntension (zero iff homogeneous):")
t = tension(m)
for idx, e in t.items():
    print(f"  {t.label(idx)} = {e}")

print("\nnonlinear curvature:")
R = curvature(m)
for A in range(m.k):
    print(f"  R[{A + 1},1,2] = {R[A, 0, 1]}")

theta = vh_curvature(m)
rie = hh_curvature(m)
print(f"\nVH block entries: {sum(1 for _, e in theta.items() if str(e) != '0')}"
      f" nonzero; HH block entries: "
      f"{sum(1 for _, e in rie.items() if str(e) != '0')} nonzero")

pts = sample_points(m, 100, seed=7)
for report in (check_homogeneous(m, pts, 1e-8),
               bianchi_check(m, pts, 1e-8),
               tension_identities_check(m, pts, 1e-8)):
    flag = "pass" if report.passed else "fail"
    print(f"{report.name}: {flag} (max residual {report.max_residual:.2e})")
