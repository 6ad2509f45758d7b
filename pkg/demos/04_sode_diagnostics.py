"""Second-order equations: induced connections and linearizability.

A force field f^i(x, v) induces a connection on velocity space; its
linearization decides, through curvature and parallelism conditions,
whether coordinates exist in which the equation is linear in velocities
or linear in all variables. A coordinate split decouples the system when
the corresponding connection and Jacobi blocks vanish.
"""

from linconn import (
    decoupling_check, jacobi_endomorphism, linearizability_report, parse,
    sample_points, sode_connection,
)
from linconn.sode import SodeModel


def autonomous(*forces):
    n = len(forces)
    return SodeModel(True, tuple(f"x{i+1}" for i in range(n)),
                     tuple(f"v{i+1}" for i in range(n)),
                     tuple(parse(f) for f in forces))


print("classification ladder:")
for force in ("-x1", "-x1^3", "-v1^3"):
    s = autonomous(force)
    pts = sample_points(sode_connection(s), 100, seed=11)
    report = linearizability_report(s, pts, 1e-9)
    labels = report.labels
    print(f"  f = {force:8s} -> {labels['classification']:35s} "
          f"(flat={labels['flat']}, tension parallel="
          f"{labels['tension_parallel']}, jacobi parallel="
          f"{labels['jacobi_parallel']})")

print("\nJacobi endomorphism:")
for force in ("-x1", "-x1 - v1"):
    phi = jacobi_endomorphism(autonomous(force))
    print(f"  f = {force:8s} -> Phi = {phi[0, 0]}")

print("\ndecoupling at the split {1} | {2}:")
cases = [("-x1", "-x2"), ("-x1", "-x1 - x2"), ("-x2", "-x1")]
for f1, f2 in cases:
    s = autonomous(f1, f2)
    pts = sample_points(sode_connection(s), 60, seed=12)
    report = decoupling_check(s, ((1,), (2,)), pts, 1e-9)
    print(f"  f = ({f1}, {f2}): {report.labels['classification']}")
