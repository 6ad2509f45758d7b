"""Numerical integration: horizontal flows, linearized parallel transport,
the fiber-derivative transport oracle and holonomy probes.

Fixed-step classical RK4 throughout; reproducibility and a clean
convergence order beat adaptivity at this scale. Trajectories that leave
a declared box are truncated with an explicit status, never extrapolated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .expr import Expr, ONE, ZERO, compile_fn, diff, variables
from .model import ConnectionModel, ModelError, PointE

__all__ = [
    "CurveSpec", "FlowResult", "TransportResult", "horizontal_flow",
    "parallel_transport", "transport_oracle", "holonomy_probe", "sode_flow",
]


@dataclass(frozen=True)
class CurveSpec:
    """A base curve for transport: either flow-generated by a base vector
    field, an explicit parameterized curve c(t), or a vertical (fiber-only)
    curve along which transport is trivial."""

    start: PointE
    t_span: float
    step: float = 1e-3
    field: tuple[Expr, ...] | None = None      # base vector field X(x)
    curve: tuple[Expr, ...] | None = None      # parameterized c(t), parameter "t"
    vertical: bool = False

    def __post_init__(self):
        if self.step <= 0.0:
            raise ModelError("step must be positive")
        if not math.isfinite(self.t_span):
            raise ModelError("time span must be finite")
        modes = sum((self.field is not None, self.curve is not None,
                     self.vertical))
        if modes != 1:
            raise ModelError("curve must be exactly one of: flow-generated, "
                             "parameterized, vertical")


@dataclass
class FlowResult:
    """A trajectory in the total space."""

    times: list[float]
    points: list[PointE]
    steps: int
    status: str = "ok"    # ok | truncated:<t> | excluded:<t>

    @property
    def final(self) -> PointE:
        return self.points[-1]


@dataclass
class TransportResult:
    final_fiber: tuple[float, ...]
    trajectory: list[tuple[float, PointE, tuple[float, ...]]]
    steps: int
    status: str = "ok"


def _rk4(rhs: Callable[[np.ndarray], np.ndarray], y0: np.ndarray, T: float,
         step: float, guard: Callable[[np.ndarray, float], str] | None = None):
    """Classical fixed-step RK4. Returns (times, states, status)."""
    n_steps = max(1, int(round(abs(T) / step)))
    h = T / n_steps
    times = [0.0]
    states = [y0.copy()]
    y = y0.copy()
    t = 0.0
    status = "ok"
    for _ in range(n_steps):
        k1 = rhs(y)
        k2 = rhs(y + 0.5 * h * k1)
        k3 = rhs(y + 0.5 * h * k2)
        k4 = rhs(y + h * k3)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        t += h
        if not np.all(np.isfinite(y)):
            raise ModelError(f"non-finite state at t={t:.6g}")
        if guard is not None:
            verdict = guard(y, t)
            if verdict:
                status = verdict
                break
        times.append(t)
        states.append(y.copy())
    return times, states, status


def _compile_many(exprs: Sequence[Expr], names: Sequence[str]):
    return [compile_fn(e, names) for e in exprs]


def _excluded_guard(m: ConnectionModel, box=None, margin: float = 1e-6):
    bundle = m.bundle
    predicates = _compile_many(m.excluded, bundle.coords) if m.excluded else []
    intervals = None
    if box is not None:
        intervals = [box.get(name) for name in bundle.coords]

    def guard(y: np.ndarray, t: float) -> str:
        if predicates and any(abs(p(y)) < margin for p in predicates):
            return f"excluded:{t:.6g}"
        if intervals is not None:
            for value, bounds in zip(y, intervals):
                if bounds is not None and not (bounds[0] <= value <= bounds[1]):
                    return f"truncated:{t:.6g}"
        return ""

    return guard


def _flow_rhs(m: ConnectionModel, X: Sequence[Expr]):
    """Right-hand side of the horizontal flow: xdot = X(x),
    udot^A = -gamma[A][i](x, u) X^i(x)."""
    bundle = m.bundle
    if len(X) != bundle.n:
        raise ModelError(f"base vector field needs {bundle.n} components")
    for comp in X:
        extra = variables(comp) - set(bundle.base_coords)
        if extra:
            raise ModelError(f"base vector field uses non-base coordinate(s) "
                             f"{sorted(extra)}")
    names = bundle.coords
    x_fns = _compile_many(X, names)
    gamma_fns = [[compile_fn(m.gamma[A][i], names) for i in range(bundle.n)]
                 for A in range(bundle.k)]

    def rhs(y: np.ndarray) -> np.ndarray:
        out = np.empty_like(y)
        xdot = [fn(y) for fn in x_fns]
        out[:bundle.n] = xdot
        for A in range(bundle.k):
            out[bundle.n + A] = -sum(gamma_fns[A][i](y) * xdot[i]
                                     for i in range(bundle.n))
        return out

    return rhs


def _point_from_state(m: ConnectionModel, y: np.ndarray) -> PointE:
    n = m.bundle.n
    return PointE(base=tuple(float(v) for v in y[:n]),
                  fiber=tuple(float(v) for v in y[n:n + m.bundle.k]))


def horizontal_flow(m: ConnectionModel, X: Sequence[Expr], p0: PointE,
                    T: float, step: float,
                    box: Mapping[str, tuple[float, float]] | None = None) -> FlowResult:
    """Integrate the horizontal lift of a base vector field. Along the
    resulting curve the fiber point is parallel for the nonlinear
    connection."""
    y0 = np.array(p0.values(m.bundle), dtype=float)
    guard = _excluded_guard(m, box)
    times, states, status = _rk4(_flow_rhs(m, X), y0, T, step, guard)
    return FlowResult(times=times,
                      points=[_point_from_state(m, y) for y in states],
                      steps=len(times) - 1, status=status)


def _transport_coeffs(m: ConnectionModel):
    """Transport coefficient functions and the transported-vector size.

    Vector-like bundles transport k-vectors with the linearized
    coefficients. Affine and jet bundles transport extended (k+1)-vectors;
    the distinguished component has a zero row, so it stays constant.
    """
    from .geometry import linear_coeffs

    names = m.bundle.coords
    if m.bundle.kind in ("affine", "jet"):
        from .affine import affine_linearization

        lin = affine_linearization(m)
        size = m.k + 1
        rows: list[list[list]] = []
        zero = compile_fn(ZERO, names)
        for i in range(m.n):
            matrix = [[zero for _ in range(size)] for _ in range(size)]
            for A in range(m.k):
                matrix[A + 1][0] = compile_fn(lin.coeffs_0[A, i], names)
                for B in range(m.k):
                    matrix[A + 1][B + 1] = compile_fn(lin.coeffs_lin[A, i, B], names)
            rows.append(matrix)
        return size, rows
    lin = linear_coeffs(m)
    size = m.k
    rows = []
    for i in range(m.n):
        matrix = [[compile_fn(lin[A, i, B], names) for B in range(size)]
                  for A in range(size)]
        rows.append(matrix)
    return size, rows


def parallel_transport(m: ConnectionModel, curve: CurveSpec,
                       b0: Sequence[float]) -> TransportResult:
    """Linearized parallel transport along a base curve.

    Along a horizontal curve the transported vector solves
    bdot^A + coeff[A][i][B](x(t), u(t)) xdot^i b^B = 0, integrated jointly
    with the nonlinear horizontal flow. Along vertical curves transport is
    the identity on the fiber.
    """
    b0 = tuple(float(v) for v in b0)
    size, coeff_rows = _transport_coeffs(m)
    if len(b0) != size:
        raise ModelError(f"transported vector needs {size} components, "
                         f"got {len(b0)}")
    if curve.vertical:
        return TransportResult(final_fiber=b0,
                               trajectory=[(0.0, curve.start, b0)],
                               steps=0, status="ok")

    bundle = m.bundle
    n, k = bundle.n, bundle.k

    if curve.field is not None:
        flow_rhs = _flow_rhs(m, curve.field)

        def rhs(y: np.ndarray) -> np.ndarray:
            out = np.empty_like(y)
            state = y[:n + k]
            out[:n + k] = flow_rhs(state)
            xdot = out[:n]
            b = y[n + k:]
            for A in range(size):
                out[n + k + A] = -sum(
                    coeff_rows[i][A][B](state) * xdot[i] * b[B]
                    for i in range(n) for B in range(size))
            return out
    else:
        # Explicit parameterized curve: track the parameter as an extra
        # state so the compiled velocity expressions see it.
        cdot = [diff(c, "t") for c in curve.curve]
        cdot_fns = _compile_many(cdot, ("t",))
        gamma_fns = [[compile_fn(m.gamma[A][i], bundle.coords)
                      for i in range(n)] for A in range(k)]

        def rhs(y: np.ndarray) -> np.ndarray:
            out = np.empty_like(y)
            tau = y[-1]
            state = y[:n + k]
            xdot = [fn((tau,)) for fn in cdot_fns]
            out[:n] = xdot
            for A in range(k):
                out[n + A] = -sum(gamma_fns[A][i](state) * xdot[i]
                                  for i in range(n))
            b = y[n + k:n + k + size]
            for A in range(size):
                out[n + k + A] = -sum(
                    coeff_rows[i][A][B](state) * xdot[i] * b[B]
                    for i in range(n) for B in range(size))
            out[-1] = 1.0
            return out

    y0 = list(curve.start.values(bundle)) + list(b0)
    if curve.curve is not None:
        y0.append(0.0)
    guard = _excluded_guard(m)
    times, states, status = _rk4(rhs, np.array(y0, dtype=float),
                                 curve.t_span, curve.step,
                                 lambda y, t: guard(y[:n + k], t))
    trajectory = [(t, _point_from_state(m, y),
                   tuple(float(v) for v in y[n + k:n + k + size]))
                  for t, y in zip(times, states)]
    return TransportResult(final_fiber=trajectory[-1][2],
                           trajectory=trajectory,
                           steps=len(times) - 1, status=status)


def transport_oracle(m: ConnectionModel, X: Sequence[Expr], p0: PointE,
                     b0: Sequence[float], T: float, step: float,
                     fd_eps: float = 1e-5, central: bool = False) -> tuple[float, ...]:
    """Implementation-independent oracle for parallel transport: the
    derivative of the nonlinear horizontal flow with respect to the fiber
    initial condition, computed by finite differences of two (or three)
    independent flow integrations."""
    b0 = np.array(b0, dtype=float)
    if len(b0) != m.bundle.k:
        raise ModelError(f"fiber vector needs {m.bundle.k} components")
    fiber0 = np.array(p0.fiber, dtype=float)

    def flow_fiber(fiber: np.ndarray) -> np.ndarray:
        start = PointE(base=p0.base, fiber=tuple(fiber))
        result = horizontal_flow(m, X, start, T, step)
        if result.status != "ok":
            raise ModelError(f"oracle flow stopped early: {result.status}")
        return np.array(result.final.fiber, dtype=float)

    plus = flow_fiber(fiber0 + fd_eps * b0)
    if central:
        minus = flow_fiber(fiber0 - fd_eps * b0)
        derivative = (plus - minus) / (2.0 * fd_eps)
    else:
        base_val = flow_fiber(fiber0)
        derivative = (plus - base_val) / fd_eps
    return tuple(float(v) for v in derivative)


def holonomy_probe(m: ConnectionModel, p0: PointE, i: int, j: int,
                   eps: float, step: float | None = None) -> tuple[float, ...]:
    """Transport the fiber point around the coordinate rectangle
    (+eps e_i, +eps e_j, -eps e_i, -eps e_j) with four horizontal flow
    legs and return (u_final - u_initial)/eps^2.

    As eps -> 0 this converges, with first order in eps, to the curvature
    component grid [.][i][j] at p0. The sign convention (leg order i then
    j) is calibrated once against the symbolic curvature in the test
    suite and frozen.
    """
    if m.bundle.n < 2:
        raise ModelError("holonomy probes need at least two base directions")
    if i == j:
        raise ModelError("holonomy probe needs two distinct base directions")
    if step is None:
        step = eps / 50.0
    legs = [(i, eps), (j, eps), (i, -eps), (j, -eps)]
    current = p0
    for direction, span in legs:
        X = [ZERO] * m.bundle.n
        X[direction] = ONE
        result = horizontal_flow(m, X, current, span, step)
        if result.status != "ok":
            raise ModelError(f"holonomy leg stopped early: {result.status}")
        current = result.final
    defect = np.array(current.fiber) - np.array(p0.fiber)
    return tuple(float(v) / eps ** 2 for v in defect)


def sode_flow(s, state0: Sequence[float], T: float, step: float) -> FlowResult:
    """Integrate a second-order equation field: xdot = v, vdot = f(x, v)
    (plus tdot = 1 through the time coordinate in the non-autonomous
    case, where the state starts with t)."""
    names = s.coords
    if len(state0) != len(names):
        raise ModelError(f"state needs {len(names)} components "
                         f"({', '.join(names)})")
    force_fns = _compile_many(s.forces, names)
    n_pos = len(s.base_coords)
    n_vel = len(s.velocity_coords)

    def rhs(y: np.ndarray) -> np.ndarray:
        out = np.empty_like(y)
        if s.autonomous:
            out[:n_pos] = y[n_pos:]
            for idx in range(n_vel):
                out[n_pos + idx] = force_fns[idx](y)
        else:
            out[0] = 1.0
            out[1:n_pos] = y[n_pos:]
            for idx in range(n_vel):
                out[n_pos + idx] = force_fns[idx](y)
        return out

    times, states, status = _rk4(rhs, np.array(state0, dtype=float), T, step)
    n = n_pos

    points = [PointE(base=tuple(float(v) for v in y[:n]),
                     fiber=tuple(float(v) for v in y[n:]))
              for y in states]
    return FlowResult(times=times, points=points, steps=len(times) - 1,
                      status=status)
