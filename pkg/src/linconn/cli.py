"""Command-line surface.

Verbs: tensor, check, transport, sode, hj, bianchi, info. Output is a
human-readable table or, with --json, a deterministic JSON document:
fixed key order, floats printed with 17 significant digits, no
timestamps. Exit codes: 0 success / all checks passed, 1 a check failed,
2 usage or validation errors.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from typing import Sequence

import numpy as np

from . import __version__
from .expr import EvalError, Expr, ParseError, ZERO, evaluate, parse, to_string
from .model import (
    ConnectionModel, ModelDocument, ModelError, PointE, SectionModel,
    load_model, sample_points, validate_section,
)
from . import affine as _affine
from . import cotangent as _cotangent
from . import geometry as _geometry
from . import sode as _sode
from . import transport as _transport

SCHEMA_VERSION = 1

# Operation-to-verb coverage map; the test suite checks that every public
# operation of the computational modules appears here.
COVERAGE = {
    "geometry.h_apply": "tensor",
    "geometry.linear_coeffs": "tensor",
    "geometry.covariant_derivative": "check",
    "geometry.tension": "tensor",
    "geometry.curvature": "tensor",
    "geometry.vh_curvature": "tensor",
    "geometry.hh_curvature": "tensor",
    "geometry.hh_curvature_commutator": "tensor",
    "geometry.check_homogeneous": "check",
    "geometry.check_basic": "check",
    "geometry.flatness_check": "check",
    "geometry.axioms_check": "check",
    "geometry.bianchi_check": "bianchi",
    "geometry.tension_identities_check": "bianchi",
    "geometry.integral_section_residual": "tensor",
    "geometry.pullback_connection_coeffs": "tensor",
    "affine.homogenize": "tensor",
    "affine.affine_linearization": "tensor",
    "affine.affine_covariant_derivative": "check",
    "affine.check_affine_structure": "check",
    "sode.sode_connection": "sode",
    "sode.jacobi_endomorphism": "sode",
    "sode.nonautonomous_connection": "sode",
    "sode.homogeneous_sode": "sode",
    "sode.linearizability_report": "sode",
    "sode.decoupling_check": "sode",
    "cotangent.torsion_form": "tensor",
    "cotangent.dh": "tensor",
    "cotangent.dv": "tensor",
    "cotangent.hamiltonian_field": "tensor",
    "cotangent.poisson": "check",
    "cotangent.canonical_poisson": "check",
    "cotangent.integrable_connection": "hj",
    "cotangent.integrable_report": "hj",
    "cotangent.hj_verify": "hj",
    "cotangent.geodesic_model": "hj",
    "cotangent.cyclic_curvature_check": "check",
    "transport.horizontal_flow": "transport",
    "transport.parallel_transport": "transport",
    "transport.transport_oracle": "transport",
    "transport.holonomy_probe": "transport",
    "transport.sode_flow": "sode",
}


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# Deterministic JSON
# ---------------------------------------------------------------------------

def _json_value(value) -> str:
    if value is None:
        return "null"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return format(value, ".17g")
    if isinstance(value, str):
        return json.dumps(value)
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_json_value(v) for v in value) + "]"
    if isinstance(value, dict):
        inner = ", ".join(f"{json.dumps(str(k))}: {_json_value(v)}"
                          for k, v in value.items())
        return "{" + inner + "}"
    raise TypeError(f"cannot serialize {type(value).__name__}")


def emit_json(doc: dict) -> bytes:
    """Serialize a report document: stable key order as constructed,
    floats with 17 significant digits."""
    return (_json_value(doc) + "\n").encode("utf-8")


def _document(args, model_text: str, results: list, status: str) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "tool": {"name": "linconn", "version": __version__},
        "model_digest": hashlib.sha256(model_text.encode("utf-8")).hexdigest(),
        "command": list(args._argv),
        "status": status,
        "results": results,
    }


# ---------------------------------------------------------------------------
# Small parsers for option payloads
# ---------------------------------------------------------------------------

def _parse_point(doc: ModelDocument, text: str | None,
                 m: ConnectionModel) -> PointE:
    bundle = m.bundle
    values: dict[str, float] = {}
    if text:
        for item in text.split(","):
            item = item.strip()
            if not item:
                continue
            if "=" not in item:
                raise UsageError(f"bad point component {item!r}; use name=value")
            name, _, raw = item.partition("=")
            name = name.strip()
            if name not in bundle.coords:
                raise UsageError(f"unknown coordinate {name!r}")
            try:
                values[name] = float(raw)
            except ValueError:
                raise UsageError(f"bad value for {name!r}: {raw!r}") from None
    fiber_default = 0.0
    if m.excluded:
        fiber_default = 1.0
    missing = [c for c in bundle.coords if c not in values]
    if missing:
        print(f"warning: coordinates {missing} not specified; base defaults "
              f"to 0, fiber to {fiber_default:g}", file=sys.stderr)
    base = tuple(values.get(c, 0.0) for c in bundle.base_coords)
    fiber = tuple(values.get(c, fiber_default) for c in bundle.fiber_coords)
    return PointE(base=base, fiber=fiber)


def _parse_exprs(text: str, what: str) -> tuple[Expr, ...]:
    out = []
    for chunk in text.split(","):
        chunk = chunk.strip()
        if not chunk:
            raise UsageError(f"empty component in {what}")
        try:
            out.append(parse(chunk))
        except ParseError as exc:
            raise UsageError(f"cannot parse {what}: {exc}") from exc
    return tuple(out)


def _parse_split(text: str) -> tuple[tuple[int, ...], tuple[int, ...]]:
    if "|" not in text:
        raise UsageError("split must look like \"1 2|3\" or \"1|2\"")
    left, right = text.split("|", 1)

    def group(chunk):
        items = chunk.replace(",", " ").split()
        try:
            return tuple(int(v) for v in items)
        except ValueError:
            raise UsageError(f"bad split group {chunk!r}") from None

    return group(left), group(right)


def _require_connection(doc: ModelDocument) -> ConnectionModel:
    if doc.connection is None:
        raise UsageError("this model declares no connection (a Hamiltonian "
                         "section without first integrals); the requested "
                         "command needs one")
    return doc.connection


def _load(path: str) -> tuple[ModelDocument, str]:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            text = handle.read()
    except OSError as exc:
        raise UsageError(f"cannot read model file: {exc}") from exc
    return load_model(text), text


def _samples(m: ConnectionModel, args) -> list[PointE]:
    return sample_points(m, args.samples, seed=args.seed)


# ---------------------------------------------------------------------------
# Tensor rendering
# ---------------------------------------------------------------------------

def _tensor_result(field, m: ConnectionModel, at: PointE | None) -> dict:
    entries = []
    env = at.env(m.bundle) if at is not None else None
    for idx, e in field.items():
        row = {"index": [i + 1 for i in idx], "expr": to_string(e)}
        if env is not None:
            row["value"] = 0.0 if e == ZERO else evaluate(e, env)
        entries.append(row)
    return {
        "type": "tensor",
        "name": field.name,
        "signature": list(field.signature),
        "frame": {"horizontal": "H_i", "vertical": "V_A"},
        "entries": entries,
    }


def _components_result(name: str, labels: Sequence[str], exprs: Sequence[Expr],
                       m: ConnectionModel, at: PointE | None) -> dict:
    env = at.env(m.bundle) if at is not None else None
    entries = []
    for label, e in zip(labels, exprs):
        row = {"component": label, "expr": to_string(e)}
        if env is not None:
            row["value"] = 0.0 if e == ZERO else evaluate(e, env)
        entries.append(row)
    return {"type": "components", "name": name,
            "frame": {"horizontal": "H_i", "vertical": "V_A"},
            "entries": entries}


def _print_tensor(result: dict):
    print(f"{result['name']}  (slots: {', '.join(result.get('signature', []))})")
    for row in result["entries"]:
        if "index" in row:
            label = "[" + ",".join(str(i) for i in row["index"]) + "]"
        else:
            label = row["component"]
        line = f"  {label:<18} {row['expr']}"
        if "value" in row:
            line += f"  = {row['value']:.12g}"
        print(line)


def _print_report(report: dict, indent: str = ""):
    status = "PASS" if report["passed"] else "FAIL"
    print(f"{indent}{report['name']}: {status}  max_residual={report['max_residual']:.3e} "
          f"tol={report['tolerance']:.1e} samples={report['samples']}")
    for key, value in report.get("labels", {}).items():
        print(f"{indent}  {key} = {value}")
    for sub in report.get("subreports", []):
        _print_report(sub, indent + "  ")


# ---------------------------------------------------------------------------
# Verbs
# ---------------------------------------------------------------------------

def _cmd_info(args) -> tuple[list, str]:
    doc, _ = _load(args.model)
    bundle = doc.bundle
    info = {
        "type": "info",
        "kind": bundle.kind,
        "base": list(bundle.base_coords),
        "fiber": list(bundle.fiber_coords),
        "n": bundle.n,
        "k": bundle.k,
        "sections": {
            "connection": doc.connection is not None,
            "sode": doc.sode is not None,
            "hamiltonian": doc.hamiltonian is not None,
        },
    }
    if doc.connection is not None:
        info["gamma"] = [[to_string(e) for e in row]
                         for row in doc.connection.gamma]
        info["excluded"] = [to_string(e) for e in doc.connection.excluded]
    if not args.json:
        print(f"kind={bundle.kind} n={bundle.n} k={bundle.k}")
        print("base:", ", ".join(bundle.base_coords))
        print("fiber:", ", ".join(bundle.fiber_coords))
        if doc.connection is not None:
            for A, row in enumerate(doc.connection.gamma, start=1):
                for i, e in enumerate(row, start=1):
                    print(f"Gamma[{A},{i}] = {to_string(e)}")
            if doc.connection.excluded:
                print("excluded zero locus:",
                      "; ".join(to_string(e) for e in doc.connection.excluded))
    return [info], "ok"


_TENSOR_BUILDERS = {
    "linear-coeffs": _geometry.linear_coeffs,
    "tension": _geometry.tension,
    "curvature": _geometry.curvature,
    "vh-curvature": _geometry.vh_curvature,
    "hh-curvature": _geometry.hh_curvature,
    "hh-curvature-commutator": _geometry.hh_curvature_commutator,
    "torsion-form": _cotangent.torsion_form,
}


def _cmd_tensor(args) -> tuple[list, str]:
    doc, _ = _load(args.model)
    m = _require_connection(doc)
    at = _parse_point(doc, args.at, m) if args.at is not None else None
    name = args.name
    if name == "gamma":
        grid = np.empty((m.k, m.n), dtype=object)
        for A in range(m.k):
            for i in range(m.n):
                grid[A, i] = m.gamma[A][i]
        field = _geometry.TensorField(
            name="gamma", signature=(_geometry.FIBER_VEC, _geometry.BASE_COV),
            components=grid)
        result = _tensor_result(field, m, at)
    elif name in _TENSOR_BUILDERS:
        result = _tensor_result(_TENSOR_BUILDERS[name](m), m, at)
    elif name == "jacobi":
        if doc.sode is None:
            raise UsageError("--name jacobi needs a model with a [sode] section")
        result = _tensor_result(_sode.jacobi_endomorphism(doc.sode), m, at)
    elif name == "homogenized-gamma":
        hom = _affine.homogenize(m)
        grid = np.empty((hom.model.k, hom.model.n), dtype=object)
        for A in range(hom.model.k):
            for i in range(hom.model.n):
                grid[A, i] = hom.model.gamma[A][i]
        field = _geometry.TensorField(
            name="homogenized_gamma",
            signature=(_geometry.FIBER_VEC, _geometry.BASE_COV),
            components=grid)
        result = _tensor_result(field, hom.model, None)
    elif name == "affine-coeffs-0":
        result = _tensor_result(_affine.affine_linearization(m).coeffs_0, m, at)
    elif name == "affine-coeffs-lin":
        result = _tensor_result(_affine.affine_linearization(m).coeffs_lin, m, at)
    elif name == "integral-residual":
        if not args.section:
            raise UsageError("--name integral-residual needs --section")
        section = SectionModel(_parse_exprs(args.section, "--section"))
        result = _tensor_result(_geometry.integral_section_residual(m, section), m, at)
    elif name == "pullback-coeffs":
        if not args.section:
            raise UsageError("--name pullback-coeffs needs --section")
        section = SectionModel(_parse_exprs(args.section, "--section"))
        result = _tensor_result(_geometry.pullback_connection_coeffs(m, section), m, at)
    elif name in ("dh", "dv", "hamiltonian-field"):
        if not args.function:
            raise UsageError(f"--name {name} needs --function")
        f = _parse_exprs(args.function, "--function")[0]
        if name == "dh":
            comps = _cotangent.dh(m, f)
            labels = [f"dx^{i+1}" for i in range(m.n)]
            result = _components_result("horizontal_differential", labels, comps, m, at)
        elif name == "dv":
            comps = _cotangent.dv(m, f)
            labels = [f"d/dx^{i+1}" for i in range(m.n)]
            result = _components_result("vertical_differential", labels, comps, m, at)
        else:
            U = _cotangent.hamiltonian_field(m, f)
            labels = [f"H_{i+1}" for i in range(m.n)] + \
                     [f"V^{A+1}" for A in range(m.k)]
            result = _components_result("hamiltonian_field", labels,
                                        U.horizontal + U.vertical, m, at)
    else:
        raise UsageError(f"unknown tensor name {args.name!r}")
    if not args.json:
        _print_tensor(result)
    return [result], "ok"


def _cotangent_suite(doc: ModelDocument, m: ConnectionModel, args) -> list:
    reports = []
    pts = _samples(m, args)
    sigma = _cotangent.torsion_form(m)
    comps = {sigma.label(idx): e for idx, e in sigma.items() if e != ZERO}
    reports.append(_geometry.residual_check("symmetric", m, comps, pts, args.tol))
    symmetric = reports[-1].passed
    if symmetric:
        reports.append(_cotangent.cyclic_curvature_check(m, pts, args.tol))
        # Poisson bracket through the split against the canonical bracket,
        # and the horizontal/vertical decomposition of the differential.
        rng = np.random.default_rng(args.seed)
        from .expr import random_polynomial, simplify

        comps_poisson = {}
        comps_decomp = {}
        for trial in range(4):
            f = random_polynomial(m.bundle.coords, rng)
            g = random_polynomial(m.bundle.coords, rng)
            bracket = _cotangent.poisson(m, f, g)
            canonical = _cotangent.canonical_poisson(m.bundle, f, g)
            residual = simplify(bracket - canonical)
            if residual != ZERO:
                comps_poisson[f"poisson_vs_canonical[{trial}]"] = residual
            U = _cotangent.hamiltonian_field(m, g)
            pairing = ZERO
            for i in range(m.n):
                pairing = pairing + _cotangent.dh(m, f)[i] * U.horizontal[i]
            for A in range(m.k):
                pairing = pairing + _cotangent.dv(m, f)[A] * U.vertical[A]
            direct = U.apply(m, f)
            residual = simplify(pairing - direct)
            if residual != ZERO:
                comps_decomp[f"differential_decomposition[{trial}]"] = residual
        reports.append(_geometry.residual_check(
            "poisson_vs_canonical", m, comps_poisson, pts, args.tol))
        reports.append(_geometry.residual_check(
            "differential_decomposition", m, comps_decomp, pts, args.tol))
    if doc.hamiltonian is not None and doc.hamiltonian.first_integrals:
        reports.append(_cotangent.integrable_report(doc.hamiltonian, m, pts,
                                                    args.tol))
    return reports


def _cmd_check(args) -> tuple[list, str]:
    doc, _ = _load(args.model)
    m = _require_connection(doc)
    pts = _samples(m, args)
    kind = m.bundle.kind
    vector_like = kind in ("vector", "tangent", "cotangent")
    reports: list = []
    suites = [args.suite]
    if args.suite == "all":
        suites = ["homogeneous", "flat", "axioms", "bianchi",
                  "tension-identities"]
        if kind in ("affine", "jet"):
            suites = ["affine"]
        if kind == "cotangent":
            suites.append("cotangent")
        if doc.sode is not None and doc.sode.autonomous:
            suites.append("sode")
        if args.section:
            suites.insert(0, "basic")

    for suite in suites:
        if suite == "homogeneous":
            target = m if vector_like else None
            if target is None:
                hom = _affine.homogenize(m)
                box = {hom.model.bundle.fiber_coords[0]: (0.5, 2.0)}
                zpts = sample_points(hom.model, args.samples, box=box,
                                     seed=args.seed)
                reports.append(_geometry.check_homogeneous(hom.model, zpts,
                                                           args.tol))
            else:
                reports.append(_geometry.check_homogeneous(m, pts, args.tol))
        elif suite == "basic":
            if not args.section:
                raise UsageError("--suite basic needs --section")
            section = SectionModel(_parse_exprs(args.section, "--section"))
            validate_section(m, section)
            reports.append(_geometry.check_basic(m, section, pts, args.tol))
        elif suite == "flat":
            if not vector_like:
                raise UsageError("--suite flat needs a vector-like model")
            reports.append(_geometry.flatness_check(m, pts, args.tol))
        elif suite == "axioms":
            if not vector_like:
                raise UsageError("--suite axioms needs a vector-like model")
            reports.append(_geometry.axioms_check(m, pts, args.tol,
                                                  seed=args.seed))
        elif suite == "bianchi":
            if not vector_like:
                raise UsageError("--suite bianchi needs a vector-like model")
            reports.append(_geometry.bianchi_check(m, pts, args.tol))
        elif suite == "tension-identities":
            if not vector_like:
                raise UsageError("--suite tension-identities needs a "
                                 "vector-like model")
            reports.append(_geometry.tension_identities_check(m, pts, args.tol))
        elif suite == "affine":
            if kind not in ("affine", "jet"):
                raise UsageError("--suite affine needs an affine or jet model")
            reports.append(_affine.check_affine_structure(m, pts, args.tol,
                                                          seed=args.seed))
        elif suite == "cotangent":
            if kind != "cotangent":
                raise UsageError("--suite cotangent needs a cotangent model")
            reports.extend(_cotangent_suite(doc, m, args))
        elif suite == "sode":
            if doc.sode is None or not doc.sode.autonomous:
                raise UsageError("--suite sode needs an autonomous [sode] model")
            reports.append(_sode.linearizability_report(doc.sode, pts, args.tol))
        else:
            raise UsageError(f"unknown suite {suite!r}")

    results = [{"type": "check", **report.to_dict()} for report in reports]
    status = "pass" if all(r.passed for r in reports) else "fail"
    if not args.json:
        for report in results:
            _print_report(report)
    return results, status


def _cmd_bianchi(args) -> tuple[list, str]:
    doc, _ = _load(args.model)
    m = _require_connection(doc)
    pts = _samples(m, args)
    reports = [_geometry.bianchi_check(m, pts, args.tol),
               _geometry.tension_identities_check(m, pts, args.tol)]
    results = [{"type": "check", **r.to_dict()} for r in reports]
    if not args.json:
        for report in results:
            _print_report(report)
    return results, "pass" if all(r.passed for r in reports) else "fail"


def _cmd_transport(args) -> tuple[list, str]:
    doc, _ = _load(args.model)
    m = _require_connection(doc)
    p0 = _parse_point(doc, getattr(args, "from"), m)
    results: list = []
    if args.holonomy:
        i, j = (int(v) for v in args.holonomy.split(","))
        defect = _transport.holonomy_probe(m, p0, i - 1, j - 1, args.eps)
        R = _geometry.curvature(m)
        env = p0.env(m.bundle)
        symbolic = [0.0 if R[A, i - 1, j - 1] == ZERO
                    else evaluate(R[A, i - 1, j - 1], env) for A in range(m.k)]
        results.append({
            "type": "holonomy",
            "directions": [i, j],
            "eps": args.eps,
            "defect_over_eps2": list(defect),
            "symbolic_curvature": symbolic,
        })
        if not args.json:
            print(f"holonomy defect/eps^2 around ({i},{j}) at eps={args.eps:g}:")
            for A in range(m.k):
                print(f"  component {A + 1}: probe={defect[A]:.10g} "
                      f"symbolic={symbolic[A]:.10g}")
        return results, "ok"

    if not args.field:
        raise UsageError("transport needs --field (or --holonomy)")
    X = _parse_exprs(args.field, "--field")
    size = m.k + 1 if m.bundle.kind in ("affine", "jet") else m.k
    if args.fiber:
        b0 = tuple(float(v) for v in args.fiber.split(","))
    else:
        b0 = tuple(1.0 if idx == 0 else 0.0 for idx in range(size))
    spec = _transport.CurveSpec(start=p0, t_span=args.time, step=args.step,
                                field=X)
    flow = _transport.horizontal_flow(m, X, p0, args.time, args.step)
    result = _transport.parallel_transport(m, spec, b0)
    payload = {
        "type": "transport",
        "from": {"base": list(p0.base), "fiber": list(p0.fiber)},
        "time": args.time,
        "step": args.step,
        "flow_final": {"base": list(flow.final.base),
                       "fiber": list(flow.final.fiber)},
        "flow_status": flow.status,
        "transported": list(result.final_fiber),
        "status": result.status,
        "steps": result.steps,
    }
    if args.oracle:
        if m.bundle.kind in ("affine", "jet"):
            raise UsageError("--oracle applies to vector-like models")
        oracle = _transport.transport_oracle(m, X, p0, b0, args.time,
                                             args.step, fd_eps=args.fd_eps,
                                             central=args.central)
        gaps = [abs(a - b) / max(1.0, abs(b))
                for a, b in zip(result.final_fiber, oracle)]
        payload["oracle"] = list(oracle)
        payload["oracle_relative_gap"] = max(gaps)
    results.append(payload)
    if not args.json:
        print(f"flow final: {flow.final.base} {flow.final.fiber} [{flow.status}]")
        print(f"transported vector: {result.final_fiber}")
        if args.oracle:
            print(f"oracle: {tuple(payload['oracle'])} "
                  f"relative gap {payload['oracle_relative_gap']:.3e}")
    return results, "ok"


def _cmd_sode(args) -> tuple[list, str]:
    doc, _ = _load(args.model)
    if doc.sode is None:
        raise UsageError("this model has no [sode] section")
    s = doc.sode
    m = _require_connection(doc)
    results: list = []
    status = "ok"
    did_something = False
    if args.classify:
        did_something = True
        if not s.autonomous:
            raise UsageError("--classify applies to autonomous models")
        pts = _samples(m, args)
        report = _sode.linearizability_report(s, pts, args.tol)
        results.append({"type": "classification", **report.to_dict()})
        if not args.json:
            _print_report(results[-1])
    if args.split:
        did_something = True
        split = _parse_split(args.split)
        pts = _samples(m, args)
        report = _sode.decoupling_check(s, split, pts, args.tol)
        results.append({"type": "classification", **report.to_dict()})
        if not args.json:
            _print_report(results[-1])
    if args.jacobi:
        did_something = True
        at = _parse_point(doc, args.at, m) if args.at is not None else None
        results.append(_tensor_result(_sode.jacobi_endomorphism(s), m, at))
        if not args.json:
            _print_tensor(results[-1])
    if args.homogenize:
        did_something = True
        if s.autonomous:
            raise UsageError("--homogenize applies to non-autonomous models")
        hom = _sode.homogeneous_sode(s)
        results.append({
            "type": "homogeneous_sode",
            "base": list(hom.base_coords),
            "velocities": list(hom.velocity_coords),
            "forces": [to_string(f) for f in hom.forces],
        })
        if not args.json:
            print("homogeneous extension forces:")
            for v, f in zip(hom.velocity_coords, hom.forces):
                print(f"  {v}: {to_string(f)}")
    if args.flow:
        did_something = True
        state0 = tuple(float(v) for v in args.flow.split(","))
        flow = _transport.sode_flow(s, state0, args.time, args.step)
        final = flow.points[-1]
        results.append({
            "type": "flow",
            "state0": list(state0),
            "time": args.time,
            "step": args.step,
            "final": list(final.base) + list(final.fiber),
            "status": flow.status,
        })
        if not args.json:
            print(f"flow final state: {results[-1]['final']}")
    if not did_something:
        raise UsageError("sode verb needs at least one of --classify, "
                         "--split, --jacobi, --homogenize, --flow")
    return results, status


def _cmd_hj(args) -> tuple[list, str]:
    if args.metric:
        try:
            rows = json.loads(args.metric)
        except json.JSONDecodeError as exc:
            raise UsageError(f"bad --metric payload: {exc}") from exc
        g_inv = [[parse(str(v)) for v in row] for row in rows]
        ham = _cotangent.geodesic_model(g_inv)
        if args.integrals:
            integrals = _parse_exprs(args.integrals, "--integrals")
            ham = _cotangent.HamiltonianModel(bundle=ham.bundle, H=ham.H,
                                              first_integrals=integrals)
        doc = ModelDocument(bundle=ham.bundle, hamiltonian=ham,
                            source=f"metric:{args.metric}")
        if ham.first_integrals is not None:
            doc.connection = _cotangent.integrable_connection(ham)
        model_text = doc.source
    else:
        if not args.model:
            raise UsageError("hj needs a model file or --metric")
        doc, model_text = _load(args.model)
        if doc.hamiltonian is None:
            raise UsageError("hj needs a model with a [hamiltonian] section "
                             "(or --metric)")
        ham = doc.hamiltonian
    args._model_text = model_text

    results: list = []
    reports = []
    sampler = doc.connection if doc.connection is not None else \
        ConnectionModel(ham.bundle,
                        [[ZERO] * ham.bundle.n] * ham.bundle.k)
    pts = sample_points(sampler, args.samples, seed=args.seed)
    if ham.first_integrals is not None and doc.connection is not None:
        reports.append(_cotangent.integrable_report(ham, doc.connection, pts,
                                                    args.tol))
    if args.alpha:
        alpha = _cotangent.OneFormOnM(_parse_exprs(args.alpha, "--alpha"))
        reports.append(_cotangent.hj_verify(ham, alpha, pts, args.tol,
                                            connection=doc.connection))
    if not reports:
        raise UsageError("hj needs --alpha and/or a first-integral family")
    results.extend({"type": "check", **r.to_dict()} for r in reports)
    if not args.json:
        for report in results:
            _print_report(report)
    return results, "pass" if all(r.passed for r in reports) else "fail"


# ---------------------------------------------------------------------------
# Argument parsing and dispatch
# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="linconn",
        description="Linearize nonlinear connections, evaluate their "
                    "tensors, run diagnostic checks and transports.")
    parser.add_argument("--version", action="version",
                        version=f"linconn {__version__}")
    sub = parser.add_subparsers(dest="verb", required=True)

    def common(p, model=True):
        if model:
            p.add_argument("model", help="model file path")
        p.add_argument("--json", action="store_true",
                       help="emit a deterministic JSON document")
        p.add_argument("--samples", type=int, default=100)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--tol", type=float, default=1e-8)

    p = sub.add_parser("info", help="describe a model file")
    common(p)

    p = sub.add_parser("tensor", help="evaluate a named tensor")
    common(p)
    p.add_argument("--name", required=True)
    p.add_argument("--at", help="point, e.g. \"x1=0,u1=1\"")
    p.add_argument("--section", help="comma-separated section components")
    p.add_argument("--function", help="scalar function on the total space")

    p = sub.add_parser("check", help="run a diagnostic check suite")
    common(p)
    p.add_argument("--suite", default="all",
                   choices=["all", "homogeneous", "basic", "flat", "axioms",
                            "bianchi", "tension-identities", "affine",
                            "cotangent", "sode"])
    p.add_argument("--section", help="section for --suite basic")

    p = sub.add_parser("bianchi", help="curvature and tension identities")
    common(p)

    p = sub.add_parser("transport", help="flows, transport and holonomy")
    common(p)
    p.add_argument("--field", help="base vector field components")
    p.add_argument("--from", dest="from", default=None,
                   help="start point, e.g. \"x1=0,u1=1\"")
    p.add_argument("--fiber", help="transported vector components")
    p.add_argument("--time", type=float, default=1.0)
    p.add_argument("--step", type=float, default=1e-3)
    p.add_argument("--oracle", action="store_true",
                   help="compare against the fiber-derivative oracle")
    p.add_argument("--fd-eps", type=float, default=1e-5)
    p.add_argument("--central", action="store_true",
                   help="central differences in the oracle")
    p.add_argument("--holonomy", help="two base directions, e.g. \"1,2\"")
    p.add_argument("--eps", type=float, default=1e-2)

    p = sub.add_parser("sode", help="second-order equation diagnostics")
    common(p)
    p.add_argument("--classify", action="store_true")
    p.add_argument("--split", help="index split, e.g. \"1|2\"")
    p.add_argument("--jacobi", action="store_true")
    p.add_argument("--at")
    p.add_argument("--homogenize", action="store_true")
    p.add_argument("--flow", help="initial state, comma separated")
    p.add_argument("--time", type=float, default=1.0)
    p.add_argument("--step", type=float, default=1e-3)

    p = sub.add_parser("hj", help="Hamilton-Jacobi verification")
    p.add_argument("model", nargs="?", default=None)
    p.add_argument("--json", action="store_true")
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--alpha", help="candidate 1-form components")
    p.add_argument("--metric", help="inverse metric as a JSON matrix")
    p.add_argument("--integrals", help="first integrals for --metric")
    return parser


_HANDLERS = {
    "info": _cmd_info,
    "tensor": _cmd_tensor,
    "check": _cmd_check,
    "bianchi": _cmd_bianchi,
    "transport": _cmd_transport,
    "sode": _cmd_sode,
    "hj": _cmd_hj,
}


def run(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        code = exc.code if isinstance(exc.code, int) else 0
        return 0 if code == 0 else 2
    args._argv = argv
    args._model_text = None
    handler = _HANDLERS[args.verb]
    try:
        results, status = handler(args)
    except (UsageError, ModelError, ParseError, EvalError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.json:
        model_text = args._model_text
        if model_text is None:
            model_text = ""
            if getattr(args, "model", None):
                try:
                    with open(args.model, "r", encoding="utf-8") as handle:
                        model_text = handle.read()
                except OSError:
                    model_text = ""
        doc = _document(args, model_text, results, status)
        sys.stdout.write(emit_json(doc).decode("utf-8"))
        sys.stdout.flush()
    else:
        if status == "fail":
            print("status: FAIL")
    return 1 if status == "fail" else 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
