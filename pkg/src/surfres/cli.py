"""Command-line front end: parse job documents, dispatch analyses, emit reports.

A job is a single JSON document (read from a path or stdin) describing the
coefficient field, the variables, the generators, and optionally a frame,
boundary components, a stratum, a point to relocate to, a blow-up center, and
limits.  Flags select the subcommand, limits, and output path only.

Subcommands
-----------
analyze     order sequence, boundary counts, directrix dimensions, case tag
polyhedron  prepared projected polyhedron: vertices, delta, face numbers,
            sigma search, preparation log
invariant   the full three-part invariant at the chart origin
blowup      blow up one center and classify every chart origin above it
resolve     run the resolution loop and check strict decrease
export      render a resolution trace as DOT or JSON

Exit codes: 0 success, 2 malformed input, 3 out-of-scope request,
4 monotonicity failure.  All diagnostics go to stderr; reports to stdout or
the --output path.  Identical jobs produce byte-identical reports.

Infinity is serialized as the string "inf" and non-integral rationals as
"a/b" strings, keeping every report exact.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace
from typing import Any, Sequence

from .blowup_engine import (
    CLOSED_POINT,
    COORDINATE_CURVE,
    Center,
    ChartState,
    StratumComponent,
    blow_up_chart,
    classify_point,
    locate_point,
    make_chart,
)
from .char_polyhedron import delta, face_numbers, prepare, sigma
from .exact_algebra import (
    FieldDescriptor,
    InputError,
    Polynomial,
    ScopeError,
    parse_polynomial,
    to_string,
)
from .invariant import (
    chart_is_regular,
    classify_case,
    compute_iota,
    iota0,
    iota_to_jsonable,
    value_to_jsonable,
)
from .local_frame import NEW, OLD, BoundaryComponent
from .resolution_driver import (
    DEFAULT_LABELS,
    SCOPE_ERROR,
    chart_to_jsonable,
    check_monotone,
    initial_chart,
    max_stratum,
    resolve,
    select_center,
    trace_to_dot,
    trace_to_jsonable,
)

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_SCOPE = 3
EXIT_MONOTONE = 4

FINISHED_NOTE = "resolution process is finished"


# ---------------------------------------------------------------------------
# job parsing
# ---------------------------------------------------------------------------


def _expect(data: dict, key: str, kind: type, where: str) -> Any:
    if key not in data:
        raise InputError(f"{where}: missing required field {key!r}")
    value = data[key]
    if not isinstance(value, kind):
        raise InputError(
            f"{where}.{key}: expected {kind.__name__}, got {type(value).__name__}")
    return value


def _field_from(data: Any) -> FieldDescriptor:
    if not isinstance(data, dict):
        raise InputError("jobspec.field: expected an object")
    kind = _expect(data, "kind", str, "jobspec.field")
    if kind == "rationals":
        return FieldDescriptor.rationals()
    if kind == "prime_field":
        p = _expect(data, "characteristic", int, "jobspec.field")
        return FieldDescriptor.prime_field(p)
    if kind == "rational_functions":
        p = _expect(data, "characteristic", int, "jobspec.field")
        name = data.get("parameter", "t")
        if not isinstance(name, str):
            raise InputError("jobspec.field.parameter: expected a string")
        return FieldDescriptor.rational_functions(p, name)
    raise InputError(
        f"jobspec.field.kind: unknown kind {kind!r} "
        "(use rationals | prime_field | rational_functions)")


def _scalar(field: FieldDescriptor, variables: tuple[str, ...],
            value: Any, where: str) -> Any:
    """Parse a coefficient given as an int or an exact string like "-3/2"."""
    if isinstance(value, bool):
        raise InputError(f"{where}: expected a number or string")
    if isinstance(value, int):
        return field.from_int(value)
    if not isinstance(value, str):
        raise InputError(f"{where}: expected a number or string")
    p = parse_polynomial(value, field, variables)
    if not p.terms:
        return field.zero()
    if len(p.terms) == 1 and p.terms[0][0].is_unit():
        return p.terms[0][1]
    raise InputError(f"{where}: {value!r} is not a constant")


def _move_value(field: FieldDescriptor, variables: tuple[str, ...],
                value: Any, where: str) -> Any:
    if isinstance(value, dict):
        text = _expect(value, "root_of", str, where)
        name = value.get("name", "s")
        if not isinstance(name, str):
            raise InputError(f"{where}.name: expected a string")
        return parse_polynomial(text, field, (name,))
    return _scalar(field, variables, value, where)


def _stratum_from(data: Any, field: FieldDescriptor,
                  variables: tuple[str, ...]) -> tuple[StratumComponent, ...]:
    if not isinstance(data, list):
        raise InputError("jobspec.stratum: expected a list")
    comps = []
    for i, entry in enumerate(data):
        where = f"jobspec.stratum[{i}]"
        if not isinstance(entry, dict):
            raise InputError(f"{where}: expected an object")
        names = _expect(entry, "variables", list, where)
        label = _expect(entry, "label", int, where)
        conditions = tuple(
            parse_polynomial(q, field, variables)
            for q in entry.get("conditions", ()))
        comps.append(StratumComponent(
            cid=entry.get("cid", i),
            variables=tuple(names),
            label=label,
            conditions=conditions,
            original=entry.get("original"),
        ))
    return tuple(comps)


def build_chart(job: dict) -> ChartState:
    """Turn a parsed job document into a chart state."""
    field = _field_from(_expect(job, "field", dict, "jobspec"))
    variables = tuple(_expect(job, "variables", list, "jobspec"))
    if not all(isinstance(v, str) for v in variables):
        raise InputError("jobspec.variables: expected a list of strings")
    texts = _expect(job, "generators", list, "jobspec")
    if not texts:
        raise InputError("jobspec.generators: at least one generator is needed")
    generators = tuple(
        parse_polynomial(t, field, variables) for t in texts)

    boundary_data = job.get("boundary", [])
    if not isinstance(boundary_data, list):
        raise InputError("jobspec.boundary: expected a list")

    if "frame" in job:
        frame_data = _expect(job, "frame", dict, "jobspec")
        u_block = tuple(_expect(frame_data, "u", list, "jobspec.frame"))
        y_block = tuple(_expect(frame_data, "y", list, "jobspec.frame"))
        boundary = []
        for i, entry in enumerate(boundary_data):
            where = f"jobspec.boundary[{i}]"
            if not isinstance(entry, dict):
                raise InputError(f"{where}: expected an object")
            status = entry.get("status", NEW)
            if status not in (OLD, NEW):
                raise InputError(f"{where}.status: expected 'old' or 'new'")
            boundary.append(BoundaryComponent(
                generator=parse_polynomial(
                    _expect(entry, "generator", str, where), field, variables),
                status=status,
                birth_step=entry.get("birth", 0),
                cid=entry.get("cid", i),
            ))
        chart = make_chart(field, variables, generators, u_block, y_block,
                           tuple(boundary))
    else:
        # no frame given: boundary components must be coordinate divisors and
        # the frame is inferred from the directrix of the single generator
        if len(generators) != 1:
            raise InputError(
                "jobspec.frame: required for multi-generator charts")
        names = []
        for i, entry in enumerate(boundary_data):
            where = f"jobspec.boundary[{i}]"
            if not isinstance(entry, dict):
                raise InputError(f"{where}: expected an object")
            name = _expect(entry, "generator", str, where)
            if name not in variables:
                raise InputError(
                    f"{where}.generator: {name!r} is not a variable; "
                    "supply an explicit frame for general divisors")
            names.append(name)
        chart = initial_chart(field, variables, texts[0], tuple(names))

    if "stratum" in job:
        chart = replace(
            chart, stratum=_stratum_from(job["stratum"], field, variables))
    elif len(chart.generators) == 1 and chart.stratum is None:
        try:
            chart = replace(chart, stratum=max_stratum(chart))
        except ScopeError:
            pass

    if "point" in job:
        point = _expect(job, "point", dict, "jobspec")
        moves_data = _expect(point, "moves", dict, "jobspec.point")
        moves = {
            v: _move_value(chart.field, chart.variables, m,
                           f"jobspec.point.moves.{v}")
            for v, m in moves_data.items()
        }
        chart = locate_point(chart, moves)
    return chart


def _center_from(job: dict, chart: ChartState) -> Center:
    if "center" in job:
        data = _expect(job, "center", dict, "jobspec")
        names = tuple(_expect(data, "variables", list, "jobspec.center"))
        kind = CLOSED_POINT if len(names) == len(chart.variables) \
            else COORDINATE_CURVE
        return Center(names, data.get("kind", kind))
    return select_center(chart).center


def _options(job: dict) -> dict:
    options = job.get("options", {})
    if not isinstance(options, dict):
        raise InputError("jobspec.options: expected an object")
    return options


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------


def _chart_summary(chart: ChartState) -> dict:
    return {
        "variables": list(chart.variables),
        "generators": [to_string(g) for g in chart.generators],
    }


def report_analyze(job: dict) -> dict:
    chart = build_chart(job)
    nu, n_old, e, e_old = iota0(chart)
    return {
        "command": "analyze",
        **_chart_summary(chart),
        "nu_star": value_to_jsonable(nu),
        "old_components": n_old,
        "new_components": len(chart.frame.new_components()),
        "e": e,
        "e_O": e_old,
        "case": classify_case(chart).tag,
        "regular": chart_is_regular(chart),
    }


def _vertices(poly) -> list[list[Any]]:
    return [[value_to_jsonable(c) for c in v] for v in poly.vertices]


def report_polyhedron(job: dict) -> dict:
    chart = build_chart(job)
    options = _options(job)
    budget = options.get("budget", 64)
    sigma_budget = options.get("sigma_budget", 32)
    result = prepare(chart.generators, chart.frame, budget=budget)
    poly = result.polyhedron
    report = {
        "command": "polyhedron",
        **_chart_summary(chart),
        "u_block": list(chart.frame.u_block),
        "y_block": list(chart.frame.y_block),
        "status": result.status,
        "vertices": _vertices(poly),
        "delta": value_to_jsonable(delta(poly)),
        "prepared_generators": [to_string(g) for g in result.generators],
        "preparation_log": [
            {
                "vertex": [value_to_jsonable(c) for c in change["vertex"]],
                "witness": [str(x) for x in change["witness"]],
            }
            for change in result.changes
        ],
        "solved_vertices": [
            [value_to_jsonable(c) for c in v]
            for v in result.solved_vertices],
    }
    if result.escape_annotation is not None:
        report["escape"] = result.escape_annotation
    if result.stable_polyhedron is not None:
        report["stable_vertices"] = _vertices(result.stable_polyhedron)
    if poly.dim == 2 and not poly.is_empty:
        names = ("alpha", "beta", "gamma", "s")
        report["faces"] = {
            f"side{side}": dict(zip(
                names,
                (value_to_jsonable(v)
                 for v in face_numbers(poly, side))))
            for side in (1, 2)
        }
        report["sigma"] = {
            f"side{side}": value_to_jsonable(
                sigma(result.generators, chart.frame, side,
                      budget=sigma_budget))
            for side in (1, 2)
        }
    return report


def report_invariant(job: dict) -> dict:
    chart = build_chart(job)
    report = {
        "command": "invariant",
        **_chart_summary(chart),
        **iota_to_jsonable(compute_iota(chart)),
    }
    if chart_is_regular(chart):
        report["note"] = FINISHED_NOTE
    return report


def report_blowup(job: dict) -> dict:
    chart = build_chart(job)
    center = _center_from(job, chart)
    children = []
    for w in center.variables:
        child = blow_up_chart(chart, center, w)
        children.append({
            "chart_var": w,
            "classification": classify_point(chart, child),
            "chart": chart_to_jsonable(child),
        })
    return {
        "command": "blowup",
        **_chart_summary(chart),
        "center": {"variables": list(center.variables), "kind": center.kind},
        "children": children,
    }


def _declared_points(job: dict, chart: ChartState) -> dict | None:
    data = job.get("declared_points")
    if data is None:
        return None
    if not isinstance(data, dict):
        raise InputError("jobspec.declared_points: expected an object")
    out = {}
    for chart_id, moves_list in data.items():
        if not isinstance(moves_list, list):
            raise InputError(
                f"jobspec.declared_points.{chart_id}: expected a list")
        parsed = []
        for i, moves_data in enumerate(moves_list):
            where = f"jobspec.declared_points.{chart_id}[{i}]"
            if not isinstance(moves_data, dict):
                raise InputError(f"{where}: expected an object")
            parsed.append({
                v: _move_value(chart.field, chart.variables, m, f"{where}.{v}")
                for v, m in moves_data.items()
            })
        out[chart_id] = tuple(parsed)
    return out


def _run_resolve(job: dict):
    chart = build_chart(job)
    options = _options(job)
    max_steps = options.get("max_steps", 64)
    label_mode = options.get("label_mode", DEFAULT_LABELS)
    return resolve(chart, max_steps=max_steps, label_mode=label_mode,
                   declared_points=_declared_points(job, chart))


def report_resolve(job: dict) -> tuple[dict, int]:
    trace = _run_resolve(job)
    mono = check_monotone(trace)
    report = {
        "command": "resolve",
        "trace": trace_to_jsonable(trace),
        "monotone": {
            "ok": mono.ok,
            "checked": mono.checked,
            "violations": list(mono.violations),
        },
    }
    if trace.status == SCOPE_ERROR:
        return report, EXIT_SCOPE
    if not mono.ok:
        return report, EXIT_MONOTONE
    return report, EXIT_OK


def _dot_from_stored(data: dict) -> str:
    """Render a previously exported trace document as DOT."""
    def esc(text: str) -> str:
        return text.replace("\\", "\\\\").replace('"', '\\"')

    charts = data.get("charts")
    if not isinstance(charts, list):
        raise InputError("stored trace: missing charts[]")
    lines = ["digraph trace {", "  node [shape=box];"]
    for chart in charts:
        label = esc(chart["id"]) + "\\n" + esc("; ".join(chart["generators"]))
        lines.append(f'  "{esc(chart["id"])}" [label="{label}"];')
    for chart in charts:
        parent = chart.get("parent")
        if parent is None:
            continue
        edge = "V(" + ", ".join(chart.get("center", ())) + ") / " \
            + chart.get("chart_var", "?")
        lines.append(
            f'  "{esc(parent)}" -> "{esc(chart["id"])}" '
            f'[label="{esc(edge)}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def run_export(job: dict, fmt: str) -> str:
    if "trace" in job and "generators" not in job:
        stored = job["trace"]
        if fmt == "json":
            return json.dumps(stored, indent=2) + "\n"
        return _dot_from_stored(stored)
    trace = _run_resolve(job)
    if fmt == "json":
        return json.dumps(trace_to_jsonable(trace), indent=2) + "\n"
    return trace_to_dot(trace)


# ---------------------------------------------------------------------------
# orchestration
# ---------------------------------------------------------------------------


def _read_job(path: str) -> dict:
    if path == "-":
        text = sys.stdin.read()
        source = "<stdin>"
    else:
        try:
            with open(path, "r", encoding="utf-8") as handle:
                text = handle.read()
        except OSError as err:
            raise InputError(f"cannot read job file {path!r}: {err}") from err
        source = path
    try:
        data = json.loads(text)
    except json.JSONDecodeError as err:
        raise InputError(
            f"{source}: invalid JSON at line {err.lineno} column "
            f"{err.colno}: {err.msg}") from err
    if not isinstance(data, dict):
        raise InputError(f"{source}: the job document must be a JSON object")
    return data


def _emit(text: str, output: str | None) -> None:
    if output is None:
        sys.stdout.write(text)
    else:
        with open(output, "w", encoding="utf-8") as handle:
            handle.write(text)


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="surfres",
        description="Exact local analysis and resolution of surface "
                    "singularities: polyhedra, invariants, blow-ups.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("analyze", "orders, boundary counts, directrix dimensions, case"),
        ("polyhedron", "prepared projected polyhedron and face invariants"),
        ("invariant", "the full three-part invariant at the origin"),
        ("blowup", "blow up one center and classify the chart origins"),
        ("resolve", "run the resolution loop and check strict decrease"),
        ("export", "render a resolution trace as DOT or JSON"),
    ):
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("job", help="path to a JSON job document, or - for stdin")
        cmd.add_argument("--output", "-o", default=None,
                         help="write the report here instead of stdout")
        if name == "export":
            cmd.add_argument("--format", choices=("dot", "json"),
                             default="dot", help="output format")
    return parser


def run(argv: Sequence[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    job = _read_job(args.job)
    if args.command == "analyze":
        report, code = report_analyze(job), EXIT_OK
    elif args.command == "polyhedron":
        report, code = report_polyhedron(job), EXIT_OK
    elif args.command == "invariant":
        report, code = report_invariant(job), EXIT_OK
    elif args.command == "blowup":
        report, code = report_blowup(job), EXIT_OK
    elif args.command == "resolve":
        report, code = report_resolve(job)
    else:
        _emit(run_export(job, args.format), args.output)
        return EXIT_OK
    _emit(json.dumps(report, indent=2) + "\n", args.output)
    return code


def main(argv: Sequence[str] | None = None) -> int:
    try:
        return run(argv)
    except InputError as err:
        print(f"input error: {err}", file=sys.stderr)
        return EXIT_INPUT
    except ScopeError as err:
        print(f"scope error: {err}", file=sys.stderr)
        return EXIT_SCOPE
    except BrokenPipeError:
        # the consumer (e.g. `head`) closed stdout; swallow the tail quietly
        devnull = os.open(os.devnull, os.O_WRONLY)
        os.dup2(devnull, sys.stdout.fileno())
        return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
