"""Resolution loop on a tree of affine charts for surfaces.

Starting from a chart whose hypersurface is singular at the origin, the
resolver repeats: compute the components of the maximal log-multiplicity
locus through the origin, assign labels, pick the component of smallest
label as the blow-up center (falling back to the closed point when it is
not permissible or reducible at the origin), blow up, classify the new
chart origins against the parent point, and record the three-part
invariant before and after.  A chart is finished when its hypersurface is
regular (or missing) and meets the boundary with normal crossings.

Labels follow the age-bookkeeping of the algorithm: components present
when the current log-multiplicity value was first attained carry label 0;
a component created by a blow-up gets the child's step count as its
label, except in the default labelling mode where a component dominating
the blown-up center inherits the center's label.  The ``original`` flag
on components (which the invariant's case analysis consults) is never
inherited: only strict transforms keep it, so the invariant does not
depend on the labelling mode.

``check_monotone`` verifies that the recorded invariant strictly drops at
every tracked point above every center.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, replace
from typing import Any, Iterable, Mapping, Sequence

from .blowup_engine import (
    CLOSED_POINT,
    COORDINATE_CURVE,
    DROPPED,
    VERY_NEAR,
    VERY_O_NEAR,
    Center,
    ChartState,
    StratumComponent,
    _is_coordinate_generator,
    blow_up_chart,
    classify_point,
    locate_point,
    permissible_check,
)
from .char_polyhedron import BUDGET_EXHAUSTED, delta, prepare
from .exact_algebra import (
    FieldDescriptor,
    InputError,
    Polynomial,
    ScopeError,
    hasse_derivative,
    parse_polynomial,
    substitute_many,
    to_string,
)
from .invariant import (
    LESS,
    IotaInvariant,
    adapt_frame_to_forms,
    compare_iota,
    compute_iota,
    iota_to_jsonable,
)
from .local_frame import (
    BoundaryComponent,
    Frame,
    NEW,
    OLD,
    compute_directrix,
    initial_form,
    nu_star,
)

# -- labelling modes ---------------------------------------------------------

DEFAULT_LABELS = "default"
FRESH_LABELS = "fresh"

# -- trace statuses ----------------------------------------------------------

RESOLVED = "resolved"
STEP_LIMIT = "step_limit"
SCOPE_ERROR = "scope_error"


# ---------------------------------------------------------------------------
# the maximal stratum of one chart
# ---------------------------------------------------------------------------

RawComponent = tuple[frozenset, Polynomial | None]


def _exponent_maps(total: int, variables: Sequence[str]) -> Iterable[dict]:
    """All exponent assignments over the variables with the given total."""
    if not variables:
        if total == 0:
            yield {}
        return
    head, rest = variables[0], variables[1:]
    for e in range(total + 1):
        for tail in _exponent_maps(total - e, rest):
            if e:
                tail[head] = e
            yield tail


def _hasse_constraints(f: Polynomial, order: int) -> list[Polynomial]:
    """All nonzero Hasse derivatives of f of differentiation order < order."""
    out: list[Polynomial] = []
    seen: set = set()
    for total in range(order):
        for a in _exponent_maps(total, f.variables):
            g = hasse_derivative(f, a)
            if g.is_zero or g in seen:
                continue
            seen.add(g)
            out.append(g)
    return out


def _support(m) -> tuple[str, ...]:
    return tuple(v for v, _e in m.exps)


def _solve_components(
    constraints: Sequence[Polynomial],
    field: FieldDescriptor,
    variables: tuple[str, ...],
) -> list[RawComponent]:
    """Coordinate subspaces (plus single-condition refinements) inside the
    common zero locus of the constraints.

    Branches on the variables of a smallest-support monomial: any solution
    set must contain one of them.  When every remaining residue is the same
    non-monomial polynomial without constant term, it is recorded as the
    condition of a non-coordinate component.
    """
    order = {v: i for i, v in enumerate(variables)}
    found: list[RawComponent] = []
    seen: set[frozenset] = set()
    stack: list[frozenset] = [frozenset()]
    while stack:
        fixed = stack.pop()
        if fixed in seen:
            continue
        seen.add(fixed)
        zero = {v: Polynomial.zero(field, variables) for v in fixed}
        residues = []
        for g in constraints:
            r = substitute_many(g, zero) if zero else g
            if not r.is_zero:
                residues.append(r)
        if not residues:
            found.append((fixed, None))
            continue
        if any(len(r.terms) == 1 and r.terms[0][0].is_unit for r in residues):
            continue  # a nonzero constant survives: no solution above `fixed`
        monomials = [r.terms[0][0] for r in residues if len(r.terms) == 1]
        if monomials:
            pick = min(
                monomials,
                key=lambda m: (len(m.exps),
                               tuple(order[v] for v in _support(m))))
            for v in _support(pick):
                stack.append(fixed | {v})
            continue
        distinct = set(residues)
        if len(distinct) == 1:
            r = residues[0]
            if not r.constant_coefficient():
                found.append((fixed, r))
            continue
        # several distinct non-monomial residues: keep branching on the
        # smallest-support term to stay complete for coordinate components
        terms = [m for r in residues for m, _c in r.terms if not m.is_unit]
        pick = min(
            terms,
            key=lambda m: (len(m.exps), tuple(order[v] for v in _support(m))))
        for v in _support(pick):
            stack.append(fixed | {v})
    return _maximal_components(found, field, variables)


def _component_contains(
    a: RawComponent, b: RawComponent,
    field: FieldDescriptor, variables: tuple[str, ...],
) -> bool:
    """Whether the zero set of component a contains that of component b."""
    vars_a, cond_a = a
    vars_b, cond_b = b
    if not vars_a <= vars_b:
        return False
    if cond_a is None:
        return True
    zero = {v: Polynomial.zero(field, variables) for v in vars_b}
    residue = substitute_many(cond_a, zero) if zero else cond_a
    if residue.is_zero:
        return True
    return cond_b is not None and residue == cond_b


def _maximal_components(
    comps: list[RawComponent],
    field: FieldDescriptor,
    variables: tuple[str, ...],
) -> list[RawComponent]:
    keep = []
    for i, c in enumerate(comps):
        redundant = False
        for j, d in enumerate(comps):
            if i == j or c == d:
                continue
            if _component_contains(d, c, field, variables):
                # ties (mutual containment) keep the earlier one
                if not (_component_contains(c, d, field, variables) and i < j):
                    redundant = True
                    break
        if not redundant:
            keep.append(c)
    return keep


def _old_boundary_vars(chart: ChartState) -> list[str] | None:
    """Variables of the old boundary components, None when one of them is
    not a coordinate divisor."""
    out = []
    for comp in chart.frame.old_components():
        name = _is_coordinate_generator(comp.generator)
        if name is None:
            return None
        out.append(name)
    return out


def _refine_by_old_components(
    chart: ChartState, comps: list[RawComponent]
) -> list[RawComponent]:
    """Drop components along which the number of old boundary components is
    smaller than at the origin (the log-multiplicity would not be constant
    along them); when nothing is left, the origin itself is the stratum."""
    old_vars = _old_boundary_vars(chart)
    if old_vars == []:
        return comps
    if old_vars is None:
        kept: list[RawComponent] = []
    else:
        kept = [c for c in comps if all(v in c[0] for v in old_vars)]
    if kept:
        return kept
    return [(frozenset(chart.variables), None)]


def _boundary_vars(chart: ChartState) -> list[str]:
    out = []
    for comp in chart.frame.boundary:
        name = _is_coordinate_generator(comp.generator)
        if name is not None:
            out.append(name)
    return out


def _tail_components(chart: ChartState, f: Polynomial) -> list[RawComponent]:
    """Stratum of a chart whose hypersurface is regular at the origin.

    Empty when the hypersurface meets the boundary with normal crossings
    at the origin (nothing left to do); otherwise the components of the
    intersection of the hypersurface with the boundary divisors that
    obstruct transversality.
    """
    lin = initial_form(f, f.variables)
    support = [v for v in chart.variables
               if any(m.exponent(v) for m, _c in lin.terms)]
    boundary = set(_boundary_vars(chart))
    if any(v not in boundary for v in support):
        return []  # the tangent space is transverse to the boundary
    if len(support) == 1:
        w = support[0]
        if all(m.exponent(w) for m, _c in f.terms):
            return []  # the hypersurface coincides with the divisor V(w)
    zero = {v: Polynomial.zero(chart.field, chart.variables) for v in support}
    residue = substitute_many(f, zero)
    if residue.is_zero:
        return [(frozenset(support), None)]
    pieces = _solve_components([residue], chart.field, chart.variables)
    return [(vars_ | frozenset(support), cond) for vars_, cond in pieces]


def _fresh_components(chart: ChartState) -> list[RawComponent]:
    """Raw (unlabelled) components of the maximal stratum through the
    chart origin."""
    if len(chart.generators) != 1:
        raise ScopeError(
            "stratum computation needs a principal generator; supply the "
            "component list for multi-generator charts")
    f = chart.generators[0]
    order = int(nu_star(chart.generators).orders[0])
    if order == 0:
        return []
    if order == 1:
        return _tail_components(chart, f)
    constraints = _hasse_constraints(f, order)
    comps = _solve_components(constraints, chart.field, chart.variables)
    for names, condition in comps:
        if not names:
            # a component with no coordinate part (such as the diagonal
            # V(x + y)) cannot be represented as a stratum component
            raise ScopeError(
                "a maximal-order component has no coordinate part "
                f"(cut out by {to_string(condition)}); this shape is not "
                "supported")
    return _refine_by_old_components(chart, comps)


def _canonical_raw(
    chart: ChartState, comps: Iterable[RawComponent]
) -> list[tuple[tuple[str, ...], Polynomial | None]]:
    index = {v: i for i, v in enumerate(chart.variables)}
    ordered = []
    for vars_, cond in comps:
        names = tuple(sorted(vars_, key=index.__getitem__))
        ordered.append((names, cond))
    ordered.sort(key=lambda vc: (len(vc[0]),
                                 tuple(index[v] for v in vc[0]),
                                 "" if vc[1] is None else to_string(vc[1])))
    return ordered


def _label_components(
    chart: ChartState,
    fresh: Iterable[RawComponent],
    label_mode: str,
    reset: bool,
) -> tuple[StratumComponent, ...]:
    """Attach cids, labels, and original flags to freshly computed
    components, merging with the carried strict transforms in
    ``chart.stratum`` unless ``reset`` starts a new labelling era."""
    if label_mode not in (DEFAULT_LABELS, FRESH_LABELS):
        raise InputError(f"unknown labelling mode {label_mode!r}")
    ordered = _canonical_raw(chart, fresh)
    if reset:
        return tuple(
            StratumComponent(cid=i, variables=names, label=0,
                             conditions=() if cond is None else (cond,),
                             original=True)
            for i, (names, cond) in enumerate(ordered))

    carried = {frozenset(c.variables): c
               for c in (chart.stratum or ()) if c.is_coordinate}
    next_cid = max((c.cid for c in (chart.stratum or ())), default=-1) + 1
    lineage = chart.lineage
    out = []
    for names, cond in ordered:
        if cond is None and frozenset(names) in carried:
            out.append(carried[frozenset(names)])
            continue
        label = chart.step
        if (label_mode == DEFAULT_LABELS and lineage is not None
                and lineage.center_was_component
                and lineage.center_label is not None):
            center = lineage.center
            if center.kind == CLOSED_POINT:
                label = lineage.center_label
            elif (cond is None
                    and set(names) == set(center.variables)):
                label = lineage.center_label
        out.append(StratumComponent(
            cid=next_cid, variables=names, label=label,
            conditions=() if cond is None else (cond,), original=False))
        next_cid += 1
    return tuple(out)


def max_stratum(
    chart: ChartState, label_mode: str = DEFAULT_LABELS
) -> tuple[StratumComponent, ...]:
    """Labelled components of the maximal stratum through the chart origin.

    For a chart fresh out of ``blow_up_chart`` the carried strict
    transforms (stored in ``chart.stratum``) keep their cid and label;
    everything else is new and labelled by the chart's step count, except
    that in the default mode a component dominating the blown-up center
    inherits the center's label.  A chart without lineage (or whose
    stratum was never computed) starts a new era: every component gets
    label 0 and the original flag.
    """
    fresh = _fresh_components(chart)
    reset = chart.lineage is None or chart.stratum is None
    return _label_components(chart, fresh, label_mode, reset)


# ---------------------------------------------------------------------------
# center selection
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CenterChoice:
    """The selected center plus the stratum component it came from."""

    center: Center
    label: int | None
    component: StratumComponent | None

    @property
    def was_component(self) -> bool:
        return self.component is not None


def select_center(chart: ChartState) -> CenterChoice:
    """The component of smallest label when usable, else the closed point.

    The pool is the set of stratum components of minimal label.  A single
    coordinate point component is blown up as such; a single permissible
    coordinate curve likewise; anything else (several components meeting
    at the origin, or a non-permissible curve) falls back to the closed
    point.  A minimal component cut by a non-coordinate condition is out
    of scope, as is one of intermediate dimension.
    """
    comps = chart.stratum
    if comps is None:
        raise InputError("the stratum of this chart has not been computed")
    if not comps:
        raise InputError("the stratum is empty; there is nothing to blow up")
    min_label = min(c.label for c in comps)
    pool = sorted((c for c in comps if c.label == min_label),
                  key=lambda c: c.cid)
    for c in pool:
        if not c.is_coordinate:
            raise ScopeError(
                "the minimal-label stratum component is cut by the "
                f"non-coordinate condition {to_string(c.conditions[0])}; "
                "blowing it up is out of scope")
    n = len(chart.variables)
    if len(pool) == 1:
        comp = pool[0]
        if len(comp.variables) == n:
            return CenterChoice(Center(comp.variables, CLOSED_POINT),
                                comp.label, comp)
        if len(comp.variables) == n - 1:
            report = permissible_check(
                chart, Center(comp.variables, COORDINATE_CURVE))
            if report.ok:
                return CenterChoice(Center(comp.variables, COORDINATE_CURVE),
                                    comp.label, comp)
            return CenterChoice(Center(chart.variables, CLOSED_POINT),
                                None, None)
        raise ScopeError(
            f"stratum component V({', '.join(comp.variables)}) has "
            "codimension below a curve; the input is not reduced of "
            "dimension at most two")
    return CenterChoice(Center(chart.variables, CLOSED_POINT), None, None)


# ---------------------------------------------------------------------------
# the resolution trace
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PointRecord:
    """One tracked point above a center with its invariant comparison."""

    chart_id: str
    parent_id: str
    point: str
    classification: str
    iota_before: IotaInvariant
    iota_after: IotaInvariant
    comparison: str


@dataclass(frozen=True)
class TraceEvent:
    """One blow-up: the chart acted on, the center, and what it created."""

    step: int
    chart_id: str
    center: Center
    center_label: int | None
    created: tuple[str, ...]
    records: tuple[PointRecord, ...]


@dataclass(frozen=True)
class ResolutionTrace:
    """The chart tree, the ordered blow-up events, and the final status."""

    label_mode: str
    status: str
    charts: dict[str, ChartState]
    events: tuple[TraceEvent, ...]
    error: str | None = None

    def chart(self, chart_id: str) -> ChartState:
        return self.charts[chart_id]


# ---------------------------------------------------------------------------
# the resolver
# ---------------------------------------------------------------------------


def initial_chart(
    field: FieldDescriptor,
    variables: tuple[str, ...],
    text: str,
    boundary_vars: tuple[str, ...] = (),
    chart_id: str = "root",
) -> ChartState:
    """Build a root chart from a polynomial string.

    The frame is adapted to the directrix when its forms are coordinate
    (those variables become the y-block); otherwise the frame is neutral.
    Boundary variables are installed as old components.
    """
    f = parse_polynomial(text, field, variables)
    if f.is_zero:
        raise InputError("the hypersurface polynomial must be nonzero")
    boundary = []
    for i, v in enumerate(boundary_vars):
        if v not in variables:
            raise InputError(f"boundary variable {v!r} is not a coordinate")
        boundary.append(BoundaryComponent(
            generator=Polynomial.variable(field, variables, v),
            status=OLD, birth_step=0, cid=i))
    y_vars = _coordinate_directrix_vars(f, variables)
    y_block = tuple(y_vars or ())
    u_block = tuple(v for v in variables if v not in set(y_block))
    frame = Frame(u_block=u_block, y_block=y_block,
                  boundary=tuple(boundary))
    return ChartState(chart_id=chart_id, field=field, variables=variables,
                      generators=(f,), frame=frame)


def _coordinate_directrix_vars(
    f: Polynomial, variables: tuple[str, ...]
) -> tuple[str, ...] | None:
    """The directrix coordinates when every directrix form is a single
    variable, else None."""
    ini = initial_form(f, f.variables)
    if ini.is_zero or ini.total_degree() == 0:
        return None
    _r, forms = compute_directrix(
        [ini], Frame(u_block=variables, y_block=()))
    names = []
    for form in forms:
        if len(form.terms) != 1:
            return None
        mono, _c = form.terms[0]
        if mono.degree() != 1:
            return None
        names.append(_support(mono)[0])
    return tuple(v for v in variables if v in set(names))


def _is_finished(chart: ChartState) -> bool:
    orders = nu_star(chart.generators).orders
    if orders[0] == 0:
        return True
    return orders[-1] <= 1 and not chart.stratum


def _log_value(chart: ChartState) -> tuple:
    return (chart.nu, len(chart.frame.old_components()))


def _log_dropped(parent: ChartState, child: ChartState) -> bool:
    p_nu, p_old = _log_value(parent)
    c_nu, c_old = _log_value(child)
    if c_nu < p_nu:
        return True
    return not (p_nu < c_nu) and c_old < p_old


def _reset_boundary(chart: ChartState) -> ChartState:
    """All boundary components become old (the multiplicity just dropped)."""
    frame = chart.frame
    boundary = tuple(replace(b, status=OLD) for b in frame.boundary)
    return replace(chart, frame=Frame(frame.u_block, frame.y_block, boundary))


def _plain_delta(chart: ChartState):
    """delta of the prepared polyhedron in a directrix-adapted frame, or
    None when it cannot be computed within budget."""
    try:
        ini = [initial_form(g, g.variables) for g in chart.generators]
        _r, forms = compute_directrix(ini, chart.frame)
        gens, frame = adapt_frame_to_forms(
            list(chart.generators), chart.frame, forms)
        if frame.e == 0 or frame.e > 2:
            return None
        result = prepare(gens, frame)
        if result.status == BUDGET_EXHAUSTED:
            return None
        return delta(result.polyhedron)
    except (InputError, ScopeError):
        return None


def _directrix_chart_vars(chart: ChartState) -> tuple[str, ...] | None:
    return _coordinate_directrix_vars(chart.generators[0], chart.variables)


def resolve(
    root: ChartState,
    max_steps: int = 64,
    label_mode: str = DEFAULT_LABELS,
    declared_points: Mapping[str, Sequence[Mapping[str, Any]]] | None = None,
) -> ResolutionTrace:
    """Run the blow-up loop until every chart is finished.

    Each round removes one chart from the work queue, selects its center,
    blows up every chart of the center, classifies the child origins
    against the parent origin, and records the invariant before and after
    (computed on the state before any history reset, which is what the
    strict-decrease statement refers to).  When the log-multiplicity
    value drops at a child origin, the child starts a new era: labels
    restart at 0 and, when the multiplicity itself dropped, all boundary
    components become old.

    ``declared_points`` maps a chart id to move-dictionaries for
    ``locate_point``; each declared point is classified and recorded in
    addition to the chart origin.

    Scope errors abort the loop and return the partial trace with status
    ``scope_error``; exceeding ``max_steps`` returns ``step_limit``.
    """
    charts: dict[str, ChartState] = {root.chart_id: root}
    events: list[TraceEvent] = []
    queue: deque[str] = deque([root.chart_id])
    iota_cache: dict[str, IotaInvariant] = {}
    status = RESOLVED
    error: str | None = None
    steps = 0

    if root.stratum is None:
        try:
            root = replace(root, stratum=max_stratum(root, label_mode))
            charts[root.chart_id] = root
        except ScopeError as err:
            return ResolutionTrace(label_mode, SCOPE_ERROR, charts,
                                   tuple(events), error=str(err))

    def iota_of(chart: ChartState) -> IotaInvariant:
        cached = iota_cache.get(chart.chart_id)
        if cached is None:
            cached = compute_iota(chart)
            iota_cache[chart.chart_id] = cached
        return cached

    try:
        while queue:
            chart = charts[queue.popleft()]
            if _is_finished(chart):
                continue
            if steps >= max_steps:
                status = STEP_LIMIT
                break
            if not chart.stratum:
                # singular chart whose maximal-order locus has no
                # representable component (e.g. only non-coordinate pieces
                # the solver cannot certify): out of scope, not misuse
                raise ScopeError(
                    f"chart {chart.chart_id}: no representable component of "
                    "the maximal-order locus; cannot pick a center")
            choice = select_center(chart)
            steps += 1
            parent_iota = iota_of(chart)
            parent_51 = not any(c.original for c in (chart.stratum or ()))
            directrix_vars = _directrix_chart_vars(chart)
            parent_delta = None
            created: list[str] = []
            records: list[PointRecord] = []
            for w in choice.center.variables:
                child = blow_up_chart(chart, choice.center, w)
                fresh = _fresh_components(child)
                pre = replace(child, stratum=_label_components(
                    child, fresh, label_mode, reset=False))
                classification = classify_point(chart, pre)
                child_iota = compute_iota(pre)
                records.append(PointRecord(
                    chart_id=pre.chart_id, parent_id=chart.chart_id,
                    point="origin", classification=classification,
                    iota_before=parent_iota, iota_after=child_iota,
                    comparison=compare_iota(child_iota, parent_iota)))

                # No point of a directrix-variable chart stays near.
                if directrix_vars is not None and w in directrix_vars:
                    assert classification == DROPPED, (
                        f"near point in directrix chart {pre.chart_id}")
                # delta drops by exactly one at very near points over a
                # closed-point center when e = 1.
                if (choice.center.kind == CLOSED_POINT
                        and classification in (VERY_NEAR, VERY_O_NEAR)
                        and parent_iota.iota0[2] == 1):
                    if parent_delta is None:
                        parent_delta = _plain_delta(chart)
                    child_delta = _plain_delta(pre)
                    if parent_delta is not None and child_delta is not None:
                        assert child_delta == parent_delta - 1, (
                            f"delta law violated at {pre.chart_id}: "
                            f"{parent_delta} -> {child_delta}")
                # Once no original component remains, none reappears while
                # the log-multiplicity value is unchanged.
                if parent_51 and not _log_dropped(chart, pre):
                    assert not any(c.original for c in pre.stratum), (
                        f"original component reappeared in {pre.chart_id}")
                # Newly created curve components of the multiple locus at
                # log-equimultiple points are regular permissible curves.
                # (Tail charts of multiplicity one track failures of normal
                # crossings instead, where this does not apply.)
                if (chart.nu.orders[-1] >= 2
                        and classification != DROPPED
                        and not _log_dropped(chart, pre)):
                    carried_cids = {c.cid for c in (child.stratum or ())}
                    for comp in pre.stratum:
                        if (comp.cid in carried_cids or not comp.is_coordinate
                                or len(comp.variables)
                                != len(pre.variables) - 1):
                            continue
                        report = permissible_check(
                            pre, Center(comp.variables, COORDINATE_CURVE))
                        assert report.ok, (
                            f"new component V({', '.join(comp.variables)}) "
                            f"in {pre.chart_id} is not permissible: "
                            + "; ".join(report.violations))

                stored = pre
                if _log_dropped(chart, pre):
                    stored_fresh = fresh
                    if pre.nu < chart.nu:
                        # all boundary components become old, which can
                        # shrink the stratum (it must keep the old-component
                        # count constant), so recompute it
                        stored = _reset_boundary(stored)
                        stored_fresh = _fresh_components(stored)
                    stored = replace(stored, stratum=_label_components(
                        stored, stored_fresh, label_mode, reset=True))
                charts[stored.chart_id] = stored
                created.append(stored.chart_id)
                queue.append(stored.chart_id)

                for moves in (declared_points or {}).get(pre.chart_id, ()):
                    located = locate_point(pre, moves)
                    located_fresh = _fresh_components(located)
                    located = replace(located, stratum=_label_components(
                        located, located_fresh, label_mode, reset=False))
                    located_iota = compute_iota(located)
                    point = located.chart_id.split("@")[-1]
                    records.append(PointRecord(
                        chart_id=located.chart_id, parent_id=chart.chart_id,
                        point=point,
                        classification=classify_point(chart, located),
                        iota_before=parent_iota, iota_after=located_iota,
                        comparison=compare_iota(located_iota, parent_iota)))
            events.append(TraceEvent(
                step=steps, chart_id=chart.chart_id, center=choice.center,
                center_label=choice.label, created=tuple(created),
                records=tuple(records)))
    except ScopeError as exc:
        status = SCOPE_ERROR
        error = str(exc)

    return ResolutionTrace(label_mode=label_mode, status=status,
                           charts=charts, events=tuple(events), error=error)


# ---------------------------------------------------------------------------
# monotonicity checking
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MonotonicityReport:
    """Outcome of the strict-decrease scan over a trace."""

    ok: bool
    checked: int
    violations: tuple[dict, ...]

    @property
    def first_violation(self) -> dict | None:
        return self.violations[0] if self.violations else None


def check_monotone(trace: ResolutionTrace) -> MonotonicityReport:
    """Assert that the invariant strictly dropped at every recorded point.

    Every point record pairs the invariant at the parent origin with the
    invariant at a point above the center; each must compare strictly
    smaller.  Violations carry full diagnostics.
    """
    violations = []
    checked = 0
    for event in trace.events:
        for rec in event.records:
            checked += 1
            if rec.comparison != LESS:
                violations.append({
                    "step": event.step,
                    "parent": rec.parent_id,
                    "chart": rec.chart_id,
                    "point": rec.point,
                    "classification": rec.classification,
                    "comparison": rec.comparison,
                    "iota_before": iota_to_jsonable(rec.iota_before),
                    "iota_after": iota_to_jsonable(rec.iota_after),
                })
    return MonotonicityReport(ok=not violations, checked=checked,
                              violations=tuple(violations))


# ---------------------------------------------------------------------------
# trace export
# ---------------------------------------------------------------------------


def component_to_jsonable(comp: StratumComponent) -> dict:
    return {
        "cid": comp.cid,
        "variables": list(comp.variables),
        "label": comp.label,
        "original": comp.original,
        "conditions": [to_string(q) for q in comp.conditions],
    }


def chart_to_jsonable(chart: ChartState) -> dict:
    out: dict[str, Any] = {
        "id": chart.chart_id,
        "step": chart.step,
        "variables": list(chart.variables),
        "generators": [to_string(g) for g in chart.generators],
        "u_block": list(chart.frame.u_block),
        "y_block": list(chart.frame.y_block),
        "boundary": [
            {
                "generator": to_string(b.generator),
                "status": b.status,
                "birth_step": b.birth_step,
                "cid": b.cid,
            }
            for b in chart.frame.boundary
        ],
        "stratum": None if chart.stratum is None else [
            component_to_jsonable(c) for c in chart.stratum],
        "residue_degree": chart.residue_degree,
    }
    if chart.lineage is not None:
        out["parent"] = chart.lineage.parent_id
        out["center"] = list(chart.lineage.center.variables)
        out["chart_var"] = chart.lineage.chart_var
    return out


def record_to_jsonable(rec: PointRecord) -> dict:
    return {
        "chart": rec.chart_id,
        "parent": rec.parent_id,
        "point": rec.point,
        "classification": rec.classification,
        "iota_before": iota_to_jsonable(rec.iota_before),
        "iota_after": iota_to_jsonable(rec.iota_after),
        "comparison": rec.comparison,
    }


def trace_to_jsonable(trace: ResolutionTrace) -> dict:
    return {
        "label_mode": trace.label_mode,
        "status": trace.status,
        "error": trace.error,
        "steps": len(trace.events),
        "charts": [chart_to_jsonable(c) for c in trace.charts.values()],
        "events": [
            {
                "step": ev.step,
                "chart": ev.chart_id,
                "center": {
                    "variables": list(ev.center.variables),
                    "kind": ev.center.kind,
                    "label": ev.center_label,
                },
                "created": list(ev.created),
                "records": [record_to_jsonable(r) for r in ev.records],
            }
            for ev in trace.events
        ],
    }


def _dot_escape(text: str) -> str:
    return (text.replace("\\", "\\\\").replace('"', '\\"')
            .replace("\n", "\\n"))


def trace_to_dot(trace: ResolutionTrace) -> str:
    """Graphviz rendering: charts as nodes (generator plus invariant case),
    blow-ups as edges labelled with the center and the chart variable."""
    lines = ["digraph resolution {", "  node [shape=box];"]
    for chart in trace.charts.values():
        gen = ", ".join(to_string(g) for g in chart.generators)
        try:
            case = compute_iota(chart).case
            tag = f"case {case}"
        except (InputError, ScopeError):
            tag = "unresolved"
        label = _dot_escape(f"{chart.chart_id}\n{gen}\n{tag}")
        lines.append(f'  "{_dot_escape(chart.chart_id)}" [label="{label}"];')
    for ev in trace.events:
        center = "V(" + ", ".join(ev.center.variables) + ")"
        for child_id in ev.created:
            child = trace.charts[child_id]
            var = child.lineage.chart_var if child.lineage else "?"
            lines.append(
                f'  "{_dot_escape(ev.chart_id)}" -> '
                f'"{_dot_escape(child_id)}" '
                f'[label="{_dot_escape(center + " / " + var)}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
