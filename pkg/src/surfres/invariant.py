"""The three-part resolution invariant iota = (iota0, iota_c, iota_poly).

For a point on a (log-)surface presented as a chart state this module
computes

* ``iota0``  = (nu*, |O(x)|, e, e^O): the multiplicity vector, the number
  of old boundary components, and the plain/log directrix dimensions;
* ``iota_c``: a six-slot tuple measuring the original part C of the maximal
  stratum through the point -- identically "zero" when C is empty or the
  point is regular, a fixed formal value when C itself is the next center
  (an isolated point or a permissible curve), and the full tuple
  (nu*(I_C), |O_C(x)|, e_C, e_C^O, delta_C, delta_C^O) otherwise;
* ``iota_poly``: the polyhedral tail (beta, gamma, sigma, alpha) read off
  the prepared characteristic polyhedron of the log-ideal in a frame
  adapted to the log-directrix, with the side convention driven by the
  number of new boundary components.

Tuples are compared lexicographically slot by slot; the blow-up algorithm
is designed so that iota drops strictly at every very near point.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Any, Sequence

from .blowup_engine import (
    COORDINATE_CURVE,
    Center,
    ChartState,
    StratumComponent,
    directrix_dimension,
    directrix_dimension_old,
    permissible_check,
)
from .char_polyhedron import (
    BUDGET_EXHAUSTED,
    FPolyhedron,
    delta,
    face_numbers,
    polyhedron_of,
    prepare,
    sigma_search,
)
from .exact_algebra import (
    INF,
    FieldDescriptor,
    InputError,
    Monomial,
    Polynomial,
    ScopeError,
    substitute_many,
    to_string,
)
from .local_frame import (
    Frame,
    NuStar,
    compose_with_old_boundary,
    compute_directrix,
    directrix_of_JO,
    initial_form,
    nu_star,
    row_reduce,
)

CASE_I = "I"
CASE_II = "II"
CASE_III = "III"
CASE_IV = "IV"
CASE_V = "V"

LESS = "less"
EQUAL = "equal"
GREATER = "greater"

#: Formal bottom value for the nu* slot of iota_c outside Case III.
FORMAL_ZERO = NuStar((0,))

_ALL_INF = (INF, INF, INF, INF)
_ALL_ZERO = (0, 0, 0, 0)


# ---------------------------------------------------------------------------
# case classification
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CaseInfo:
    """Which shape the original stratum part C takes at the chart origin."""

    tag: str
    components: tuple[StratumComponent, ...] = ()


def chart_is_regular(chart: ChartState) -> bool:
    """Whether the chart origin is a regular (or empty) point of the variety."""
    orders = nu_star(chart.generators).orders
    if orders[0] == 0:
        return True  # a unit generator: the chart misses the variety
    if orders[-1] > 1:
        return False
    # all generators have order one; regularity needs independent initials
    rows = []
    for g in chart.generators:
        lin = initial_form(g, g.variables)
        rows.append([lin.coefficient(Monomial.from_dict({v: 1}))
                     for v in chart.variables])
    return len(row_reduce(rows, chart.field)) == len(chart.generators)


def classify_case(chart: ChartState) -> CaseInfo:
    """Classify the chart origin by the original part C of the maximal stratum.

    Case V: the chart misses the variety, or the origin is a regular point
    with no old boundary component through it (transversality to the young
    boundary components is then automatic and the point is finished).  A
    regular point lying on old boundary components is still classified
    through C below, because separating the variety from the boundary may
    need further blow-ups.  C is the union of the stratum components
    through the origin that are strict transforms of the components present
    when the current log-multiplicity value was first attained
    (``original`` components; freshly created components never belong to
    C): Case IV when C is empty, Case I when C is the origin itself, Case
    II when C is one permissible coordinate curve, Case III otherwise
    (several components, a curve that is not permissible, or a component
    with non-coordinate equations).
    """
    if nu_star(chart.generators).orders[0] == 0:
        return CaseInfo(CASE_V)
    if chart_is_regular(chart) and not chart.frame.old_components():
        return CaseInfo(CASE_V)
    if chart.stratum is None:
        raise InputError(
            "the maximal stratum of this chart has not been computed")
    comps = tuple(c for c in chart.stratum if c.original)
    if not comps:
        return CaseInfo(CASE_IV)
    n = len(chart.variables)
    if len(comps) == 1:
        comp = comps[0]
        if comp.is_coordinate and len(comp.variables) == n:
            return CaseInfo(CASE_I, comps)
        if comp.is_coordinate and len(comp.variables) == n - 1:
            try:
                report = permissible_check(
                    chart, Center(comp.variables, COORDINATE_CURVE))
            except InputError:
                return CaseInfo(CASE_III, comps)
            if report.ok:
                return CaseInfo(CASE_II, comps)
    return CaseInfo(CASE_III, comps)


# ---------------------------------------------------------------------------
# iota0
# ---------------------------------------------------------------------------


def iota0(chart: ChartState) -> tuple[NuStar, int, int, int]:
    """(nu*, number of old boundary components, e, e^O)."""
    nu = nu_star(chart.generators)
    n_old = len(chart.frame.old_components())
    if nu.orders[0] == 0:
        return (nu, n_old, 0, 0)
    return (nu, n_old, directrix_dimension(chart),
            directrix_dimension_old(chart))


# ---------------------------------------------------------------------------
# directrix-adapted frames
# ---------------------------------------------------------------------------


def _linear_rows(forms: Sequence[Polynomial], order: Sequence[str],
                 field: FieldDescriptor) -> list[list[Any]]:
    rows = []
    for f in forms:
        if f.is_zero or int(f.total_degree()) != 1:
            raise InputError("directrix forms must be nonzero linear forms")
        rows.append([f.coefficient(Monomial.from_dict({v: 1}))
                     for v in order])
    return rows


def adapt_frame_to_forms(
    gens: Sequence[Polynomial],
    frame: Frame,
    forms: Sequence[Polynomial],
) -> tuple[tuple[Polynomial, ...], Frame]:
    """Change coordinates so the given linear forms become y-coordinates.

    The forms are row-reduced preferring y-block pivots (so boundary
    u-coordinates keep their names whenever possible); each non-trivial
    pivot v of a form v + tail is replaced by v - tail in every generator
    and boundary component, after which the form reads as the bare
    coordinate v.  Returns the rewritten generators and a frame whose
    y-block is exactly the pivot set.
    """
    if not gens:
        raise InputError("adapt_frame_to_forms needs generators")
    field = gens[0].field
    variables = gens[0].variables
    order = tuple(frame.y_block) + tuple(frame.u_block)
    rref = row_reduce(_linear_rows(forms, order, field), field) if forms else []

    pivots: list[str] = []
    subs: dict[str, Polynomial] = {}
    for row in rref:
        idx = next(i for i, c in enumerate(row) if c)
        pivot = order[idx]
        pivots.append(pivot)
        tail_terms = {
            Monomial.from_dict({order[i]: 1}): c
            for i, c in enumerate(row) if c and i != idx
        }
        if tail_terms:
            tail = Polynomial.make(field, variables, tail_terms)
            subs[pivot] = (
                Polynomial.variable(field, variables, pivot) - tail)

    def rewrite(g: Polynomial) -> Polynomial:
        return substitute_many(g, subs) if subs else g

    new_gens = tuple(rewrite(g) for g in gens)
    pivot_set = set(pivots)
    y_block = tuple(v for v in frame.variables if v in pivot_set)
    u_block = tuple(v for v in frame.u_block if v not in pivot_set) + tuple(
        v for v in frame.y_block if v not in pivot_set)
    boundary = tuple(
        replace(b, generator=rewrite(b.generator)) for b in frame.boundary)
    return new_gens, Frame(u_block=u_block, y_block=y_block,
                           boundary=boundary)


def _coordinate_of(g: Polynomial) -> str | None:
    terms = list(g.terms)
    if len(terms) != 1:
        return None
    d = terms[0][0].as_dict()
    if len(d) == 1:
        (var, exp), = d.items()
        if exp == 1:
            return var
    return None


# ---------------------------------------------------------------------------
# iota_c
# ---------------------------------------------------------------------------


def _ideal_of_c(comps: Sequence[StratumComponent],
                field: FieldDescriptor,
                variables: tuple[str, ...]) -> list[Polynomial]:
    """Generators of the reduced ideal of the union of the components.

    One component gives its own equations.  Several coordinate components
    are supported when they share a common coordinate part and each adds
    exactly one extra variable: V(c.., a) u V(c.., b) = V(c.., a*b).
    """
    if len(comps) == 1:
        comp = comps[0]
        gens = [Polynomial.variable(field, variables, v)
                for v in comp.variables]
        gens.extend(comp.conditions)
        return gens
    if any(not c.is_coordinate for c in comps):
        raise ScopeError(
            "no product presentation for a union containing a component "
            "with non-coordinate equations")
    common = set(comps[0].variables)
    for comp in comps[1:]:
        common &= set(comp.variables)
    extras: list[str] = []
    for comp in comps:
        extra = [v for v in comp.variables if v not in common]
        if len(extra) != 1:
            raise ScopeError(
                "no product presentation for this union of components")
        extras.append(extra[0])
    if len(set(extras)) != len(extras):
        raise ScopeError("components of the union are not distinct")
    gens = [Polynomial.variable(field, variables, v)
            for v in sorted(common, key=variables.index)]
    product = Monomial.from_dict({v: 1 for v in extras})
    gens.append(Polynomial.make(field, variables, {product: field.one()}))
    return gens


def _delta_of(gens: Sequence[Polynomial], frame: Frame) -> Fraction | float:
    """delta of the prepared polyhedron; scope error on budget exhaustion."""
    result = prepare(gens, frame)
    if result.status == BUDGET_EXHAUSTED:
        raise ScopeError("preparation budget exhausted while computing delta")
    return delta(result.polyhedron)


def iota_c(
    chart: ChartState,
    case: CaseInfo | None = None,
    c_generators: Sequence[Polynomial] | None = None,
) -> tuple:
    """The six-slot stratum part (nu*(I_C), |O_C|, e_C, e_C^O, d_C, d_C^O).

    Outside Case III the tuple is formal: all-zero in Cases IV and V, and
    all-zero with a trailing 1 in Cases I and II (where C itself is the
    next center).  ``c_generators`` overrides the ideal of C, for unions
    that have no coordinate product presentation.
    """
    if case is None:
        case = classify_case(chart)
    if case.tag in (CASE_IV, CASE_V):
        return (FORMAL_ZERO, 0, 0, 0, 0, 0)
    if case.tag in (CASE_I, CASE_II):
        return (FORMAL_ZERO, 0, 0, 0, 0, 1)

    if c_generators is not None:
        gens = list(c_generators)
    else:
        gens = _ideal_of_c(case.components, chart.field, chart.variables)
    if not gens or any(g.is_zero for g in gens):
        raise InputError("the ideal of C needs nonzero generators")

    nu_c = nu_star(gens)
    n_old = len(chart.frame.old_components())

    initials = [initial_form(g, g.variables) for g in gens]
    r_c, forms_c = compute_directrix(initials, chart.frame)
    e_c = len(chart.variables) - r_c
    e_c_old, forms_c_old = directrix_of_JO(gens, chart.frame)

    if e_c == 0:
        delta_c: Fraction | float = INF
    else:
        adapted_gens, adapted_frame = adapt_frame_to_forms(
            gens, chart.frame, forms_c)
        delta_c = _delta_of(adapted_gens, adapted_frame)

    if e_c_old == 0:
        delta_c_old: Fraction | float = INF
    else:
        adapted_gens, adapted_frame = adapt_frame_to_forms(
            gens, chart.frame, forms_c_old)
        composed = compose_with_old_boundary(list(adapted_gens),
                                             adapted_frame)
        delta_c_old = _delta_of(composed, adapted_frame)

    return (nu_c, n_old, e_c, e_c_old, delta_c, delta_c_old)


# ---------------------------------------------------------------------------
# iota_poly
# ---------------------------------------------------------------------------


def _new_component_variables(frame: Frame) -> list[str]:
    out = []
    for comp in frame.new_components():
        var = _coordinate_of(comp.generator)
        if var is None:
            raise ScopeError(
                "a new boundary component is not a coordinate divisor in "
                "the adapted frame: " + to_string(comp.generator))
        if var not in frame.u_block:
            raise ScopeError(
                f"new boundary component V({var}) is not transverse to the "
                "log-directrix")
        out.append(var)
    return out


def _side_tuple(gens: Sequence[Polynomial], frame: Frame,
                poly: FPolyhedron, side: int) -> tuple:
    alpha, beta, gamma, _s = face_numbers(poly, side)
    result = sigma_search(list(gens), frame, side)
    if not result.certified:
        raise ScopeError("sigma could not be certified within the budget")
    return (beta, gamma, result.value, alpha)


def iota_poly(chart: ChartState, case: CaseInfo | None = None) -> tuple:
    """The polyhedral tail (beta, gamma, sigma, alpha) of the invariant.

    Zero when the point is regular or the log-directrix dimension e^O is 0;
    (0, 0, 0, delta^O) when e^O = 1; for e^O = 2 the face numbers of the
    prepared polyhedron of the log-ideal, taken on the side of the single
    new boundary component, or the lexicographic minimum over both sides
    when there are two -- and all-infinite when an original stratum
    component passes through the point or no new component does.
    """
    if case is None:
        case = classify_case(chart)
    if case.tag == CASE_V:
        return _ALL_ZERO

    e_old, forms = directrix_of_JO(list(chart.generators), chart.frame)
    if e_old == 0:
        return _ALL_ZERO
    if e_old > 2:
        raise ScopeError(f"log-directrix dimension {e_old} is out of scope")

    adapted_gens, adapted_frame = adapt_frame_to_forms(
        list(chart.generators), chart.frame, forms)

    if e_old == 1:
        composed = compose_with_old_boundary(list(adapted_gens),
                                             adapted_frame)
        return (0, 0, 0, _delta_of(composed, adapted_frame))

    # e^O = 2: the tuple is infinite unless the stratum has moved on (no
    # original component through the point) and the point lies on at least
    # one new boundary component.
    if case.components:
        return _ALL_INF
    new_vars = _new_component_variables(adapted_frame)
    if not new_vars:
        return _ALL_INF

    if len(new_vars) == 1 and adapted_frame.u_block[0] != new_vars[0]:
        u1, u2 = adapted_frame.u_block
        adapted_frame = Frame((u2, u1), adapted_frame.y_block,
                              adapted_frame.boundary)

    composed = compose_with_old_boundary(list(adapted_gens), adapted_frame)
    prepared = prepare(composed, adapted_frame)
    if prepared.status == BUDGET_EXHAUSTED:
        raise ScopeError(
            "preparation budget exhausted while computing iota_poly")
    poly = prepared.polyhedron
    if poly.is_empty:
        return _ALL_INF

    if len(new_vars) == 1:
        return _side_tuple(prepared.generators, adapted_frame, poly, 1)
    side1 = _side_tuple(prepared.generators, adapted_frame, poly, 1)
    side2 = _side_tuple(prepared.generators, adapted_frame, poly, 2)
    return side1 if _lex_cmp(side1, side2) <= 0 else side2


# ---------------------------------------------------------------------------
# the full invariant and its comparison
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class IotaInvariant:
    """iota(x) = (iota0; iota_c; iota_poly) plus the case tag it arose in."""

    iota0: tuple
    iota_c: tuple
    iota_poly: tuple
    case: str

    def as_tuple(self) -> tuple:
        return self.iota0 + self.iota_c + self.iota_poly


def compute_iota(chart: ChartState) -> IotaInvariant:
    case = classify_case(chart)
    return IotaInvariant(
        iota0=iota0(chart),
        iota_c=iota_c(chart, case),
        iota_poly=iota_poly(chart, case),
        case=case.tag,
    )


def _cmp_value(a: Any, b: Any) -> int:
    if isinstance(a, NuStar) or isinstance(b, NuStar):
        if not (isinstance(a, NuStar) and isinstance(b, NuStar)):
            raise InputError("cannot compare a nu* slot with a scalar slot")
        if a < b:
            return -1
        return 1 if b < a else 0
    if a < b:
        return -1
    return 1 if b < a else 0


def _lex_cmp(a: Sequence[Any], b: Sequence[Any]) -> int:
    if len(a) != len(b):
        raise InputError("cannot compare tuples of different shapes")
    for x, y in zip(a, b):
        c = _cmp_value(x, y)
        if c:
            return c
    return 0


def compare_iota(a: IotaInvariant, b: IotaInvariant) -> str:
    """Lexicographic comparison across all fourteen slots of the invariant."""
    c = _lex_cmp(a.as_tuple(), b.as_tuple())
    if c < 0:
        return LESS
    return GREATER if c > 0 else EQUAL


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------


def value_to_jsonable(v: Any) -> Any:
    """Exact JSON encoding: nu* as a list, inf as "inf", fractions "a/b"."""
    if isinstance(v, NuStar):
        return list(v.orders)
    if v == INF:
        return "inf"
    if isinstance(v, Fraction):
        if v.denominator == 1:
            return int(v)
        return f"{v.numerator}/{v.denominator}"
    if isinstance(v, int):
        return v
    raise InputError(f"cannot serialize invariant slot {v!r}")


def iota_to_jsonable(iota: IotaInvariant) -> dict:
    return {
        "case": iota.case,
        "iota0": [value_to_jsonable(v) for v in iota.iota0],
        "iota_c": [value_to_jsonable(v) for v in iota.iota_c],
        "iota_poly": [value_to_jsonable(v) for v in iota.iota_poly],
    }
