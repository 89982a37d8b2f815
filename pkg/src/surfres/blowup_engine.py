"""Affine chart blow-ups for embedded surfaces.

This module implements the state of one affine chart of an ambient smooth
space together with the hypersurface (or complete intersection) it carries,
and the operations that drive a resolution process:

* ``permissible_check`` -- decide whether a coordinate subvariety is a
  permissible blow-up center (equimultiple, no component swallowed,
  normal crossings with the boundary),
* ``blow_up_chart``  -- pass to one affine chart of the blow-up, taking
  strict transforms of the defining ideal and of every boundary component
  and appending the new exceptional divisor,
* ``locate_point``   -- move the chart origin to another closed point of
  the exceptional divisor, extending the residue field if the point is not
  rational,
* ``classify_point`` -- compare the chart origin with the parent point
  (dropped / near / O-near / very near / very O-near),
* ``transform_polyhedron_expected`` -- the purely combinatorial prediction
  for how a characteristic polyhedron moves under a permissible blow-up.

Everything is exact; no floating point is used anywhere.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Any, Mapping

from .char_polyhedron import FPolyhedron
from .exact_algebra import (
    PRIME_FIELD,
    FieldDescriptor,
    InputError,
    Monomial,
    Polynomial,
    ScopeError,
    fp_divmod,
    fp_trim,
    ord_at,
    substitute_many,
    divide_exactly,
    to_string,
)
from .local_frame import (
    NEW,
    OLD,
    BoundaryComponent,
    Frame,
    NuStar,
    compute_directrix,
    directrix_of_JO,
    initial_form,
    nu_star,
)

# -- center kinds -----------------------------------------------------------

CLOSED_POINT = "closed_point"
COORDINATE_CURVE = "coordinate_curve"

# -- point classifications, ordered from weakest to strongest ----------------

DROPPED = "dropped"
NEAR = "near"
O_NEAR = "O_near"
VERY_NEAR = "very_near"
VERY_O_NEAR = "very_O_near"


# ---------------------------------------------------------------------------
# chart state
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StratumComponent:
    """One irreducible component of the locus of maximal (log-)multiplicity.

    ``variables`` give the coordinate part V(variables); ``conditions`` hold
    additional non-coordinate defining equations (empty for coordinate
    components, which are the only ones blow-up centers may come from).
    ``label`` is the age marker used by the center-selection policy and
    ``cid`` a chart-unique identifier, stable under strict transforms.
    ``original`` marks components that are strict transforms of components
    present when the current log-multiplicity value was first attained; the
    invariant's case analysis consults this flag (labels only steer center
    selection).  When left as None it defaults to ``label == 0``.
    """

    cid: int
    variables: tuple[str, ...]
    label: int
    conditions: tuple[Polynomial, ...] = ()
    original: bool | None = None

    def __post_init__(self) -> None:
        if not self.variables:
            raise InputError("a stratum component needs at least one variable")
        if len(set(self.variables)) != len(self.variables):
            raise InputError("duplicate variable in stratum component")
        if self.original is None:
            object.__setattr__(self, "original", self.label == 0)

    @property
    def is_coordinate(self) -> bool:
        return not self.conditions


@dataclass(frozen=True)
class Center:
    """A blow-up center given by coordinate equations V(variables)."""

    variables: tuple[str, ...]
    kind: str

    def __post_init__(self) -> None:
        if self.kind not in (CLOSED_POINT, COORDINATE_CURVE):
            raise InputError(f"unknown center kind: {self.kind!r}")
        if not self.variables:
            raise InputError("a center needs at least one variable")
        if len(set(self.variables)) != len(self.variables):
            raise InputError("duplicate variable in center")


@dataclass(frozen=True)
class Lineage:
    """How a chart arose from its parent chart."""

    parent_id: str
    center: Center
    chart_var: str
    center_label: int | None = None
    center_was_component: bool = False


@dataclass(frozen=True)
class ChartState:
    """One affine chart: ambient coordinates, defining ideal, local frame.

    ``frame`` fixes the splitting of the coordinates into a u-block and a
    y-block and carries the boundary components with their old/new history.
    ``stratum`` caches the components of the maximal stratum (None when it
    has not been computed for this chart yet).  ``residue_degree`` is the
    degree of the residue field of the chart origin over the original base
    field (grows under non-rational point location).
    """

    chart_id: str
    field: FieldDescriptor
    variables: tuple[str, ...]
    generators: tuple[Polynomial, ...]
    frame: Frame
    step: int = 0
    stratum: tuple[StratumComponent, ...] | None = None
    lineage: Lineage | None = None
    residue_degree: int = 1

    def __post_init__(self) -> None:
        if not self.generators:
            raise InputError("a chart needs at least one generator")
        if set(self.frame.variables) != set(self.variables):
            raise InputError("frame variables must match the chart variables")
        for g in self.generators:
            if g.is_zero:
                raise InputError("zero generator in chart state")
            if tuple(g.variables) != tuple(self.variables):
                raise InputError(
                    "generator variable list does not match the chart")
            if g.field != self.field:
                raise InputError("generator field does not match the chart")

    @property
    def nu(self) -> NuStar:
        return nu_star(self.generators)

    def old_components(self) -> tuple[BoundaryComponent, ...]:
        return self.frame.old_components()

    def new_components(self) -> tuple[BoundaryComponent, ...]:
        return self.frame.new_components()


def make_chart(
    field: FieldDescriptor,
    variables: tuple[str, ...],
    generators: tuple[Polynomial, ...],
    u_block: tuple[str, ...],
    y_block: tuple[str, ...],
    boundary: tuple[BoundaryComponent, ...] = (),
    chart_id: str = "root",
    step: int = 0,
) -> ChartState:
    """Convenience constructor wiring a frame into a fresh chart state."""
    frame = Frame(u_block=u_block, y_block=y_block, boundary=boundary)
    return ChartState(
        chart_id=chart_id,
        field=field,
        variables=variables,
        generators=generators,
        frame=frame,
        step=step,
    )


# ---------------------------------------------------------------------------
# directrix dimensions (shared by classification and the invariant module)
# ---------------------------------------------------------------------------


def directrix_dimension(chart: ChartState) -> int:
    """e(X,x): ambient dimension minus the rank of the directrix equations."""
    initials = [initial_form(g, g.variables) for g in chart.generators]
    rank, _forms = compute_directrix(initials, chart.frame)
    return len(chart.variables) - rank


def directrix_dimension_old(chart: ChartState) -> int:
    """e^O(X,x): same, with the old boundary folded into the ideal."""
    e_o, _forms = directrix_of_JO(list(chart.generators), chart.frame)
    return e_o


# ---------------------------------------------------------------------------
# center validation and permissibility
# ---------------------------------------------------------------------------


def _is_coordinate_generator(g: Polynomial) -> str | None:
    """The variable v when g is a unit multiple of v, else None."""
    terms = list(g.terms)
    if len(terms) != 1:
        return None
    mono, _c = terms[0]
    d = mono.as_dict()
    if len(d) == 1:
        (var, exp), = d.items()
        if exp == 1:
            return var
    return None


def _canonical_center(chart: ChartState, center: Center) -> Center:
    """Validate a center against a chart and order its variables frame-wise."""
    missing = [v for v in center.variables if v not in chart.variables]
    if missing:
        raise InputError(f"center variable(s) {missing} not in the chart")
    ordered = tuple(v for v in chart.variables if v in set(center.variables))
    if center.kind == CLOSED_POINT:
        if set(ordered) != set(chart.variables):
            raise InputError(
                "a closed-point center must use every chart variable")
    else:
        y_set = set(chart.frame.y_block)
        if not y_set <= set(ordered):
            raise InputError(
                "a curve center must contain the whole y-block")
        codim_left = len(chart.variables) - len(ordered)
        if set(ordered) != y_set and codim_left != 1:
            raise InputError(
                "a curve center must be V(y-block) or leave exactly one "
                "free coordinate")
        if set(ordered) == set(chart.variables):
            raise InputError("a curve center cannot be the closed point")
    return Center(variables=ordered, kind=center.kind)


def _vanishes_on(g: Polynomial, variables: tuple[str, ...]) -> bool:
    """Whether g restricts to zero on V(variables)."""
    zero = Polynomial.zero(g.field, g.variables)
    restricted = substitute_many(g, {v: zero for v in variables})
    return restricted.is_zero


@dataclass(frozen=True)
class PermissibilityReport:
    """Outcome of the permissibility test for a candidate center."""

    ok: bool
    violations: tuple[str, ...] = ()


def permissible_check(chart: ChartState, center: Center) -> PermissibilityReport:
    """Check that V(center) is a permissible blow-up center in this chart.

    Four conditions are verified:

    1. every generator is equimultiple along the center (its order along
       the center ideal equals its order at the origin);
    2. the center does not contain an irreducible component of the chart's
       hypersurface (detected when a principal generator vanishes on it);
    3. the center has normal crossings with the boundary -- guaranteed for
       coordinate boundary components; a non-coordinate boundary generator
       makes the check fail because n.c. cannot be certified;
    4. every old boundary component contains the center, so the number of
       old components (and hence the log-multiplicity) stays constant
       along it.

    Raises InputError when the center is malformed for this chart.
    """
    center = _canonical_center(chart, center)
    violations: list[str] = []
    for g in chart.generators:
        o_center = ord_at(g, center.variables)
        o_origin = ord_at(g, chart.variables)
        if o_center != o_origin:
            violations.append(
                f"generator {to_string(g)} has order {o_center} along the "
                f"center but order {o_origin} at the origin")
    # A center of codimension larger than the variety's may (and for curve
    # centers must) lie on the variety; only a center of codimension at most
    # the number of generators can swallow a whole irreducible component.
    if len(center.variables) <= len(chart.generators) and all(
            _vanishes_on(g, center.variables) for g in chart.generators):
        violations.append(
            "the center contains an irreducible component of the variety")
    for comp in chart.frame.boundary:
        if _is_coordinate_generator(comp.generator) is None:
            violations.append(
                "cannot certify normal crossings with the non-coordinate "
                f"boundary component {{{to_string(comp.generator)} = 0}}")
    for comp in chart.frame.old_components():
        name = _is_coordinate_generator(comp.generator)
        if name is not None and name not in center.variables:
            violations.append(
                f"the old boundary component V({name}) meets the origin but "
                "does not contain the center (the number of old components "
                "would not be constant along it)")
    return PermissibilityReport(ok=not violations, violations=tuple(violations))


# ---------------------------------------------------------------------------
# the blow-up
# ---------------------------------------------------------------------------


def _variable_multiplicity(g: Polynomial, var: str) -> int:
    """The largest k with var^k dividing g (g assumed nonzero)."""
    return min(mono.exponent(var) for mono, _c in g.terms)


def _strict_transform(g: Polynomial, subs: Mapping[str, Polynomial],
                      chart_var: str, expected: int | None) -> Polynomial:
    """Total transform divided by the exact exceptional multiplicity.

    When ``expected`` is given the multiplicity of ``chart_var`` in the
    total transform must equal it (multiplicativity along a permissible
    center); a mismatch is a hard internal error.
    """
    total = substitute_many(g, subs)
    if total.is_zero:
        raise InputError("zero total transform")
    mult = _variable_multiplicity(total, chart_var)
    if expected is not None and mult != expected:
        raise InputError(
            f"exceptional multiplicity {mult} of {to_string(g)} does not "
            f"match the order {expected} along the center")
    if mult == 0:
        return total
    return divide_exactly(total, chart_var, mult)


def blow_up_chart(chart: ChartState, center: Center, chart_var: str) -> ChartState:
    """The affine chart D+(chart_var) of the blow-up of the chart in V(center).

    The substitution is w -> w * chart_var for every center variable w other
    than chart_var; each generator is divided exactly by chart_var to the
    order of the generator along the center, and that division is asserted
    to be exact of exactly that order.  Boundary components are replaced by
    their strict transforms (dropped when they miss the new origin) and the
    exceptional divisor V(chart_var) is appended as a new component.
    """
    center = _canonical_center(chart, center)
    if chart_var not in center.variables:
        raise InputError(
            f"chart variable {chart_var!r} must belong to the center")
    report = permissible_check(chart, center)
    if not report.ok:
        raise InputError(
            "center is not permissible: " + "; ".join(report.violations))

    w = chart_var
    w_poly = Polynomial.variable(chart.field, chart.variables, w)
    subs = {
        v: Polynomial.variable(chart.field, chart.variables, v) * w_poly
        for v in center.variables if v != w
    }

    new_generators = tuple(
        _strict_transform(g, subs, w, int(ord_at(g, center.variables)))
        for g in chart.generators
    )

    step = chart.step + 1

    new_boundary: list[BoundaryComponent] = []
    for comp in chart.frame.boundary:
        st = _strict_transform(comp.generator, subs, w, None)
        if st.constant_coefficient():
            continue  # misses the new chart origin
        new_boundary.append(replace(comp, generator=st))
    max_cid = max((c.cid for c in chart.frame.boundary), default=-1)
    new_boundary.append(BoundaryComponent(
        generator=w_poly,
        status=NEW,
        birth_step=step,
        cid=max_cid + 1,
    ))

    u_block, y_block = chart.frame.u_block, chart.frame.y_block
    if w in y_block:
        y_block = tuple(v for v in y_block if v != w)
        u_block = (w,) + u_block
    new_frame = Frame(u_block=u_block, y_block=y_block,
                      boundary=tuple(new_boundary))

    new_stratum: tuple[StratumComponent, ...] | None = None
    if chart.stratum is not None:
        kept = []
        for comp in chart.stratum:
            if not comp.is_coordinate:
                continue  # must be recomputed from scratch downstream
            if w in comp.variables:
                continue  # the strict transform misses the new origin
            kept.append(comp)
        new_stratum = tuple(kept)

    center_label: int | None = None
    center_was_component = False
    if chart.stratum is not None:
        for comp in chart.stratum:
            if comp.is_coordinate and set(comp.variables) == set(center.variables):
                center_label = comp.label
                center_was_component = True
                break

    return ChartState(
        chart_id=f"{chart.chart_id}/{w}",
        field=chart.field,
        variables=chart.variables,
        generators=new_generators,
        frame=new_frame,
        step=step,
        stratum=new_stratum,
        lineage=Lineage(
            parent_id=chart.chart_id,
            center=center,
            chart_var=w,
            center_label=center_label,
            center_was_component=center_was_component,
        ),
        residue_degree=chart.residue_degree,
    )


# ---------------------------------------------------------------------------
# point location on the exceptional divisor
# ---------------------------------------------------------------------------


def _fp_poly_is_irreducible(coeffs: tuple[int, ...], p: int) -> bool:
    """Brute-force irreducibility over F_p (degrees here are tiny)."""
    coeffs = fp_trim(coeffs, p)
    d = len(coeffs) - 1
    if d < 1:
        return False
    if d == 1:
        return True

    def monics(deg: int):
        if deg == 0:
            yield (1,)
            return
        span = [()]
        for _ in range(deg):
            span = [s + (c,) for s in span for c in range(p)]
        for lower in span:
            yield lower + (1,)

    for deg in range(1, d // 2 + 1):
        for g in monics(deg):
            _q, r = fp_divmod(coeffs, g, p)
            if not r:
                return False
    return True


def _univariate_condition(cond: Polynomial, var: str) -> tuple[int, ...]:
    """Ascending F_p coefficient tuple of a univariate condition in var."""
    field = cond.field
    if field.kind != PRIME_FIELD:
        raise ScopeError(
            "residue-field extensions are only supported over prime fields")
    support = cond.support_variables()
    if support - {var}:
        raise InputError(
            f"the condition for {var!r} must be univariate in {var!r}")
    degree = int(cond.total_degree())
    coeffs = []
    for i in range(degree + 1):
        c = cond.coefficient(Monomial.from_dict({var: i} if i else {}))
        coeffs.append(c.value if c else 0)
    return fp_trim(tuple(coeffs), field.characteristic)


def _lift_polynomial(f: Polynomial, new_field: FieldDescriptor) -> Polynomial:
    terms = {m: _lift_element(c, new_field) for m, c in f.terms}
    return Polynomial.make(new_field, f.variables, terms)


def _lift_element(c: Any, new_field: FieldDescriptor) -> Any:
    return new_field.from_int(c.value)


def locate_point(chart: ChartState, moves: Mapping[str, Any]) -> ChartState:
    """Move the chart origin to another closed point of the current chart.

    ``moves`` maps a variable either to a field element a (the coordinate of
    the new point: the chart is re-centered by the translation v -> v + a)
    or to a univariate irreducible polynomial over a prime field (a
    non-rational point: the residue field is extended by a root and the
    variable translated by that root).  The new point must stay on the
    exceptional divisor: the chart variable that created this chart cannot
    be assigned a nonzero coordinate.
    """
    field = chart.field
    unknown = [v for v in moves if v not in chart.variables]
    if unknown:
        raise InputError(f"cannot move along unknown variable(s) {unknown}")

    conditions = {v: m for v, m in moves.items() if isinstance(m, Polynomial)}
    translations = {v: m for v, m in moves.items() if not isinstance(m, Polynomial)}

    if chart.lineage is not None:
        w = chart.lineage.chart_var
        if (w in translations and translations[w]) or w in conditions:
            raise InputError(
                "the located point must stay on the exceptional divisor "
                f"V({w})")

    if len(conditions) > 1:
        raise ScopeError(
            "only one residue-field extension per location step is supported")

    new_field = field
    degree = 1
    generators = chart.generators
    boundary = chart.frame.boundary
    stratum = chart.stratum
    values: dict[str, Any] = dict(translations)

    if conditions:
        (var, cond), = conditions.items()
        coeffs = _univariate_condition(cond, var)
        p = field.characteristic
        if not _fp_poly_is_irreducible(coeffs, p):
            raise InputError(
                f"the condition for {var!r} is not irreducible over F_{p}")
        degree = len(coeffs) - 1
        if degree == 1:
            # linear condition: an ordinary rational translation
            # c0 + c1 v = 0  =>  v = -c0/c1
            a = -field.from_int(coeffs[0]) / field.from_int(coeffs[1])
            values[var] = a
        else:
            monic = coeffs
            lead = monic[-1]
            if lead != 1:
                inv = pow(lead, p - 2, p)
                monic = fp_trim(tuple(c * inv for c in monic), p)
            new_field = FieldDescriptor.finite_extension(p, monic, name="s")
            generators = tuple(_lift_polynomial(g, new_field) for g in generators)
            boundary = tuple(
                replace(b, generator=_lift_polynomial(b.generator, new_field))
                for b in boundary)
            if stratum is not None:
                stratum = tuple(
                    replace(c, conditions=tuple(
                        _lift_polynomial(q, new_field) for q in c.conditions))
                    for c in stratum)
            lifted_values = {
                v: _lift_element(a, new_field) for v, a in values.items()}
            values = lifted_values
            values[var] = new_field.generator()

    if not any(values.values()) and new_field == field:
        return chart

    shifts = {
        v: (Polynomial.variable(new_field, chart.variables, v)
            + Polynomial.constant(new_field, chart.variables, a))
        for v, a in values.items() if a
    }

    def shift(f: Polynomial) -> Polynomial:
        return substitute_many(f, shifts) if shifts else f

    new_generators = tuple(shift(g) for g in generators)
    if any(g.is_zero for g in new_generators):
        raise InputError("the located point is not on the hypersurface")

    new_boundary: list[BoundaryComponent] = []
    for comp in boundary:
        g2 = shift(comp.generator)
        if g2.constant_coefficient():
            continue  # the component does not pass through the new point
        new_boundary.append(replace(comp, generator=g2))

    new_stratum: tuple[StratumComponent, ...] | None = None
    if stratum is not None:
        kept = []
        for comp in stratum:
            if any(v in values and values[v] for v in comp.variables):
                continue  # coordinate part misses the new point
            new_conditions = []
            missed = False
            for q in comp.conditions:
                q2 = shift(q)
                if q2.is_zero:
                    continue
                if q2.constant_coefficient():
                    missed = True
                    break
                new_conditions.append(q2)
            if missed:
                continue
            kept.append(replace(comp, conditions=tuple(new_conditions)))
        new_stratum = tuple(kept)

    suffix = ",".join(
        f"{v}" for v in sorted(values) if values[v]) or "id"
    return ChartState(
        chart_id=f"{chart.chart_id}@{suffix}",
        field=new_field,
        variables=chart.variables,
        generators=new_generators,
        frame=Frame(u_block=chart.frame.u_block, y_block=chart.frame.y_block,
                    boundary=tuple(new_boundary)),
        step=chart.step,
        stratum=new_stratum,
        lineage=chart.lineage,
        residue_degree=chart.residue_degree * degree,
    )


# ---------------------------------------------------------------------------
# nearness classification
# ---------------------------------------------------------------------------


def classify_point(parent: ChartState, child: ChartState) -> str:
    """Compare the child chart origin with the parent point.

    Returns the strongest applicable tag among ``dropped`` (the multiplicity
    invariant improved), ``near`` (same nu*), ``O_near`` (near and the same
    number of old boundary components), ``very_near`` (near and the same
    directrix dimension e) and ``very_O_near`` (O-near, very near, and the
    same log-directrix dimension e^O).
    """
    nu_parent = nu_star(parent.generators)
    nu_child = nu_star(child.generators)
    if nu_child < nu_parent:
        return DROPPED
    if nu_parent < nu_child:
        raise InputError(
            "the multiplicity invariant increased across the blow-up; "
            "the center cannot have been permissible")
    o_near = len(child.old_components()) == len(parent.old_components())
    very_near = directrix_dimension(child) == directrix_dimension(parent)
    if o_near and very_near:
        if directrix_dimension_old(child) == directrix_dimension_old(parent):
            return VERY_O_NEAR
    if very_near:
        return VERY_NEAR
    if o_near:
        return O_NEAR
    return NEAR


# ---------------------------------------------------------------------------
# predicted polyhedron transform
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TransformedPolyhedron:
    """Predicted polyhedron plus a flag for vertices leaving the quadrant."""

    polyhedron: FPolyhedron
    dropped_vertices: bool


def transform_polyhedron_expected(
    poly: FPolyhedron,
    center: Center,
    chart_var: str,
    frame: Frame,
) -> TransformedPolyhedron:
    """The combinatorial image of a characteristic polyhedron.

    For a closed-point blow-up in dimension two the u1-chart maps a point
    (v1, v2) to (v1 + v2 - 1, v2) and the u2-chart to (v1, v1 + v2 - 1);
    in dimension one the single chart maps (v) to (v - 1).  For a curve
    center containing u_i the i-th coordinate drops by one.  Vertices with
    a negative coordinate no longer constrain the transform; they are
    removed and reported through ``dropped_vertices``.
    """
    e = poly.dim
    if e not in (1, 2):
        raise InputError(f"no transform rule in dimension {e}")
    u = frame.u_block

    if center.kind == CLOSED_POINT:
        if e == 1:
            def mapper(v):  # type: ignore[misc]
                return (v[0] - 1,)
        elif chart_var == u[0]:
            def mapper(v):
                return (v[0] + v[1] - 1, v[1])
        elif len(u) > 1 and chart_var == u[1]:
            def mapper(v):
                return (v[0], v[0] + v[1] - 1)
        else:
            raise InputError(
                "the predicted transform needs a u-block chart variable")
    else:
        if e != 2:
            raise InputError("curve centers act on two-dimensional polyhedra")
        extra = [v for v in center.variables if v in u]
        if len(extra) != 1:
            raise InputError(
                "a curve center must contain exactly one u-variable")
        if extra[0] == u[0]:
            def mapper(v):
                return (v[0] - 1, v[1])
        else:
            def mapper(v):
                return (v[0], v[1] - 1)

    mapped = [mapper(v) for v in poly.vertices]
    kept = [v for v in mapped if all(c >= 0 for c in v)]
    dropped = len(kept) < len(mapped)
    return TransformedPolyhedron(
        polyhedron=FPolyhedron.from_points(e, kept),
        dropped_vertices=dropped,
    )
