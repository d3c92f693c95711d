"""
Geometry Module
CP2 atlas, blow-up charts, base-point detection and symplectic factor tracking
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import sympy as sp

from .expr import CoeffContext, canonical, differentiate, is_zero, parse_expr, rewrite
from .poly import solve_on_line
from .ham import HamiltonianSystem
from .errors import (BlowDownError, EngineError, NotABasePointError,
                     UnresolvedLocusError, ZeroPolynomialError)

logger = logging.getLogger(__name__)

AFFINE = 'affine'
U_KIND = 'u'
V_KIND = 'U'


@dataclass
class Chart:
    """Coordinate chart (u, v) with f·u' = ∂K/∂v, f·v' = −∂K/∂u"""
    name: str
    kind: str
    depth: int
    u: sp.Symbol
    v: sp.Symbol
    to_affine: Dict[sp.Symbol, sp.Expr]
    field: Tuple[sp.Expr, sp.Expr]
    factor: sp.Expr
    loci: Dict[str, sp.Expr] = field(default_factory=dict)
    curve: Optional[str] = None
    parent: Optional['Chart'] = None
    substitution: Dict[sp.Symbol, sp.Expr] = field(default_factory=dict)
    inverse: Dict[sp.Symbol, sp.Expr] = field(default_factory=dict)

    @property
    def variables(self) -> Tuple[sp.Symbol, sp.Symbol]:
        return (self.u, self.v)

    @property
    def exceptional_var(self) -> Optional[sp.Symbol]:
        if self.kind == U_KIND:
            return self.u
        if self.kind == V_KIND:
            return self.v
        return None

    @property
    def line_var(self) -> Optional[sp.Symbol]:
        if self.kind == U_KIND:
            return self.v
        if self.kind == V_KIND:
            return self.u
        return None

    def point(self, value) -> Tuple[sp.Expr, sp.Expr]:
        """Coordinates of the point with line coordinate value on the curve"""
        value = canonical(value)
        return (sp.Integer(0), value) if self.kind == U_KIND else (value, sp.Integer(0))

    def dump(self) -> Dict:
        return {
            'id': self.name,
            'parent': self.parent.name if self.parent else None,
            'substitutions': {str(k): str(v) for k, v in self.substitution.items()},
            'field': [{'numerator': str(sp.numer(c)), 'denominator': str(sp.denom(c))} for c in self.field],
            'factor': str(self.factor),
        }


@dataclass
class BasePoint:
    chart: Chart
    coords: Tuple[sp.Expr, sp.Expr]
    twin: Optional[Tuple[Chart, Tuple[sp.Expr, sp.Expr]]] = None
    label: str = ''

    @property
    def visible_in_twin(self) -> bool:
        return self.twin is not None

    def describe(self) -> str:
        return f"({self.chart.u.name},{self.chart.v.name})=({self.coords[0]},{self.coords[1]})"


@dataclass
class BlowUp:
    """Both charts of one blow-up and the locus multiplicities at the point"""
    point: BasePoint
    u_chart: Chart
    U_chart: Chart
    label: str
    multiplicities: Dict[str, int]

    @property
    def charts(self) -> Tuple[Chart, Chart]:
        return (self.u_chart, self.U_chart)


def order_in(e, var: sp.Symbol) -> int:
    """Order of vanishing of e along {var = 0}"""
    num, den = sp.fraction(canonical(e))
    return _poly_order(num, var) - _poly_order(den, var)


def _poly_order(p, var: sp.Symbol) -> int:
    if p == 0:
        return 0
    if var not in p.free_symbols:
        return 0
    return min(m[0] for m in sp.Poly(p, var).monoms())


def _safe_gcd(a, b):
    try:
        return sp.gcd(a, b)
    except (sp.PolynomialError, NotImplementedError):
        return sp.Integer(1)


def _parse_hint(hint: str, ctx: CoeffContext) -> Tuple[str, int, sp.Expr]:
    chart, value = hint.split(':', 1)
    return chart[0], int(chart[1:]), parse_expr(value, ctx)


class Atlas:
    """Chart store of one analysis session"""

    def __init__(self, ctx: CoeffContext, rules: Optional[Dict[sp.Symbol, sp.Expr]] = None,
                 hints: Optional[List[str]] = None):
        self.ctx = ctx
        self.rules = dict(rules or {})
        self.hints = [_parse_hint(h, ctx) for h in (hints or [])]

    def _reduce(self, e) -> sp.Expr:
        return rewrite(canonical(e), self.rules, self.ctx)

    def _transport(self, chart: Chart, new_of_old: Tuple[sp.Expr, sp.Expr],
                   old_of_new: Dict[sp.Symbol, sp.Expr]) -> Tuple[sp.Expr, sp.Expr]:
        """Field in new coordinates from their expressions in the old ones"""
        result = []
        for coord in new_of_old:
            total = differentiate(coord, self.ctx)
            for old, rate in zip(chart.variables, chart.field):
                total += sp.diff(coord, old) * rate
            result.append(self._reduce(sp.sympify(total).xreplace(old_of_new)))
        return tuple(result)

    def _jacobian(self, chart: Chart, old_of_new: Dict[sp.Symbol, sp.Expr], new_vars) -> sp.Expr:
        matrix = sp.Matrix([[sp.diff(old_of_new[o], n) for n in new_vars] for o in chart.variables])
        return canonical(matrix.det())

    def _loci(self, chart: Chart, old_of_new: Dict[sp.Symbol, sp.Expr], e: sp.Symbol,
              new_vars) -> Tuple[Dict[str, sp.Expr], Dict[str, int]]:
        loci, multiplicities = {}, {}
        for label, poly in chart.loci.items():
            image = sp.numer(canonical(sp.sympify(poly).xreplace(old_of_new)))
            m = _poly_order(image, e)
            multiplicities[label] = m
            strict = canonical(image / e**m)
            if strict.free_symbols & set(new_vars):
                loci[label] = sp.factor_terms(strict)
        return loci, multiplicities

    def chart_from_field(self, name: str, variables: Tuple[sp.Symbol, sp.Symbol],
                         field_exprs: Tuple, factor=1, loci: Optional[Dict[str, sp.Expr]] = None) -> Chart:
        u, v = variables
        return Chart(name, AFFINE, 0, u, v, {u: u, v: v},
                     tuple(self._reduce(f) for f in field_exprs), canonical(factor),
                     loci if loci is not None else {f"{u.name}=0": u, f"{v.name}=0": v})

    def extend_to_cp2(self, sys: HamiltonianSystem) -> Tuple[Chart, Chart, Chart]:
        """Affine chart plus the (u0,v0) and (U0,V0) charts at infinity"""
        x, y = sys.x, sys.y
        dy, dx = sys.field_exprs()
        affine = self.chart_from_field('affine', (y, x), (dy, dx), sys.factor,
                                       {'x=0': x, 'y=0': y})
        u0, v0, U0, V0 = sp.symbols('u0 v0 U0 V0')

        u_map = {x: 1 / u0, y: v0 / u0}
        u_chart = Chart('u0', U_KIND, 0, u0, v0, u_map,
                        self._transport(affine, (1 / x, y / x), u_map),
                        canonical(sys.factor.xreplace(u_map) * self._jacobian(affine, u_map, (u0, v0))),
                        {'L': u0, 'y=0': v0}, 'L', affine, u_map, {u0: 1 / x, v0: y / x})

        U_map = {x: U0 / V0, y: 1 / V0}
        U_chart = Chart('U0', V_KIND, 0, U0, V0, U_map,
                        self._transport(affine, (x / y, 1 / y), U_map),
                        canonical(sys.factor.xreplace(U_map) * self._jacobian(affine, U_map, (U0, V0))),
                        {'L': V0, 'x=0': U0}, 'L', affine, U_map, {U0: x / y, V0: 1 / y})
        logger.debug(f"Extended {sys.name} to CP2")
        return affine, u_chart, U_chart

    def line_candidates(self, chart: Chart, e: Optional[sp.Symbol] = None,
                        w: Optional[sp.Symbol] = None) -> List[sp.Expr]:
        """Line coordinates of indeterminate equilibria of the multiplied field on {e=0}"""
        e = e or chart.exceptional_var
        w = w or chart.line_var
        nums, dens = zip(*[sp.fraction(canonical(c)) for c in chart.field])
        candidates = []
        for num, den in zip(nums, dens):
            num_l = canonical(num.xreplace({e: 0}))
            den_l = canonical(den.xreplace({e: 0}))
            target = num_l if den_l == 0 else _safe_gcd(num_l, den_l)
            if w not in sp.sympify(target).free_symbols:
                continue
            try:
                roots = solve_on_line(target, w)
            except ZeroPolynomialError:
                continue
            if roots.residual:
                raise UnresolvedLocusError(f"unresolved locus on {chart.name}", roots.residual)
            for root in roots.roots:
                if not any(is_zero(root - c) for c in candidates):
                    candidates.append(root)

        multiplier = sp.lcm(dens[0], dens[1])
        g1 = canonical(nums[0] * multiplier / dens[0])
        g2 = canonical(nums[1] * multiplier / dens[1])
        common = _safe_gcd(g1, g2)
        g1, g2 = canonical(g1 / common), canonical(g2 / common)
        accepted = []
        for root in candidates:
            at = {e: 0, w: root}
            if all(is_zero(sp.sympify(q).xreplace(at)) for q in (g1, g2, multiplier)):
                accepted.append(root)
        return sorted(accepted, key=sp.default_sort_key)

    def find_base_points(self, chart: Chart, locus: Optional[str] = None) -> List[BasePoint]:
        """Base points of one chart on its exceptional line or on a named locus"""
        if locus is not None:
            poly = chart.loci[locus]
            e = poly if poly in chart.variables else None
            if e is None:
                raise EngineError(f"locus {locus} is not a coordinate line of {chart.name}")
            w = chart.v if e == chart.u else chart.u
            points = []
            for root in self.line_candidates(chart, e, w):
                coords = (sp.Integer(0), root) if e == chart.u else (root, sp.Integer(0))
                points.append(BasePoint(chart, coords))
            return points
        return [BasePoint(chart, chart.point(r)) for r in self.line_candidates(chart)]

    def curve_base_points(self, u_chart: Chart, U_chart: Chart) -> List[BasePoint]:
        """Base points on a curve covered by its twin charts"""
        from_u = self.line_candidates(u_chart)
        from_U = self.line_candidates(U_chart)
        points = []
        for v_star in from_u:
            if v_star == 0:
                points.append(BasePoint(u_chart, u_chart.point(v_star)))
                continue
            matches = [U for U in from_U if is_zero(U - 1 / v_star)]
            if not matches:
                logger.debug(f"Rejected {v_star} on {u_chart.name}: determinate in {U_chart.name}")
                continue
            points.append(self._choose_chart(u_chart, U_chart, v_star, matches[0]))
        for U_star in from_U:
            if U_star == 0:
                points.append(BasePoint(U_chart, U_chart.point(U_star)))
            elif not any(is_zero(U_star - 1 / v) for v in from_u if v != 0):
                logger.debug(f"Rejected {U_star} on {U_chart.name}: determinate in {u_chart.name}")
        return points

    def _choose_chart(self, u_chart: Chart, U_chart: Chart, v_star, U_star) -> BasePoint:
        for kind, depth, value in self.hints:
            if depth == U_chart.depth and kind == V_KIND and is_zero(U_star - value):
                return BasePoint(U_chart, U_chart.point(U_star), (u_chart, u_chart.point(v_star)))
            if depth == u_chart.depth and kind == U_KIND and is_zero(v_star - value):
                return BasePoint(u_chart, u_chart.point(v_star), (U_chart, U_chart.point(U_star)))
        if sp.denom(canonical(v_star)).is_number:
            return BasePoint(u_chart, u_chart.point(v_star), (U_chart, U_chart.point(U_star)))
        if sp.denom(canonical(U_star)).is_number:
            return BasePoint(U_chart, U_chart.point(U_star), (u_chart, u_chart.point(v_star)))
        return BasePoint(u_chart, u_chart.point(v_star), (U_chart, U_chart.point(U_star)))

    def is_indeterminate(self, chart: Chart, coords: Tuple[sp.Expr, sp.Expr]) -> bool:
        """Equilibrium of the multiplied field located on its polar locus"""
        at = dict(zip(chart.variables, coords))
        nums, dens = zip(*[sp.fraction(canonical(c)) for c in chart.field])
        multiplier = sp.lcm(dens[0], dens[1])
        g1 = canonical(nums[0] * multiplier / dens[0])
        g2 = canonical(nums[1] * multiplier / dens[1])
        common = _safe_gcd(g1, g2)
        return all(is_zero(sp.sympify(q).xreplace(at))
                   for q in (canonical(g1 / common), canonical(g2 / common), multiplier))

    def blow_up(self, point: BasePoint, label: str, depth: Optional[int] = None,
                force: bool = False) -> BlowUp:
        """Blow up a base point; returns the two new charts covering the exceptional curve"""
        chart = point.chart
        a, b = point.coords
        if not force and not self.is_indeterminate(chart, point.coords):
            raise NotABasePointError(f"{point.describe()} is not a base point")
        depth = chart.depth + 1 if depth is None else depth
        p, q = chart.variables

        u_n, v_n = sp.symbols(f"u{depth} v{depth}")
        u_map = {p: u_n + a, q: u_n * v_n + b}
        u_chart = self._child(chart, U_KIND, depth, (u_n, v_n), u_map,
                              (p - a, (q - b) / (p - a)), label)

        U_n, V_n = sp.symbols(f"U{depth} V{depth}")
        U_map = {p: U_n * V_n + a, q: V_n + b}
        U_chart = self._child(chart, V_KIND, depth, (U_n, V_n), U_map,
                              ((p - a) / (q - b), q - b), label)

        _, multiplicities = self._loci(chart, u_map, u_n, (u_n, v_n))
        logger.debug(f"Blew up {label} at {point.describe()}")
        return BlowUp(point, u_chart, U_chart, label, multiplicities)

    def _child(self, chart: Chart, kind: str, depth: int, new_vars, old_of_new, new_of_old, label) -> Chart:
        e = new_vars[0] if kind == U_KIND else new_vars[1]
        to_affine = {k: canonical(sp.sympify(val).xreplace(old_of_new)) for k, val in chart.to_affine.items()}
        field_exprs = self._transport(chart, new_of_old, old_of_new)
        factor = canonical(chart.factor.xreplace(old_of_new) * self._jacobian(chart, old_of_new, new_vars))
        loci, _ = self._loci(chart, old_of_new, e, new_vars)
        loci[label] = e
        name = f"{new_vars[0].name}@{label}"
        inverse = {n: canonical(o) for n, o in zip(new_vars, new_of_old)}
        return Chart(name, kind, depth, new_vars[0], new_vars[1], to_affine, field_exprs,
                     factor, loci, label, chart, old_of_new, inverse)

    def impose(self, chart: Chart, rules: Dict[sp.Symbol, sp.Expr]) -> Chart:
        """Chart with extra rewrite rules applied to its field"""
        merged = dict(self.rules)
        merged.update(rules)
        field_exprs = tuple(rewrite(c, merged, self.ctx) for c in chart.field)
        return Chart(chart.name, chart.kind, chart.depth, chart.u, chart.v, chart.to_affine,
                     field_exprs, chart.factor, chart.loci, chart.curve, chart.parent, chart.substitution,
                     chart.inverse)


def extend_to_cp2(sys: HamiltonianSystem) -> Tuple[Chart, Chart, Chart]:
    return Atlas(sys.ctx, sys.rules, sys.hints).extend_to_cp2(sys)


def find_base_points(c: Chart, ctx: CoeffContext, locus: Optional[str] = None) -> List[BasePoint]:
    return Atlas(ctx).find_base_points(c, locus)


def blow_down_chart(c: Chart, self_intersection: int, accessible: bool,
                    ctx: Optional[CoeffContext] = None,
                    rules: Optional[Dict[sp.Symbol, sp.Expr]] = None) -> Chart:
    """Contract the exceptional curve covered by c: its field and factor back in the parent chart"""
    if self_intersection != -1:
        raise BlowDownError(f"curve {c.curve} has self-intersection {self_intersection}, not -1")
    if accessible:
        raise BlowDownError(f"curve {c.curve} is accessible")
    if c.parent is None or c.kind == AFFINE or not c.inverse:
        raise BlowDownError(f"chart {c.name} does not come from a blow-up")
    parent = c.parent
    atlas = Atlas(ctx or CoeffContext(), rules)
    old = tuple(c.substitution[o] for o in parent.variables)
    field_exprs = atlas._transport(c, old, c.inverse)
    jacobian = atlas._jacobian(parent, c.substitution, c.variables)
    factor = canonical(sp.sympify(c.factor / jacobian).xreplace(c.inverse))
    logger.debug(f"Blew down {c.curve} from {c.name} to {parent.name}")
    return Chart(parent.name, parent.kind, parent.depth, parent.u, parent.v, parent.to_affine,
                 field_exprs, factor, parent.loci, parent.curve, parent.parent,
                 parent.substitution, parent.inverse)
