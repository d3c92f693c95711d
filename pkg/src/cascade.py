"""
Cascade Module
Runs blow-up cascades to regularity, extracts quasi-Painleve conditions
and reads off the singularity signature of every final curve
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import sympy as sp

from .expr import CoeffContext, canonical, function_symbols, is_zero, orient, to_text
from .geom import Atlas, BasePoint, BlowUp, Chart, U_KIND, _poly_order, order_in
from .ham import HamiltonianSystem
from .errors import UnresolvedLocusError

logger = logging.getLogger(__name__)

REGULAR = 'regular'
EXCHANGE = 'regular-after-variable-exchange'
CONDITION = 'condition-required'
UNRESOLVED = 'unresolved'
DEPTH_LIMIT = 'depth-limit'

DEFAULT_MAX_DEPTH = 16


@dataclass
class QPCondition:
    expression: sp.Expr
    provenance: str = ''

    def text(self, ctx: CoeffContext) -> str:
        return to_text(self.expression, ctx)


@dataclass
class SingularitySignature:
    curve: str
    k: int
    two_form: str

    @property
    def exponent(self) -> sp.Rational:
        return sp.Rational(-1, self.k)


@dataclass
class CascadeNode:
    """One blow-up: the point, the charts covering its exceptional curve"""
    key: int
    point: BasePoint
    blowup: BlowUp
    parent: Optional[int]
    children: List[int] = field(default_factory=list)
    termination: Optional[str] = None
    k: Optional[int] = None
    conditions: List[QPCondition] = field(default_factory=list)
    label: str = ''
    index: int = 0
    sign: str = ''
    path_depth: int = 1

    @property
    def is_leaf(self) -> bool:
        return not self.children

    @property
    def charts(self) -> Tuple[Chart, Chart]:
        return self.blowup.charts


@dataclass
class CascadeTree:
    system: HamiltonianSystem
    charts0: Tuple[Chart, Chart, Chart]
    nodes: Dict[int, CascadeNode] = field(default_factory=dict)
    roots: List[int] = field(default_factory=list)
    conditions: List[QPCondition] = field(default_factory=list)
    signatures: List[SingularitySignature] = field(default_factory=list)

    def ordered(self) -> List[CascadeNode]:
        return sorted(self.nodes.values(), key=lambda n: (n.index, n.sign != '+', n.sign))

    def leaves(self) -> List[CascadeNode]:
        return [n for n in self.ordered() if n.is_leaf]

    def intermediate(self) -> List[CascadeNode]:
        return [n for n in self.ordered() if not n.is_leaf]

    def path(self, key: int) -> List[CascadeNode]:
        chain = []
        while key is not None:
            chain.append(self.nodes[key])
            key = self.nodes[key].parent
        return list(reversed(chain))

    def by_label(self, label: str) -> CascadeNode:
        for node in self.nodes.values():
            if node.label == label:
                return node
        raise KeyError(label)

    @property
    def resolved(self) -> bool:
        return all(n.termination in (REGULAR, EXCHANGE, CONDITION) for n in self.leaves())

    def point_coordinates(self) -> List[Tuple[str, str, Tuple[str, str]]]:
        ctx = self.system.ctx
        return [(n.label, n.point.chart.u.name[0] + str(n.point.chart.depth),
                 tuple(to_text(c, ctx) for c in n.point.coords)) for n in self.ordered()]


def _components(chart: Chart) -> Tuple[sp.Expr, sp.Expr]:
    """(rate of the exceptional coordinate, rate of the line coordinate)"""
    if chart.kind == U_KIND:
        return chart.field[0], chart.field[1]
    return chart.field[1], chart.field[0]


def _denominator_order(e, var) -> int:
    return _poly_order(sp.denom(canonical(e)), var)


def _leading_obstruction(chart: Chart) -> Optional[sp.Expr]:
    """Coefficient of the most singular term of dw/de on the curve, as a function of w"""
    e, w = chart.exceptional_var, chart.line_var
    e_rate, w_rate = _components(chart)
    slope = canonical(w_rate / e_rate) if not is_zero(e_rate) else canonical(1 / w_rate)
    s = _denominator_order(slope, e)
    if s <= 0:
        return None
    return canonical(canonical(slope * e**s).xreplace({e: 0}))


def classify_chart(chart: Chart) -> Tuple[str, Optional[sp.Expr]]:
    """Regularity verdict of one chart along its exceptional line"""
    e = chart.exceptional_var
    e_rate, w_rate = _components(chart)
    if _denominator_order(e_rate, e) == 0 and _denominator_order(w_rate, e) == 0:
        return REGULAR, None
    num_order = _poly_order(sp.numer(canonical(e_rate)), e)
    if num_order == 0 and not is_zero(e_rate):
        slope = canonical(w_rate / e_rate)
        if _denominator_order(slope, e) == 0:
            return EXCHANGE, None
    return CONDITION, _leading_obstruction(chart)


def condition_from_obstruction(obstruction, w: sp.Symbol, ctx: CoeffContext) -> Optional[sp.Expr]:
    """Content of the obstruction in the line coordinate, numeric factor removed"""
    if obstruction is None:
        return None
    num = sp.numer(canonical(obstruction))
    if w in num.free_symbols:
        coeffs = sp.Poly(num, w).coeffs()
        content = coeffs[0]
        for c in coeffs[1:]:
            content = sp.gcd(content, c)
    else:
        content = num
    _, primitive = sp.sympify(content).as_content_primitive()
    primitive = canonical(primitive)
    if primitive.is_number or not function_symbols(primitive, ctx):
        return None
    return canonical(primitive)


def extract_conditions(leaf: BlowUp, ctx: CoeffContext) -> List[QPCondition]:
    """Coefficient conditions forced by regularity of a candidate final curve"""
    found = []
    for chart in leaf.charts:
        verdict, obstruction = classify_chart(chart)
        if verdict != CONDITION:
            continue
        cond = condition_from_obstruction(obstruction, chart.line_var, ctx)
        if cond is not None and not any(is_zero(cond - c.expression) for c in found):
            found.append(QPCondition(cond, leaf.label))
    return found


def signature_k(chart: Chart) -> int:
    """k with two-form e^(k-1) de∧dw on the curve {e = 0}"""
    return 1 + order_in(chart.factor, chart.exceptional_var)


class CascadeRunner:
    """Depth-first resolution of every base point of a system"""

    def __init__(self, sys: HamiltonianSystem, max_depth: int = DEFAULT_MAX_DEPTH,
                 hints: Optional[List[str]] = None):
        self.sys = sys
        self.ctx = sys.ctx
        self.max_depth = max_depth
        self.hints = list(hints) if hints is not None else list(sys.hints)
        self.atlas = Atlas(sys.ctx, sys.rules, self.hints)
        self._counter = 0

    def run(self) -> CascadeTree:
        logger.info(f"Running cascades for {self.sys.name}...")
        charts0 = self.atlas.extend_to_cp2(self.sys)
        tree = CascadeTree(self.sys, charts0)
        roots = self.atlas.curve_base_points(charts0[1], charts0[2])
        for point in roots:
            key = self._resolve(tree, point, None, self.atlas, 1)
            tree.roots.append(key)
        self._number(tree)
        for leaf in tree.leaves():
            if leaf.k is not None:
                u_chart = leaf.charts[0]
                tree.signatures.append(SingularitySignature(
                    leaf.label, leaf.k,
                    f"{u_chart.u.name}^{leaf.k - 1} d{u_chart.u.name}∧d{u_chart.v.name}"))
            tree.conditions.extend(leaf.conditions)
        logger.info(f"{self.sys.name}: {len(tree.nodes)} blow-ups, {len(tree.conditions)} conditions")
        return tree

    def _resolve(self, tree: CascadeTree, point: BasePoint, parent: Optional[int],
                 atlas: Atlas, path_depth: int) -> int:
        self._counter += 1
        key = self._counter
        blowup = atlas.blow_up(point, f"n{key}")
        node = CascadeNode(key, point, blowup, parent, path_depth=path_depth)
        tree.nodes[key] = node
        if parent is not None:
            tree.nodes[parent].children.append(key)

        try:
            points = atlas.curve_base_points(*blowup.charts)
        except UnresolvedLocusError as e:
            logger.warning(f"{self.sys.name}: {str(e)}")
            node.termination = UNRESOLVED
            return key

        if not points:
            self._finish(tree, node, atlas)
            return key
        if path_depth >= self.max_depth:
            logger.warning(f"{self.sys.name}: depth limit {self.max_depth} reached")
            node.termination = DEPTH_LIMIT
            return key
        for child in points:
            self._resolve(tree, child, key, atlas, path_depth + 1)
        return key

    def _finish(self, tree: CascadeTree, node: CascadeNode, atlas: Atlas):
        verdicts = [classify_chart(c)[0] for c in node.charts]
        node.k = signature_k(node.charts[0])
        if all(v == REGULAR for v in verdicts):
            node.termination = REGULAR
            return
        if all(v in (REGULAR, EXCHANGE) for v in verdicts):
            node.termination = EXCHANGE
            return

        conditions = extract_conditions(node.blowup, self.ctx)
        if not conditions:
            node.termination = UNRESOLVED
            return
        rules = {}
        for cond in conditions:
            oriented = orient(cond.expression, self.ctx)
            if oriented is not None:
                rules[oriented[0]] = oriented[1]
        node.conditions = conditions
        if not rules:
            node.termination = UNRESOLVED
            return

        local = Atlas(self.ctx, {**atlas.rules, **rules}, self.hints)
        imposed = tuple(local.impose(c, rules) for c in node.charts)
        node.blowup = BlowUp(node.blowup.point, imposed[0], imposed[1], node.blowup.label,
                             node.blowup.multiplicities)
        points = local.curve_base_points(*imposed)
        if points and node.path_depth < self.max_depth:
            for child in points:
                self._resolve(tree, child, node.key, local, node.path_depth + 1)
            return
        verdicts = [classify_chart(c)[0] for c in imposed]
        node.termination = CONDITION if all(v in (REGULAR, EXCHANGE) for v in verdicts) else UNRESOLVED

    def _chain_length(self, tree: CascadeTree, key: int) -> int:
        node = tree.nodes[key]
        return 1 + max((self._chain_length(tree, c) for c in node.children), default=0)

    def _order(self, tree: CascadeTree, keys: List[int]) -> List[int]:
        return sorted(keys, key=lambda k: (-self._chain_length(tree, k),
                                           sp.default_sort_key(tree.nodes[k].point.coords)))

    def _number(self, tree: CascadeTree):
        """Label exceptional curves depth first, longest sibling cascade first"""
        counter = [0]

        def assign(key: int, index: int, sign: str):
            node = tree.nodes[key]
            node.index, node.sign = index, sign
            node.label = f"E{index}{sign}"
            node.blowup.label = node.label
            for chart in node.charts:
                chart.curve = node.label
                chart.name = f"{chart.u.name}@{node.label}"
            counter[0] = max(counter[0], index)

        def walk(keys: List[int], sign: str = ''):
            ordered = self._order(tree, keys)
            paired = self._pair(tree, ordered)
            if paired:
                first, second = paired
                chain_a, chain_b = self._chain(tree, first), self._chain(tree, second)
                start = counter[0] + 1
                for offset, (a, b) in enumerate(zip(chain_a, chain_b)):
                    assign(a, start + offset, '+')
                    assign(b, start + offset, '-')
                rest = [k for k in ordered if k not in paired]
                for key in chain_a + chain_b:
                    pending = [c for c in tree.nodes[key].children if c not in chain_a + chain_b]
                    if pending:
                        walk(pending)
                if rest:
                    walk(rest)
                return
            for key in ordered:
                assign(key, counter[0] + 1, sign)
                walk(tree.nodes[key].children, sign)

        walk(list(tree.roots))
        self._relabel(tree)

    def _chain(self, tree: CascadeTree, key: int) -> List[int]:
        chain = [key]
        while len(tree.nodes[chain[-1]].children) == 1:
            chain.append(tree.nodes[chain[-1]].children[0])
        return chain

    def _pair(self, tree: CascadeTree, ordered: List[int]) -> Optional[Tuple[int, int]]:
        """Two sibling chains of equal length form a ± pair, signed by their constant terms"""
        if len(ordered) < 2:
            return None
        a, b = ordered[0], ordered[1]
        if self._chain_length(tree, a) != self._chain_length(tree, b):
            return None
        if len(self._chain(tree, a)) != len(self._chain(tree, b)):
            return None
        if _sign_key(tree.nodes[b].point) > _sign_key(tree.nodes[a].point):
            a, b = b, a
        return a, b

    def _relabel(self, tree: CascadeTree):
        names = {f"n{key}": node.label for key, node in tree.nodes.items()}
        for node in tree.nodes.values():
            for chart in node.charts:
                chart.loci = {names.get(lbl, lbl): poly for lbl, poly in chart.loci.items()}
            node.blowup.multiplicities = {names.get(lbl, lbl): m
                                          for lbl, m in node.blowup.multiplicities.items()}
            for cond in node.conditions:
                cond.provenance = node.label


def _sign_key(point: BasePoint) -> int:
    coords = [canonical(c) for c in point.coords]
    value = coords[1] if coords[0] == 0 else coords[0]
    constant = value.xreplace({s: 0 for s in value.free_symbols})
    if constant == 0:
        constant = sp.sympify(value).as_coeff_Mul()[0]
    real, imag = sp.re(constant), sp.im(constant)
    sign = sp.sign(real) if real != 0 else sp.sign(imag)
    return int(sign) if sign.is_number else 0


def run_cascades(sys: HamiltonianSystem, max_depth: int = DEFAULT_MAX_DEPTH,
                 hints: Optional[List[str]] = None) -> CascadeTree:
    return CascadeRunner(sys, max_depth, hints).run()


def _monomial_key(monomial: sp.Expr, ctx: CoeffContext):
    orders = [ctx.generator(s).order for s in monomial.free_symbols]
    return (-max(orders, default=0), -sp.Poly(monomial, *monomial.free_symbols).total_degree()
            if monomial.free_symbols else 0, str(monomial))


def combine_conditions(conds: List[QPCondition], ctx: CoeffContext) -> List[QPCondition]:
    """Row-reduce conditions over their generator monomials"""
    exprs = [sp.numer(canonical(c.expression)) for c in conds if not is_zero(c.expression)]
    if not exprs:
        return []
    gens = sorted({s for e in exprs for s in function_symbols(e, ctx)}, key=lambda s: s.name)
    if not gens:
        return [QPCondition(e) for e in exprs]
    polys = [sp.Poly(e, *gens) for e in exprs]
    monomials = sorted({sp.Mul(*[g**p for g, p in zip(gens, m)]) for poly in polys for m in poly.monoms()},
                       key=lambda m: _monomial_key(m, ctx))
    rows = []
    for poly in polys:
        coeffs = {sp.Mul(*[g**p for g, p in zip(gens, m)]): c for m, c in zip(poly.monoms(), poly.coeffs())}
        rows.append([coeffs.get(m, 0) for m in monomials])
    reduced, _ = sp.Matrix(rows).rref(iszerofunc=lambda x: canonical(x) == 0, simplify=canonical)
    combined = []
    for i in range(reduced.rows):
        expr = canonical(sum(reduced[i, j] * monomials[j] for j in range(len(monomials))))
        if expr == 0:
            continue
        _, primitive = sp.numer(expr).as_content_primitive()
        primitive = canonical(primitive)
        if not any(is_zero(primitive - c.expression) or is_zero(primitive + c.expression) for c in combined):
            combined.append(QPCondition(primitive, 'combined'))
    return combined
