"""
Series Module
Puiseux expansions at movable singularities, resonance conditions and
the bounded auxiliary function W with its inaccessibility verdicts
"""

import re
import math
import logging
import itertools
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import sympy as sp

from .expr import (CoeffContext, Z, canonical, function_symbols,
                   is_zero, parse_expr, rewrite, to_text)
from .geom import order_in
from .ham import HamiltonianSystem, total_derivative
from .errors import EngineError, NoCorrectionError

logger = logging.getLogger(__name__)

S = sp.Symbol('s')
Z_STAR = sp.Symbol('z_*')
DEFAULT_ORDER = 6
EXPONENT_GRID = [sp.Rational(k, 2) for k in range(-6, 5)]

_FROZEN_NAME = re.compile(r"^([A-Za-z_][A-Za-z0-9_]*)('*)\(z_\*\)$")

# (a, b) for x^a y^b, tried in this order
CORRECTION_MONOMIALS = [
    (1, -1), (1, -2), (-1, 1), (1, -3), (1, -4),
    (0, -1), (0, -2), (0, -3), (0, -4),
    (-1, 0), (-1, -1), (-1, -2), (-1, -3), (-1, -4),
    (1, 0), (0, 1), (1, 1),
]
MAX_CORRECTIONS = 3

LINEAR_BLOCK = 'linear'
QUADRATIC_BLOCK = 'quadratic'


def frozen(name: str, order: int = 0) -> sp.Symbol:
    """Generator for the value of a coefficient derivative at z_*"""
    return sp.Symbol(f"{name}{chr(39) * order}(z_*)")


def thaw(e, ctx: CoeffContext) -> sp.Expr:
    """Replace values at z_* by the coefficient functions of z"""
    mapping = {Z_STAR: Z}
    for symbol in sp.sympify(e).free_symbols:
        match = _FROZEN_NAME.match(symbol.name)
        if match:
            mapping[symbol] = ctx.fn(match.group(1), len(match.group(2)))
    return canonical(sp.sympify(e).xreplace(mapping))


def freeze_value(e, ctx: CoeffContext) -> sp.Expr:
    """Evaluate a coefficient expression at z = z_*"""
    mapping = {Z: Z_STAR}
    for symbol in sp.sympify(e).free_symbols:
        gen = ctx.generator(symbol)
        if gen.kind == 'function':
            mapping[symbol] = frozen(gen.name, gen.order)
    return sp.sympify(e).xreplace(mapping)


class Truncated:
    """Laurent polynomial in s, exact up to and including the power `precision`"""

    def __init__(self, terms: Dict[int, sp.Expr], precision=math.inf):
        self.precision = precision
        self.terms = {p: c for p, c in terms.items() if p <= precision and c != 0}

    @classmethod
    def constant(cls, c) -> 'Truncated':
        return cls({0: sp.sympify(c)})

    @property
    def valuation(self):
        return min(self.terms, default=self.precision)

    def __getitem__(self, power: int) -> sp.Expr:
        return self.terms.get(power, sp.Integer(0))

    def __add__(self, other: 'Truncated') -> 'Truncated':
        out = dict(self.terms)
        for p, c in other.terms.items():
            out[p] = out.get(p, 0) + c
        return Truncated(out, min(self.precision, other.precision))

    def __neg__(self) -> 'Truncated':
        return Truncated({p: -c for p, c in self.terms.items()}, self.precision)

    def __sub__(self, other: 'Truncated') -> 'Truncated':
        return self + (-other)

    def scale(self, c) -> 'Truncated':
        return Truncated({p: c * v for p, v in self.terms.items()}, self.precision)

    def __mul__(self, other: 'Truncated') -> 'Truncated':
        precision = min(self.precision + other.valuation, other.precision + self.valuation)
        out = {}
        for pa, ca in self.terms.items():
            for pb, cb in other.terms.items():
                if pa + pb <= precision:
                    out[pa + pb] = out.get(pa + pb, 0) + ca * cb
        return Truncated({p: sp.expand(c) for p, c in out.items()}, precision)

    def inverse(self) -> 'Truncated':
        v = self.valuation
        lead = self[v]
        if lead == 0:
            raise EngineError('cannot invert a series with vanishing leading term')
        steps = self.precision - v
        if steps == math.inf:
            steps = DEFAULT_ORDER * 2
        coeffs = [1 / lead]
        for k in range(1, int(steps) + 1):
            total = sum(self[v + i] * coeffs[k - i] for i in range(1, k + 1))
            coeffs.append(canonical(-total / lead))
        return Truncated({-v + k: c for k, c in enumerate(coeffs)}, -v + int(steps))

    def power(self, k: int) -> 'Truncated':
        base = self if k >= 0 else self.inverse()
        out = Truncated.constant(1)
        for _ in range(abs(k)):
            out = out * base
        return out

    def derivative(self, n: int) -> 'Truncated':
        """d/dz with z - z_* = s^n"""
        return Truncated({p - n: sp.Rational(p, n) * c for p, c in self.terms.items() if p != 0},
                         self.precision - n)

    def negative_part(self) -> Dict[int, sp.Expr]:
        return {p: c for p, c in self.terms.items() if p < 0 and not is_zero(c)}


@dataclass
class LeadingBehavior:
    """x ~ X0 (z-z_*)^p, y ~ Y0 (z-z_*)^q with the balance exponent of each equation"""
    exponents: Tuple[sp.Rational, sp.Rational]
    coefficients: Tuple[sp.Expr, sp.Expr]
    balance: Tuple[sp.Rational, sp.Rational]

    @property
    def ramification(self) -> int:
        return int(sp.ilcm(*[sp.Rational(e).q for e in self.exponents + self.balance]))

    def describe(self, ctx: CoeffContext) -> Dict:
        (p, q), (X0, Y0) = self.exponents, self.coefficients
        return {'x': {'exponent': str(p), 'coefficient': to_text(X0, ctx)},
                'y': {'exponent': str(q), 'coefficient': to_text(Y0, ctx)}}


@dataclass
class PuiseuxSeries:
    """Σ c_j (z - z_*)^(j/n) for j >= start, known up to `truncation`"""
    ramification: int
    start: int
    coefficients: List[sp.Expr]
    truncation: int

    def terms(self) -> List[Tuple[sp.Rational, sp.Expr]]:
        n = self.ramification
        return [(sp.Rational(self.start + k, n), c) for k, c in enumerate(self.coefficients)
                if self.start + k <= self.truncation]

    def as_truncated(self) -> Truncated:
        return Truncated({self.start + k: c for k, c in enumerate(self.coefficients)}, self.truncation)

    def text(self, ctx: CoeffContext) -> List[Tuple[str, str]]:
        return [(str(e), to_text(c, ctx)) for e, c in self.terms() if c != 0]


@dataclass
class ResonanceReport:
    behavior: LeadingBehavior
    resonances: List[Tuple[int, sp.Expr]] = field(default_factory=list)
    free: List[sp.Symbol] = field(default_factory=list)

    @property
    def index(self) -> Optional[int]:
        return self.resonances[0][0] if self.resonances else None

    @property
    def obstructions(self) -> List[sp.Expr]:
        return [c for _, c in self.resonances if not is_zero(c)]

    @property
    def satisfied(self) -> bool:
        return not self.obstructions

    def conditions(self, ctx: CoeffContext) -> List[sp.Expr]:
        return [thaw(c, ctx) for c in self.obstructions]


@dataclass
class Expansion:
    behavior: LeadingBehavior
    x: PuiseuxSeries
    y: PuiseuxSeries
    report: ResonanceReport


def _monomials(e, sys: HamiltonianSystem) -> List[Tuple[Tuple[int, int], sp.Expr]]:
    num, den = sp.fraction(canonical(e))
    if den.free_symbols & {sys.x, sys.y}:
        raise EngineError(f"{sys.name}: series analysis needs a polynomial vector field")
    return [(m, c / den) for m, c in sp.Poly(num, sys.x, sys.y).terms()]


def _balance(lhs, terms) -> Optional[Tuple[sp.Rational, sp.Expr]]:
    """Dominant exponent and leading equation, or None when a single term dominates"""
    candidates = ([lhs] if lhs is not None else []) + terms
    candidates = [(e, c) for e, c in candidates if not is_zero(c)]
    if not candidates:
        return None
    lowest = min(e for e, _ in candidates)
    leading = [c for e, c in candidates if e == lowest]
    if len(leading) < 2:
        return None
    return lowest, sp.Add(*leading)


def leading_orders(sys: HamiltonianSystem, grid: Optional[List[sp.Rational]] = None) -> List[LeadingBehavior]:
    """Dominant balances x ~ X0 h^p, y ~ Y0 h^q with h = z - z_*"""
    grid = grid or EXPONENT_GRID
    X0, Y0 = sp.symbols('X0 Y0')
    dy, dx = sys.field_exprs()
    rhs_y = [(m, freeze_value(c, sys.ctx)) for m, c in _monomials(dy, sys)]
    rhs_x = [(m, freeze_value(c, sys.ctx)) for m, c in _monomials(dx, sys)]
    found = []
    for p, q in itertools.product(grid, grid):
        if p >= 0 and q >= 0:
            continue
        equations, balance = [], []
        for r, V0, rhs in ((q, Y0, rhs_y), (p, X0, rhs_x)):
            lhs = (r - 1, r * V0) if r != 0 else None
            terms = [(i * p + j * q, -c * X0**i * Y0**j) for (i, j), c in rhs]
            result = _balance(lhs, terms)
            if result is None:
                break
            balance.append(result[0])
            equations.append(result[1])
        if len(equations) < 2:
            continue
        try:
            solutions = sp.solve(equations, [X0, Y0], dict=True)
        except NotImplementedError:
            continue
        for sol in solutions:
            if X0 not in sol or Y0 not in sol:
                continue
            xv, yv = canonical(sol[X0]), canonical(sol[Y0])
            if xv == 0 or yv == 0 or ({X0, Y0} & (xv.free_symbols | yv.free_symbols)):
                continue
            found.append(LeadingBehavior((p, q), (xv, yv), (balance[1], balance[0])))
    found.sort(key=lambda b: (b.exponents[1], b.exponents[0], sp.default_sort_key(b.coefficients)))
    logger.info(f"{sys.name}: {len(found)} leading behaviors")
    return found


def _taylor(e, ctx: CoeffContext, rules, n: int, terms: int) -> Truncated:
    """Coefficient expression along z = z_* + s^n"""
    h = sp.Symbol('h')
    mapping = {Z: Z_STAR + h}
    for symbol in sp.sympify(e).free_symbols:
        gen = ctx.generator(symbol)
        if gen.kind == 'function':
            mapping[symbol] = sp.Add(*[
                freeze_value(rewrite(ctx.fn(gen.name, gen.order + m), rules, ctx), ctx) * h**m / sp.factorial(m)
                for m in range(terms)])
    image = sp.sympify(e).xreplace(mapping)
    if image.is_polynomial(h):
        poly = sp.Poly(sp.expand(image), h)
        out = {n * k: c for (k,), c in poly.terms() if k < terms}
    else:
        expansion = sp.series(image, h, 0, terms).removeO()
        out = {n * k: c for (k,), c in sp.Poly(expansion, h).terms()}
    exact = image.is_polynomial(h) and not function_symbols(e, ctx)
    return Truncated(out, math.inf if exact else n * terms - 1)


class _Evaluator:
    """Rational expressions in x, y, z along a pair of truncated series"""

    def __init__(self, sys: HamiltonianSystem, xs: Truncated, ys: Truncated, n: int, terms: int):
        self.sys, self.xs, self.ys, self.n, self.terms = sys, xs, ys, n, terms
        self._powers = {}

    def _power(self, which: str, k: int) -> Truncated:
        key = (which, k)
        if key not in self._powers:
            base = self.xs if which == 'x' else self.ys
            self._powers[key] = base.power(k)
        return self._powers[key]

    def polynomial(self, e) -> Truncated:
        e = sp.expand(e)
        total = Truncated({})
        for (i, j), c in sp.Poly(e, self.sys.x, self.sys.y).terms():
            part = _taylor(c, self.sys.ctx, self.sys.rules, self.n, self.terms)
            total = total + part * self._power('x', i) * self._power('y', j)
        return total

    def rational(self, e) -> Truncated:
        num, den = sp.fraction(sp.together(sp.sympify(e)))
        num_series = self._laurent(num)
        den_series = self._laurent(den)
        return num_series * den_series.inverse()

    def _laurent(self, e) -> Truncated:
        """Polynomial in x, y and their inverses"""
        e = sp.expand(e)
        total = Truncated({})
        for term in sp.Add.make_args(e):
            powers = term.as_powers_dict()
            i, j = int(powers.get(self.sys.x, 0)), int(powers.get(self.sys.y, 0))
            c = canonical(term / (self.sys.x**i * self.sys.y**j))
            part = _taylor(c, self.sys.ctx, self.sys.rules, self.n, self.terms)
            total = total + part * self._power('x', i) * self._power('y', j)
        return total


def _split(e, parameters: List[sp.Symbol]) -> List[sp.Expr]:
    """Coefficients of e as a polynomial in the free series parameters"""
    e = canonical(e)
    if e == 0:
        return []
    present = [p for p in parameters if p in e.free_symbols]
    if not present:
        return [e]
    num = sp.numer(e)
    return [canonical(c) for c in sp.Poly(num, *present).coeffs() if not is_zero(c)]


def _obstruction(equations: List[sp.Expr], unknowns: List[sp.Symbol]) -> sp.Expr:
    if not unknowns:
        return equations[0]
    A, b = sp.linear_eq_to_matrix(equations, unknowns)
    reduced, _ = A.row_join(b).rref(iszerofunc=is_zero, simplify=canonical)
    for i in range(reduced.rows):
        if all(is_zero(reduced[i, j]) for j in range(len(unknowns))) and not is_zero(reduced[i, -1]):
            return canonical(reduced[i, -1])
    return sp.Integer(0)


def _solve_step(equations, pending, solved) -> Tuple[Optional[Dict], Optional[sp.Expr]]:
    unknowns = [u for u in pending if any(u in e.free_symbols for e in equations)]
    if not unknowns:
        return None, canonical(equations[0])
    try:
        solutions = sp.linsolve(equations, unknowns)
    except sp.solvers.solveset.NonlinearError:
        found = sp.solve(equations, unknowns, dict=True)
        if not found:
            return None, sp.Integer(1)
        return {u: canonical(v) for u, v in found[0].items()}, None
    if not solutions:
        return None, _obstruction(equations, unknowns)
    values = next(iter(solutions))
    return {u: canonical(v) for u, v in zip(unknowns, values) if v != u}, None


def expand_series(sys: HamiltonianSystem, behavior: LeadingBehavior,
                  order: int = DEFAULT_ORDER) -> Expansion:
    """Solve the coefficient recurrence; record resonances and their compatibility conditions"""
    n = behavior.ramification
    (p, q), (X0, Y0) = behavior.exponents, behavior.coefficients
    jx, jy = int(n * p), int(n * q)
    ex, ey = int(n * (behavior.balance[0])), int(n * (behavior.balance[1]))
    xk = [X0] + list(sp.symbols(f"X1:{order + 1}"))
    yk = [Y0] + list(sp.symbols(f"Y1:{order + 1}"))
    xs = Truncated({jx + k: c for k, c in enumerate(xk)}, jx + order)
    ys = Truncated({jy + k: c for k, c in enumerate(yk)}, jy + order)
    dy, dx = sys.field_exprs()
    evaluator = _Evaluator(sys, xs, ys, n, order // n + 3)
    residual_y = ys.derivative(n) - evaluator.polynomial(dy)
    residual_x = xs.derivative(n) - evaluator.polynomial(dx)

    report = ResonanceReport(behavior)
    solved, pending = {}, []
    reached = order
    for k in range(1, order + 1):
        pending.extend([xk[k], yk[k]])
        raw = []
        for residual, base in ((residual_y, ey), (residual_x, ex)):
            if base + k <= residual.precision:
                raw.append(residual[base + k])
        equations = [canonical(sp.sympify(e).xreplace(solved)) for e in raw]
        equations = [e for e in equations if e != 0]
        if not equations:
            report.resonances.append((k, sp.Integer(0)))
            continue
        values, obstruction = _solve_step(equations, pending, solved)
        if obstruction is not None:
            report.resonances.append((k, obstruction))
            if not is_zero(obstruction):
                logger.info(f"{sys.name}: obstruction at step {k}: {obstruction}")
                reached = k - 1
                break
            continue
        solved = {s: canonical(v.xreplace(values)) for s, v in solved.items()}
        solved.update(values)
        pending = [u for u in pending if u not in values]
        if any(u in (xk[k], yk[k]) for u in pending):
            report.resonances.append((k, sp.Integer(0)))
    report.free = [u for u in pending]

    def finish(coeffs, start):
        values = [canonical(sp.sympify(c).xreplace(solved)) for c in coeffs[:reached + 1]]
        return PuiseuxSeries(n, start, values, start + reached)

    return Expansion(behavior, finish(xk, jx), finish(yk, jy), report)


def resonance_conditions(sys: HamiltonianSystem, order: int = DEFAULT_ORDER) -> List[sp.Expr]:
    """Distinct compatibility conditions over every leading behavior, as functions of z"""
    found = []
    for behavior in leading_orders(sys):
        report = expand_series(sys, behavior, order).report
        for cond in report.conditions(sys.ctx):
            if function_symbols(cond, sys.ctx) and not any(
                    is_zero(cond - c) or is_zero(cond + c) for c in found):
                found.append(cond)
    return found


@dataclass
class AuxFunction:
    """W = H + Σ κ x^a y^b, optionally plus the rational block A0·x·y/(y + A1)"""
    system: HamiltonianSystem
    corrections: List[Tuple[sp.Expr, Tuple[int, int]]] = field(default_factory=list)
    block: Optional[Tuple[sp.Expr, sp.Expr, str]] = None
    bounded: Optional[bool] = None
    variants: List['AuxFunction'] = field(default_factory=list)

    def correction(self) -> sp.Expr:
        x, y = self.system.x, self.system.y
        total = sp.Add(*[c * x**a * y**b for c, (a, b) in self.corrections])
        if self.block is not None:
            A0, A1, variant = self.block
            if variant == QUADRATIC_BLOCK:
                total += A0 * x * y**2 / (y**2 + A1 * y - 1)
            else:
                total += A0 * x * y / (y + A1)
        return total

    def expr(self) -> sp.Expr:
        return self.system.H + self.correction()

    def text(self) -> str:
        ctx = self.system.ctx
        x, y = self.system.x.name, self.system.y.name
        parts = ['H']
        for c, (a, b) in self.corrections:
            parts.append(f"({to_text(c, ctx)}) * {x}^{a} * {y}^{b}")
        if self.block is not None:
            A0, A1, variant = self.block
            if variant == QUADRATIC_BLOCK:
                parts.append(f"({to_text(A0, ctx)}) * {x}*{y}^2/({y}^2 + ({to_text(A1, ctx)})*{y} - 1)")
            else:
                parts.append(f"({to_text(A0, ctx)}) * {x}*{y}/({y} + {to_text(A1, ctx)})")
        return ' + '.join(parts)


@dataclass
class CurveVerdict:
    label: str
    kind: str
    chart: str
    pole_order: int
    log_order: Optional[int]
    passed: bool


INTERMEDIATE = 'intermediate'
FINAL = 'final'


def _along(sys: HamiltonianSystem, expansion: Expansion, e) -> Truncated:
    n = expansion.x.ramification
    xs, ys = expansion.x.as_truncated(), expansion.y.as_truncated()
    order = max(expansion.x.truncation - expansion.x.start, 1)
    return _Evaluator(sys, xs, ys, n, order // n + 3).rational(e)


def _is_bounded(sys: HamiltonianSystem, W, expansions: List[Expansion]) -> bool:
    for expansion in expansions:
        series = _along(sys, expansion, W)
        if series.precision < -1:
            logger.warning(f"{sys.name}: expansion too short to certify boundedness")
            return False
        if any(_split(c, expansion.report.free) for c in series.negative_part().values()):
            return False
    return True


def _residual(sys: HamiltonianSystem, W, expansions: List[Expansion]) -> Dict:
    out = {}
    for i, expansion in enumerate(expansions):
        negative = _along(sys, expansion, W).negative_part()
        if negative:
            out[i] = {str(sp.Rational(p, expansion.x.ramification)): str(c) for p, c in negative.items()}
    return out


def _coefficient_system(sys: HamiltonianSystem, expansions: List[Expansion],
                        monomials: List[Tuple[int, int]]):
    """Singular parts of H and of each correction monomial along every expansion"""
    x, y = sys.x, sys.y
    table = []
    for expansion in expansions:
        base = _along(sys, expansion, sys.H)
        parts = {m: _along(sys, expansion, x**m[0] * y**m[1]) for m in monomials}
        table.append((expansion, base, parts))
    return table


def _fit(table, subset: List[Tuple[int, int]], unknowns: Dict) -> Optional[Dict]:
    equations = []
    for expansion, base, parts in table:
        powers = set(base.negative_part())
        for m in subset:
            powers |= set(parts[m].negative_part())
        for p in powers:
            total = base[p] + sp.Add(*[unknowns[m] * parts[m][p] for m in subset])
            equations.extend(_split(total, expansion.report.free))
    symbols = [unknowns[m] for m in subset]
    if not equations:
        return {m: sp.Integer(0) for m in subset}
    solutions = sp.linsolve(equations, symbols)
    if not solutions:
        return None
    values = next(iter(solutions))
    free = {s: 0 for s in symbols}
    return {m: canonical(sp.sympify(v).xreplace(free)) for m, v in zip(subset, values)}


def build_aux_function(sys: HamiltonianSystem, expansions: Optional[List[Expansion]] = None,
                       order: int = DEFAULT_ORDER) -> AuxFunction:
    """Smallest set of correction monomials cancelling every unbounded term, else the rational block"""
    if expansions is None:
        expansions = [expand_series(sys, b, order) for b in leading_orders(sys)]
    unknowns = {m: sp.Symbol(f"K_{m[0]}_{m[1]}") for m in CORRECTION_MONOMIALS}
    table = _coefficient_system(sys, expansions, CORRECTION_MONOMIALS)
    for size in range(MAX_CORRECTIONS + 1):
        for subset in itertools.combinations(CORRECTION_MONOMIALS, size):
            values = _fit(table, list(subset), unknowns)
            if values is None or any(v == 0 for v in values.values()):
                continue
            aux = AuxFunction(sys, [(thaw(values[m], sys.ctx), m) for m in subset])
            if _is_bounded(sys, aux.expr(), expansions):
                aux.bounded = True
                logger.info(f"{sys.name}: W = {aux.text()}")
                return aux
    return _block_function(sys, expansions, table, unknowns)


def _block_function(sys: HamiltonianSystem, expansions: List[Expansion], table, unknowns) -> AuxFunction:
    """Close the x·y^(-k) tail into a geometric series fixed by its first two terms"""
    unbounded_y = [row for row in table if row[0].behavior.exponents[1] < 0]
    values = _fit(unbounded_y, [(1, 0), (1, -1)], unknowns)
    if values is None or is_zero(values[(1, 0)]):
        raise NoCorrectionError(f"{sys.name}: no bounded auxiliary function found",
                                _residual(sys, sys.H, expansions))
    A0 = thaw(values[(1, 0)], sys.ctx)
    A1 = canonical(-thaw(values[(1, -1)], sys.ctx) / A0)
    variants = []
    for variant in (LINEAR_BLOCK, QUADRATIC_BLOCK):
        aux = AuxFunction(sys, block=(A0, A1, variant))
        aux.bounded = _is_bounded(sys, aux.expr(), expansions)
        variants.append(aux)
    chosen = next((v for v in variants if v.bounded), None)
    if chosen is None:
        raise NoCorrectionError(f"{sys.name}: rational block does not bound W",
                                _residual(sys, variants[0].expr(), expansions))
    chosen.variants = variants
    logger.info(f"{sys.name}: W = {chosen.text()}")
    return chosen


def block_variant(aux: AuxFunction, variant: str) -> AuxFunction:
    A0, A1, _ = aux.block
    return AuxFunction(aux.system, list(aux.corrections), (A0, A1, variant))


# Auxiliary functions in closed form, corrections as (coefficient, (a, b)) for x^a y^b
KNOWN_AUX = {
    'qP2.H1': {'corrections': [('1/8', (1, -1)), ("a2'(z)/3", (1, -2)),
                               ("a2(z)/24 + a2''(z)/3 - a0'(z)", (1, -4))]},
    'qP2.H3': {'corrections': [('1/2', (1, -1)), ("c2'(z)/6", (1, -2)),
                               ("c2(z)*c2'(z)/9", (-1, 1))]},
    'qP4.H1': {'block': ('1/2', "3*z - 2/3*alpha3'(z)")},
}


def known_aux_function(sys: HamiltonianSystem) -> Optional[AuxFunction]:
    entry = KNOWN_AUX.get(sys.name)
    if entry is None:
        return None
    corrections = [(rewrite(parse_expr(c, sys.ctx), sys.rules, sys.ctx), m)
                   for c, m in entry.get('corrections', [])]
    block = None
    if 'block' in entry:
        A0, A1 = entry['block']
        block = (parse_expr(A0, sys.ctx), rewrite(parse_expr(A1, sys.ctx), sys.rules, sys.ctx), LINEAR_BLOCK)
    return AuxFunction(sys, corrections, block)


def verify_inaccessibility(aux: AuxFunction, tree) -> List[CurveVerdict]:
    """Pole of W on every intermediate curve with finite W'/W there; finite W on final curves"""
    sys = tree.system
    W = canonical(aux.expr())
    W_prime = total_derivative(W, sys)
    curves = [('L', tree.charts0[1], INTERMEDIATE)]
    curves += [(n.label, n.charts[0], FINAL if n.is_leaf else INTERMEDIATE) for n in tree.ordered()]
    verdicts = []
    for label, chart, kind in curves:
        e = chart.exceptional_var
        local = rewrite(canonical(W.xreplace(chart.to_affine)), sys.rules, sys.ctx)
        pole = -order_in(local, e)
        if kind == FINAL:
            verdicts.append(CurveVerdict(label, kind, chart.name, pole, None, pole <= 0))
            continue
        if local == 0:
            verdicts.append(CurveVerdict(label, kind, chart.name, 0, None, False))
            continue
        ratio = rewrite(canonical(W_prime.xreplace(chart.to_affine) / local), sys.rules, sys.ctx)
        log_order = order_in(ratio, e)
        verdicts.append(CurveVerdict(label, kind, chart.name, pole, log_order, pole > 0 and log_order >= 0))
    failed = [v.label for v in verdicts if not v.passed]
    if failed:
        logger.warning(f"{sys.name}: W fails on {failed}")
    return verdicts


def accessibility(verdicts: List[CurveVerdict]) -> Dict[str, bool]:
    """Lattice accessibility flags from the W verdicts"""
    return {v.label: v.kind == FINAL and v.passed for v in verdicts}


def aux_candidates(sys: HamiltonianSystem, order: int = DEFAULT_ORDER,
                   expansions: Optional[List[Expansion]] = None):
    """(computed W or None, closed form or None, every candidate by name)"""
    known = known_aux_function(sys)
    try:
        aux = build_aux_function(sys, expansions, order)
    except NoCorrectionError as e:
        logger.error(f"No auxiliary function for {sys.name}: {str(e)}")
        aux = None
    candidates = {}
    if aux is not None:
        candidates['computed'] = aux
    if known is not None:
        if known.block is not None:
            for variant in (LINEAR_BLOCK, QUADRATIC_BLOCK):
                candidates[f"closed-form {variant}"] = block_variant(known, variant)
        else:
            candidates['closed-form'] = known
    return aux, known, candidates


def accessibility_flags(sys: HamiltonianSystem, tree,
                        order: int = DEFAULT_ORDER) -> Tuple[Dict[str, bool], Optional[AuxFunction], str]:
    """Flags from the first W that passes every curve, else leaves only"""
    try:
        _, _, candidates = aux_candidates(sys, order)
        for name, candidate in candidates.items():
            verdicts = verify_inaccessibility(candidate, tree)
            if all(v.passed for v in verdicts):
                return accessibility(verdicts), candidate, name
    except EngineError as e:
        logger.warning(f"{sys.name}: inaccessibility not checked: {str(e)}")
    logger.warning(f"{sys.name}: no W passes every curve, only leaves are accessible")
    flags = {'L': False}
    flags.update({n.label: n.is_leaf for n in tree.ordered()})
    return flags, None, 'default'
