"""
Hamiltonian Systems Module
Polynomial Hamiltonian systems with symplectic factor, the built-in
catalog, and the symplectic correction for changes of variables
"""

import re
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import sympy as sp

from .expr import (CoeffContext, Z, canonical, differentiate, parse_expr,
                   rewrite, to_text)
from .poly import BiPoly, BiRat
from .errors import ConfigError, EngineError, IncompatibleChangeError

logger = logging.getLogger(__name__)


class HamiltonianSystem:
    """f·(first)' = ∂H/∂(second), f·(second)' = −∂H/∂(first) with first = y, second = x"""

    def __init__(self, name: str, H, ctx: CoeffContext, x_name: str = 'x', y_name: str = 'y',
                 factor=1, rules: Optional[Dict[sp.Symbol, sp.Expr]] = None,
                 hints: Optional[List[str]] = None):
        self.name = name
        self.ctx = ctx.extend(variables=(x_name, y_name))
        self.x = sp.Symbol(x_name)
        self.y = sp.Symbol(y_name)
        self.rules = dict(rules or {})
        self.H = rewrite(H, self.rules, self.ctx)
        self.factor = canonical(factor)
        self.hints = list(hints or [])

    @property
    def first(self) -> sp.Symbol:
        return self.y

    @property
    def second(self) -> sp.Symbol:
        return self.x

    @property
    def variables(self) -> Tuple[sp.Symbol, sp.Symbol]:
        return (self.y, self.x)

    def hamiltonian(self) -> BiPoly:
        """H as {(i, j): coeff} for x^i y^j"""
        return BiPoly.from_expr(self.H, (self.x, self.y))

    def renamed(self, x_name: str, y_name: str) -> 'HamiltonianSystem':
        mapping = {self.x: sp.Symbol(x_name), self.y: sp.Symbol(y_name)}
        ctx = CoeffContext(self.ctx.parameters, self.ctx.functions)
        return HamiltonianSystem(self.name, self.H.xreplace(mapping), ctx, x_name, y_name,
                                 self.factor.xreplace(mapping), self.rules, self.hints)

    def with_rules(self, rules: Dict[sp.Symbol, sp.Expr]) -> 'HamiltonianSystem':
        merged = dict(self.rules)
        merged.update(rules)
        ctx = CoeffContext(self.ctx.parameters, self.ctx.functions)
        return HamiltonianSystem(self.name, self.H, ctx, self.x.name, self.y.name,
                                 self.factor, merged, self.hints)

    def field_exprs(self) -> Tuple[sp.Expr, sp.Expr]:
        """(y', x') as canonical expressions"""
        dy = canonical(sp.diff(self.H, self.x) / self.factor)
        dx = canonical(-sp.diff(self.H, self.y) / self.factor)
        return rewrite(dy, self.rules, self.ctx), rewrite(dx, self.rules, self.ctx)

    def text(self) -> str:
        return to_text(self.H, self.ctx)

    def __repr__(self):
        return f"HamiltonianSystem({self.name}: H = {self.text()})"


def vector_field(sys: HamiltonianSystem) -> Tuple[BiRat, BiRat]:
    """((∂H/∂second)/f, (−∂H/∂first)/f)"""
    dy, dx = sys.field_exprs()
    return BiRat(dy, sys.variables), BiRat(dx, sys.variables)


def total_derivative(e, sys: HamiltonianSystem) -> sp.Expr:
    """d/dz of e(x, y, z) along the flow of sys"""
    dy, dx = sys.field_exprs()
    total = differentiate(e, sys.ctx) + sp.diff(e, sys.y) * dy + sp.diff(e, sys.x) * dx
    return rewrite(canonical(total), sys.rules, sys.ctx)


def second_order_equation(sys: HamiltonianSystem) -> Tuple[sp.Symbol, sp.Expr]:
    """Eliminate x: returns (y' symbol, right-hand side of y'')"""
    dy, dx = sys.field_exprs()
    yp = sp.Symbol(f"{sys.y.name}'")
    poly = sp.Poly(sp.numer(dy), sys.x)
    if poly.degree() != 1 or sys.x in sp.denom(dy).free_symbols:
        raise EngineError(f"{sys.name}: y' is not linear in {sys.x}")
    x_of = sp.solve(sp.Eq(yp, dy), sys.x)[0]
    rhs = total_derivative(dy, sys).xreplace({sys.x: x_of})
    return yp, rewrite(canonical(rhs), sys.rules, sys.ctx)


@dataclass
class Correction:
    """Result of transporting a system through a change of variables"""
    h: sp.Expr
    K: sp.Expr
    factor: sp.Expr
    jacobian: sp.Expr


def correction_term(sys: HamiltonianSystem, change: Dict[sp.Symbol, sp.Expr],
                    new_vars: Tuple[sp.Symbol, sp.Symbol]) -> Correction:
    """h with K = H∘Φ + h for old (first, second) given in new (w, t)"""
    w, t = new_vars
    u = canonical(change[sys.first])
    v = canonical(change[sys.second])
    f = canonical(sys.factor.xreplace(change))
    u_z, v_z = differentiate(u, sys.ctx), differentiate(v, sys.ctx)
    u_w, u_t = sp.diff(u, w), sp.diff(u, t)
    v_w, v_t = sp.diff(v, w), sp.diff(v, t)
    h_w = canonical(f * (u_w * v_z - v_w * u_z))
    h_t = canonical(f * (u_t * v_z - v_t * u_z))
    defect = canonical(sp.diff(h_w, t) - sp.diff(h_t, w))
    if defect != 0:
        raise IncompatibleChangeError(defect)
    h = sp.integrate(h_w, w)
    h = canonical(h + sp.integrate(canonical(h_t - sp.diff(h, t)), t))
    jacobian = canonical(u_w * v_t - u_t * v_w)
    K = canonical(sys.H.xreplace(change) + h)
    logger.debug(f"Correction for {sys.name}: h = {h}")
    return Correction(h=h, K=K, factor=canonical(jacobian * f), jacobian=jacobian)


@dataclass
class BirationalMap:
    """Target variables as expressions in source variables, plus dictionaries"""
    source_vars: Tuple[sp.Symbol, sp.Symbol]
    target_vars: Tuple[sp.Symbol, sp.Symbol]
    forward: Dict[sp.Symbol, sp.Expr]
    inverse: Dict[sp.Symbol, sp.Expr] = field(default_factory=dict)
    dictionary: Dict[sp.Symbol, sp.Expr] = field(default_factory=dict)
    time_sign: int = 1

    @classmethod
    def from_inverse(cls, source_vars, target_vars, inverse: Dict[sp.Symbol, sp.Expr],
                     dictionary=None, time_sign: int = 1) -> 'BirationalMap':
        equations = [sp.Eq(s, inverse[s]) for s in source_vars]
        solutions = sp.solve(equations, list(target_vars), dict=True)
        if not solutions:
            raise EngineError('map is not invertible')
        forward = {t: canonical(solutions[0][t]) for t in target_vars}
        return cls(tuple(source_vars), tuple(target_vars), forward, dict(inverse),
                   dict(dictionary or {}), time_sign)

    def complete_inverse(self) -> 'BirationalMap':
        if not self.inverse:
            equations = [sp.Eq(t, self.forward[t]) for t in self.target_vars]
            solutions = sp.solve(equations, list(self.source_vars), dict=True)
            if solutions:
                self.inverse = {s: canonical(solutions[0][s]) for s in self.source_vars}
        return self


@dataclass
class EquivalenceReport:
    """Field defect of a map and the constant its two-form is scaled by.

    symplectic is set only for a conformal factor of 1; hamiltonian is the
    transported Hamiltonian divided by that factor, in the source variables.
    """
    equivalent: bool
    defect: Tuple[sp.Expr, sp.Expr]
    jacobian: sp.Expr
    conformal_factor: Optional[sp.Expr] = None
    symplectic: bool = False
    hamiltonian: Optional[sp.Expr] = None


def pull_coefficients(e, B: HamiltonianSystem, A: HamiltonianSystem,
                      dictionary: Dict[sp.Symbol, sp.Expr], time_sign: int = 1) -> sp.Expr:
    """Express B's coefficients through A's under t = time_sign·z"""
    mapping = {Z: time_sign * Z}
    for symbol in sp.sympify(e).free_symbols:
        gen = B.ctx.generator(symbol)
        if gen.kind == 'function':
            base = B.ctx.fn(gen.name)
            if base in dictionary:
                image = dictionary[base]
                for _ in range(gen.order):
                    image = differentiate(image, A.ctx)
                mapping[symbol] = image * time_sign ** gen.order
        elif gen.kind == 'parameter' and symbol in dictionary:
            mapping[symbol] = dictionary[symbol]
    return sp.sympify(e).xreplace(mapping)


def map_defect(A: HamiltonianSystem, B: HamiltonianSystem, bmap: BirationalMap) -> Tuple[sp.Expr, sp.Expr]:
    """d/dz of each forward component along A minus B's field transported"""
    target_field = dict(zip(B.variables, B.field_exprs()))
    defects = []
    for target in bmap.target_vars:
        transported = pull_coefficients(target_field[target], B, A, bmap.dictionary, bmap.time_sign)
        transported = transported.xreplace(bmap.forward)
        lhs = total_derivative(bmap.forward[target], A)
        defects.append(rewrite(canonical(lhs - bmap.time_sign * transported), A.rules, A.ctx))
    return tuple(defects)


def pulled_system(B: HamiltonianSystem, A: HamiltonianSystem, dictionary: Dict[sp.Symbol, sp.Expr],
                  time_sign: int = 1) -> HamiltonianSystem:
    """B over its own variables, with A's coefficients and A's independent variable"""
    ctx = CoeffContext(A.ctx.parameters, A.ctx.functions).extend(B.ctx.parameters, B.ctx.functions)
    H = time_sign * pull_coefficients(B.H, B, A, dictionary, time_sign)
    factor = pull_coefficients(B.factor, B, A, dictionary, time_sign)
    return HamiltonianSystem(B.name, H, ctx, B.x.name, B.y.name, factor, A.rules)


def rescaled_hamiltonian(A: HamiltonianSystem, B: HamiltonianSystem,
                         bmap: BirationalMap) -> Tuple[Optional[sp.Expr], Optional[sp.Expr]]:
    """(c, K/c) when B carried through the map is A's system with its two-form scaled by c"""
    pulled = pulled_system(B, A, bmap.dictionary, bmap.time_sign)
    try:
        corr = correction_term(pulled, bmap.forward, A.variables)
    except IncompatibleChangeError as e:
        logger.debug(f"{B.name} -> {A.name}: no correction term ({str(e)})")
        return None, None
    c = rewrite(canonical(corr.factor / A.factor), A.rules, A.ctx)
    if c == 0 or c.free_symbols & set(A.variables):
        return None, None
    K = rewrite(canonical(corr.K / c), A.rules, A.ctx)
    residue = canonical(K - A.H)
    for s in A.variables:
        if rewrite(canonical(sp.diff(residue, s)), A.rules, A.ctx) != 0:
            logger.debug(f"{B.name} -> {A.name}: K/c - H depends on {s}")
            return c, None
    return c, K


def check_symplectic_equivalence(A: HamiltonianSystem, B: HamiltonianSystem,
                                 bmap: BirationalMap) -> EquivalenceReport:
    defect = map_defect(A, B, bmap)
    matrix = sp.Matrix([[sp.diff(bmap.forward[t], s) for s in bmap.source_vars] for t in bmap.target_vars])
    jacobian = canonical(matrix.det())
    conformal, hamiltonian = rescaled_hamiltonian(A, B, bmap)
    equivalent = all(d == 0 for d in defect) and hamiltonian is not None
    symplectic = equivalent and conformal == 1
    if equivalent and not symplectic:
        logger.info(f"{B.name} -> {A.name}: map is symplectic up to the factor {conformal}")
    return EquivalenceReport(equivalent=equivalent, defect=defect, jacobian=jacobian,
                             conformal_factor=conformal, symplectic=symplectic,
                             hamiltonian=hamiltonian)


# Catalog entries: Hamiltonian text in the coefficient grammar over x, y
CATALOG = {
    'P2.H1': {
        'H': 'x^2/2 - (y^2 + z/2)*x - (alpha + 1/2)*y',
        'parameters': ['alpha'],
        'functions': [],
        'category': 'painleve',
        'singularities': ['pole'],
        'description': 'Okamoto form of the second Painleve equation',
    },
    'P2.H2': {
        'H': 'x^2/2 - y^2*x - z/2*y^2 - alpha*y',
        'parameters': ['alpha'],
        'functions': [],
        'category': 'painleve',
        'singularities': ['pole'],
        'description': 'Second Painleve Hamiltonian with quadratic momentum coupling',
    },
    'P2.H3': {
        'H': 'x^2/2 - y^4/2 - z/2*y^2 - alpha*y',
        'parameters': ['alpha'],
        'functions': [],
        'category': 'painleve',
        'singularities': ['pole'],
        'description': 'Second Painleve equation as a natural Hamiltonian',
    },
    'P2.H4': {
        'H': '3/4*x^2 - 2*x*y^2 + y^4 - z/4*x - (1 + 4*alpha)/6*y',
        'parameters': ['alpha'],
        'functions': [],
        'category': 'painleve',
        'singularities': ['pole'],
        'description': 'Second Painleve Hamiltonian with mixed quartic terms',
    },
    'qP2.H1': {
        'H': 'x^2/2 - y^6/2 - a3(z)*y^4/4 - a2(z)*y^3/3 - a1(z)*y^2/2 - a0(z)*y',
        'parameters': ['c'],
        'functions': ['a0', 'a1', 'a2', 'a3'],
        'normalization': {'a3': 'z', 'a1': 'z^2/16 + c'},
        'category': 'quasi-painleve',
        'singularities': ['sqrt'],
        'description': 'Natural Hamiltonian for the quintic quasi-Painleve equation',
    },
    'qP2.H2': {
        'H': 'x^2/2 - x*y^3 - b3(z)*y^4/4 - b2(z)*y^3/3 - b1(z)*y^2/2 - b0(z)*y',
        'parameters': [],
        'functions': ['b0', 'b1', 'b2', 'b3'],
        'category': 'quasi-painleve',
        'singularities': ['sqrt'],
        'description': 'Cubic momentum coupling for the quintic quasi-Painleve equation',
    },
    'qP2.H3': {
        'H': 'x^2/2 - x*(y^3 + c3(z)*y) - c2(z)*y^3/3 - c1(z)*y^2/2 - c0(z)*y',
        'parameters': [],
        'functions': ['c0', 'c1', 'c2', 'c3'],
        'hints': ['U3:2'],
        'category': 'quasi-painleve',
        'singularities': ['sqrt'],
        'description': 'Cubic coupling with linear term, minimal-surface form',
    },
    'qP4.H1': {
        'H': ('x^2*y/2 - y^5/2 - alpha4(z)*y^4/4 - alpha3(z)*y^3/3 - alpha2(z)*y^2/2'
              ' - alpha1(z)*y - alpha0(z)*x'),
        'parameters': ['c'],
        'functions': ['alpha0', 'alpha1', 'alpha2', 'alpha3', 'alpha4'],
        'normalization': {'alpha4': '4*z', 'alpha2': 'c + 2*z/3*alpha3(z) - z^3', "alpha0'": '0'},
        'category': 'quasi-painleve',
        'singularities': ['sqrt', 'pole'],
        'description': 'Quasi-Painleve analogue of the fourth Painleve equation',
    },
    'qP4.H2': {
        'H': ('x^2*y/2 - x*(y^3 + beta4(z)/4*y^2 + beta3(z)/3*y + beta0(z))'
              ' - beta2(z)/2*y^2 - beta1(z)*y'),
        'parameters': [],
        'functions': ['beta0', 'beta1', 'beta2', 'beta3', 'beta4'],
        'hints': ['U2:2'],
        'category': 'quasi-painleve',
        'singularities': ['sqrt', 'pole'],
        'description': 'Second Hamiltonian for the quasi-Painleve IV equation',
    },
    'FH.N4': {
        'H': 'x^2/2 - y^5/5 - a2(z)*y^3/3 - a1(z)*y^2/2 - a0(z)*y',
        'parameters': [],
        'functions': ['a0', 'a1', 'a2'],
        'category': 'quasi-painleve',
        'singularities': ['algebraic'],
        'description': "y'' = y^4 + a2 y^2 + a1 y + a0",
    },
    'FH.N5': {
        'H': 'x^2/2 - y^6/6 - b3(z)*y^4/4 - b2(z)*y^3/3 - b1(z)*y^2/2 - b0(z)*y',
        'parameters': [],
        'functions': ['b0', 'b1', 'b2', 'b3'],
        'category': 'quasi-painleve',
        'singularities': ['sqrt'],
        'description': "y'' = y^5 + b3 y^3 + b2 y^2 + b1 y + b0",
    },
}


def list_systems() -> List[str]:
    return sorted(CATALOG)


def _normalization_rules(entry: Dict, ctx: CoeffContext) -> Dict[sp.Symbol, sp.Expr]:
    rules = {}
    for lhs, rhs in entry.get('normalization', {}).items():
        match = re.match(r"^(\w+)('*)$", lhs)
        rules[ctx.fn(match.group(1), len(match.group(2)))] = parse_expr(rhs, ctx)
    return rules


def get_system(name: str, normalized: bool = False, x_name: str = 'x',
               y_name: str = 'y') -> HamiltonianSystem:
    """Catalog system, optionally with its normalization conditions imposed"""
    if name not in CATALOG:
        raise ConfigError(f"Unknown system '{name}'. Available: {list_systems()}")
    entry = CATALOG[name]
    ctx = CoeffContext(tuple(entry["parameters"]), tuple(entry["functions"]), ("x", "y"))
    rules = _normalization_rules(entry, ctx) if normalized else {}
    system = HamiltonianSystem(name, parse_expr(entry["H"], ctx), ctx, rules=rules,
                               hints=entry.get("hints", []))
    if (x_name, y_name) != ("x", "y"):
        system = system.renamed(x_name, y_name)
    return system


def system_from_document(doc: Dict) -> HamiltonianSystem:
    """Inline system: variables, parameters, functions, terms {i, j, coeff}, factor"""
    try:
        x_name, y_name = doc.get('variables', ['x', 'y'])
        ctx = CoeffContext(tuple(doc.get('parameters', [])), tuple(doc.get('functions', [])),
                           (x_name, y_name))
        x, y = sp.Symbol(x_name), sp.Symbol(y_name)
        H = sp.Integer(0)
        for term in doc['terms']:
            H += parse_expr(str(term['coeff']), ctx) * x**int(term['i']) * y**int(term['j'])
        factor = parse_expr(str(doc.get('factor', '1')), ctx)
        rules = _normalization_rules(doc, ctx)
    except (KeyError, TypeError, ValueError) as e:
        raise ConfigError(f"invalid system document: {str(e)}")
    return HamiltonianSystem(doc.get('name', 'inline'), H, ctx, x_name, y_name, factor,
                             rules, doc.get('hints', []))
