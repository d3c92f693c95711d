"""
Bivariate Polynomial Module
Polynomials and rational functions in a pair of dependent variables over
the coefficient field, with substitution and root finding on lines
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Tuple

import sympy as sp

from .expr import canonical, is_zero
from .errors import DivisionByZeroError, ZeroPolynomialError

logger = logging.getLogger(__name__)

FIRST = 0
SECOND = 1


class BiPoly:
    """Sparse bivariate polynomial {(i, j): coefficient}"""

    def __init__(self, terms: Dict[Tuple[int, int], sp.Expr], variables: Tuple[sp.Symbol, sp.Symbol]):
        self.variables = tuple(variables)
        self.terms = {}
        for exps, coeff in terms.items():
            coeff = canonical(coeff)
            if coeff != 0:
                self.terms[tuple(exps)] = coeff

    @classmethod
    def from_expr(cls, e, variables: Tuple[sp.Symbol, sp.Symbol]) -> 'BiPoly':
        poly = sp.Poly(sp.expand(sp.sympify(e)), *variables)
        return cls(dict(poly.as_dict()), variables)

    def as_expr(self) -> sp.Expr:
        first, second = self.variables
        return sp.Add(*[c * first**i * second**j for (i, j), c in self.terms.items()])

    def is_zero(self) -> bool:
        return not self.terms

    def degree(self) -> int:
        return max((i + j for i, j in self.terms), default=-1)

    def partial(self, var) -> 'BiPoly':
        """Formal partial derivative in the first or second variable"""
        if isinstance(var, sp.Symbol):
            var = self.variables.index(var)
        out = {}
        for (i, j), c in self.terms.items():
            if var == FIRST and i > 0:
                out[(i - 1, j)] = c * i
            elif var == SECOND and j > 0:
                out[(i, j - 1)] = c * j
        return BiPoly(out, self.variables)

    def __add__(self, other: 'BiPoly') -> 'BiPoly':
        return BiPoly.from_expr(self.as_expr() + other.as_expr(), self.variables)

    def __mul__(self, other: 'BiPoly') -> 'BiPoly':
        return BiPoly.from_expr(self.as_expr() * other.as_expr(), self.variables)

    def __eq__(self, other) -> bool:
        return isinstance(other, BiPoly) and is_zero(self.as_expr() - other.as_expr())

    def to_text(self, printer=str) -> str:
        """Canonical `coeff * x^i * y^j + ...` text, highest degree first"""
        first, second = self.variables
        parts = []
        for (i, j) in sorted(self.terms, key=lambda e: (-(e[0] + e[1]), -e[0])):
            factors = [f"({printer(self.terms[(i, j)])})"]
            if i:
                factors.append(first.name if i == 1 else f"{first.name}^{i}")
            if j:
                factors.append(second.name if j == 1 else f"{second.name}^{j}")
            parts.append(' * '.join(factors))
        return ' + '.join(parts) if parts else '0'

    def __repr__(self):
        return f"BiPoly({self.to_text()})"


class BiRat:
    """Reduced quotient of two bivariate polynomials"""

    def __init__(self, e, variables: Tuple[sp.Symbol, sp.Symbol]):
        self.variables = tuple(variables)
        num, den = sp.fraction(canonical(e))
        if den == 0:
            raise DivisionByZeroError('identically zero denominator')
        self.expr = canonical(num / den)
        self.num, self.den = sp.fraction(self.expr)

    @property
    def numerator(self) -> BiPoly:
        return BiPoly.from_expr(self.num, self.variables)

    @property
    def denominator(self) -> BiPoly:
        return BiPoly.from_expr(self.den, self.variables)

    def reduce(self) -> 'BiRat':
        return BiRat(self.expr, self.variables)

    def is_polynomial(self) -> bool:
        return not (self.den.free_symbols & set(self.variables))

    def substitute(self, mapping: Dict[sp.Symbol, sp.Expr], variables=None) -> 'BiRat':
        """Compose with a rational map given per old symbol"""
        return substitute(self, mapping, variables)

    def __eq__(self, other) -> bool:
        return isinstance(other, BiRat) and is_zero(self.expr - other.expr)

    def __repr__(self):
        return f"BiRat({self.expr})"


def partial(p: BiPoly, var: int) -> BiPoly:
    return p.partial(var)


def substitute(r: BiRat, mapping: Dict[sp.Symbol, sp.Expr], variables=None) -> BiRat:
    """Simultaneous substitution; may also replace z"""
    for target, image in mapping.items():
        if sp.fraction(canonical(image))[1] == 0:
            raise DivisionByZeroError(f"map component for {target} has zero denominator")
    num = sp.sympify(r.num).xreplace(mapping)
    den = canonical(sp.sympify(r.den).xreplace(mapping))
    if den == 0:
        raise DivisionByZeroError('substitution produced an identically zero denominator')
    return BiRat(num / den, variables or r.variables)


@dataclass
class LineRoots:
    """Roots of a univariate restriction plus the unsolved factors"""
    roots: List[sp.Expr] = field(default_factory=list)
    multiplicities: List[int] = field(default_factory=list)
    residual: List[sp.Expr] = field(default_factory=list)

    @property
    def resolved(self) -> bool:
        return not self.residual


def exact_sqrt(e) -> sp.Expr:
    """Square root of e when e is a number times a perfect square, else None"""
    e = canonical(e)
    if e == 0:
        return sp.Integer(0)
    num, den = sp.fraction(e)
    parts = []
    for part in (num, den):
        constant, factors = sp.factor_list(part)
        if any(mult % 2 for _, mult in factors):
            return None
        root = sp.sqrt(constant)
        for base, mult in factors:
            root *= base ** (mult // 2)
        parts.append(root)
    return canonical(parts[0] / parts[1])


def solve_on_line(e, var: sp.Symbol) -> LineRoots:
    """Roots in the coefficient field from linear and quadratic factors"""
    num = sp.numer(canonical(e))
    if num == 0:
        raise ZeroPolynomialError(f"restriction vanishes identically in {var}")
    result = LineRoots()
    if var not in num.free_symbols:
        return result
    try:
        _, factors = sp.factor_list(num, var)
    except (sp.PolynomialError, NotImplementedError) as e:
        logger.warning(f"Factorization failed, solving unfactored: {str(e)}")
        factors = [(num, 1)]
    for factor, mult in factors:
        poly = sp.Poly(factor, var)
        degree = poly.degree()
        if degree == 0:
            continue
        if degree == 1:
            c1, c0 = poly.all_coeffs()
            result.roots.append(canonical(-c0 / c1))
            result.multiplicities.append(mult)
        elif degree == 2:
            a, b, c = poly.all_coeffs()
            root = exact_sqrt(b**2 - 4 * a * c)
            if root is None:
                result.residual.append(factor)
                continue
            for sign in (1, -1):
                result.roots.append(canonical((-b + sign * root) / (2 * a)))
                result.multiplicities.append(mult)
        else:
            logger.debug(f"Leaving degree {degree} factor unsolved")
            result.residual.append(factor)
    return result
