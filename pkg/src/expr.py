"""
Coefficient Field Module
Exact differential field of rational expressions in z, parameters and
named coefficient functions, with a small text grammar
"""

import re
import logging
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Tuple

import sympy as sp
from sympy.printing.str import StrPrinter

from .errors import ParseError, UndeclaredSymbolError, DivisionByZeroError

logger = logging.getLogger(__name__)

Z = sp.Symbol('z')

_DERIVATIVE_NAME = re.compile(r"^([A-Za-z_][A-Za-z0-9_]*)('*)$")

INDEPENDENT = 'independent'
PARAMETER = 'parameter'
FUNCTION = 'function'
VARIABLE = 'variable'
FROZEN = 'frozen'


@dataclass(frozen=True)
class Generator:
    """Identity of a field generator: (kind, name, derivative order)"""
    kind: str
    name: str
    order: int = 0


@dataclass(frozen=True)
class CoeffContext:
    """Declared parameters, coefficient functions and dependent variables"""
    parameters: Tuple[str, ...] = ()
    functions: Tuple[str, ...] = ()
    variables: Tuple[str, ...] = field(default=())

    def extend(self, parameters: Iterable[str] = (), functions: Iterable[str] = (),
               variables: Iterable[str] = ()) -> 'CoeffContext':
        return CoeffContext(
            tuple(dict.fromkeys(self.parameters + tuple(parameters))),
            tuple(dict.fromkeys(self.functions + tuple(functions))),
            tuple(dict.fromkeys(self.variables + tuple(variables))),
        )

    def fn(self, name: str, order: int = 0) -> sp.Symbol:
        return sp.Symbol(name + "'" * order)

    def param(self, name: str) -> sp.Symbol:
        return sp.Symbol(name)

    def generator(self, symbol: sp.Symbol) -> Generator:
        if symbol == Z:
            return Generator(INDEPENDENT, 'z')
        if symbol.name in self.parameters:
            return Generator(PARAMETER, symbol.name)
        if symbol.name in self.variables:
            return Generator(VARIABLE, symbol.name)
        match = _DERIVATIVE_NAME.match(symbol.name)
        if match and match.group(1) in self.functions:
            return Generator(FUNCTION, match.group(1), len(match.group(2)))
        return Generator(FROZEN, symbol.name)

    def is_function(self, symbol: sp.Symbol) -> bool:
        return self.generator(symbol).kind == FUNCTION

    def derivation(self, symbol: sp.Symbol) -> sp.Expr:
        gen = self.generator(symbol)
        if gen.kind == INDEPENDENT:
            return sp.Integer(1)
        if gen.kind == FUNCTION:
            return self.fn(gen.name, gen.order + 1)
        return sp.Integer(0)


def canonical(e) -> sp.Expr:
    """Reduced fraction with expanded numerator and denominator"""
    return sp.cancel(sp.together(sp.sympify(e)))


def is_zero(e) -> bool:
    return canonical(e) == 0


def differentiate(e, ctx: CoeffContext) -> sp.Expr:
    """Total z-derivative under the generator derivation"""
    e = sp.sympify(e)
    total = sp.Integer(0)
    for symbol in sorted(e.free_symbols, key=lambda s: s.name):
        image = ctx.derivation(symbol)
        if image != 0:
            total += sp.diff(e, symbol) * image
    return canonical(total)


def function_symbols(e, ctx: CoeffContext) -> List[sp.Symbol]:
    """Function generators in e, highest derivative order first"""
    found = [s for s in sp.sympify(e).free_symbols if ctx.is_function(s)]
    return sorted(found, key=lambda s: (-ctx.generator(s).order, s.name))


def close_rules(rules: Dict[sp.Symbol, sp.Expr], ctx: CoeffContext, depth: int = 4) -> Dict[sp.Symbol, sp.Expr]:
    """Extend rewrite rules to higher derivatives of their left-hand sides"""
    closed = dict(rules)
    frontier = dict(rules)
    for _ in range(depth):
        step = {}
        for symbol, value in frontier.items():
            gen = ctx.generator(symbol)
            if gen.kind != FUNCTION:
                continue
            higher = ctx.fn(gen.name, gen.order + 1)
            if higher in closed:
                continue
            step[higher] = differentiate(_apply(value, closed), ctx)
        if not step:
            break
        closed.update(step)
        frontier = step
    return closed


def _apply(e, rules: Dict[sp.Symbol, sp.Expr]) -> sp.Expr:
    e = sp.sympify(e)
    for _ in range(8):
        replaced = e.xreplace(rules)
        if replaced == e:
            break
        e = replaced
    return e


def rewrite(e, rules: Dict[sp.Symbol, sp.Expr], ctx: CoeffContext) -> sp.Expr:
    """Apply oriented rewrite rules, including their derivative closure"""
    if not rules:
        return sp.sympify(e)
    return canonical(_apply(e, close_rules(rules, ctx)))


def orient(condition, ctx: CoeffContext) -> Optional[Tuple[sp.Symbol, sp.Expr]]:
    """Solve a condition for its highest-derivative generator when linear in it"""
    condition = sp.numer(canonical(condition))
    for symbol in function_symbols(condition, ctx):
        poly = sp.Poly(condition, symbol)
        if poly.degree() != 1:
            continue
        lead, rest = poly.all_coeffs()
        return symbol, canonical(-rest / lead)
    return None


class CoeffPrinter(StrPrinter):
    """Prints canonical expressions back in the input grammar"""

    def __init__(self, ctx: CoeffContext):
        super().__init__({'order': 'grlex'})
        self.ctx = ctx

    def _print_Symbol(self, expr):
        if self.ctx.is_function(expr):
            return f"{expr.name}(z)"
        return expr.name


def to_text(e, ctx: CoeffContext) -> str:
    return CoeffPrinter(ctx).doprint(canonical(e)).replace('**', '^')


_TOKEN = re.compile(r"\s*(?:(\d+(?:\.\d+)?)|([A-Za-z_][A-Za-z0-9_]*)|(.))")


def tokenize(text: str) -> List[Tuple[str, str, int]]:
    tokens = []
    position = 0
    while position < len(text):
        match = _TOKEN.match(text, position)
        if match is None or match.end() == position:
            break
        start = match.start(match.lastindex)
        if match.group(1):
            tokens.append(('number', match.group(1), start))
        elif match.group(2):
            tokens.append(('name', match.group(2), start))
        elif match.group(3).strip():
            tokens.append(('op', match.group(3), start))
        position = match.end()
    tokens.append(('end', '', len(text)))
    return tokens


class ExpressionParser:
    """Recursive-descent parser for coefficient expressions.

    Atoms are rationals, z, I, sqrt(q) for a rational q, declared parameters
    and variables, and name(z) with optional derivative marks.
    """

    def __init__(self, text: str, ctx: CoeffContext):
        self.text = text
        self.ctx = ctx
        self.tokens = tokenize(text)
        self.index = 0

    def parse(self) -> sp.Expr:
        value = self._sum()
        kind, token, position = self._peek()
        if kind != 'end':
            raise ParseError(f"unexpected '{token}'", position, self.text)
        return canonical(value)

    def _peek(self):
        return self.tokens[self.index]

    def _next(self):
        token = self.tokens[self.index]
        self.index += 1
        return token

    def _expect(self, symbol: str):
        kind, token, position = self._next()
        if token != symbol:
            found = token or 'end of input'
            raise ParseError(f"expected '{symbol}' but found '{found}'", position, self.text)

    def _sum(self):
        value = self._product()
        while self._peek()[1] in ('+', '-') and self._peek()[0] == 'op':
            _, op, _ = self._next()
            rhs = self._product()
            value = value + rhs if op == '+' else value - rhs
        return value

    def _product(self):
        value = self._unary()
        while self._peek()[0] == 'op' and self._peek()[1] in ('*', '/'):
            _, op, position = self._next()
            rhs = self._unary()
            if op == '*':
                value = value * rhs
            else:
                if is_zero(rhs):
                    raise DivisionByZeroError('division by zero', position)
                value = value / rhs
        return value

    def _unary(self):
        kind, token, _ = self._peek()
        if kind == 'op' and token in ('+', '-'):
            self._next()
            operand = self._unary()
            return operand if token == '+' else -operand
        return self._power()

    def _power(self):
        base = self._atom()
        if self._peek()[0] == 'op' and self._peek()[1] == '^':
            self._next()
            exponent = self._integer_exponent()
            if exponent < 0 and is_zero(base):
                raise DivisionByZeroError('negative power of zero', self._peek()[2])
            return base ** exponent
        return base

    def _integer_exponent(self) -> int:
        kind, token, position = self._next()
        if token == '(':
            value = self._integer_exponent()
            self._expect(')')
            return value
        sign = 1
        if token in ('-', '+'):
            sign = -1 if token == '-' else 1
            kind, token, position = self._next()
        if kind != 'number' or '.' in token:
            raise ParseError('integer exponent expected', position, self.text)
        return sign * int(token)

    def _atom(self):
        kind, token, position = self._next()
        if kind == 'number':
            return sp.Rational(token)
        if kind == 'op' and token == '(':
            value = self._sum()
            self._expect(')')
            return value
        if kind == 'name':
            return self._name(token, position)
        found = token or 'end of input'
        raise ParseError(f"unexpected '{found}'", position, self.text)

    def _name(self, name: str, position: int):
        if name == 'z':
            return Z
        if name == 'I':
            return sp.I
        if name == 'sqrt':
            self._expect('(')
            radicand = self._sum()
            self._expect(')')
            if not canonical(radicand).is_Rational:
                raise ParseError('sqrt of a non-rational constant', position, self.text)
            return sp.sqrt(canonical(radicand))
        order = 0
        while self._peek()[1] == "'":
            self._next()
            order += 1
        if name in self.ctx.functions:
            self._expect('(')
            kind, token, where = self._next()
            if token != 'z':
                raise ParseError("functions take the single argument 'z'", where, self.text)
            self._expect(')')
            return self.ctx.fn(name, order)
        if order:
            raise UndeclaredSymbolError(f"'{name}' is not a declared function", position, self.text)
        if name in self.ctx.parameters or name in self.ctx.variables:
            return sp.Symbol(name)
        raise UndeclaredSymbolError(f"undeclared symbol '{name}'", position, self.text)


def parse_expr(text: str, ctx: CoeffContext) -> sp.Expr:
    """Parse text into a canonical coefficient expression"""
    return ExpressionParser(text, ctx).parse()
