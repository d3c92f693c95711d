"""
Tests for the coefficient field: parsing, derivation, rewriting and printing
"""

import unittest
import sys
import os

import sympy as sp

ROOT = os.path.abspath(os.path.join(os.path.dirname(__file__), '..'))
if ROOT not in sys.path:
    sys.path.insert(0, ROOT)

from src.expr import CoeffContext, Z, canonical, differentiate, orient, parse_expr, rewrite, to_text
from src.errors import DivisionByZeroError, ParseError, UndeclaredSymbolError


class TestParser(unittest.TestCase):
    """Test the coefficient grammar"""

    def setUp(self):
        self.ctx = CoeffContext(('alpha',), ('a0', 'a3'))

    def test_parse_sum(self):
        """Functions, parameters and z parse to generators"""
        e = parse_expr("a0(z)*z + alpha", self.ctx)
        self.assertEqual(e, sp.Symbol('a0') * Z + sp.Symbol('alpha'))

    def test_parse_derivative(self):
        """Primes mark derivative orders"""
        e = parse_expr("a3''(z) - 2*a0'(z)", self.ctx)
        self.assertEqual(e, sp.Symbol("a3''") - 2 * sp.Symbol("a0'"))

    def test_parse_rational_constants(self):
        """Numbers are exact rationals"""
        self.assertEqual(parse_expr("1/2 + 3/4", self.ctx), sp.Rational(5, 4))
        self.assertEqual(parse_expr("z^-1", self.ctx), 1 / Z)

    def test_imaginary_unit_and_square_roots(self):
        self.assertEqual(parse_expr("I", self.ctx), sp.I)
        self.assertEqual(parse_expr("sqrt(2)/2", self.ctx), sp.sqrt(2) / 2)
        self.assertEqual(canonical(parse_expr("I*sqrt(1/2)", self.ctx) ** 2), sp.Rational(-1, 2))

    def test_square_root_needs_rational(self):
        with self.assertRaises(ParseError):
            parse_expr("sqrt(z)", self.ctx)
        with self.assertRaises(ParseError):
            parse_expr("sqrt(alpha)", self.ctx)

    def test_trailing_operator(self):
        """Incomplete input reports a position"""
        with self.assertRaises(ParseError) as ctx:
            parse_expr("z +", self.ctx)
        self.assertEqual(ctx.exception.position, 3)

    def test_undeclared_symbol(self):
        """Unknown names are rejected"""
        with self.assertRaises(UndeclaredSymbolError):
            parse_expr("b(z) + 1", self.ctx)

    def test_division_by_zero(self):
        """Dividing by an identically zero expression fails"""
        with self.assertRaises(DivisionByZeroError):
            parse_expr("1/(z - z)", self.ctx)


class TestDerivation(unittest.TestCase):
    """Test differentiation and rewriting"""

    def setUp(self):
        self.ctx = CoeffContext(('c',), ('a1', 'a3'))

    def test_product_rule(self):
        """d/dz (a1 z) = a1 + z a1'"""
        e = differentiate(sp.Symbol('a1') * Z, self.ctx)
        self.assertEqual(canonical(e - sp.Symbol('a1') - Z * sp.Symbol("a1'")), 0)

    def test_parameters_are_constant(self):
        """Parameters have zero derivative"""
        self.assertEqual(differentiate(sp.Symbol('c') ** 2, self.ctx), 0)

    def test_rewrite_closes_derivatives(self):
        """A rule for a3 also rewrites its derivatives"""
        rules = {self.ctx.fn('a3'): Z}
        self.assertEqual(rewrite(self.ctx.fn('a3', 1), rules, self.ctx), 1)
        self.assertEqual(rewrite(self.ctx.fn('a3', 2), rules, self.ctx), 0)

    def test_orient(self):
        """Conditions solve for their highest derivative"""
        symbol, value = orient(parse_expr("a3''(z)", self.ctx), self.ctx)
        self.assertEqual(symbol, sp.Symbol("a3''"))
        self.assertEqual(value, 0)

    def test_print_round_trip(self):
        """Printed text parses back to the same expression"""
        e = parse_expr("a1'(z)*z^2/3 - c", self.ctx)
        self.assertEqual(parse_expr(to_text(e, self.ctx), self.ctx), e)
        self.assertIn("a1'(z)", to_text(e, self.ctx))


if __name__ == '__main__':
    unittest.main()
