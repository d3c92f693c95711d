"""
Tests for truncated series, leading orders, Puiseux expansions and auxiliary functions
"""

import unittest
import sys
import os

import sympy as sp

ROOT = os.path.abspath(os.path.join(os.path.dirname(__file__), '..'))
if ROOT not in sys.path:
    sys.path.insert(0, ROOT)

from src.expr import CoeffContext, Z, canonical, parse_expr
from src.ham import HamiltonianSystem, get_system
from src.cascade import run_cascades
from src.series import (FINAL, INTERMEDIATE, LINEAR_BLOCK, QUADRATIC_BLOCK, Z_STAR, AuxFunction,
                        CurveVerdict, Truncated, accessibility, block_variant, build_aux_function,
                        expand_series, freeze_value, frozen, known_aux_function, leading_orders,
                        resonance_conditions, thaw, verify_inaccessibility)


def first_painleve() -> HamiltonianSystem:
    """y'' = 6y^2 + z"""
    ctx = CoeffContext((), (), ('x', 'y'))
    return HamiltonianSystem('PI', parse_expr('x^2/2 - 2*y^3 - z*y', ctx), ctx)


def autonomous() -> HamiltonianSystem:
    ctx = CoeffContext((), (), ('x', 'y'))
    return HamiltonianSystem('PI0', parse_expr('x^2/2 - 2*y^3', ctx), ctx)


class TestTruncated(unittest.TestCase):
    """Test Laurent arithmetic in s"""

    def test_product(self):
        a = Truncated({0: sp.Integer(1), 1: sp.Integer(1)})
        b = Truncated({0: sp.Integer(1), 1: sp.Integer(-1)})
        product = a * b
        self.assertEqual(product.terms, {0: 1, 2: -1})

    def test_inverse(self):
        """1/(1+s) to the known precision"""
        inverse = Truncated({0: sp.Integer(1), 1: sp.Integer(1)}, 4).inverse()
        self.assertEqual(inverse.precision, 4)
        self.assertEqual([inverse[k] for k in range(5)], [1, -1, 1, -1, 1])

    def test_inverse_of_pole(self):
        inverse = Truncated({-2: sp.Integer(2)}).power(-1)
        self.assertEqual(inverse.valuation, 2)
        self.assertEqual(inverse[2], sp.Rational(1, 2))

    def test_derivative(self):
        """d/dz with z - z_* = s^n"""
        series = Truncated({2: 3, 0: 5})
        self.assertEqual(series.derivative(1).terms, {1: 6})
        self.assertEqual(series.derivative(2).terms, {0: 3})

    def test_negative_part(self):
        series = Truncated({-3: 1, -1: 0, 0: 2})
        self.assertEqual(series.negative_part(), {-3: 1})


class TestFrozenValues(unittest.TestCase):

    def setUp(self):
        self.ctx = CoeffContext((), ('c2',), ('x', 'y'))

    def test_freeze_and_thaw(self):
        e = sp.Symbol("c2'") * Z + 1
        frozen_e = freeze_value(e, self.ctx)
        self.assertEqual(frozen_e, frozen('c2', 1) * Z_STAR + 1)
        self.assertEqual(thaw(frozen_e, self.ctx), e)

    def test_frozen_names(self):
        self.assertEqual(frozen('c2', 2).name, "c2''(z_*)")


class TestLeadingOrders(unittest.TestCase):
    """Dominant balances of y'' = 6y^2 + z"""

    def test_single_double_pole(self):
        behaviors = leading_orders(first_painleve())
        self.assertEqual(len(behaviors), 1)
        self.assertEqual(behaviors[0].exponents, (-3, -2))
        self.assertEqual(behaviors[0].coefficients, (-2, 1))
        self.assertEqual(behaviors[0].ramification, 1)


class TestExpansion(unittest.TestCase):
    """Puiseux expansion and resonance of the first Painleve equation"""

    @classmethod
    def setUpClass(cls):
        system = first_painleve()
        cls.expansion = expand_series(system, leading_orders(system)[0])

    def test_coefficients(self):
        """y = h^-2 - z_* h^2/10 - h^3/6 + ..."""
        y = self.expansion.y
        self.assertEqual(y.start, -2)
        self.assertEqual(y.coefficients[0], 1)
        self.assertEqual(y.coefficients[1], 0)
        self.assertEqual(sp.simplify(y.coefficients[4] + Z_STAR / 10), 0)
        self.assertEqual(sp.simplify(y.coefficients[5] + sp.Rational(1, 6)), 0)

    def test_resonance(self):
        """One free coefficient at step 6 without obstruction"""
        report = self.expansion.report
        self.assertEqual(report.index, 6)
        self.assertTrue(report.satisfied)
        self.assertEqual(len(report.free), 1)

    def test_no_conditions(self):
        self.assertEqual(resonance_conditions(first_painleve()), [])


class TestAuxFunction(unittest.TestCase):
    """Corrections to H that stay bounded at movable singularities"""

    def test_first_integral_needs_no_correction(self):
        """W = H when H does not depend on z"""
        aux = build_aux_function(autonomous())
        self.assertEqual(aux.corrections, [])
        self.assertIsNone(aux.block)
        self.assertTrue(aux.bounded)
        self.assertEqual(aux.text(), 'H')

    def test_known_corrections(self):
        system = get_system('qP2.H3')
        aux = known_aux_function(system)
        self.assertEqual([m for _, m in aux.corrections], [(1, -1), (1, -2), (-1, 1)])
        self.assertEqual(aux.corrections[0][0], sp.Rational(1, 2))
        correction = aux.correction()
        self.assertEqual(sp.simplify(correction.coeff(system.x).coeff(system.y, -1) - sp.Rational(1, 2)), 0)

    def test_known_block(self):
        system = get_system('qP4.H1')
        aux = known_aux_function(system)
        self.assertEqual(aux.block[2], LINEAR_BLOCK)
        self.assertEqual(aux.block[0], sp.Rational(1, 2))
        quadratic = block_variant(aux, QUADRATIC_BLOCK)
        self.assertEqual(quadratic.block[2], QUADRATIC_BLOCK)
        self.assertEqual(quadratic.block[:2], aux.block[:2])

    def test_unknown_system(self):
        self.assertIsNone(known_aux_function(get_system('P2.H3')))


class TestAccessibility(unittest.TestCase):
    """Lattice flags from curve verdicts"""

    def test_failed_final_curve_is_not_accessible(self):
        verdicts = [CurveVerdict('L', INTERMEDIATE, 'u0', 1, 0, True),
                    CurveVerdict('E1', INTERMEDIATE, 'U1@E1', 2, 0, True),
                    CurveVerdict('E2', FINAL, 'u2@E2', 0, None, True),
                    CurveVerdict('E3', FINAL, 'u3@E3', 1, None, False)]
        self.assertEqual(accessibility(verdicts), {'L': False, 'E1': False, 'E2': True, 'E3': False})


class TestQuasiPainleveExpansions(unittest.TestCase):
    """Leading terms of both qP2.H3 behaviors"""

    @classmethod
    def setUpClass(cls):
        cls.sys = get_system('qP2.H3')
        behaviors = {b.exponents: b for b in leading_orders(cls.sys)}
        half = sp.Rational(1, 2)
        cls.pole = expand_series(cls.sys, behaviors[(-3 * half, -half)], 4)
        cls.root = expand_series(cls.sys, behaviors[(sp.Integer(0), -half)], 4)
        cls.c = {k: frozen(f"c{k}") for k in range(4)}

    def test_pole_branch(self):
        """y = Y0 h^-1/2 + Y0 c3/2 h^1/2 + 2 c2/15 h with Y0^2 = -1/2"""
        y, x = self.pole.y, self.pole.x
        Y0 = y.coefficients[0]
        self.assertEqual(canonical(Y0**2 + sp.Rational(1, 2)), 0)
        self.assertEqual(canonical(x.coefficients[0] + Y0), 0)
        self.assertEqual(canonical(y.coefficients[1]), 0)
        self.assertEqual(canonical(y.coefficients[2] - Y0 * self.c[3] / 2), 0)
        self.assertEqual(canonical(y.coefficients[3] - 2 * self.c[2] / 15), 0)
        self.assertEqual(canonical(x.coefficients[3] + self.c[2] / 15), 0)

    def test_root_branch(self):
        """x = -c2/3 - c1 Y0 h^1/2 + ..., y = Y0 h^-1/2 - Y0 c3/2 h^1/2 with Y0^2 = 1/2"""
        y, x = self.root.y, self.root.x
        Y0 = y.coefficients[0]
        self.assertEqual(canonical(Y0**2 - sp.Rational(1, 2)), 0)
        self.assertEqual(canonical(x.coefficients[0] + self.c[2] / 3), 0)
        self.assertEqual(canonical(x.coefficients[1] + self.c[1] * Y0), 0)
        self.assertEqual(canonical(y.coefficients[2] + Y0 * self.c[3] / 2), 0)


@unittest.skipUnless(os.getenv('RUN_SLOW'), 'set RUN_SLOW=1 for full qP2.H3 cascades')
class TestQuasiPainleveAuxFunction(unittest.TestCase):
    """W for qP2.H3 once c1' = 0 and c3'' = 0"""

    @classmethod
    def setUpClass(cls):
        cls.sys = get_system('qP2.H3').with_rules({sp.Symbol("c1'"): 0, sp.Symbol("c3''"): 0})
        cls.tree = run_cascades(cls.sys)
        cls.known = known_aux_function(cls.sys)

    def test_computed_matches_closed_form(self):
        computed = build_aux_function(self.sys)
        self.assertIsNone(computed.block)
        found = {m: c for c, m in computed.corrections}
        expected = {m: c for c, m in self.known.corrections}
        self.assertEqual(set(found), set(expected))
        for m, c in expected.items():
            self.assertEqual(canonical(found[m] - c), 0, m)

    def test_closed_form_passes_every_curve(self):
        verdicts = verify_inaccessibility(self.known, self.tree)
        self.assertEqual(len(verdicts), len(self.tree.ordered()) + 1)
        self.assertTrue(all(v.passed for v in verdicts), [v.label for v in verdicts if not v.passed])
        flags = accessibility(verdicts)
        self.assertEqual({label for label, ok in flags.items() if ok},
                         {n.label for n in self.tree.leaves()})

    def test_dropping_a_correction_fails(self):
        perturbed = AuxFunction(self.sys, self.known.corrections[1:])
        verdicts = verify_inaccessibility(perturbed, self.tree)
        self.assertFalse(all(v.passed for v in verdicts))


if __name__ == '__main__':
    unittest.main()
