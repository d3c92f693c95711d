"""
Tests for blow-up cascades, condition extraction and singularity signatures
"""

import unittest
import sys
import os

import sympy as sp

ROOT = os.path.abspath(os.path.join(os.path.dirname(__file__), '..'))
if ROOT not in sys.path:
    sys.path.insert(0, ROOT)

from src.cascade import CONDITION, DEPTH_LIMIT, QPCondition, combine_conditions, run_cascades
from src.expr import CoeffContext, Z, canonical, is_zero, orient, parse_expr, rewrite
from src.ham import get_system
from src.series import resonance_conditions


def implies(premises, conclusions, ctx) -> bool:
    """Every conclusion vanishes once the premises are imposed as rewrite rules"""
    rules = {}
    for premise in premises:
        reduced = rewrite(premise, rules, ctx)
        if is_zero(reduced):
            continue
        oriented = orient(reduced, ctx)
        if oriented is None:
            return False
        rules[oriented[0]] = oriented[1]
    return all(is_zero(rewrite(c, rules, ctx)) for c in conclusions)


class TestPainleveCascade(unittest.TestCase):
    """P2.H3 resolves without conditions"""

    @classmethod
    def setUpClass(cls):
        cls.sys = get_system('P2.H3')
        cls.tree = run_cascades(cls.sys)

    def test_resolved(self):
        self.assertTrue(self.tree.resolved)

    def test_no_conditions(self):
        self.assertEqual(self.tree.conditions, [])

    def test_symplectic_leaves(self):
        """Pole-type final curves carry du∧dv"""
        for leaf in self.tree.leaves():
            self.assertEqual(leaf.k, 1)

    def test_two_branches(self):
        self.assertEqual(len(self.tree.leaves()), 2)

    def test_labels_are_unique(self):
        labels = [n.label for n in self.tree.ordered()]
        self.assertEqual(len(labels), len(set(labels)))
        self.assertTrue(all(label.startswith('E') for label in labels))

    def test_first_point(self):
        first = self.tree.ordered()[0]
        self.assertEqual(first.label, 'E1')
        self.assertEqual(tuple(first.point.coords), (0, 0))
        self.assertIsNone(first.parent)


class TestDepthLimit(unittest.TestCase):

    def test_depth_limit_stops_branches(self):
        tree = run_cascades(get_system('P2.H3'), max_depth=2)
        self.assertFalse(tree.resolved)
        self.assertTrue(any(n.termination == DEPTH_LIMIT for n in tree.leaves()))


class TestCombineConditions(unittest.TestCase):
    """Row reduction of condition sets"""

    def setUp(self):
        self.ctx = CoeffContext((), ('c1', 'c3'))

    def test_combination_decouples(self):
        """{c1' + c3'', c1' - c3''} reduces to {c1', c3''}"""
        conds = [QPCondition(parse_expr("c1'(z) + c3''(z)", self.ctx)),
                 QPCondition(parse_expr("c1'(z) - c3''(z)", self.ctx))]
        combined = combine_conditions(conds, self.ctx)
        found = {canonical(c.expression) for c in combined}
        expected = {sp.Symbol("c1'"), sp.Symbol("c3''")}
        self.assertEqual(len(combined), 2)
        for e in expected:
            self.assertTrue(any(canonical(f - e) == 0 or canonical(f + e) == 0 for f in found))

    def test_duplicates_collapse(self):
        cond = QPCondition(parse_expr("c3''(z)", self.ctx))
        self.assertEqual(len(combine_conditions([cond, cond], self.ctx)), 1)



class TestOkamotoCascade(unittest.TestCase):
    """P2.H1: nine blow-ups in two chains"""

    @classmethod
    def setUpClass(cls):
        cls.sys = get_system('P2.H1')
        cls.tree = run_cascades(cls.sys)
        cls.alpha = sp.Symbol('alpha')

    def test_nine_points(self):
        self.assertTrue(self.tree.resolved)
        self.assertEqual(len(self.tree.nodes), 9)
        self.assertEqual(self.tree.conditions, [])
        self.assertEqual({leaf.k for leaf in self.tree.leaves()}, {1})

    def test_point_coordinates(self):
        coords = {n.label: tuple(n.point.coords) for n in self.tree.ordered()}
        expected = {
            'E3': (0, sp.Rational(1, 2)),
            'E5': (0, -Z / 4),
            'E6': (0, (1 - 2 * self.alpha) / 8),
            'E9': (-self.alpha - sp.Rational(1, 2), 0),
        }
        for label, point in expected.items():
            for mine, theirs in zip(coords[label], point):
                self.assertEqual(canonical(mine - theirs), 0, label)
        origins = [label for label, point in coords.items() if all(c == 0 for c in point)]
        self.assertEqual(len(origins), 5)

    def test_roots(self):
        """The chains start at (u0, v0) = (0, 0) and (U0, V0) = (0, 0)"""
        roots = [self.tree.nodes[k] for k in self.tree.roots]
        self.assertEqual(sorted(n.point.chart.name for n in roots), ['U0', 'u0'])
        self.assertEqual(self.tree.by_label('E9').point.chart.kind, 'U')


@unittest.skipUnless(os.getenv('RUN_SLOW'), 'set RUN_SLOW=1 for quasi-Painleve cascades')
class TestQuasiPainleveConditions(unittest.TestCase):
    """Conditions, signatures and resonances of the quasi-Painleve catalog"""

    def conditions(self, name, expected, exact=True):
        sys_ = get_system(name)
        tree = run_cascades(sys_)
        found = [c.expression for c in combine_conditions(tree.conditions, sys_.ctx)]
        wanted = [parse_expr(e, sys_.ctx) for e in expected]
        self.assertTrue(implies(found, wanted, sys_.ctx), f"{name}: {found}")
        if exact:
            self.assertTrue(implies(wanted, found, sys_.ctx), f"{name}: {found}")
        self.assertTrue(any(n.termination == CONDITION for n in tree.leaves()))
        return sys_, tree, found

    def test_quintic_natural(self):
        sys_, tree, found = self.conditions('qP2.H1', ["a3''(z)", "2*a3(z)*a3'(z) - 16*a1'(z)"])
        self.assertEqual({s.k for s in tree.signatures}, {2})
        series = resonance_conditions(sys_)
        self.assertTrue(implies(series, found, sys_.ctx))
        self.assertTrue(implies(found, series, sys_.ctx))

    def test_cubic_coupling(self):
        sys_, tree, found = self.conditions('qP2.H3', ["c1'(z)", "c3''(z)"])
        self.assertIn(2, {s.k for s in tree.signatures})
        series = resonance_conditions(sys_)
        self.assertTrue(implies(series, found, sys_.ctx))
        self.assertTrue(implies(found, series, sys_.ctx))

    def test_mixed_poles(self):
        """Two square-root branches and one ordinary pole"""
        _, tree, _ = self.conditions('qP4.H1', [
            "alpha4''(z)",
            "alpha4(z)^2*alpha4'(z) - 32/9*alpha3(z)*alpha4'(z) - 32/9*alpha4(z)*alpha3'(z)"
            " + 64/3*alpha2'(z)",
            "alpha0'(z)",
        ])
        self.assertEqual(sorted(s.k for s in tree.signatures), [1, 2, 2])

    def test_second_quartic_form(self):
        _, tree, _ = self.conditions('qP4.H2', ["beta0'(z)", "beta2'(z)", "beta4''(z)"], exact=False)
        self.assertTrue({1, 2} <= {s.k for s in tree.signatures})


if __name__ == '__main__':
    unittest.main()
