"""
Tests for charts at infinity, base points and blow-ups
"""

import unittest
import sys
import os

import sympy as sp

ROOT = os.path.abspath(os.path.join(os.path.dirname(__file__), '..'))
if ROOT not in sys.path:
    sys.path.insert(0, ROOT)

from src.geom import Atlas, BasePoint, blow_down_chart, order_in
from src.ham import get_system
from src.errors import BlowDownError, NotABasePointError


class TestOrders(unittest.TestCase):

    def test_order_in(self):
        u, v = sp.symbols('u v')
        self.assertEqual(order_in(u**3 * (1 + u), u), 3)
        self.assertEqual(order_in(v / u**2, u), -2)
        self.assertEqual(order_in(1 + v, u), 0)


class TestCharts(unittest.TestCase):
    """Test the compactification of P2.H3"""

    def setUp(self):
        self.sys = get_system('P2.H3')
        self.atlas = Atlas(self.sys.ctx, self.sys.rules)
        self.affine, self.u0, self.U0 = self.atlas.extend_to_cp2(self.sys)

    def test_chart_names(self):
        self.assertEqual(self.u0.name, 'u0')
        self.assertEqual(self.U0.name, 'U0')
        self.assertEqual(self.u0.exceptional_var, self.u0.u)
        self.assertEqual(self.U0.exceptional_var, self.U0.v)

    def test_affine_coordinates(self):
        """x = 1/u0, y = v0/u0"""
        self.assertEqual(self.u0.to_affine[self.sys.x], 1 / self.u0.u)
        self.assertEqual(self.u0.to_affine[self.sys.y], self.u0.v / self.u0.u)

    def test_single_base_point_at_infinity(self):
        """The only base point on the line at infinity is (u0, v0) = (0, 0)"""
        points = self.atlas.curve_base_points(self.u0, self.U0)
        self.assertEqual(len(points), 1)
        self.assertEqual(points[0].chart.name, 'u0')
        self.assertEqual(tuple(points[0].coords), (0, 0))
        self.assertTrue(self.atlas.is_indeterminate(points[0].chart, points[0].coords))

    def test_blow_up_charts(self):
        point = self.atlas.curve_base_points(self.u0, self.U0)[0]
        blowup = self.atlas.blow_up(point, 'E1')
        u_chart, U_chart = blowup.charts
        self.assertEqual(u_chart.depth, 1)
        self.assertEqual(u_chart.kind, 'u')
        self.assertEqual(U_chart.kind, 'U')
        self.assertIn('E1', u_chart.loci)
        self.assertEqual(blowup.multiplicities.get('L'), 1)
        self.assertEqual(u_chart.inverse, {u_chart.u: self.u0.u, u_chart.v: self.u0.v / self.u0.u})

    def test_blow_down_undoes_blow_up(self):
        """Both charts of E1 contract back to the field and factor of u0"""
        point = self.atlas.curve_base_points(self.u0, self.U0)[0]
        for chart in self.atlas.blow_up(point, 'E1').charts:
            down = blow_down_chart(chart, -1, False, self.sys.ctx, self.sys.rules)
            self.assertEqual(down.name, 'u0')
            self.assertEqual(down.variables, self.u0.variables)
            for mine, theirs in zip(down.field, self.u0.field):
                self.assertEqual(sp.cancel(mine - theirs), 0, chart.name)
            self.assertEqual(sp.cancel(down.factor - self.u0.factor), 0, chart.name)

    def test_regular_point_is_rejected(self):
        with self.assertRaises(NotABasePointError):
            self.atlas.blow_up(BasePoint(self.u0, (sp.Integer(0), sp.Integer(1))), 'E1')

    def test_blow_down_needs_minus_one(self):
        with self.assertRaises(BlowDownError):
            blow_down_chart(self.u0, -2, False)
        with self.assertRaises(BlowDownError):
            blow_down_chart(self.affine, -1, False)


if __name__ == '__main__':
    unittest.main()
