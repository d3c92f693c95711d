"""
Tests for numerical flows, singularity fits and boundedness checks
"""

import unittest
import sys
import os

import numpy as np

ROOT = os.path.abspath(os.path.join(os.path.dirname(__file__), '..'))
if ROOT not in sys.path:
    sys.path.insert(0, ROOT)

from src.expr import CoeffContext, parse_expr
from src.ham import HamiltonianSystem
from src.series import AuxFunction
from src.numcheck import (BLOW_UP, PATH_END, POLE, SQRT_ALGEBRAIC, BoundSystem, FlowProblem,
                          IntegratorSettings, check_W_bounded, energy_drift, estimate_pole,
                          fit_singularity, fit_table, integrate, load_entry, monodromy,
                          parse_bindings, problems_from_entry)
from src.errors import ConfigError, EngineError


def make_system(H: str, parameters=(), functions=()) -> HamiltonianSystem:
    ctx = CoeffContext(tuple(parameters), tuple(functions), ('x', 'y'))
    return HamiltonianSystem('test', parse_expr(H, ctx), ctx)


class TestBindings(unittest.TestCase):
    """Test binding parsing and validation"""

    def test_parse_bindings(self):
        self.assertEqual(parse_bindings('a2=0, a0=z/3'), {'a2': '0', 'a0': 'z/3'})
        self.assertEqual(parse_bindings(''), {})

    def test_malformed_binding(self):
        with self.assertRaises(ConfigError):
            parse_bindings('a2')

    def test_missing_binding(self):
        """Unbound coefficients cannot be integrated"""
        with self.assertRaises(ConfigError):
            BoundSystem(make_system('x^2/2 - alpha*y', parameters=['alpha']), {})

    def test_loose_symbol(self):
        with self.assertRaises(ConfigError):
            BoundSystem(make_system('x^2/2 - alpha*y', parameters=['alpha']), {'alpha': 'q + 1'})

    def test_function_binding(self):
        bound = BoundSystem(make_system('x^2/2 - a(z)*y', functions=['a']), {'a': 'z^2'})
        dx, dy = bound.rhs(2.0, np.array([1.0, 0.0]))
        self.assertAlmostEqual(dx, 4.0)
        self.assertAlmostEqual(dy, 1.0)

    def test_check_conditions(self):
        system = make_system('x^2/2 - a(z)*y', functions=['a'])
        bound = BoundSystem(system, {'a': 'z'})
        bound.check_conditions([parse_expr("a''(z)", system.ctx)])
        with self.assertRaises(ConfigError):
            bound.check_conditions([parse_expr("a'(z)", system.ctx)])


class TestConfigFile(unittest.TestCase):

    def test_load_entry(self):
        entry = load_entry('P2.H3', os.path.join(ROOT, 'config', 'bindings.json'))
        self.assertEqual(entry['bindings'], {'alpha': '0'})
        self.assertEqual(len(entry['initial']), 3)

    def test_missing_file(self):
        with self.assertRaises(ConfigError):
            load_entry('P2.H3', os.path.join(ROOT, 'config', 'missing.json'))

    def test_problems_from_entry(self):
        entry = {'initial': [{'z0': '0', 'x0': '1', 'y0': '2i', 'path': ['1+1i', '2']}]}
        problems = problems_from_entry(make_system('x*y'), entry, {})
        self.assertEqual(len(problems), 1)
        self.assertEqual(problems[0].y0, 2j)
        self.assertEqual(problems[0].path, [1 + 1j, 2])

    def test_invalid_initial_point(self):
        with self.assertRaises(ConfigError):
            problems_from_entry(make_system('x*y'), {'initial': [{'z0': '0', 'x0': '1'}]}, {})


class TestIntegration(unittest.TestCase):
    """Flows with known closed forms"""

    def test_exponential_flow(self):
        """H = xy gives y = e^z, x = e^-z"""
        settings = IntegratorSettings(rtol=1e-12, atol=1e-14)
        fp = FlowProblem(make_system('x*y'), {}, 0, 1, 1, [1.0], settings)
        traj = integrate(fp)
        self.assertEqual(traj.reason, PATH_END)
        self.assertAlmostEqual(abs(traj.y[-1] - np.e), 0, places=7)
        self.assertAlmostEqual(abs(traj.x[-1] - 1 / np.e), 0, places=7)

    def test_complex_path(self):
        settings = IntegratorSettings(rtol=1e-12, atol=1e-14)
        fp = FlowProblem(make_system('x*y'), {}, 0, 1, 1, [1j], settings)
        traj = integrate(fp)
        self.assertAlmostEqual(abs(traj.y[-1] - np.exp(1j)), 0, places=7)
        self.assertAlmostEqual(traj.z[-1], 1j)

    def test_energy_conserved(self):
        """Autonomous flows keep H constant"""
        system = make_system('x^2/2 + y^2/2')
        fp = FlowProblem(system, {}, 0, 1, 0, [2.0])
        bound = BoundSystem(system, {})
        traj = integrate(fp, bound)
        self.assertLess(energy_drift(traj, bound), 1e-8)

    def test_frame(self):
        fp = FlowProblem(make_system('x*y'), {}, 0, 1, 1, [0.5])
        frame = integrate(fp).frame()
        self.assertIn('abs_y', frame.columns)
        self.assertEqual(frame['z_re'].iloc[0], 0.0)


class TestSingularityFits(unittest.TestCase):
    """Exponents of movable singularities"""

    def test_estimate_pole(self):
        z = np.linspace(0.5, 0.9, 20)
        v = 1 / (1 - z)
        z_star, rho = estimate_pole(z, v, v ** 2)
        self.assertAlmostEqual(z_star, 1.0)
        self.assertAlmostEqual(rho, -1.0)

    def test_simple_pole(self):
        """y' = y^2 from y(0) = 1 blows up like (z - 1)^-1"""
        system = make_system('x*y^2')
        bound = BoundSystem(system, {})
        fp = FlowProblem(system, {}, 0, 1, 1, [2.0], IntegratorSettings(threshold=1e7))
        traj = integrate(fp, bound)
        self.assertEqual(traj.reason, BLOW_UP)
        fit = fit_singularity(traj, bound)
        self.assertEqual(fit.variable, 'y')
        self.assertAlmostEqual(fit.z_star.real, 1.0, places=4)
        self.assertLess(abs(fit.exponent + 1), 0.05)
        self.assertEqual(fit.kind, POLE)

    def test_square_root_singularity(self):
        """y' = y^3 from y(0) = 1 blows up like (z - 1/2)^(-1/2)"""
        system = make_system('x*y^3')
        bound = BoundSystem(system, {})
        fp = FlowProblem(system, {}, 0, 1, 1, [1.0], IntegratorSettings(threshold=1e4))
        traj = integrate(fp, bound)
        fit = fit_singularity(traj, bound)
        self.assertAlmostEqual(fit.z_star.real, 0.5, places=4)
        self.assertLess(abs(fit.exponent + 0.5), 0.05)
        self.assertEqual(fit.kind, SQRT_ALGEBRAIC)
        table = fit_table([('run0', fit)])
        self.assertEqual(list(table['kind']), [SQRT_ALGEBRAIC])

    def test_regular_trajectory(self):
        fp = FlowProblem(make_system('x*y'), {}, 0, 1, 1, [0.5])
        bound = BoundSystem(fp.system, {})
        with self.assertRaises(EngineError):
            fit_singularity(integrate(fp, bound), bound)


class TestBoundedness(unittest.TestCase):
    """W stays bounded while the solution blows up"""

    @classmethod
    def setUpClass(cls):
        cls.system = make_system('x*y^2')
        cls.bound = BoundSystem(cls.system, {})
        cls.fp = FlowProblem(cls.system, {}, 0, 1, 1, [2.0], IntegratorSettings(atol=1e-20, threshold=1e7))
        cls.traj = integrate(cls.fp, cls.bound)

    def test_first_integral_is_bounded(self):
        result = check_W_bounded(self.fp, AuxFunction(self.system), self.traj, self.bound)
        self.assertTrue(result['bounded'])
        self.assertTrue(result['growth_sufficient'])
        self.assertLess(result['variation'], 2.0)

    def test_growing_function_is_not_bounded(self):
        """W = y grows with the solution"""
        aux = AuxFunction(self.system, [(-1, (1, 2)), (1, (0, 1))])
        result = check_W_bounded(self.fp, aux, self.traj, self.bound)
        self.assertFalse(result['bounded'])


class TestMonodromy(unittest.TestCase):

    def test_square_root_branch_point(self):
        """Continuing y = (1 - 2z)^(-1/2) around z = 1/2 flips its sign"""
        result = monodromy(make_system('x*y^3'), {}, 0.5, 0.25, (1, 1j * np.sqrt(2)))
        self.assertTrue(result['swapped'])
        self.assertFalse(result['closed'])

    def test_regular_loop(self):
        result = monodromy(make_system('x*y'), {}, 0.0, 1.0, (1, np.e))
        self.assertTrue(result['closed'])


if __name__ == '__main__':
    unittest.main()
