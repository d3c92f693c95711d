"""
Basic tests for the Painleve Geometry Engine application
"""

import unittest
import sys
import os
import json
import tempfile

import sympy as sp

# Add the project root to the path
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from app import app
from src.cascade import run_cascades
from src.expr import Z, canonical
from src.ham import CATALOG, get_system, list_systems
from src.identify import identify_systems
from src.lattice import diagram_from_cascade, minimalize
from src.report import ReportWriter, cascade_dot, diagram_dot


class TestCatalog(unittest.TestCase):
    """Test the built-in systems"""

    def test_list_systems(self):
        """Every catalog entry parses"""
        names = list_systems()
        self.assertIn('P2.H1', names)
        self.assertIn('qP4.H2', names)
        for name in names:
            system = get_system(name)
            self.assertEqual(system.name, name)
            self.assertIn(CATALOG[name]['category'], ('painleve', 'quasi-painleve'))

    def test_normalized_system(self):
        """Normalizations replace coefficient functions"""
        normalized = get_system('qP4.H1', normalized=True)
        self.assertNotIn(sp.Symbol('alpha4'), normalized.H.free_symbols)
        self.assertIn(Z, normalized.H.free_symbols)


class TestFlaskAPI(unittest.TestCase):
    """Test the JSON endpoints"""

    def setUp(self):
        self.client = app.test_client()

    def test_health(self):
        """Health endpoint reports the catalog size"""
        response = self.client.get('/api/health')
        self.assertEqual(response.status_code, 200)
        self.assertEqual(response.get_json()['systems'], len(CATALOG))

    def test_systems(self):
        response = self.client.get('/api/systems')
        data = response.get_json()
        self.assertIn('P2.H3', data)
        self.assertIn('H', data['P2.H3'])

    def test_unknown_system(self):
        """Engine errors are client errors"""
        response = self.client.get('/api/analyze/Nope')
        self.assertEqual(response.status_code, 400)
        self.assertIn('error', response.get_json())

    def test_inline_document(self):
        """A polynomial system posted as terms"""
        document = {
            'name': 'inline',
            'variables': ['x', 'y'],
            'parameters': ['alpha'],
            'functions': [],
            'terms': [{'i': 2, 'j': 0, 'coeff': '1/2'}, {'i': 0, 'j': 4, 'coeff': '-1/2'},
                      {'i': 0, 'j': 2, 'coeff': '-z/2'}, {'i': 0, 'j': 1, 'coeff': '-alpha'}],
        }
        response = self.client.post('/api/analyze', data=json.dumps(document),
                                    content_type='application/json')
        self.assertEqual(response.status_code, 200)
        self.assertTrue(response.get_json()['resolved'])


class TestReportWriter(unittest.TestCase):
    """Test reports, DOT output and bundles"""

    @classmethod
    def setUpClass(cls):
        cls.tree = run_cascades(get_system('P2.H3'))
        cls.diagram = diagram_from_cascade(cls.tree)
        cls.minimal, _ = minimalize(cls.diagram)

    def test_cascade_report(self):
        writer = ReportWriter(tempfile.mkdtemp())
        report = writer.cascade_report(self.tree, self.diagram, self.minimal)
        self.assertEqual(report['system'], 'P2.H3')
        self.assertEqual(report['conditions'], [])
        self.assertEqual(report['nodes'][0]['label'], 'E1')
        self.assertIn('minimal_diagram', report)
        self.assertIn('System P2.H3', writer.summary(report))

    def test_dot_output(self):
        """Graphviz text for the diagram and the tree"""
        diagram = ''.join(diagram_dot(self.minimal))
        cascade = ''.join(cascade_dot(self.tree))
        self.assertTrue(diagram.startswith('graph {'))
        self.assertTrue(cascade.startswith('digraph {'))
        self.assertIn('"L" -> "E1"', cascade)
        self.assertTrue(diagram.rstrip().endswith('}'))

    def test_deterministic_report(self):
        """Two runs give byte-identical reports"""
        first = json.dumps(ReportWriter().cascade_report(run_cascades(get_system('P2.H3'))), sort_keys=True)
        second = json.dumps(ReportWriter().cascade_report(run_cascades(get_system('P2.H3'))), sort_keys=True)
        self.assertEqual(first, second)

    def test_write_bundle(self):
        directory = tempfile.mkdtemp()
        writer = ReportWriter(directory)
        report = writer.cascade_report(self.tree)
        written = writer.write_bundle('bundle', report, {'cascade': cascade_dot(self.tree)})
        self.assertEqual(sorted(written), ['cascade', 'json', 'txt'])
        with open(written['json']) as f:
            self.assertEqual(json.load(f)['system'], 'P2.H3')


class TestIntegration(unittest.TestCase):
    """Integration tests for the complete workflow"""

    def test_identify_second_painleve(self):
        """P2.H1 and P2.H3 are related by x1 = y3^2 + x3 + z/2, y1 = y3"""
        result = identify_systems(get_system('P2.H1'), get_system('P2.H3'))
        self.assertGreater(len(result.maps), 0)
        self.assertTrue(all(c.equivalent for c in result.certificates))
        self.assertTrue(any(c.symplectic and c.conformal_factor == 1 for c in result.certificates))

        x1, y1, x3, y3 = sp.symbols('x1 y1 x3 y3')
        found = False
        for bmap in result.maps:
            if bmap.time_sign != 1:
                continue
            images = {**bmap.forward, **bmap.inverse}
            if x1 in images and y1 in images:
                if canonical(images[x1] - (y3**2 + x3 + Z / 2)) == 0 and canonical(images[y1] - y3) == 0:
                    found = True
        self.assertTrue(found)

        print("✅ Complete workflow test passed!")


def run_tests():
    """Run all tests"""
    print("🧪 Running Painleve Geometry Engine Tests...\n")

    # Create test suite
    test_suite = unittest.TestSuite()

    # Add test classes
    test_classes = [
        TestCatalog,
        TestFlaskAPI,
        TestReportWriter,
        TestIntegration
    ]

    for test_class in test_classes:
        tests = unittest.TestLoader().loadTestsFromTestCase(test_class)
        test_suite.addTests(tests)

    # Run tests
    runner = unittest.TextTestRunner(verbosity=2)
    result = runner.run(test_suite)

    # Print summary
    print(f"\n📊 Test Summary:")
    print(f"Tests run: {result.testsRun}")
    print(f"Failures: {len(result.failures)}")
    print(f"Errors: {len(result.errors)}")

    if result.failures:
        print("\n❌ Failures:")
        for test, traceback in result.failures:
            print(f"- {test}: {traceback}")

    if result.errors:
        print("\n🚨 Errors:")
        for test, traceback in result.errors:
            print(f"- {test}: {traceback}")

    if result.wasSuccessful():
        print("\n🎉 All tests passed!")
        return True
    else:
        print("\n⚠️ Some tests failed!")
        return False


if __name__ == '__main__':
    success = run_tests()
    sys.exit(0 if success else 1)
