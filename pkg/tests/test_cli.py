"""
Tests for the command line surface and report bundles
"""

import io
import json
import unittest
import sys
import os
import tempfile
from contextlib import redirect_stdout

ROOT = os.path.abspath(os.path.join(os.path.dirname(__file__), '..'))
if ROOT not in sys.path:
    sys.path.insert(0, ROOT)

from src.cli import EXIT_CONFIG, EXIT_OK, build_parser, load_system, main
from src.errors import ConfigError


class TestParser(unittest.TestCase):
    """Test flags and subcommands"""

    def test_identify_flags(self):
        args = build_parser().parse_args(['identify', 'P2.H1', 'P2.H3', '--max-depth', '5',
                                          '--format', 'json'])
        self.assertEqual((args.first, args.second), ('P2.H1', 'P2.H3'))
        self.assertEqual(args.max_depth, 5)
        self.assertEqual(args.format, 'json')

    def test_repeated_hints(self):
        args = build_parser().parse_args(['analyze', 'qP2.H3', '--hint', 'U3:2', '--hint', 'u1:1'])
        self.assertEqual(args.hint, ['U3:2', 'u1:1'])
        self.assertFalse(args.normalized)

    def test_verify_flags(self):
        args = build_parser().parse_args(['verify', 'qP2.H1', '--bind', 'a2=0', '--normalized'])
        self.assertEqual(args.bind, 'a2=0')
        self.assertTrue(args.normalized)

    def test_bad_format(self):
        with self.assertRaises(SystemExit):
            build_parser().parse_args(['analyze', 'P2.H3', '--format', 'xml'])


class TestLoadSystem(unittest.TestCase):

    def test_catalog_name(self):
        self.assertEqual(load_system('P2.H3').name, 'P2.H3')

    def test_unknown_name(self):
        with self.assertRaises(ConfigError):
            load_system('Nope')

    def test_missing_document(self):
        with self.assertRaises(ConfigError):
            load_system(os.path.join(ROOT, 'config', 'missing.json'))


class TestMain(unittest.TestCase):
    """Exit codes and written bundles"""

    def setUp(self):
        self.out = tempfile.mkdtemp()

    def test_unknown_system_is_config_error(self):
        self.assertEqual(main(['analyze', 'Nope', '--out', self.out]), EXIT_CONFIG)

    def test_missing_bindings_file(self):
        missing = os.path.join(self.out, 'bindings.json')
        self.assertEqual(main(['verify', 'P2.H3', '--bindings-file', missing, '--out', self.out]),
                         EXIT_CONFIG)

    def test_analyze_bundle(self):
        """analyze writes report.json, both DOT files and the summary"""
        buffer = io.StringIO()
        with redirect_stdout(buffer):
            code = main(['analyze', 'P2.H3', '--out', self.out, '--format', 'json'])
        self.assertEqual(code, EXIT_OK)
        report = json.loads(buffer.getvalue())
        self.assertEqual(report['system'], 'P2.H3')
        self.assertTrue(report['resolved'])
        directory = os.path.join(self.out, 'P2.H3')
        for name in ('report.json', 'diagram.dot', 'cascade.dot', 'summary.txt'):
            self.assertTrue(os.path.exists(os.path.join(directory, name)), name)
        with open(os.path.join(directory, 'diagram.dot')) as f:
            self.assertTrue(f.read().startswith('graph {'))
        self.assertEqual(set(report['accessibility']), {'L'} | {n['label'] for n in report['nodes']})
        self.assertIn('accessibility_source', report)


if __name__ == '__main__':
    unittest.main()
