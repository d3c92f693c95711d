"""
Command Line Module
analyze, identify, series and verify commands with report bundles and exit codes
"""

import os
import sys
import json
import logging
import argparse
from typing import Dict, List, Optional

from dotenv import load_dotenv

from .cascade import DEFAULT_MAX_DEPTH, combine_conditions, run_cascades
from .errors import ConfigError, EngineError, NoIsometryError
from .expr import parse_expr
from .ham import HamiltonianSystem, get_system, system_from_document
from .identify import identify_systems
from .lattice import diagram_from_cascade, minimalize
from .numcheck import (BoundSystem, check_W_bounded, energy_drift, fit_table, load_entry,
                       parse_bindings, problems_from_entry, run_problems)
from .report import ReportWriter, cascade_dot, diagram_dot
from .series import (accessibility_flags, aux_candidates, expand_series, known_aux_function,
                     leading_orders, verify_inaccessibility)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_UNRESOLVED = 2
EXIT_MISMATCH = 3


def load_system(ref: str, normalized: bool = False) -> HamiltonianSystem:
    """Catalog name or path to an inline JSON system document"""
    if ref.endswith('.json'):
        try:
            with open(ref, 'r') as f:
                return system_from_document(json.load(f))
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot read system document {ref}: {str(e)}")
    return get_system(ref, normalized=normalized)


def _max_depth(args) -> int:
    if args.max_depth is not None:
        return args.max_depth
    try:
        return int(os.getenv('MAX_DEPTH', DEFAULT_MAX_DEPTH))
    except ValueError:
        raise ConfigError(f"MAX_DEPTH must be an integer, got {os.getenv('MAX_DEPTH')}")


def _emit(report: Dict, dot: str, writer: ReportWriter, fmt: str):
    if fmt == 'json':
        print(json.dumps(report, indent=2, sort_keys=True, default=str))
    elif fmt == 'dot':
        print(dot, end='')
    else:
        print(writer.summary(report), end='')


def cmd_analyze(args) -> int:
    system = load_system(args.system, args.normalized)
    tree = run_cascades(system, _max_depth(args), args.hint or None)
    flags, aux, source = accessibility_flags(system, tree)
    diagram = diagram_from_cascade(tree, accessibility=flags)
    minimal, _ = minimalize(diagram)
    writer = ReportWriter(args.out)
    report = writer.cascade_report(tree, diagram, minimal)
    report['combined_conditions'] = [c.text(system.ctx) for c in combine_conditions(tree.conditions, system.ctx)]
    report['accessibility'] = flags
    report['accessibility_source'] = source
    if aux is not None:
        report['W'] = aux.text()
    dot = ''.join(diagram_dot(minimal))
    writer.write_bundle(system.name, report, {'diagram': [dot], 'cascade': cascade_dot(tree)})
    _emit(report, dot, writer, args.format)
    return EXIT_OK if tree.resolved else EXIT_UNRESOLVED


def cmd_identify(args) -> int:
    A = load_system(args.first, args.normalized)
    B = load_system(args.second, args.normalized)
    try:
        result = identify_systems(A, B, _max_depth(args))
    except NoIsometryError as e:
        logger.error(f"Identification failed: {str(e)}")
        return EXIT_MISMATCH
    writer = ReportWriter(args.out)
    report = writer.identification_report(result)
    writer.write_bundle(f"{A.name}__{B.name}", report)
    _emit(report, '', writer, args.format)
    if not result.maps or not all(c.equivalent for c in result.certificates):
        return EXIT_MISMATCH
    return EXIT_OK


def cmd_series(args) -> int:
    system = load_system(args.system, args.normalized)
    expansions = [expand_series(system, b, args.order) for b in leading_orders(system)]
    writer = ReportWriter(args.out)
    aux, known, candidates = aux_candidates(system, args.order, expansions)
    verdicts = {}
    if candidates:
        tree = run_cascades(system, _max_depth(args), args.hint or None)
        verdicts = {name: verify_inaccessibility(candidate, tree) for name, candidate in candidates.items()}
    report = writer.series_report(system, expansions, aux, verdicts, known)
    writer.write_bundle(f"{system.name}__series", report)
    _emit(report, '', writer, args.format)
    if aux is None and known is None:
        return EXIT_UNRESOLVED
    passing = [name for name, items in verdicts.items() if all(v.passed for v in items)]
    return EXIT_OK if passing else EXIT_MISMATCH


def cmd_verify(args) -> int:
    entry = load_entry(args.system, args.bindings_file)
    system = load_system(args.system, args.normalized or entry.get('normalized', False))
    bindings = {k: str(v) for k, v in entry.get('bindings', {}).items()}
    bindings.update(parse_bindings(args.bind))
    bound = BoundSystem(system, bindings)
    bound.check_conditions([parse_expr(c, system.ctx) for c in entry.get('conditions', [])])
    problems = problems_from_entry(system, entry, bindings)
    if not problems:
        raise ConfigError(f"no initial points for {system.name}")
    aux = known_aux_function(system)
    fits, frames, checks = [], {}, []
    for i, (fp, (traj, fit)) in enumerate(zip(problems, run_problems(problems))):
        frames[f"trajectory_{i}"] = traj.frame()
        if fit is not None:
            fits.append((f"run{i}", fit))
        check = {'run': i, 'stop': traj.reason}
        if aux is not None and traj.singular:
            check['W'] = check_W_bounded(fp, aux, traj, bound)
        if not any(s.name == 'z' for s in bound.bind(system.H).free_symbols):
            check['energy_drift'] = energy_drift(traj, bound)
        checks.append(check)
    table = fit_table(fits)
    frames['fits'] = table
    report = {'system': system.name, 'bindings': bindings,
              'fits': [dict(run=label, **fit.to_dict()) for label, fit in fits], 'checks': checks}
    writer = ReportWriter(args.out)
    writer.write_bundle(f"{system.name}__verify", report, frames=frames)
    _emit(report, '', writer, args.format)
    return EXIT_OK if fits else EXIT_UNRESOLVED


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='painleve-engine',
                                     description='Blow-up cascades, surface types and identifications '
                                                 'of (quasi-)Painleve Hamiltonian systems')
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--max-depth', type=int, default=None, help='blow-up depth limit per branch')
    common.add_argument('--hint', action='append', help='chart hint chart:depth, may repeat')
    common.add_argument('--out', default=None, help='output directory (default OUTPUT_DIR)')
    common.add_argument('--format', choices=['json', 'dot', 'txt'], default='txt')
    common.add_argument('--normalized', action='store_true', help='impose catalog normalizations')
    sub = parser.add_subparsers(dest='command', required=True)

    analyze = sub.add_parser('analyze', parents=[common], help='cascades, conditions and diagram')
    analyze.add_argument('system')
    analyze.set_defaults(func=cmd_analyze)

    identify = sub.add_parser('identify', parents=[common], help='symplectic map between two systems')
    identify.add_argument('first')
    identify.add_argument('second')
    identify.set_defaults(func=cmd_identify)

    series = sub.add_parser('series', parents=[common], help='expansions and the auxiliary function')
    series.add_argument('system')
    series.add_argument('--order', type=int, default=6)
    series.set_defaults(func=cmd_series)

    verify = sub.add_parser('verify', parents=[common], help='numerical singularity fits')
    verify.add_argument('system')
    verify.add_argument('--bind', default='', help='name=value,... overriding the bindings file')
    verify.add_argument('--bindings-file', default=None)
    verify.set_defaults(func=cmd_verify)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    load_dotenv()
    logging.basicConfig(level=os.getenv('LOG_LEVEL', 'INFO').upper())
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as e:
        logger.error(f"Configuration error: {str(e)}")
        return EXIT_CONFIG
    except OSError as e:
        logger.error(f"I/O error: {str(e)}")
        return EXIT_CONFIG
    except EngineError as e:
        logger.error(f"Analysis stopped: {str(e)}")
        return EXIT_UNRESOLVED


if __name__ == '__main__':
    sys.exit(main())
