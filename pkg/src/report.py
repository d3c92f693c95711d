"""
Report Module
Builds JSON reports, Graphviz diagrams, summaries and CSV dumps for analysis runs
"""

import os
import json
import logging
from typing import Dict, Iterable, List, Optional

import pandas as pd

from .cascade import CascadeTree
from .expr import to_text
from .identify import Identification, map_text
from .lattice import IntersectionDiagram
from .series import AuxFunction, CurveVerdict, Expansion

logger = logging.getLogger(__name__)


def _gvquote(s) -> str:
    return '"{}"'.format(str(s).replace('"', r'\"'))


def diagram_dot(diagram: IntersectionDiagram) -> Iterable[str]:
    """Inaccessible components as nodes, weighted intersections as edges"""
    yield "graph {\n"
    yield f"  label={_gvquote(diagram.name)};\n"
    for node in sorted(diagram.nodes(), key=lambda n: n.label):
        label = f"{node.label}\n{diagram.text(node.label)}\n({node.self_intersection})"
        yield f"  {_gvquote(node.label)} [shape=circle label={_gvquote(label)}];\n"
    for a, b, weight in sorted(diagram.edges()):
        style = f" [label={weight}]" if weight > 1 else ""
        yield f"  {_gvquote(a)} -- {_gvquote(b)}{style};\n"
    yield "}\n"


def cascade_dot(tree: CascadeTree) -> Iterable[str]:
    """Blow-up tree, leaves boxed and annotated with their termination"""
    ctx = tree.system.ctx
    yield "digraph {\n"
    yield f"  label={_gvquote(tree.system.name)};\n"
    yield '  "L" [shape=doublecircle];\n'
    for node in tree.ordered():
        coords = ', '.join(to_text(c, ctx) for c in node.point.coords)
        shape = 'box' if node.is_leaf else 'ellipse'
        text = f"{node.label}\n({coords})"
        if node.is_leaf:
            text += f"\n{node.termination}, k={node.k}"
        yield f"  {_gvquote(node.label)} [shape={shape} label={_gvquote(text)}];\n"
    for node in tree.ordered():
        parent = tree.nodes[node.parent].label if node.parent is not None else 'L'
        yield f"  {_gvquote(parent)} -> {_gvquote(node.label)};\n"
    yield "}\n"


class ReportWriter:
    """Turns engine results into report dictionaries and writes output bundles"""

    def __init__(self, output_dir: Optional[str] = None):
        self.output_dir = output_dir or os.getenv('OUTPUT_DIR', 'data/reports')

    def cascade_report(self, tree: CascadeTree, diagram: Optional[IntersectionDiagram] = None,
                       minimal: Optional[IntersectionDiagram] = None) -> Dict:
        ctx = tree.system.ctx
        nodes = []
        for node in tree.ordered():
            nodes.append({
                'label': node.label,
                'parent': tree.nodes[node.parent].label if node.parent is not None else None,
                'chart': node.point.chart.name,
                'point': [to_text(c, ctx) for c in node.point.coords],
                'depth': node.path_depth,
                'termination': node.termination,
                'k': node.k,
                'conditions': [c.text(ctx) for c in node.conditions],
                'charts': [c.dump() for c in node.charts],
            })
        report = {
            'system': tree.system.name,
            'hamiltonian': tree.system.text(),
            'resolved': tree.resolved,
            'charts': [c.dump() for c in tree.charts0],
            'nodes': nodes,
            'conditions': [{'condition': c.text(ctx), 'curve': c.provenance} for c in tree.conditions],
            'signatures': [{'curve': s.curve, 'k': s.k, 'exponent': str(s.exponent), 'two_form': s.two_form}
                           for s in tree.signatures],
        }
        if diagram is not None:
            report['diagram'] = diagram.to_dict()
        if minimal is not None:
            report['minimal_diagram'] = minimal.to_dict()
            report['self_intersections'] = {str(k): v for k, v in minimal.self_intersections().items()}
        return report

    def identification_report(self, result: Identification) -> Dict:
        branches = []
        for bmap, cert in zip(result.maps, result.certificates):
            entry = map_text(bmap, result.source, result.target)
            entry['certificate'] = {
                'equivalent': cert.equivalent,
                'defect': [str(d) for d in cert.defect],
                'jacobian': str(cert.jacobian),
                'conformal_factor': None if cert.conformal_factor is None else str(cert.conformal_factor),
                'symplectic': cert.symplectic,
                'hamiltonian': (None if cert.hamiltonian is None
                                else to_text(cert.hamiltonian, result.source.ctx)),
            }
            branches.append(entry)
        return {
            'source': result.source.name,
            'target': result.target.name,
            'aligned_blowups': list(result.aligned),
            'isometries': [iso.to_dict() for iso in result.isometries],
            'maps': branches,
        }

    def series_report(self, sys, expansions: List[Expansion], aux: Optional[AuxFunction],
                      verdicts: Optional[Dict[str, List[CurveVerdict]]] = None,
                      known: Optional[AuxFunction] = None) -> Dict:
        ctx = sys.ctx
        out = {'system': sys.name, 'expansions': []}
        for e in expansions:
            out['expansions'].append({
                'leading': e.behavior.describe(ctx),
                'x': e.x.text(ctx),
                'y': e.y.text(ctx),
                'resonances': [[k, str(c)] for k, c in e.report.resonances],
                'conditions': [to_text(c, ctx) for c in e.report.conditions(ctx)],
                'free': [str(f) for f in e.report.free],
            })
        if aux is not None:
            out['W'] = aux.text()
            out['variants'] = [{'W': v.text(), 'bounded': v.bounded} for v in aux.variants]
        if known is not None:
            out['W_closed_form'] = known.text()
        if verdicts:
            out['verdicts'] = {
                name: [{'curve': v.label, 'kind': v.kind, 'chart': v.chart, 'pole_order': v.pole_order,
                        'log_order': v.log_order, 'passed': v.passed} for v in items]
                for name, items in verdicts.items()
            }
        return out

    def summary(self, report: Dict) -> str:
        """Human-readable digest of a report dictionary"""
        lines = []
        if 'nodes' in report:
            lines.append(f"System {report['system']}: H = {report['hamiltonian']}")
            lines.append(f"Resolved: {report['resolved']}, blow-ups: {len(report['nodes'])}")
            for node in report['nodes']:
                lines.append(f"  {node['label']} at ({', '.join(node['point'])}) in {node['chart']}"
                             + (f" -> {node['termination']}, k={node['k']}" if node['termination'] else ""))
            for cond in report['conditions']:
                lines.append(f"  condition on {cond['curve']}: {cond['condition']} = 0")
            for sig in report['signatures']:
                lines.append(f"  {sig['curve']}: k={sig['k']}, form {sig['two_form']}")
            if 'self_intersections' in report:
                counts = ', '.join(f"{v} x ({k})" for k, v in report['self_intersections'].items())
                lines.append(f"  minimal diagram: {counts}")
            if 'accessibility_source' in report:
                lines.append(f"  accessibility from: {report['accessibility_source']}")
        if 'maps' in report:
            lines.append(f"{report['source']} -> {report['target']}: {len(report['maps'])} maps")
            for i, m in enumerate(report['maps'], 1):
                lines.append(f"  map {i} (t = {m['time']}):")
                lines.extend(f"    {k} = {v}" for k, v in sorted(m['forward'].items()))
                lines.extend(f"    {k} -> {v}" for k, v in sorted(m['dictionary'].items()))
                cert = m['certificate']
                lines.append(f"    certificate: {cert['equivalent']}, symplectic: {cert['symplectic']}"
                             f" (factor {cert['conformal_factor']})")
        if 'expansions' in report:
            lines.append(f"System {report['system']}: {len(report['expansions'])} leading behaviors")
            for e in report['expansions']:
                lines.append(f"  x ~ {e['leading']['x']}, y ~ {e['leading']['y']}")
                lines.extend(f"    condition: {c} = 0" for c in e['conditions'])
            if 'W' in report:
                lines.append(f"  W = {report['W']}")
            for v in report.get('variants', []):
                lines.append(f"    variant {v['W']}: bounded={v['bounded']}")
        if 'fits' in report:
            lines.append(f"System {report['system']}: numeric check")
            for fit in report['fits']:
                lines.append(f"  {fit['variable']} ~ (z - z_*)^{fit['exponent']} [{fit['kind']}]")
        return '\n'.join(lines) + '\n'

    def write_bundle(self, name: str, report: Dict, dots: Optional[Dict[str, Iterable[str]]] = None,
                     frames: Optional[Dict[str, pd.DataFrame]] = None) -> Dict[str, str]:
        """report.json, DOT files, summary.txt and CSV files under OUTPUT_DIR/name"""
        directory = os.path.join(self.output_dir, name)
        os.makedirs(directory, exist_ok=True)
        written = {}
        path = os.path.join(directory, 'report.json')
        with open(path, 'w') as f:
            json.dump(report, f, indent=2, sort_keys=True, default=str)
        written['json'] = path
        for key, dot in (dots or {}).items():
            path = os.path.join(directory, f"{key}.dot")
            with open(path, 'w') as f:
                f.writelines(dot)
            written[key] = path
        path = os.path.join(directory, 'summary.txt')
        with open(path, 'w') as f:
            f.write(self.summary(report))
        written['txt'] = path
        for key, frame in (frames or {}).items():
            path = os.path.join(directory, f"{key}.csv")
            frame.to_csv(path, index=False)
            written[key] = path
        logger.info(f"Report saved to {directory}")
        return written
