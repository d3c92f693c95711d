"""
Picard Lattice Module
Divisor classes of the blown-up plane, the intersection diagram of the
inaccessible divisor and its minimalization
"""

import copy
import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

import networkx as nx

from .errors import BlowDownError, LocationError

logger = logging.getLogger(__name__)

LINE = 'line'
AXIS = 'axis'
EXCEPTIONAL = 'exceptional'
ADDED = 'added'


@dataclass
class DivisorClass:
    """Integer combination of the line class and exceptional classes"""
    line: str
    coeffs: Dict[str, int] = field(default_factory=dict)

    @classmethod
    def basis_element(cls, line: str, name: str) -> 'DivisorClass':
        return cls(line, {name: 1})

    def _clean(self) -> 'DivisorClass':
        self.coeffs = {k: v for k, v in self.coeffs.items() if v != 0}
        return self

    def __add__(self, other: 'DivisorClass') -> 'DivisorClass':
        out = dict(self.coeffs)
        for name, value in other.coeffs.items():
            out[name] = out.get(name, 0) + value
        return DivisorClass(self.line, out)._clean()

    def __neg__(self) -> 'DivisorClass':
        return DivisorClass(self.line, {k: -v for k, v in self.coeffs.items()})

    def __sub__(self, other: 'DivisorClass') -> 'DivisorClass':
        return self + (-other)

    def __rmul__(self, scalar: int) -> 'DivisorClass':
        return DivisorClass(self.line, {k: scalar * v for k, v in self.coeffs.items()})._clean()

    def __eq__(self, other) -> bool:
        return isinstance(other, DivisorClass) and (self - other).coeffs == {}

    def dot(self, other: 'DivisorClass') -> int:
        """H·H = 1, E_i·E_j = -δ_ij, H·E_i = 0"""
        total = 0
        for name, value in self.coeffs.items():
            if name in other.coeffs:
                sign = 1 if name == self.line else -1
                total += sign * value * other.coeffs[name]
        return total

    def coefficient(self, name: str) -> int:
        return self.coeffs.get(name, 0)

    def vector(self, basis: List[str]) -> List[int]:
        return [self.coeffs.get(name, 0) for name in basis]

    def text(self, basis: Optional[List[str]] = None) -> str:
        names = basis if basis is not None else sorted(self.coeffs, key=lambda n: (n != self.line, n))
        parts = []
        for name in names:
            value = self.coeffs.get(name, 0)
            if value == 0:
                continue
            magnitude = '' if abs(value) == 1 else str(abs(value))
            if not parts:
                parts.append(f"{'-' if value < 0 else ''}{magnitude}{name}")
            else:
                parts.append(f"{'-' if value < 0 else '+'} {magnitude}{name}")
        return ' '.join(parts) if parts else '0'


def self_intersection(d: DivisorClass) -> int:
    return d.dot(d)


@dataclass
class Component:
    label: str
    divisor: DivisorClass
    accessible: bool = False
    kind: str = EXCEPTIONAL

    @property
    def self_intersection(self) -> int:
        return self_intersection(self.divisor)


class IntersectionDiagram:
    """Components of the total transform; nodes are the inaccessible ones"""

    def __init__(self, line: str = 'H', name: str = ''):
        self.line = line
        self.name = name
        self.basis: List[str] = [line]
        self.components: Dict[str, Component] = {}
        self.contractions: List[Dict] = []

    @property
    def rank(self) -> int:
        return len(self.basis)

    def copy(self) -> 'IntersectionDiagram':
        return copy.deepcopy(self)

    def add_component(self, label: str, divisor: DivisorClass, accessible: bool, kind: str) -> Component:
        component = Component(label, divisor, accessible, kind)
        self.components[label] = component
        return component

    def nodes(self) -> List[Component]:
        return [c for c in self.components.values() if not c.accessible]

    def accessible(self) -> List[Component]:
        return [c for c in self.components.values() if c.accessible]

    def edges(self) -> List[Tuple[str, str, int]]:
        nodes = self.nodes()
        out = []
        for i, a in enumerate(nodes):
            for b in nodes[i + 1:]:
                weight = a.divisor.dot(b.divisor)
                if weight > 0:
                    out.append((a.label, b.label, weight))
        return out

    def text(self, label: str) -> str:
        return self.components[label].divisor.text(self.basis)

    def graph(self) -> nx.Graph:
        g = nx.Graph()
        for node in self.nodes():
            g.add_node(node.label, self_intersection=node.self_intersection,
                       divisor=self.text(node.label))
        for a, b, weight in self.edges():
            g.add_edge(a, b, weight=weight)
        return g

    def self_intersections(self) -> Dict[int, int]:
        counts = {}
        for node in self.nodes():
            counts[node.self_intersection] = counts.get(node.self_intersection, 0) + 1
        return dict(sorted(counts.items()))

    def record_blowup(self, label: str, through: Dict[str, int], accessible: bool = False,
                      kind: str = EXCEPTIONAL) -> Component:
        """New basis element; every component through the point loses its multiplicity times it"""
        if label in self.basis:
            raise LocationError(f"{label} is already a basis element")
        unknown = [name for name in through if name not in self.components]
        if unknown:
            raise LocationError(f"point lies on unknown components {unknown}")
        if any(m < 0 for m in through.values()):
            raise LocationError(f"negative multiplicity in {through}")
        self.basis.append(label)
        exceptional = DivisorClass.basis_element(self.line, label)
        for name, m in through.items():
            if m:
                component = self.components[name]
                component.divisor = component.divisor - m * exceptional
        logger.debug(f"Recorded blow-up {label} through {sorted(through)}")
        return self.add_component(label, exceptional, accessible, kind)

    def contract(self, label: str) -> Dict:
        """Blow down an inaccessible -1 component: D -> D + (D·C) C"""
        curve = self.components.get(label)
        if curve is None:
            raise BlowDownError(f"no component {label}")
        if curve.accessible:
            raise BlowDownError(f"component {label} is accessible")
        if curve.self_intersection != -1:
            raise BlowDownError(f"component {label} has self-intersection {curve.self_intersection}")
        entry = {'contracted': label, 'class': self.text(label), 'touched': []}
        del self.components[label]
        for other in self.components.values():
            weight = other.divisor.dot(curve.divisor)
            if weight:
                other.divisor = other.divisor + weight * curve.divisor
                entry['touched'].append(other.label)
        self.contractions.append(entry)
        logger.debug(f"Contracted {label} = {entry['class']}")
        return entry

    def to_dict(self) -> Dict:
        return {
            'name': self.name,
            'basis': list(self.basis),
            'nodes': [{'label': n.label, 'class': self.text(n.label),
                       'self_intersection': n.self_intersection, 'kind': n.kind} for n in self.nodes()],
            'edges': [{'source': a, 'target': b, 'weight': w} for a, b, w in self.edges()],
            'accessible': [{'label': c.label, 'class': self.text(c.label),
                            'self_intersection': c.self_intersection, 'kind': c.kind}
                           for c in self.accessible()],
            'contractions': list(self.contractions),
        }


def record_blowup(diagram: IntersectionDiagram, label: str, through: Dict[str, int],
                  accessible: bool = False) -> IntersectionDiagram:
    diagram.record_blowup(label, through, accessible)
    return diagram


def minimalize(diagram: IntersectionDiagram,
               choose: Optional[Callable[[List[str]], str]] = None) -> Tuple[IntersectionDiagram, List[Dict]]:
    """Contract inaccessible -1 nodes until none remain"""
    minimal = diagram.copy()
    start = len(minimal.contractions)
    while True:
        candidates = [n.label for n in minimal.nodes() if n.self_intersection == -1]
        if not candidates:
            break
        label = choose(candidates) if choose else candidates[0]
        minimal.contract(label)
    log = minimal.contractions[start:]
    logger.info(f"Minimalized {diagram.name or 'diagram'}: {len(log)} contractions")
    return minimal, log


def anti_blowup(diagram: IntersectionDiagram, target: str, label: Optional[str] = None) -> IntersectionDiagram:
    """Blow up an extra point on an inaccessible component, for aligning diagrams"""
    if target not in diagram.components:
        raise LocationError(f"no component {target}")
    aligned = diagram.copy()
    if label is None:
        prefix = next((b[0] for b in aligned.basis[1:]), 'E')
        label = f"{prefix}{aligned.rank}"
    aligned.record_blowup(label, {target: 1}, accessible=False, kind=ADDED)
    return aligned


def _walk(tree) -> List:
    order, stack = [], list(reversed([tree.nodes[k] for k in _sorted(tree, tree.roots)]))
    while stack:
        node = stack.pop()
        order.append(node)
        stack.extend(reversed([tree.nodes[k] for k in _sorted(tree, node.children)]))
    return order


def _sorted(tree, keys) -> List[int]:
    return sorted(keys, key=lambda k: (tree.nodes[k].index, tree.nodes[k].sign != '+'))


def rename_label(label: str, prefix: str) -> str:
    return prefix + label[1:] if label.startswith('E') else label


def diagram_from_cascade(tree, line: str = 'H', prefix: str = 'E',
                         accessibility: Optional[Dict[str, bool]] = None) -> IntersectionDiagram:
    """Record every blow-up of a cascade tree; leaves are accessible unless overridden"""
    accessibility = accessibility or {}
    diagram = IntersectionDiagram(line, tree.system.name)
    hyperplane = DivisorClass.basis_element(line, line)
    diagram.add_component('L', hyperplane, accessibility.get('L', False), LINE)
    diagram.add_component('x=0', hyperplane, True, AXIS)
    diagram.add_component('y=0', hyperplane, True, AXIS)
    for node in _walk(tree):
        through = {rename_label(name, prefix): m for name, m in node.blowup.multiplicities.items()
                   if m > 0 and rename_label(name, prefix) in diagram.components}
        label = rename_label(node.label, prefix)
        diagram.record_blowup(label, through, accessibility.get(node.label, node.is_leaf))
    logger.info(f"{tree.system.name}: lattice of rank {diagram.rank}, {len(diagram.nodes())} inaccessible nodes")
    return diagram
