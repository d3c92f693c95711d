"""
Identification Module
Matches intersection diagrams of two systems and derives the birational
symplectic map between them from the matched classes
"""

import re
import logging
import itertools
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from networkx.algorithms import isomorphism
import sympy as sp

from .expr import Z, canonical, is_zero, rewrite, to_text
from .geom import U_KIND
from .ham import (BirationalMap, EquivalenceReport, HamiltonianSystem,
                  check_symplectic_equivalence, total_derivative)
from .cascade import CascadeTree, DEFAULT_MAX_DEPTH, run_cascades
from .lattice import (AXIS, DivisorClass, IntersectionDiagram, anti_blowup,
                      diagram_from_cascade, minimalize, rename_label, _walk)
from .errors import (EmptyFamilyError, EngineError, InconsistentSystemError,
                     NoIsometryError, UnsupportedDegreeError)

logger = logging.getLogger(__name__)

MAX_DEGREE = 3
MAX_ISOMETRIES = 64
MAX_ALIGNMENT = 3
TIME_SIGNS = (1, -1)

__all__ = ['BirationalMap', 'LatticeIsometry', 'CurveFamily', 'Identification',
           'match_diagrams', 'align_diagrams', 'axis_classes', 'curve_through_points',
           'fix_by_hamiltonicity', 'identify_systems']


@dataclass
class LatticeIsometry:
    """Component assignment A -> B and the matrix whose columns are B's basis in A's basis"""
    source: IntersectionDiagram
    target: IntersectionDiagram
    assignment: Dict[str, str]
    matrix: Optional[sp.Matrix] = None

    def table(self) -> Dict[str, str]:
        if self.matrix is None:
            return {}
        out = {}
        for j, name in enumerate(self.target.basis):
            column = {self.source.basis[i]: int(self.matrix[i, j]) for i in range(self.matrix.rows)}
            out[name] = DivisorClass(self.source.line, column)._clean().text(self.source.basis)
        return out

    def to_source(self, d: DivisorClass) -> DivisorClass:
        vector = self.matrix * sp.Matrix(d.vector(self.target.basis))
        return DivisorClass(self.source.line, dict(zip(self.source.basis, map(int, vector))))._clean()

    def to_target(self, d: DivisorClass) -> DivisorClass:
        vector = self.matrix.inv() * sp.Matrix(d.vector(self.source.basis))
        return DivisorClass(self.target.line, dict(zip(self.target.basis, map(int, vector))))._clean()

    def to_dict(self) -> Dict:
        return {'assignment': dict(self.assignment), 'basis': self.table()}


@dataclass
class CurveFamily:
    """Linear family of plane curves of a given degree through weighted base points"""
    expr: sp.Expr
    free: List[sp.Symbol]
    degree: int
    variables: Tuple[sp.Symbol, sp.Symbol]


@dataclass
class Identification:
    source: HamiltonianSystem
    target: HamiltonianSystem
    isometries: List[LatticeIsometry] = field(default_factory=list)
    maps: List[BirationalMap] = field(default_factory=list)
    certificates: List[EquivalenceReport] = field(default_factory=list)
    aligned: List[str] = field(default_factory=list)


def _gram(diagram: IntersectionDiagram) -> sp.Matrix:
    return sp.diag(*[1 if name == diagram.line else -1 for name in diagram.basis])


def _leaves(diagram: IntersectionDiagram) -> List[str]:
    return [c.label for c in diagram.accessible() if c.kind != AXIS]


def _matcher(A: IntersectionDiagram, B: IntersectionDiagram) -> isomorphism.GraphMatcher:
    return isomorphism.GraphMatcher(
        A.graph(), B.graph(),
        node_match=isomorphism.numerical_node_match('self_intersection', 0),
        edge_match=isomorphism.numerical_edge_match('weight', 1))


def _solve_matrix(A: IntersectionDiagram, B: IntersectionDiagram,
                  assignment: Dict[str, str]) -> Optional[sp.Matrix]:
    """T with T·(B class) = (A class) for every assigned pair, when integral and isometric"""
    labels = list(assignment)
    a_cols = sp.Matrix([A.components[a].divisor.vector(A.basis) for a in labels]).T
    b_cols = sp.Matrix([B.components[assignment[a]].divisor.vector(B.basis) for a in labels]).T
    try:
        solution, params = b_cols.T.gauss_jordan_solve(a_cols.T)
    except ValueError:
        return None
    if params.shape[0]:
        solution = solution.xreplace({p: 0 for p in params})
    matrix = solution.T
    if not all(entry.is_integer for entry in matrix):
        return None
    if matrix.T * _gram(A) * matrix != _gram(B):
        return None
    return matrix


def match_diagrams(A: IntersectionDiagram, B: IntersectionDiagram) -> List[LatticeIsometry]:
    """All self-intersection and weight preserving assignments of inaccessible components"""
    if A.rank != B.rank:
        raise NoIsometryError(f"ranks differ: {A.rank} vs {B.rank}")
    found, seen = [], set()
    a_leaves, b_leaves = _leaves(A), _leaves(B)
    for mapping in itertools.islice(_matcher(A, B).isomorphisms_iter(), MAX_ISOMETRIES):
        candidates = [()]
        if len(a_leaves) == len(b_leaves):
            candidates = list(itertools.permutations(b_leaves))
        for leaves in candidates:
            assignment = dict(mapping)
            assignment.update(zip(a_leaves, leaves))
            if not _compatible(A, B, assignment, mapping):
                continue
            key = frozenset(assignment.items())
            if key in seen:
                continue
            seen.add(key)
            found.append(LatticeIsometry(A, B, assignment, _solve_matrix(A, B, assignment)))
    if not found:
        raise NoIsometryError(f"no isometry between {A.name} and {B.name}")
    found.sort(key=lambda iso: iso.matrix is None)
    logger.info(f"{A.name} ~ {B.name}: {len(found)} isometries")
    return found


def _compatible(A, B, assignment: Dict[str, str], nodes: Dict[str, str]) -> bool:
    for a, b in assignment.items():
        if a in nodes:
            continue
        for na, nb in nodes.items():
            if A.components[a].divisor.dot(A.components[na].divisor) != \
                    B.components[b].divisor.dot(B.components[nb].divisor):
                return False
    return True


def _same_graph(A: IntersectionDiagram, B: IntersectionDiagram) -> bool:
    return _matcher(A, B).is_isomorphic()


def _isomorphic(A: IntersectionDiagram, B: IntersectionDiagram) -> bool:
    return A.rank == B.rank and _same_graph(A, B)


def align_diagrams(A: IntersectionDiagram,
                   B: IntersectionDiagram) -> Tuple[IntersectionDiagram, IntersectionDiagram, List[str]]:
    """Blow up extra points on the smaller diagram until both graphs agree"""
    if A.rank == B.rank:
        return A, B, []
    small, large = (A, B) if A.rank < B.rank else (B, A)
    steps = large.rank - small.rank
    if steps > MAX_ALIGNMENT:
        raise NoIsometryError(f"rank difference {steps} is too large to align")
    frontier = [(small, [])]
    for _ in range(steps):
        frontier = [(anti_blowup(d, n.label), path + [n.label]) for d, path in frontier for n in d.nodes()]
    for candidate, path in frontier:
        if _isomorphic(candidate, large):
            logger.info(f"Aligned {small.name} by extra points on {path}")
            return (candidate, large, path) if small is A else (large, candidate, path)
    raise NoIsometryError(f"{A.name} and {B.name} cannot be aligned")


def axis_classes(diagram: IntersectionDiagram) -> Dict[str, DivisorClass]:
    """Classes of the strict transforms of {x=0} and {y=0}"""
    return {label: diagram.components[label].divisor for label in ('x=0', 'y=0')}


def _local(poly, chart, m: int) -> Tuple[sp.Expr, List[sp.Expr]]:
    """Transform into chart, split off the e-adic terms below order m"""
    e = chart.exceptional_var
    image = sp.expand(sp.sympify(poly).xreplace(chart.substitution))
    expanded = sp.Poly(image, e)
    low, high = [], sp.Integer(0)
    for (k,), coeff in expanded.terms():
        if k < m:
            low.append(coeff)
        else:
            high += coeff * e**(k - m)
    return sp.expand(high), low


def curve_through_points(tree: CascadeTree, divisor: DivisorClass, prefix: str = 'E',
                         name: str = 'k') -> CurveFamily:
    """Degree-d curves whose strict transform has the class divisor"""
    sys = tree.system
    degree = divisor.coefficient(divisor.line)
    if degree < 1:
        raise EmptyFamilyError(f"class {divisor.text()} has no curve of positive degree")
    if degree > MAX_DEGREE:
        raise UnsupportedDegreeError(f"degree {degree} curves are not supported")
    x, y = sys.x, sys.y
    unknowns = [sp.Symbol(f"{name}{i}{j}") for i in range(degree + 1) for j in range(degree + 1 - i)]
    ansatz = sp.Add(*[s * x**int(s.name[-2]) * y**int(s.name[-1]) for s in unknowns])

    local = {}
    for chart in tree.charts0[1:]:
        local[chart.name] = sp.expand(canonical(ansatz.xreplace(chart.substitution) * chart.exceptional_var**degree))

    equations = []
    for node in _walk(tree):
        m = max(0, -divisor.coefficient(rename_label(node.label, prefix)))
        parent = local[node.point.chart.name]
        for chart in node.charts:
            image, low = _local(parent, chart, m)
            local[chart.name] = image
            if chart.kind == U_KIND:
                for coeff in low:
                    coeff = rewrite(coeff, sys.rules, sys.ctx)
                    line = chart.line_var
                    if line in coeff.free_symbols:
                        equations.extend(sp.Poly(coeff, line).coeffs())
                    elif coeff != 0:
                        equations.append(coeff)
    added = [b for b in divisor.coeffs if b != divisor.line and
             not any(rename_label(n.label, prefix) == b for n in tree.nodes.values())]
    if added:
        logger.debug(f"Ignoring points {added} without cascade charts")

    equations = [canonical(eq) for eq in equations if not is_zero(eq)]
    solutions = sp.linsolve(equations, unknowns) if equations else sp.FiniteSet(tuple(unknowns))
    if not solutions:
        raise EmptyFamilyError(f"no degree {degree} curve has class {divisor.text()}")
    values = next(iter(solutions))
    expr = canonical(ansatz.xreplace(dict(zip(unknowns, values))))
    if expr == 0:
        raise EmptyFamilyError(f"only the zero curve has class {divisor.text()}")
    free = sorted(expr.free_symbols & set(unknowns), key=lambda s: s.name)
    logger.debug(f"Curve family {expr} with free {free}")
    return CurveFamily(expr, free, degree, (x, y))


def _monomial_equations(e, variables) -> List[sp.Expr]:
    num = sp.numer(canonical(e))
    if num == 0:
        return []
    return [c for c in sp.Poly(num, *variables).coeffs() if not is_zero(c)]


def fix_by_hamiltonicity(families: Dict[sp.Symbol, CurveFamily], source: HamiltonianSystem,
                         target: HamiltonianSystem, time_signs=TIME_SIGNS) -> List[BirationalMap]:
    """Solve for free family constants and the target's coefficients, t = ±z"""
    target_field = dict(zip(target.variables, target.field_exprs()))
    forward = {var: fam.expr for var, fam in families.items()}
    constants = sorted({s for fam in families.values() for s in fam.free}, key=lambda s: s.name)
    shared = set(source.ctx.parameters)
    coefficients = sorted({s for e in target_field.values() for s in e.free_symbols
                           if target.ctx.generator(s).kind == 'function' or
                           (target.ctx.generator(s).kind == 'parameter' and s.name not in shared)},
                          key=lambda s: s.name)
    maps = []
    for sign in time_signs:
        equations = []
        for var, image in forward.items():
            transported = target_field[var].xreplace({Z: sign * Z}).xreplace(forward)
            defect = total_derivative(image, source) - sign * transported
            equations.extend(_monomial_equations(defect, source.variables))
        unknowns = constants + coefficients
        try:
            solutions = sp.solve(equations, unknowns, dict=True) if equations else [{}]
        except NotImplementedError as e:
            logger.warning(f"Hamiltonicity system not solved for t = {sign}z: {str(e)}")
            continue
        for solution in solutions:
            solved = {var: canonical(image.xreplace(solution)) for var, image in forward.items()}
            jacobian = sp.Matrix([[sp.diff(solved[t], s) for s in source.variables] for t in target.variables])
            if is_zero(jacobian.det()):
                continue
            dictionary = {s: canonical(solution[s]) for s in coefficients if s in solution}
            bmap = BirationalMap(source.variables, target.variables, solved, {}, dictionary, sign)
            maps.append(bmap.complete_inverse())
    if not maps:
        raise InconsistentSystemError(f"no map {source.name} -> {target.name} in the curve families")
    return maps


def _suffix(name: str, fallback: str) -> str:
    match = re.search(r"(\d+)$", name)
    return match.group(1) if match else fallback


def distinct_variables(A: HamiltonianSystem,
                       B: HamiltonianSystem) -> Tuple[HamiltonianSystem, HamiltonianSystem]:
    if not set(A.variables) & set(B.variables):
        return A, B
    a, b = _suffix(A.name, '1'), _suffix(B.name, '2')
    if a == b:
        b = b + 'b'
    return A.renamed(f"x{a}", f"y{a}"), B.renamed(f"x{b}", f"y{b}")


def identify_systems(A: HamiltonianSystem, B: HamiltonianSystem,
                     max_depth: int = DEFAULT_MAX_DEPTH) -> Identification:
    """End to end: cascades, diagrams, alignment, isometries, curves and the map"""
    A, B = distinct_variables(A, B)
    tree_a, tree_b = run_cascades(A, max_depth), run_cascades(B, max_depth)
    diagram_a = diagram_from_cascade(tree_a, 'H', 'E')
    diagram_b = diagram_from_cascade(tree_b, 'K', 'F')
    if not _same_graph(minimalize(diagram_a)[0], minimalize(diagram_b)[0]):
        raise NoIsometryError(f"{A.name} and {B.name} have different surface types")
    aligned_a, aligned_b, added = align_diagrams(diagram_a, diagram_b)

    # curves are drawn in the plane of the system that needed no extra points
    if aligned_a.rank > diagram_a.rank:
        plane, other, plane_tree, plane_prefix = B, A, tree_b, 'F'
        plane_diagram, other_diagram = aligned_b, aligned_a
    else:
        plane, other, plane_tree, plane_prefix = A, B, tree_a, 'E'
        plane_diagram, other_diagram = aligned_a, aligned_b

    result = Identification(plane, other, aligned=added)
    result.isometries = match_diagrams(plane_diagram, other_diagram)
    axes = axis_classes(other_diagram)
    for iso in result.isometries:
        if iso.matrix is None:
            continue
        try:
            families = {
                other.x: curve_through_points(plane_tree, iso.to_source(axes['x=0']), plane_prefix, 'p'),
                other.y: curve_through_points(plane_tree, iso.to_source(axes['y=0']), plane_prefix, 'q'),
            }
            maps = fix_by_hamiltonicity(families, plane, other)
        except EngineError as e:
            logger.warning(f"Isometry {iso.assignment} rejected: {str(e)}")
            continue
        for bmap in maps:
            if any(_same_map(bmap, known) for known in result.maps):
                continue
            result.maps.append(bmap)
            result.certificates.append(check_symplectic_equivalence(plane, other, bmap))
    logger.info(f"{plane.name} -> {other.name}: {len(result.maps)} maps")
    return result


def _same_map(a: BirationalMap, b: BirationalMap) -> bool:
    return a.time_sign == b.time_sign and all(is_zero(a.forward[t] - b.forward[t]) for t in a.target_vars)


def map_text(bmap: BirationalMap, source: HamiltonianSystem, target: HamiltonianSystem) -> Dict:
    ctx = source.ctx.extend(target.ctx.parameters, target.ctx.functions, target.ctx.variables)
    return {
        'forward': {t.name: to_text(e, ctx) for t, e in bmap.forward.items()},
        'inverse': {s.name: to_text(e, ctx) for s, e in bmap.inverse.items()},
        'dictionary': {s.name: to_text(e, ctx) for s, e in bmap.dictionary.items()},
        'time': 'z' if bmap.time_sign == 1 else '-z',
    }
