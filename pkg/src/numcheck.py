"""
Numerical Check Module
Integrates Hamiltonian flows along complex paths, fits movable singularities
and checks that auxiliary functions stay bounded
"""

import os
import json
import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
import sympy as sp
from scipy.integrate import solve_ivp

from .expr import Z, FUNCTION, PARAMETER, rewrite
from .ham import HamiltonianSystem
from .errors import ConfigError, EngineError

logger = logging.getLogger(__name__)

PATH_END = 'path-end'
BLOW_UP = 'blow-up'
STEP_FAILURE = 'step-failure'

POLE = 'pole'
SQRT_ALGEBRAIC = 'sqrt-algebraic'
OTHER = 'other'
UNCLASSIFIED = 'unclassified'

DEFAULT_BINDINGS_FILE = 'config/bindings.json'


@dataclass
class IntegratorSettings:
    rtol: float = 1e-10
    atol: float = 1e-12
    max_step: float = 0.05
    threshold: float = 1e8
    method: str = 'DOP853'


@dataclass
class FlowProblem:
    """Bound system, initial point and a polyline path in the complex z-plane"""
    system: HamiltonianSystem
    bindings: Dict[str, str]
    z0: complex
    x0: complex
    y0: complex
    path: List[complex]
    settings: IntegratorSettings = field(default_factory=IntegratorSettings)


@dataclass
class Trajectory:
    z: np.ndarray
    x: np.ndarray
    y: np.ndarray
    reason: str
    message: str = ''

    @property
    def singular(self) -> bool:
        return self.reason in (BLOW_UP, STEP_FAILURE)

    def frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            'z_re': self.z.real, 'z_im': self.z.imag,
            'x_re': self.x.real, 'x_im': self.x.imag,
            'y_re': self.y.real, 'y_im': self.y.imag,
            'abs_x': np.abs(self.x), 'abs_y': np.abs(self.y),
        })

    def save_csv(self, path: str) -> str:
        os.makedirs(os.path.dirname(path) or '.', exist_ok=True)
        self.frame().to_csv(path, index=False, float_format='%.12e')
        return path


@dataclass
class SingularityFit:
    z_star: complex
    exponent: float
    residual: float
    kind: str
    variable: str
    points: int

    def to_dict(self) -> Dict:
        return {
            'z_star': [round(self.z_star.real, 8), round(self.z_star.imag, 8)],
            'exponent': round(self.exponent, 4),
            'residual': round(self.residual, 6),
            'kind': self.kind,
            'variable': self.variable,
            'points': self.points,
        }


class BoundSystem:
    """Numeric callables for a system whose coefficients are bound to values or functions of z"""

    def __init__(self, sys: HamiltonianSystem, bindings: Dict[str, str]):
        self.system = sys
        self.bindings = dict(bindings)
        self._mapping = self._build_mapping()
        dy, dx = sys.field_exprs()
        self.field = self.lambdify([dx, dy])
        self.hamiltonian = self.lambdify(sys.H)

    def _build_mapping(self) -> Dict[sp.Symbol, sp.Expr]:
        ctx = self.system.ctx
        values = {}
        for name, text in self.bindings.items():
            try:
                values[name] = sp.sympify(str(text), locals={'z': Z, 'I': sp.I})
            except (sp.SympifyError, SyntaxError) as e:
                raise ConfigError(f"binding {name}={text} is not an expression: {str(e)}")
            unknown = values[name].free_symbols - {Z}
            if unknown:
                raise ConfigError(f"binding {name} uses unbound symbols {sorted(map(str, unknown))}")
        mapping = {}
        for name in ctx.parameters:
            if name in values:
                mapping[ctx.param(name)] = values[name]
        for name in ctx.functions:
            if name in values:
                for order in range(6):
                    mapping[ctx.fn(name, order)] = sp.diff(values[name], Z, order)
        return mapping

    def bind(self, e) -> sp.Expr:
        e = rewrite(e, self.system.rules, self.system.ctx)
        bound = sp.sympify(e).xreplace(self._mapping)
        loose = [s for s in bound.free_symbols
                 if self.system.ctx.generator(s).kind in (FUNCTION, PARAMETER)]
        if loose:
            raise ConfigError(f"{self.system.name}: no binding for {sorted(map(str, loose))}")
        return bound

    def lambdify(self, e) -> Callable:
        bound = self.bind(e) if not isinstance(e, list) else [self.bind(v) for v in e]
        return sp.lambdify((Z, self.system.x, self.system.y), bound, 'numpy')

    def rhs(self, z: complex, state: np.ndarray) -> np.ndarray:
        dx, dy = self.field(z, state[0], state[1])
        return np.array([dx, dy], dtype=complex)

    def check_conditions(self, conditions: List[sp.Expr], samples=(0.3, 0.7 + 0.2j, -0.4j),
                         tolerance: float = 1e-10):
        """Bound coefficients must satisfy every condition at sample points"""
        for cond in conditions:
            f = sp.lambdify(Z, self.bind(cond), 'numpy')
            worst = max(abs(complex(f(z))) for z in samples)
            if worst > tolerance:
                raise ConfigError(f"{self.system.name}: bindings violate {cond} (|value| = {worst:.3e})")


def load_entry(name: str, path: Optional[str] = None) -> Dict:
    """Bindings, initial points and conditions for a system from the bindings file"""
    path = path or os.getenv('BINDINGS_FILE', DEFAULT_BINDINGS_FILE)
    try:
        with open(path, 'r') as f:
            table = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"cannot read bindings file {path}: {str(e)}")
    entry = table.get(name)
    if entry is None:
        raise ConfigError(f"no bindings for {name} in {path}")
    return entry


def load_bindings(name: str, path: Optional[str] = None) -> Dict[str, str]:
    return {k: str(v) for k, v in load_entry(name, path).get('bindings', {}).items()}


def problems_from_entry(sys: HamiltonianSystem, entry: Dict, bindings: Dict[str, str],
                        settings: Optional[IntegratorSettings] = None) -> List[FlowProblem]:
    """One flow problem per initial point listed in a bindings entry"""
    problems = []
    for start in entry.get('initial', []):
        try:
            z0, x0, y0 = (complex(str(start[k]).replace('i', 'j')) for k in ('z0', 'x0', 'y0'))
            path = [complex(str(p).replace('i', 'j')) for p in start['path']]
        except (KeyError, ValueError) as e:
            raise ConfigError(f"{sys.name}: invalid initial point {start}: {str(e)}")
        problems.append(FlowProblem(sys, bindings, z0, x0, y0, path, settings or IntegratorSettings()))
    return problems


def parse_bindings(text: str) -> Dict[str, str]:
    """'a2=0,a0=z/3' -> {'a2': '0', 'a0': 'z/3'}"""
    out = {}
    for part in filter(None, (p.strip() for p in (text or '').split(','))):
        if '=' not in part:
            raise ConfigError(f"binding '{part}' is not of the form name=value")
        name, value = part.split('=', 1)
        out[name.strip()] = value.strip()
    return out


def integrate(fp: FlowProblem, bound: Optional[BoundSystem] = None) -> Trajectory:
    """Adaptive Runge-Kutta along each segment of the path, stopping on blow-up"""
    bound = bound or BoundSystem(fp.system, fp.bindings)
    s = fp.settings
    zs, xs, ys = [complex(fp.z0)], [complex(fp.x0)], [complex(fp.y0)]
    reason, message = PATH_END, ''
    start = complex(fp.z0)
    for end in fp.path:
        end = complex(end)
        d = end - start
        if d == 0:
            continue

        def rhs(t, state, start=start, d=d):
            return d * bound.rhs(start + t * d, state)

        def blow_up(t, state):
            return abs(state[0]) + abs(state[1]) - s.threshold
        blow_up.terminal = True

        state0 = np.array([xs[-1], ys[-1]], dtype=complex)
        sol = solve_ivp(rhs, (0.0, 1.0), state0, method=s.method, rtol=s.rtol, atol=s.atol,
                        max_step=s.max_step / abs(d), events=blow_up)
        zs.extend(start + sol.t[1:] * d)
        xs.extend(sol.y[0, 1:])
        ys.extend(sol.y[1, 1:])
        if sol.status == 1:
            reason, message = BLOW_UP, f"|x|+|y| exceeded {s.threshold:g}"
            break
        if sol.status == -1:
            reason, message = STEP_FAILURE, sol.message
            logger.warning(f"{fp.system.name}: integration stopped near z={zs[-1]:.6g}: {sol.message}")
            break
        start = end
    logger.info(f"{fp.system.name}: {len(zs)} steps, stop reason {reason}")
    return Trajectory(np.array(zs), np.array(xs), np.array(ys), reason, message)


def _dominant(traj: Trajectory) -> Tuple[str, np.ndarray, int]:
    """Variable that grows, preferring y, with its index in the state vector"""
    if abs(traj.y[-1]) >= 1e3 or abs(traj.y[-1]) >= abs(traj.x[-1]):
        return 'y', traj.y, 1
    return 'x', traj.x, 0


def estimate_pole(z: np.ndarray, v: np.ndarray, dv: np.ndarray) -> Tuple[complex, complex]:
    """z_* and exponent from v/v' = (z - z_*)/rho fitted by least squares"""
    g = v / dv
    A = np.column_stack([z, np.ones_like(z)])
    (a, b), *_ = np.linalg.lstsq(A, g, rcond=None)
    if a == 0:
        raise EngineError('log-derivative fit is degenerate')
    return -b / a, 1 / a


def _classify(exponent: float, residual: float, tolerance: float) -> str:
    if residual > tolerance:
        return UNCLASSIFIED
    if abs(exponent + 1) < 0.1:
        return POLE
    if abs(exponent + 0.5) < 0.1:
        return SQRT_ALGEBRAIC
    return OTHER


def fit_singularity(traj: Trajectory, bound: BoundSystem, window=(1e-6, 1e-1),
                    tail: float = 0.25, tolerance: float = 0.05) -> SingularityFit:
    """Locate z_* from the log-derivative, then fit log|v| against log|z - z_*|"""
    if not traj.singular:
        raise EngineError('trajectory does not end in a blow-up')
    name, v, index = _dominant(traj)
    count = max(8, int(len(traj.z) * tail))
    z_tail, x_tail, y_tail = traj.z[-count:], traj.x[-count:], traj.y[-count:]
    dv = np.array([bound.rhs(z, np.array([x, y]))[index] for z, x, y in zip(z_tail, x_tail, y_tail)])
    z_star, _ = estimate_pole(z_tail, v[-count:], dv)

    r = np.abs(traj.z - z_star)
    mask = (r >= window[0]) & (r <= window[1]) & (np.abs(v) > 0)
    if mask.sum() < 6:
        raise EngineError(f"only {int(mask.sum())} points inside the fit window")
    log_r, log_v = np.log10(r[mask]), np.log10(np.abs(v[mask]))
    slope, intercept = np.polyfit(log_r, log_v, 1)
    residual = float(np.sqrt(np.mean((log_v - (slope * log_r + intercept)) ** 2)))
    kind = _classify(slope, residual, tolerance)
    if kind == UNCLASSIFIED:
        logger.warning(f"{bound.system.name}: growth is not a clean power law (residual {residual:.3g})")
    return SingularityFit(complex(z_star), float(slope), residual, kind, name, int(mask.sum()))


def approach_singularity(fp: FlowProblem, bound: Optional[BoundSystem] = None,
                         aims: int = 4) -> Trajectory:
    """Integrate, and while no blow-up occurs re-aim the path at the estimated nearest pole"""
    bound = bound or BoundSystem(fp.system, fp.bindings)
    traj = integrate(fp, bound)
    for _ in range(aims):
        if traj.singular:
            return traj
        _, v, index = _dominant(traj)
        i = int(np.argmax(np.abs(v)))
        lo = max(i - 4, 0)
        z_near = traj.z[lo:i + 1]
        if len(z_near) < 2:
            break
        dv = np.array([bound.rhs(z, np.array([x, y]))[index]
                       for z, x, y in zip(z_near, traj.x[lo:i + 1], traj.y[lo:i + 1])])
        z_star, _ = estimate_pole(z_near, v[lo:i + 1], dv)
        z_from = traj.z[lo]
        overshoot = z_star + 0.1 * (z_star - z_from) / max(abs(z_star - z_from), 1e-12)
        aimed = FlowProblem(fp.system, fp.bindings, z_from, traj.x[lo], traj.y[lo],
                            [overshoot], fp.settings)
        logger.debug(f"{fp.system.name}: re-aiming at z_* ~ {z_star:.6g}")
        traj = integrate(aimed, bound)
    return traj


def check_W_bounded(fp: FlowProblem, aux, traj: Trajectory, bound: Optional[BoundSystem] = None,
                    growth: float = 1e6, variation: float = 10.0) -> Dict:
    """Spread of |W| along the approach compared with the growth of the dominant variable"""
    bound = bound or BoundSystem(fp.system, fp.bindings)
    W = aux.expr() if hasattr(aux, 'expr') else sp.sympify(aux)
    W_num = bound.lambdify(W)
    _, v, _ = _dominant(traj)
    values = np.abs(np.array([complex(W_num(z, x, y)) for z, x, y in zip(traj.z, traj.x, traj.y)]))
    finite = values[np.isfinite(values)]
    spread = float(finite.max() / max(finite.min(), 1e-300)) if len(finite) else float('inf')
    grew = float(np.abs(v).max() / max(np.abs(v[0]), 1e-300))
    bounded = spread < variation and len(finite) == len(values)
    return {
        'max_abs_W': float(finite.max()) if len(finite) else float('inf'),
        'variation': spread,
        'growth': grew,
        'growth_sufficient': grew > growth,
        'bounded': bounded,
    }


def energy_drift(traj: Trajectory, bound: BoundSystem) -> float:
    """max |H(t) - H(0)| along a trajectory"""
    values = np.array([complex(bound.hamiltonian(z, x, y)) for z, x, y in zip(traj.z, traj.x, traj.y)])
    return float(np.max(np.abs(values - values[0])))


def circle_path(center: complex, radius: float, start_angle: float = 0.0, segments: int = 64) -> List[complex]:
    angles = start_angle + 2 * np.pi * np.arange(1, segments + 1) / segments
    return list(center + radius * np.exp(1j * angles))


def monodromy(sys: HamiltonianSystem, bindings: Dict[str, str], center: complex, radius: float,
              start: Tuple[complex, complex], settings: Optional[IntegratorSettings] = None,
              segments: int = 64) -> Dict:
    """Continue (x, y) once around a circle; a square-root branch point flips the sign of y"""
    z0 = center + radius
    fp = FlowProblem(sys, bindings, z0, start[0], start[1],
                     circle_path(center, radius, 0.0, segments), settings or IntegratorSettings())
    traj = integrate(fp)
    if traj.reason != PATH_END:
        raise EngineError(f"loop around {center} hit a singularity")
    ratio = complex(traj.y[-1] / traj.y[0])
    return {
        'center': [center.real, center.imag] if isinstance(center, complex) else [float(center), 0.0],
        'radius': radius,
        'ratio': [round(ratio.real, 8), round(ratio.imag, 8)],
        'swapped': abs(ratio + 1) < 1e-4,
        'closed': abs(ratio - 1) < 1e-4,
    }


def fit_table(fits: List[Tuple[str, SingularityFit]]) -> pd.DataFrame:
    rows = [dict(label=label, **fit.to_dict()) for label, fit in fits]
    frame = pd.DataFrame(rows)
    if not frame.empty:
        frame['z_star'] = frame['z_star'].apply(lambda p: f"{p[0]:+.8f}{p[1]:+.8f}i")
    return frame


def run_problems(problems: List[FlowProblem]) -> List[Tuple[Trajectory, Optional[SingularityFit]]]:
    """Integrate independent flow problems and fit whichever end in a blow-up"""
    results = []
    for fp in problems:
        bound = BoundSystem(fp.system, fp.bindings)
        traj = approach_singularity(fp, bound)
        fit = None
        if traj.singular:
            try:
                fit = fit_singularity(traj, bound)
            except EngineError as e:
                logger.warning(f"{fp.system.name}: fit failed: {str(e)}")
        results.append((traj, fit))
    return results
