"""
Engine Errors Module
Exception hierarchy shared by every analysis stage
"""

from typing import Optional


class EngineError(Exception):
    """Base class for all analysis failures"""


class ParseError(EngineError):
    """Syntax error in a coefficient expression"""

    def __init__(self, message: str, position: int, text: str = ''):
        self.position = position
        self.text = text
        super().__init__(f"{message} at position {position}")


class UndeclaredSymbolError(ParseError):
    """Identifier not declared as parameter, function or variable"""


class DivisionByZeroError(EngineError):
    """Division by an expression that is identically zero"""

    def __init__(self, message: str = 'division by zero', position: Optional[int] = None):
        self.position = position
        if position is not None:
            message = f"{message} at position {position}"
        super().__init__(message)


class ZeroPolynomialError(EngineError):
    """Restriction to a line vanished identically"""


class NotABasePointError(EngineError):
    """Blow-up requested at a point where the field is determinate"""


class UnresolvedLocusError(EngineError):
    """Root locus with an irreducible factor of degree three or more"""

    def __init__(self, message: str, residual=None):
        self.residual = residual
        super().__init__(message)


class DepthLimitError(EngineError):
    """A cascade branch exceeded the configured number of blow-ups"""


class BlowDownError(EngineError):
    """Curve cannot be contracted"""


class LocationError(EngineError):
    """Blow-up location names components the diagram does not hold"""


class IncompatibleChangeError(EngineError):
    """Change of variables is not induced by any Hamiltonian correction"""

    def __init__(self, defect):
        self.defect = defect
        super().__init__(f"change of variables is not symplectic up to correction, defect = {defect}")


class NoIsometryError(EngineError):
    """Intersection diagrams are not isomorphic"""


class EmptyFamilyError(EngineError):
    """Curve ansatz over-constrained"""


class UnsupportedDegreeError(EngineError):
    """Curve class of degree above the supported ansatz"""


class InconsistentSystemError(EngineError):
    """Hamiltonicity equations have no solution for a family"""


class ConfigError(EngineError):
    """Invalid analysis configuration or system document"""


class NoCorrectionError(EngineError):
    """No auxiliary function in the correction basis stays bounded"""

    def __init__(self, message: str, residual=None):
        self.residual = residual
        super().__init__(message)
