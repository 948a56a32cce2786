"""
Exception hierarchy shared by the solver, simulation and analysis packages.

Everything derives from ``Mod1Error`` so the CLI can map library failures to
exit codes without catching unrelated exceptions. Each class also derives
from the closest builtin so callers that only know ``ValueError`` /
``RuntimeError`` keep working.
"""

from __future__ import annotations

from typing import Optional, Sequence


class Mod1Error(Exception):
    """Base class for all library errors."""


class InvalidSpecError(Mod1Error, ValueError):
    """Grid, graph or configuration values outside their valid range."""


class LengthMismatchError(Mod1Error, ValueError):
    def __init__(self, what: str, expected: int, got: int):
        super().__init__(f"{what}: expected length {expected}, got {got}")
        self.expected = expected
        self.got = got


class DisconnectedGraphError(Mod1Error, ValueError):
    def __init__(self, components: int):
        super().__init__(
            f"regularization graph must be connected, found {components} components"
        )
        self.components = components


class DegenerateEntryError(Mod1Error, ArithmeticError):
    """A zero-magnitude entry where a phase has to be extracted."""

    def __init__(self, index: int, message: str = ""):
        super().__init__(message or f"entry {index} has zero magnitude")
        self.index = index


class DegenerateRoundingError(DegenerateEntryError):
    """Burer-Monteiro extraction hit ``(Yv)_i = 0``."""


class NumericalError(Mod1Error, RuntimeError):
    """An iterative linear solve did not reach its tolerance."""

    def __init__(self, message: str, residual: float, iterations: int):
        super().__init__(f"{message} (residual={residual:.3e}, iterations={iterations})")
        self.residual = residual
        self.iterations = iterations


class BracketError(Mod1Error, RuntimeError):
    """The secular equation root could not be bracketed."""

    def __init__(self, message: str, mus: Sequence[float], phis: Sequence[float]):
        pairs = ", ".join(f"phi({m:.6g})={p:.6g}" for m, p in zip(mus, phis))
        super().__init__(f"{message}: {pairs}")
        self.mus = tuple(mus)
        self.phis = tuple(phis)


class UnsupportedDimensionError(Mod1Error, ValueError):
    pass


class InadmissibleParametersError(Mod1Error, ValueError):
    """A bound was requested outside the parameter range it is proven for."""

    def __init__(self, inequality: str, detail: str = ""):
        msg = f"inadmissible parameters: requires {inequality}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)
        self.inequality = inequality


class ParseError(Mod1Error, ValueError):
    def __init__(self, path: str, line: Optional[int], message: str):
        where = f"{path}:{line}" if line is not None else path
        super().__init__(f"{where}: {message}")
        self.path = path
        self.line = line
