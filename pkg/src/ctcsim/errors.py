"""Exception types raised across the package."""


class CtcError(Exception):
    """Base class for all ctcsim errors."""


class NonPhysicalStateError(CtcError, ValueError):
    """A matrix or Bloch vector does not describe a valid quantum state."""


class CapacityError(CtcError, ValueError):
    """A problem instance exceeds a dense-materialization cap."""


class CircuitParseError(CtcError, ValueError):
    def __init__(self, message, line=None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


class DimacsError(CircuitParseError):
    pass


class AmbiguousEvolutionError(CtcError):
    """The consistency condition leaves the chronology-respecting output undetermined."""

    def __init__(self, message, multiplicity):
        self.multiplicity = multiplicity
        super().__init__(f"{message} (fixed-point multiplicity {multiplicity})")


class FixedPointError(CtcError):
    """No density-matrix fixed point could be certified."""


class ConvergenceError(CtcError):
    pass
